#pragma once

#include <string>
#include <string_view>

#include "jle/embedding.hpp"
#include "jle/regress.hpp"

namespace jle {

// Binary artifacts, little-endian throughout.
//
// Matrix ("JLEM", version 1):
//   magic[4] version:u32 C:u64 n:u64 kind:u8 seed:u64, then C*n column-major f64.
// Model ("JLLM", version 1):
//   magic[4] version:u32 D:u64 n:u64 flags:u32 lambda1:f64 lambda2:f64 sweeps:u64,
//   then D*n row-major f64 weights, then n f64 bias if flags bit 0, then D f64
//   feature scales if flags bit 1.
//
// Writers stage to a temporary in the same directory and rename into place,
// so a failed run never leaves a partial artifact. Loaders reject bad magic,
// unknown versions and truncated payloads with IoError.

void save_matrix(const EmbeddingMatrix& m, const std::string& path);
EmbeddingMatrix load_matrix(const std::string& path);

void save_model(const LinearModel& m, const std::string& path);
LinearModel load_model(const std::string& path);

// Debug exports: the same content as the binary artifacts as one JSON object.
std::string matrix_json(const EmbeddingMatrix& m);
std::string model_json(const LinearModel& m);

void atomic_write_file(const std::string& path, std::string_view bytes);

}  // namespace jle
