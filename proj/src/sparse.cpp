#include "jle/sparse.hpp"

namespace jle {

FeatureView features_of(std::shared_ptr<const SparseDataset> d) {
  FeatureView v;
  v.row_ptr = d->row_ptr.data();
  v.col = d->col.data();
  v.val = d->val.data();
  v.num_rows = d->rows();
  v.num_features = d->num_features;
  v.owner = std::move(d);
  return v;
}

FeatureView features_of(std::shared_ptr<const MultilabelDataset> d) {
  FeatureView v;
  v.row_ptr = d->row_ptr.data();
  v.col = d->col.data();
  v.val = d->val.data();
  v.num_rows = d->rows();
  v.num_features = d->num_features;
  v.owner = std::move(d);
  return v;
}

}  // namespace jle
