#include "nnopls/dataset.hpp"

#include <string>

namespace nnopls {

void RawDataset::validate() const {
  if (inputs.cols() != targets.cols())
    throw DatasetError("inputs and targets disagree on sample count");
  if (inputs.cols() < 2) throw DatasetError("need at least 2 samples");
  for (std::size_t i = 0; i < inputs.rows(); ++i)
    for (std::size_t j = 0; j < inputs.cols(); ++j)
      if (inputs(i, j) < 0.0)
        throw DatasetError("negative input entry at row " + std::to_string(i) +
                           ", column " + std::to_string(j));
  if (class_labels && class_labels->size() != inputs.cols())
    throw DatasetError("label count does not match sample count");
}

Matrix encode_targets(const std::vector<int>& labels, std::size_t m) {
  Matrix t(m, labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int c = labels[i];
    if (c < 0 || static_cast<std::size_t>(c) >= m)
      throw DatasetError("label " + std::to_string(c) + " at index " +
                         std::to_string(i) + " outside [0, " + std::to_string(m) + ")");
    t(static_cast<std::size_t>(c), i) = 1.0;
  }
  return t;
}

namespace {

std::vector<double> row_means(const Matrix& a) {
  std::vector<double> mu(a.rows());
  const double inv = 1.0 / double(a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    mu[i] = kern::sum(a.row(i), a.cols()) * inv;
  return mu;
}

Matrix subtract_row_means(const Matrix& a, const std::vector<double>& mu) {
  Matrix c = a;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) -= mu[i];
  return c;
}

} // namespace

CenteredDataset center(const RawDataset& raw) {
  if (raw.inputs.cols() < 2) throw DatasetError("need at least 2 samples to center");
  if (raw.inputs.cols() != raw.targets.cols())
    throw DatasetError("inputs and targets disagree on sample count");
  CenteredDataset d;
  d.mu_x = row_means(raw.inputs);
  d.mu_y = row_means(raw.targets);
  d.x = subtract_row_means(raw.inputs, d.mu_x);
  d.y = subtract_row_means(raw.targets, d.mu_y);
  return d;
}

CovarianceSet covariances(const CenteredDataset& d) {
  CovarianceSet c;
  c.cxx = matmul_nt(d.x, d.x);
  c.cxy = matmul_nt(d.x, d.y);
  c.cyy = matmul_nt(d.y, d.y);
  return c;
}

CovarianceSet raw_covariances(const RawDataset& raw) {
  CovarianceSet c;
  c.cxx = matmul_nt(raw.inputs, raw.inputs);
  c.cxy = matmul_nt(raw.inputs, raw.targets);
  c.cyy = matmul_nt(raw.targets, raw.targets);
  return c;
}

} // namespace nnopls
