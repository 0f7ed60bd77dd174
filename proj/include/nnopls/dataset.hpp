#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "nnopls/matrix.hpp"

namespace nnopls {

struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Supervised dataset before centering: non-negative inputs (n variables x N
// samples) and real targets (m x N). class_labels is carried along when the
// targets came from 1-of-m encoding.
struct RawDataset {
  Matrix inputs;
  Matrix targets;
  std::optional<std::vector<int>> class_labels;

  std::size_t n() const { return inputs.rows(); }
  std::size_t m() const { return targets.rows(); }
  std::size_t samples() const { return inputs.cols(); }

  void validate() const;
};

struct CenteredDataset {
  Matrix x; // n x N
  Matrix y; // m x N
  std::vector<double> mu_x;
  std::vector<double> mu_y;

  std::size_t n() const { return x.rows(); }
  std::size_t m() const { return y.rows(); }
  std::size_t samples() const { return x.cols(); }
};

struct CovarianceSet {
  Matrix cxx; // n x n
  Matrix cxy; // n x m
  Matrix cyy; // m x m
};

// 1-of-m indicator encoding; column i is the indicator of labels[i].
Matrix encode_targets(const std::vector<int>& labels, std::size_t m);

CenteredDataset center(const RawDataset& raw);

// Unnormalized sample covariances: XX^T, XY^T, YY^T.
CovarianceSet covariances(const CenteredDataset& d);

// Same products on uncentered matrices (NMF-OPLS path).
CovarianceSet raw_covariances(const RawDataset& raw);

} // namespace nnopls
