#pragma once

#include <string>
#include <vector>

#include "nnopls/dataset.hpp"
#include "nnopls/filterbank.hpp"
#include "nnopls/solvers.hpp"

namespace nnopls {

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GroupedSplit {
  std::vector<int> fold_assignments; // per sample
  std::vector<std::string> groups;   // per sample
  int folds = 0;
};

// Groups shuffled by seed, dealt round-robin to k folds. All samples of a
// group land in the same fold.
GroupedSplit grouped_kfold(const std::vector<std::string>& groups, int k,
                           unsigned long seed);

struct LinearModel {
  Matrix weights;            // m x n_f
  std::vector<double> bias;  // m
  double lambda = 0.0;
};

// One-vs-rest ridge regression on centered features; bias absorbs the means.
LinearModel ridge_fit(const Matrix& features, const Matrix& targets, double lambda);

// Argmax over class scores, ties toward the lowest class index.
std::vector<int> predict(const LinearModel& model, const Matrix& features);

struct EvalConfig {
  std::string method = "nopls";
  SolverConfig solver;
  std::vector<double> lambda_grid = {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0};
  int folds = 10;
  unsigned long seed = 0;
  std::size_t n_ref = 0;      // 0: class count
  bool sorted_subsets = false; // per-k OA curve for relevance-ordered methods
  bool gabor_dual_features = false;
  // Fixed-bank baselines.
  std::size_t philips_d = 129;
  std::size_t philips_coeffs = 1;
  double philips_frame_rate_hz = 400.0 / 3.0;
};

struct EvalReport {
  double oa_percent = 0.0;
  std::vector<double> per_fold_oa;
  std::size_t n_f = 0;
  double nz = 0.0;
  double im = 0.0;
  Matrix confusion; // m x m counts, rows = truth
  std::vector<SolverReport> solver_reports;
  std::vector<double> oa_by_k; // sorted-subset curve, index k-1
  bool truncation_meaningful = true;
  std::string method;
  FilterBank first_fold_bank;
};

// Full grouped-CV protocol: per fold, design the bank on the training
// partition only, extract features for both partitions, inner-validate
// lambda, fit, predict.
EvalReport run_experiment(const RawDataset& data, const GroupedSplit& split,
                          const EvalConfig& cfg);

} // namespace nnopls
