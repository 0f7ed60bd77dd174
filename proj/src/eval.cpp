#include "nnopls/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "nnopls/linalg.hpp"

namespace nnopls {

GroupedSplit grouped_kfold(const std::vector<std::string>& groups, int k,
                           unsigned long seed) {
  if (k < 2) throw EvalError("grouped_kfold: need at least 2 folds");
  std::vector<std::string> distinct;
  {
    std::set<std::string> seen;
    for (const auto& g : groups)
      if (seen.insert(g).second) distinct.push_back(g);
  }
  if (distinct.size() < std::size_t(k))
    throw EvalError("grouped_kfold: " + std::to_string(distinct.size()) +
                    " groups for " + std::to_string(k) + " folds");

  std::sort(distinct.begin(), distinct.end());
  std::mt19937_64 rng(seed);
  for (std::size_t i = distinct.size(); i > 1; --i) {
    const std::size_t j = std::size_t(rng() % i);
    std::swap(distinct[i - 1], distinct[j]);
  }

  std::map<std::string, int> fold_of;
  for (std::size_t i = 0; i < distinct.size(); ++i)
    fold_of[distinct[i]] = int(i % std::size_t(k));

  GroupedSplit s;
  s.groups = groups;
  s.folds = k;
  s.fold_assignments.reserve(groups.size());
  for (const auto& g : groups) s.fold_assignments.push_back(fold_of.at(g));
  return s;
}

LinearModel ridge_fit(const Matrix& features, const Matrix& targets, double lambda) {
  if (lambda <= 0.0) throw EvalError("ridge_fit: lambda must be > 0");
  if (features.cols() != targets.cols()) throw EvalError("ridge_fit: sample mismatch");
  const std::size_t p = features.rows(), m = targets.rows(), n = features.cols();

  std::vector<double> fmean(p, 0.0), tmean(m, 0.0);
  for (std::size_t i = 0; i < p; ++i) fmean[i] = kern::sum(features.row(i), n) / double(n);
  for (std::size_t i = 0; i < m; ++i) tmean[i] = kern::sum(targets.row(i), n) / double(n);

  Matrix fc = features, tc = targets;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < n; ++j) fc(i, j) -= fmean[i];
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) tc(i, j) -= tmean[i];

  Matrix gram = matmul_nt(fc, fc);
  for (std::size_t i = 0; i < p; ++i) gram(i, i) += lambda;
  auto l = cholesky(gram);
  if (!l) throw EvalError("ridge_fit: gram matrix not factorizable");

  const Matrix cross = matmul_nt(fc, tc);          // p x m
  const Matrix wt = cholesky_solve(*l, cross);     // p x m

  LinearModel model;
  model.lambda = lambda;
  model.weights = wt.transposed(); // m x p
  model.bias.resize(m);
  for (std::size_t i = 0; i < m; ++i)
    model.bias[i] = tmean[i] - kern::dot(model.weights.row(i), fmean.data(), p);
  return model;
}

std::vector<int> predict(const LinearModel& model, const Matrix& features) {
  if (features.rows() != model.weights.cols())
    throw EvalError("predict: feature dimension mismatch");
  const std::size_t m = model.weights.rows(), n = features.cols();
  std::vector<int> labels(n);
  for (std::size_t j = 0; j < n; ++j) {
    int best = 0;
    double best_score = -1e308;
    for (std::size_t c = 0; c < m; ++c) {
      double s = model.bias[c];
      for (std::size_t i = 0; i < features.rows(); ++i)
        s += model.weights(c, i) * features(i, j);
      if (s > best_score) {
        best_score = s;
        best = int(c);
      }
    }
    labels[j] = best;
  }
  return labels;
}

namespace {

RawDataset subset_samples(const RawDataset& data, const std::vector<std::size_t>& idx) {
  RawDataset s;
  s.inputs = Matrix(data.inputs.rows(), idx.size());
  s.targets = Matrix(data.targets.rows(), idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    for (std::size_t i = 0; i < data.inputs.rows(); ++i)
      s.inputs(i, j) = data.inputs(i, idx[j]);
    for (std::size_t i = 0; i < data.targets.rows(); ++i)
      s.targets(i, j) = data.targets(i, idx[j]);
  }
  if (data.class_labels) {
    std::vector<int> labels;
    labels.reserve(idx.size());
    for (std::size_t j : idx) labels.push_back((*data.class_labels)[j]);
    s.class_labels = std::move(labels);
  }
  return s;
}

Matrix subset_cols(const Matrix& m, const std::vector<std::size_t>& idx) {
  Matrix s(m.rows(), idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j)
    for (std::size_t i = 0; i < m.rows(); ++i) s(i, j) = m(i, idx[j]);
  return s;
}

Matrix features_for(const FilterBank& bank, const Matrix& inputs, bool dual) {
  Matrix f = matmul_tn(bank.u, inputs);
  if (!dual) return f;
  Matrix out(2 * f.rows(), f.cols());
  for (std::size_t i = 0; i < f.rows(); ++i)
    for (std::size_t j = 0; j < f.cols(); ++j) {
      out(i, j) = f(i, j);
      out(f.rows() + i, j) = std::sqrt(std::max(0.0, f(i, j)));
    }
  return out;
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == truth[i]) ++hit;
  return pred.empty() ? 0.0 : double(hit) / double(pred.size());
}

FilterBank design_bank(const RawDataset& train, const EvalConfig& cfg,
                       SolverReport* report_out) {
  FilterBank bank;
  if (cfg.method == "gabor") {
    const auto rho = std::size_t(std::lround(std::sqrt(double(train.n()))));
    if (rho * rho != train.n())
      throw EvalError("gabor baseline needs n = rho^2, got n = " +
                      std::to_string(train.n()));
    bank = gabor_bank(rho);
  } else if (cfg.method == "philips") {
    bank = philips_bank(cfg.philips_d, cfg.philips_frame_rate_hz, cfg.philips_coeffs);
    if (bank.n() != train.n())
      throw EvalError("philips baseline dimension " + std::to_string(bank.n()) +
                      " does not match data dimension " + std::to_string(train.n()));
  } else {
    const CenteredDataset d = center(train);
    SolverResult r = run_solver(cfg.method, train, d, cfg.solver);
    bank.u = r.u;
    bank.method = bank_method_from_string(cfg.method);
    bank.ordered_by_relevance = method_is_relevance_ordered(bank.method);
    bank.mu_x = d.mu_x;
    if (report_out) *report_out = r.report;
  }
  return bank;
}

double inner_validate_lambda(const Matrix& train_features, const Matrix& train_targets,
                             const std::vector<int>& train_labels,
                             const std::vector<std::string>& train_groups,
                             const EvalConfig& cfg, unsigned long salt) {
  // One 80/20 grouped split of the training partition.
  std::vector<std::string> distinct;
  {
    std::set<std::string> seen;
    for (const auto& g : train_groups)
      if (seen.insert(g).second) distinct.push_back(g);
  }
  std::sort(distinct.begin(), distinct.end());
  std::mt19937_64 rng(cfg.seed * 0x9e3779b97f4a7c15ULL + salt + 1);
  for (std::size_t i = distinct.size(); i > 1; --i) {
    const std::size_t j = std::size_t(rng() % i);
    std::swap(distinct[i - 1], distinct[j]);
  }
  const std::size_t holdout = std::max<std::size_t>(1, distinct.size() / 5);
  std::set<std::string> val_groups(distinct.begin(), distinct.begin() + holdout);

  std::vector<std::size_t> fit_idx, val_idx;
  for (std::size_t j = 0; j < train_groups.size(); ++j)
    (val_groups.count(train_groups[j]) ? val_idx : fit_idx).push_back(j);
  if (fit_idx.empty() || val_idx.empty()) return cfg.lambda_grid.front();

  const Matrix ff = subset_cols(train_features, fit_idx);
  const Matrix ft = subset_cols(train_targets, fit_idx);
  const Matrix vf = subset_cols(train_features, val_idx);
  std::vector<int> vl;
  for (std::size_t j : val_idx) vl.push_back(train_labels[j]);

  double best_lambda = cfg.lambda_grid.front();
  double best_acc = -1.0;
  for (double lambda : cfg.lambda_grid) {
    const LinearModel model = ridge_fit(ff, ft, lambda);
    const double acc = accuracy(predict(model, vf), vl);
    if (acc > best_acc) {
      best_acc = acc;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

} // namespace

EvalReport run_experiment(const RawDataset& data, const GroupedSplit& split,
                          const EvalConfig& cfg) {
  if (!data.class_labels) throw EvalError("run_experiment: dataset has no labels");
  if (split.fold_assignments.size() != data.samples())
    throw EvalError("run_experiment: split size mismatch");
  const std::vector<int>& labels = *data.class_labels;
  const std::size_t m = data.m();

  EvalReport report;
  report.method = cfg.method;
  report.confusion = Matrix(m, m);

  for (int fold = 0; fold < split.folds; ++fold) {
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t j = 0; j < data.samples(); ++j)
      (split.fold_assignments[j] == fold ? test_idx : train_idx).push_back(j);
    if (train_idx.empty() || test_idx.empty())
      throw EvalError("run_experiment: empty partition in fold " + std::to_string(fold));

    const RawDataset train = subset_samples(data, train_idx);
    SolverReport solver_report;
    const FilterBank bank = design_bank(train, cfg, &solver_report);
    report.solver_reports.push_back(solver_report);

    const bool dual = cfg.gabor_dual_features && cfg.method == "gabor";
    const Matrix train_features = features_for(bank, train.inputs, dual);
    const Matrix test_inputs = subset_cols(data.inputs, test_idx);
    const Matrix test_features = features_for(bank, test_inputs, dual);

    std::vector<std::string> train_groups;
    std::vector<int> train_labels;
    for (std::size_t j : train_idx) {
      train_groups.push_back(split.groups[j]);
      train_labels.push_back(labels[j]);
    }

    const double lambda =
        inner_validate_lambda(train_features, train.targets, train_labels,
                              train_groups, cfg, (unsigned long)fold);
    const LinearModel model = ridge_fit(train_features, train.targets, lambda);
    const std::vector<int> pred = predict(model, test_features);

    std::vector<int> truth;
    for (std::size_t j : test_idx) truth.push_back(labels[j]);
    report.per_fold_oa.push_back(100.0 * accuracy(pred, truth));
    for (std::size_t j = 0; j < truth.size(); ++j)
      report.confusion(std::size_t(truth[j]), std::size_t(pred[j])) += 1.0;

    if (fold == 0) {
      report.first_fold_bank = bank;
      report.n_f = bank.n_f();
      report.nz = nz_rate(bank);
      const std::size_t n_ref = cfg.n_ref ? cfg.n_ref : m;
      report.im = report.nz > 0.0 ? interpretability(report.nz, bank.n_f(), n_ref) : 0.0;
      report.truncation_meaningful = bank.ordered_by_relevance ||
                                     cfg.method == "gabor" || cfg.method == "philips";
    }

    if (cfg.sorted_subsets && report.truncation_meaningful) {
      if (report.oa_by_k.empty()) report.oa_by_k.assign(bank.n_f(), 0.0);
      for (std::size_t k = 1; k <= bank.n_f(); ++k) {
        FilterBank truncated = bank;
        truncated.u = Matrix(bank.n(), k);
        for (std::size_t j = 0; j < k; ++j)
          for (std::size_t i = 0; i < bank.n(); ++i) truncated.u(i, j) = bank.u(i, j);
        const Matrix tf = features_for(truncated, subset_cols(data.inputs, train_idx), dual);
        const Matrix vf = features_for(truncated, test_inputs, dual);
        Matrix train_targets = subset_cols(data.targets, train_idx);
        const LinearModel mk = ridge_fit(tf, train_targets, lambda);
        report.oa_by_k[k - 1] += 100.0 * accuracy(predict(mk, vf), truth) /
                                 double(split.folds);
      }
    }
  }

  double sum = 0.0;
  for (double v : report.per_fold_oa) sum += v;
  report.oa_percent = sum / double(report.per_fold_oa.size());
  return report;
}

} // namespace nnopls
