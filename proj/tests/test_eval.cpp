#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "nnopls/eval.hpp"
#include "nnopls/linalg.hpp"
#include "test_util.hpp"

using namespace nnopls;

namespace {

// Three linearly separable classes living in two latent directions of a
// 10-dimensional non-negative input space.
RawDataset separable_dataset(std::mt19937_64& rng, std::size_t per_class = 100) {
  const std::size_t n = 10;
  RawDataset data;
  std::vector<int> labels;
  data.inputs = Matrix(n, 3 * per_class);
  std::uniform_real_distribution<double> noise(0.0, 0.15);
  const double centers[3][2] = {{0.2, 0.2}, {1.0, 0.2}, {0.2, 1.0}};
  for (int c = 0; c < 3; ++c)
    for (std::size_t s = 0; s < per_class; ++s) {
      const std::size_t j = std::size_t(c) * per_class + s;
      for (std::size_t i = 0; i < n; ++i) data.inputs(i, j) = noise(rng);
      data.inputs(2, j) += centers[c][0];
      data.inputs(7, j) += centers[c][1];
      labels.push_back(c);
    }
  data.targets = encode_targets(labels, 3);
  data.class_labels = labels;
  return data;
}

std::vector<std::string> singleton_groups(std::size_t n_samples) {
  std::vector<std::string> g(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) g[i] = "s" + std::to_string(i);
  return g;
}

} // namespace

TEST_CASE("grouped_kfold keeps groups intact and balances folds") {
  std::vector<std::string> groups;
  for (int g = 0; g < 12; ++g)
    for (int rep = 0; rep < 3; ++rep) groups.push_back("g" + std::to_string(g));

  const GroupedSplit split = grouped_kfold(groups, 4, 123);
  REQUIRE(split.fold_assignments.size() == groups.size());

  std::map<std::string, std::set<int>> folds_of_group;
  std::map<int, int> fold_sizes;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    folds_of_group[groups[i]].insert(split.fold_assignments[i]);
    fold_sizes[split.fold_assignments[i]]++;
  }
  for (const auto& [g, folds] : folds_of_group) CHECK(folds.size() == 1);
  REQUIRE(fold_sizes.size() == 4);
  for (const auto& [fold, count] : fold_sizes) CHECK(count == 9);

  // Deterministic under the seed.
  const GroupedSplit again = grouped_kfold(groups, 4, 123);
  CHECK(again.fold_assignments == split.fold_assignments);
  const GroupedSplit other = grouped_kfold(groups, 4, 124);
  CHECK(other.fold_assignments != split.fold_assignments);

  CHECK_THROWS_AS(grouped_kfold(groups, 13, 0), EvalError);
  CHECK_THROWS_AS(grouped_kfold(groups, 1, 0), EvalError);
}

TEST_CASE("ridge_fit agrees with an eigen-factorized solve") {
  std::mt19937_64 rng(91);
  const Matrix features = testutil::random_matrix(rng, 4, 50);
  const Matrix targets = testutil::random_matrix(rng, 3, 50);
  const double lambda = 0.5;
  const LinearModel model = ridge_fit(features, targets, lambda);

  // Oracle route: center, eigendecompose the Gram matrix, invert spectrally.
  Matrix fc = features, tc = targets;
  for (std::size_t i = 0; i < fc.rows(); ++i) {
    const double mu = kern::sum(fc.row(i), fc.cols()) / double(fc.cols());
    for (std::size_t j = 0; j < fc.cols(); ++j) fc(i, j) -= mu;
  }
  for (std::size_t i = 0; i < tc.rows(); ++i) {
    const double mu = kern::sum(tc.row(i), tc.cols()) / double(tc.cols());
    for (std::size_t j = 0; j < tc.cols(); ++j) tc(i, j) -= mu;
  }
  Matrix gram = matmul_nt(fc, fc);
  for (std::size_t i = 0; i < 4; ++i) gram(i, i) += lambda;
  const EigResult e = sym_eig(gram);
  Matrix inv(4, 4);
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 4; ++c)
        inv(r, c) += e.vectors(r, j) * e.vectors(c, j) / e.values[j];
  const Matrix wt = matmul(inv, matmul_nt(fc, tc)); // 4 x 3

  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(model.weights(i, j) == doctest::Approx(wt(j, i)).epsilon(1e-8));

  CHECK_THROWS_AS(ridge_fit(features, targets, 0.0), EvalError);
}

TEST_CASE("predict breaks score ties toward the lowest class") {
  LinearModel model;
  model.weights = Matrix(2, 1); // both classes score zero everywhere
  model.bias = {0.0, 0.0};
  const Matrix f = Matrix(1, 3, 1.0);
  const auto labels = predict(model, f);
  for (int v : labels) CHECK(v == 0);
}

TEST_CASE("opls baseline separates a linear 3-class problem") {
  std::mt19937_64 rng(93);
  const RawDataset data = separable_dataset(rng);
  const auto groups = singleton_groups(data.samples());
  const GroupedSplit split = grouped_kfold(groups, 5, 0);

  EvalConfig cfg;
  cfg.method = "opls";
  cfg.folds = 5;
  cfg.solver.n_f = 2;
  const EvalReport report = run_experiment(data, split, cfg);
  CHECK(report.oa_percent >= 95.0);
  CHECK(report.per_fold_oa.size() == 5);

  // Confusion matrix row sums equal the class populations.
  for (std::size_t i = 0; i < 3; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < 3; ++j) row += report.confusion(i, j);
    CHECK(row == 100.0);
  }
}

TEST_CASE("identical seeds give identical experiments") {
  std::mt19937_64 rng(95);
  const RawDataset data = separable_dataset(rng, 40);
  const auto groups = singleton_groups(data.samples());
  const GroupedSplit split = grouped_kfold(groups, 4, 7);

  EvalConfig cfg;
  cfg.method = "nopls";
  cfg.folds = 4;
  cfg.seed = 7;
  cfg.solver.n_f = 2;
  const EvalReport a = run_experiment(data, split, cfg);
  const EvalReport b = run_experiment(data, split, cfg);
  CHECK(a.oa_percent == b.oa_percent);
  CHECK(a.per_fold_oa == b.per_fold_oa);
  CHECK(testutil::max_abs_diff(a.first_fold_bank.u, b.first_fold_bank.u) == 0.0);
}

TEST_CASE("test-partition labels cannot reach the designed bank") {
  std::mt19937_64 rng(97);
  RawDataset data = separable_dataset(rng, 40);
  const auto groups = singleton_groups(data.samples());
  const GroupedSplit split = grouped_kfold(groups, 4, 3);

  EvalConfig cfg;
  cfg.method = "defnopls";
  cfg.folds = 4;
  cfg.seed = 3;
  cfg.solver.n_f = 2;
  const EvalReport before = run_experiment(data, split, cfg);

  // Scramble the labels of every fold-0 sample; the fold-0 bank is designed
  // on the complement, so it must not move.
  std::mt19937_64 scramble(1);
  for (std::size_t j = 0; j < data.samples(); ++j)
    if (split.fold_assignments[j] == 0) {
      const int noise = int(scramble() % 3);
      (*data.class_labels)[j] = noise;
      for (std::size_t i = 0; i < 3; ++i) data.targets(i, j) = 0.0;
      data.targets(std::size_t(noise), j) = 1.0;
    }
  const EvalReport after = run_experiment(data, split, cfg);
  CHECK(testutil::max_abs_diff(before.first_fold_bank.u, after.first_fold_bank.u) == 0.0);
}

TEST_CASE("sorted-subset curve exists for ordered methods only") {
  std::mt19937_64 rng(99);
  const RawDataset data = separable_dataset(rng, 30);
  const auto groups = singleton_groups(data.samples());
  const GroupedSplit split = grouped_kfold(groups, 3, 0);

  EvalConfig cfg;
  cfg.folds = 3;
  cfg.solver.n_f = 2;
  cfg.sorted_subsets = true;

  cfg.method = "nopls";
  const EvalReport ordered = run_experiment(data, split, cfg);
  CHECK(ordered.truncation_meaningful);
  REQUIRE(ordered.oa_by_k.size() == 2);
  CHECK(ordered.oa_by_k[1] >= ordered.oa_by_k[0] - 30.0); // both are real OAs
  CHECK(ordered.oa_by_k[1] == doctest::Approx(ordered.oa_percent).epsilon(1e-9));

  cfg.method = "nmf_opls";
  const EvalReport unordered = run_experiment(data, split, cfg);
  CHECK_FALSE(unordered.truncation_meaningful);
  CHECK(unordered.oa_by_k.empty());
}
