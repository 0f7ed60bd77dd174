#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "nnopls/dataset.hpp"
#include "nnopls/linalg.hpp"
#include "test_util.hpp"

using namespace nnopls;

TEST_CASE("encode_targets builds 1-of-m indicators") {
  const Matrix t = encode_targets({0, 2, 1, 2}, 3);
  REQUIRE(t.rows() == 3);
  REQUIRE(t.cols() == 4);
  for (std::size_t j = 0; j < 4; ++j) {
    double col_sum = 0.0;
    for (std::size_t i = 0; i < 3; ++i) col_sum += t(i, j);
    CHECK(col_sum == 1.0);
  }
  CHECK(t(0, 0) == 1.0);
  CHECK(t(2, 1) == 1.0);
  CHECK(t(1, 2) == 1.0);

  CHECK_THROWS_WITH_AS(encode_targets({0, 3}, 3), doctest::Contains("index 1"),
                       DatasetError);
  CHECK_THROWS_AS(encode_targets({-1}, 3), DatasetError);
}

TEST_CASE("validate rejects negative inputs and ragged labels") {
  RawDataset d;
  d.inputs = Matrix::from_rows({{1, 2}, {3, -4}});
  d.targets = Matrix::from_rows({{1, 0}});
  CHECK_THROWS_WITH_AS(d.validate(), doctest::Contains("row 1"), DatasetError);

  d.inputs(1, 1) = 4.0;
  CHECK_NOTHROW(d.validate());

  d.class_labels = std::vector<int>{0};
  CHECK_THROWS_AS(d.validate(), DatasetError);
}

TEST_CASE("center removes row means exactly") {
  std::mt19937_64 rng(21);
  const RawDataset raw = testutil::random_dataset(rng, 4, 2, 30);
  const CenteredDataset d = center(raw);
  for (std::size_t i = 0; i < d.n(); ++i)
    CHECK(kern::sum(d.x.row(i), d.samples()) == doctest::Approx(0.0).epsilon(1e-10));
  for (std::size_t i = 0; i < d.m(); ++i)
    CHECK(kern::sum(d.y.row(i), d.samples()) == doctest::Approx(0.0).epsilon(1e-10));

  RawDataset one;
  one.inputs = Matrix(2, 1, 1.0);
  one.targets = Matrix(1, 1, 1.0);
  CHECK_THROWS_AS(center(one), DatasetError);
}

TEST_CASE("covariances are PSD") {
  std::mt19937_64 rng(22);
  const RawDataset raw = testutil::random_dataset(rng, 4, 2, 20);
  const CovarianceSet c = covariances(center(raw));
  for (const Matrix* s : {&c.cxx, &c.cyy}) {
    const EigResult e = sym_eig(*s);
    for (double v : e.values) CHECK(v >= -1e-12 * std::max(1.0, e.values.front()));
  }
  CHECK(c.cxy.rows() == 4);
  CHECK(c.cxy.cols() == 2);
}

TEST_CASE("centered covariances are offset invariant") {
  std::mt19937_64 rng(23);
  RawDataset raw = testutil::random_dataset(rng, 3, 2, 25);
  const CovarianceSet base = covariances(center(raw));

  for (std::size_t i = 0; i < raw.inputs.rows(); ++i)
    for (std::size_t j = 0; j < raw.inputs.cols(); ++j) raw.inputs(i, j) += 7.5;
  for (std::size_t i = 0; i < raw.targets.rows(); ++i)
    for (std::size_t j = 0; j < raw.targets.cols(); ++j) raw.targets(i, j) -= 2.25;
  const CovarianceSet shifted = covariances(center(raw));

  CHECK(testutil::max_abs_diff(base.cxx, shifted.cxx) < 1e-9);
  CHECK(testutil::max_abs_diff(base.cxy, shifted.cxy) < 1e-9);
  CHECK(testutil::max_abs_diff(base.cyy, shifted.cyy) < 1e-9);
}

TEST_CASE("raw_covariances keep the uncentered products") {
  RawDataset raw;
  raw.inputs = Matrix::from_rows({{1, 0}, {0, 1}});
  raw.targets = Matrix::from_rows({{1, 1}});
  const CovarianceSet c = raw_covariances(raw);
  CHECK(c.cxx(0, 0) == 1.0);
  CHECK(c.cxx(0, 1) == 0.0);
  CHECK(c.cxy(0, 0) == 1.0);
  CHECK(c.cxy(1, 0) == 1.0);
  CHECK(c.cyy(0, 0) == 2.0);
}
