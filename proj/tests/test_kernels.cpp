#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <vector>

#include "nnopls/kernels.hpp"

using namespace nnopls;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

} // namespace

TEST_CASE("scalar kernels match naive loops") {
  std::mt19937_64 rng(7);
  kern::force_scalar(true);
  for (std::size_t n : {std::size_t(1), std::size_t(3), std::size_t(17), std::size_t(64)}) {
    auto x = random_vec(rng, n), y = random_vec(rng, n);

    double dot_ref = 0.0, sum_ref = 0.0, sumsq_ref = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dot_ref += x[i] * y[i];
      sum_ref += x[i];
      sumsq_ref += x[i] * x[i];
    }
    CHECK(kern::dot(x.data(), y.data(), n) == doctest::Approx(dot_ref).epsilon(1e-14));
    CHECK(kern::sum(x.data(), n) == doctest::Approx(sum_ref).epsilon(1e-14));
    CHECK(kern::sumsq(x.data(), n) == doctest::Approx(sumsq_ref).epsilon(1e-14));

    auto y2 = y;
    kern::axpy(0.75, x.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(y2[i] == doctest::Approx(y[i] + 0.75 * x[i]).epsilon(1e-14));

    std::vector<double> prod(n), quot(n);
    kern::mul(x.data(), y.data(), prod.data(), n);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(prod[i] == doctest::Approx(x[i] * y[i]));

    std::vector<double> yq = y;
    for (auto& v : yq)
      if (v == 0.0) v = 1.0;
    kern::div(x.data(), yq.data(), quot.data(), n);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(quot[i] == doctest::Approx(x[i] / yq[i]));

    auto clamped = x;
    kern::clamp_floor(0.1, clamped.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(clamped[i] >= 0.1);

    auto scaled = x;
    kern::scale(-3.0, scaled.data(), n);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(scaled[i] == doctest::Approx(-3.0 * x[i]));
  }
  kern::force_scalar(false);
}

TEST_CASE("vector variants agree with the scalar reference") {
  if (kern::active_isa() == kern::Isa::scalar) {
    MESSAGE("no vector ISA available on this machine, equivalence vacuous");
    return;
  }
  std::mt19937_64 rng(11);
  // Lengths straddling vector widths, including remainders.
  for (std::size_t n : {std::size_t(1), std::size_t(4), std::size_t(5), std::size_t(31),
                        std::size_t(32), std::size_t(1000), std::size_t(1003)}) {
    auto x = random_vec(rng, n), y = random_vec(rng, n);

    kern::force_scalar(true);
    const double dot_s = kern::dot(x.data(), y.data(), n);
    const double sum_s = kern::sum(x.data(), n);
    const double sumsq_s = kern::sumsq(x.data(), n);
    auto axpy_s = y;
    kern::axpy(1.25, x.data(), axpy_s.data(), n);

    kern::force_scalar(false);
    REQUIRE(kern::active_isa() != kern::Isa::scalar);
    const double dot_v = kern::dot(x.data(), y.data(), n);
    const double sum_v = kern::sum(x.data(), n);
    const double sumsq_v = kern::sumsq(x.data(), n);
    auto axpy_v = y;
    kern::axpy(1.25, x.data(), axpy_v.data(), n);

    // Reassociation and FMA change rounding, not the value.
    CHECK(dot_v == doctest::Approx(dot_s).epsilon(1e-12));
    CHECK(sum_v == doctest::Approx(sum_s).epsilon(1e-12));
    CHECK(sumsq_v == doctest::Approx(sumsq_s).epsilon(1e-12));
    for (std::size_t i = 0; i < n; ++i)
      CHECK(axpy_v[i] == doctest::Approx(axpy_s[i]).epsilon(1e-12));

    std::vector<double> mul_s(n), mul_v(n);
    kern::force_scalar(true);
    kern::mul(x.data(), y.data(), mul_s.data(), n);
    kern::force_scalar(false);
    kern::mul(x.data(), y.data(), mul_v.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(mul_v[i] == mul_s[i]);
  }
}
