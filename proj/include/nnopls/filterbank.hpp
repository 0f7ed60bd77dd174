#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nnopls/matrix.hpp"
#include "nnopls/dataset.hpp"

namespace nnopls {

struct BankError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class BankMethod { nopls, pnopls, defnopls, nmf_opls, popls, opls, gabor, philips };

std::string to_string(BankMethod m);
BankMethod bank_method_from_string(const std::string& s);

// Whether the method's filters carry the non-negativity invariant.
bool method_is_constrained(BankMethod m);
bool method_is_relevance_ordered(BankMethod m);

struct FilterBank {
  Matrix u; // n x n_f
  BankMethod method = BankMethod::nopls;
  bool ordered_by_relevance = false;
  std::map<std::string, double> preproc; // e.g. {"rho": 12} or {"d": 129, "coeffs": 6}
  std::vector<double> mu_x;              // stored input mean, may be empty

  std::size_t n() const { return u.rows(); }
  std::size_t n_f() const { return u.cols(); }

  void validate() const;
};

struct FeatureMatrix {
  Matrix x_prime;             // n_f x N
  std::vector<double> offset; // U^T mu_x
};

// x' = U^T x; offset = U^T mu_x.
FeatureMatrix extract(const FilterBank& bank, const Matrix& x,
                      const std::vector<double>& mu_x);

// Fraction of entries with |value| > zero_threshold. threshold < 0 selects
// the default 1e-10 * max|u|.
double nz_rate(const FilterBank& bank, double zero_threshold = -1.0);

double default_zero_threshold(const FilterBank& bank);

// IM = -log10(NZ) - log10(n_f / n_ref).
double interpretability(double nz, std::size_t n_f, std::size_t n_ref);

// Exact ||Y - W U^T X||_F^2 on the centered dataset (direct residual route).
double reconstruction_loss(const Matrix& u, const Matrix& w, const CenteredDataset& d);

// Frequency-domain Gabor bank on the rho x rho decimated grid.
FilterBank gabor_bank(std::size_t rho, std::size_t n_freq = 4, std::size_t n_orient = 6,
                      double freq_ratio = 1.4142135623730951, double gamma = 0.5,
                      double eta = 0.5, double max_freq = 0.327);

// Fixed 4-band modulation-frequency indicator bank, block-diagonal across
// coefficient trajectories.
FilterBank philips_bank(std::size_t d, double frame_rate_hz = 400.0 / 3.0,
                        std::size_t n_coeffs = 1);

void save_bank(const FilterBank& bank, const std::string& path);
FilterBank load_bank(const std::string& path);

} // namespace nnopls
