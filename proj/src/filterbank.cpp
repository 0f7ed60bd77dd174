#include "nnopls/filterbank.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace nnopls {

std::string to_string(BankMethod m) {
  switch (m) {
    case BankMethod::nopls: return "nopls";
    case BankMethod::pnopls: return "pnopls";
    case BankMethod::defnopls: return "defnopls";
    case BankMethod::nmf_opls: return "nmf_opls";
    case BankMethod::popls: return "popls";
    case BankMethod::opls: return "opls";
    case BankMethod::gabor: return "gabor";
    case BankMethod::philips: return "philips";
  }
  throw BankError("unknown bank method");
}

BankMethod bank_method_from_string(const std::string& s) {
  if (s == "nopls") return BankMethod::nopls;
  if (s == "pnopls") return BankMethod::pnopls;
  if (s == "defnopls") return BankMethod::defnopls;
  if (s == "nmf_opls") return BankMethod::nmf_opls;
  if (s == "popls") return BankMethod::popls;
  if (s == "opls") return BankMethod::opls;
  if (s == "gabor") return BankMethod::gabor;
  if (s == "philips") return BankMethod::philips;
  throw BankError("unknown bank method: " + s);
}

bool method_is_constrained(BankMethod m) {
  return m != BankMethod::opls;
}

bool method_is_relevance_ordered(BankMethod m) {
  switch (m) {
    case BankMethod::nopls:
    case BankMethod::defnopls:
    case BankMethod::popls:
    case BankMethod::opls:
      return true;
    default:
      return false;
  }
}

void FilterBank::validate() const {
  if (u.rows() == 0 || u.cols() == 0) throw BankError("empty filter bank");
  if (method_is_constrained(method) && u.min_entry() < 0.0)
    throw BankError("negative coefficient in a " + to_string(method) + " bank");
  if (!mu_x.empty() && mu_x.size() != u.rows())
    throw BankError("mu_x length does not match bank dimension");
}

FeatureMatrix extract(const FilterBank& bank, const Matrix& x,
                      const std::vector<double>& mu_x) {
  if (x.rows() != bank.n())
    throw BankError("extract: data dimension " + std::to_string(x.rows()) +
                    " does not match bank dimension " + std::to_string(bank.n()));
  FeatureMatrix f;
  f.x_prime = matmul_tn(bank.u, x);
  if (!mu_x.empty()) {
    if (mu_x.size() != bank.n()) throw BankError("extract: mu_x dimension mismatch");
    f.offset = matvec_t(bank.u, mu_x);
  } else {
    f.offset.assign(bank.n_f(), 0.0);
  }
  return f;
}

double default_zero_threshold(const FilterBank& bank) {
  return 1e-10 * bank.u.max_abs();
}

double nz_rate(const FilterBank& bank, double zero_threshold) {
  if (bank.u.empty()) throw BankError("nz_rate: empty bank");
  if (zero_threshold < 0.0) zero_threshold = default_zero_threshold(bank);
  std::size_t nonzero = 0;
  for (std::size_t i = 0; i < bank.u.size(); ++i)
    if (std::abs(bank.u.data()[i]) > zero_threshold) ++nonzero;
  return double(nonzero) / double(bank.u.size());
}

double interpretability(double nz, std::size_t n_f, std::size_t n_ref) {
  if (!(nz > 0.0 && nz <= 1.0)) throw BankError("interpretability: NZ must be in (0, 1]");
  if (n_f < 1 || n_ref < 1) throw BankError("interpretability: counts must be >= 1");
  return -std::log10(nz) - std::log10(double(n_f) / double(n_ref));
}

double reconstruction_loss(const Matrix& u, const Matrix& w, const CenteredDataset& d) {
  if (u.rows() != d.n() || w.rows() != d.m() || u.cols() != w.cols())
    throw BankError("reconstruction_loss: dimension mismatch");
  const Matrix proj = matmul_tn(u, d.x); // n_f x N
  const Matrix res = d.y - matmul(w, proj);
  return res.frobenius_sq();
}

FilterBank gabor_bank(std::size_t rho, std::size_t n_freq, std::size_t n_orient,
                      double freq_ratio, double gamma, double eta, double max_freq) {
  if (rho < 2) throw BankError("gabor_bank: rho must be >= 2");
  const std::size_t n = rho * rho;
  FilterBank bank;
  bank.method = BankMethod::gabor;
  bank.ordered_by_relevance = false;
  bank.u = Matrix(n, n_freq * n_orient);
  bank.preproc["rho"] = double(rho);

  // Half-offset centered grid so that index mirroring is exact negation.
  auto freq_at = [&](std::size_t idx) {
    return (double(idx) - double(rho) / 2.0 + 0.5) / double(rho);
  };

  const double pi = 3.14159265358979323846;
  for (std::size_t fi = 0; fi < n_freq; ++fi) {
    const double f0 = max_freq / std::pow(freq_ratio, double(fi));
    for (std::size_t oi = 0; oi < n_orient; ++oi) {
      const double theta = pi * double(oi) / double(n_orient);
      const double ct = std::cos(theta), st = std::sin(theta);
      const std::size_t col = fi * n_orient + oi;
      for (std::size_t r = 0; r < rho; ++r) {
        const double v = freq_at(r);
        for (std::size_t c = 0; c < rho; ++c) {
          const double uu = freq_at(c);
          auto lobe = [&](double a, double b) {
            const double up = a * ct + b * st;
            const double vp = -a * st + b * ct;
            const double e = (pi * pi / (f0 * f0)) *
                             (gamma * gamma * (up - f0) * (up - f0) + eta * eta * vp * vp);
            return std::exp(-e);
          };
          // Real-filter magnitude response: symmetric pair of lobes.
          bank.u(r * rho + c, col) = lobe(uu, v) + lobe(-uu, -v);
        }
      }
    }
  }
  return bank;
}

FilterBank philips_bank(std::size_t d, double frame_rate_hz, std::size_t n_coeffs) {
  if (d < 2) throw BankError("philips_bank: d must be >= 2");
  FilterBank bank;
  bank.method = BankMethod::philips;
  bank.ordered_by_relevance = false;
  bank.u = Matrix(d * n_coeffs, 4 * n_coeffs);
  bank.preproc["d"] = double(d);
  bank.preproc["coeffs"] = double(n_coeffs);
  bank.preproc["frame_rate_hz"] = frame_rate_hz;

  for (std::size_t c = 0; c < n_coeffs; ++c) {
    for (std::size_t k = 0; k < d; ++k) {
      const double hz = double(k) * frame_rate_hz / (2.0 * double(d - 1));
      int band = -1;
      if (k == 0) band = 0;                      // DC
      else if (hz < 2.0) band = 1;               // beat rates
      else if (hz >= 3.0 && hz < 15.0) band = 2; // modulation energy
      else if (hz >= 20.0) band = 3;             // roughness
      if (band >= 0) bank.u(c * d + k, c * 4 + std::size_t(band)) = 1.0;
    }
  }
  return bank;
}

namespace {

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace

void save_bank(const FilterBank& bank, const std::string& path) {
  nlohmann::json header;
  header["method"] = to_string(bank.method);
  header["n"] = bank.n();
  header["n_f"] = bank.n_f();
  header["ordered_by_relevance"] = bank.ordered_by_relevance;
  header["preproc"] = bank.preproc;
  header["mu_x"] = bank.mu_x;

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw BankError("cannot write " + tmp);
    out << header.dump() << "\n---\n";
    for (std::size_t i = 0; i < bank.u.rows(); ++i) {
      for (std::size_t j = 0; j < bank.u.cols(); ++j) {
        if (j) out << ',';
        out << format_full(bank.u(i, j));
      }
      out << '\n';
    }
    if (!out) throw BankError("write failure on " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

FilterBank load_bank(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw BankError("cannot open " + path);

  std::string header_text;
  std::string line;
  bool found_sep = false;
  while (std::getline(in, line)) {
    if (line == "---") {
      found_sep = true;
      break;
    }
    header_text += line;
  }
  if (!found_sep) throw BankError(path + ": missing '---' separator");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    throw BankError(path + ": bad header: " + e.what());
  }

  FilterBank bank;
  try {
    bank.method = bank_method_from_string(header.at("method").get<std::string>());
    bank.ordered_by_relevance = header.value("ordered_by_relevance", false);
    if (header.contains("preproc"))
      bank.preproc = header["preproc"].get<std::map<std::string, double>>();
    if (header.contains("mu_x")) bank.mu_x = header["mu_x"].get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw BankError(path + ": bad header field: " + e.what());
  }

  const std::size_t n = header.at("n").get<std::size_t>();
  const std::size_t n_f = header.at("n_f").get<std::size_t>();
  bank.u = Matrix(n, n_f);

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (row >= n)
      throw BankError(path + ": more than " + std::to_string(n) + " payload rows");
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      if (col >= n_f)
        throw BankError(path + ": row " + std::to_string(row) + " has more than " +
                        std::to_string(n_f) + " fields");
      try {
        bank.u(row, col) = std::stod(cell);
      } catch (const std::exception&) {
        throw BankError(path + ": unparsable value '" + cell + "' at row " +
                        std::to_string(row) + " field " + std::to_string(col));
      }
      ++col;
    }
    if (col != n_f)
      throw BankError(path + ": row " + std::to_string(row) + " has " +
                      std::to_string(col) + " fields, expected " + std::to_string(n_f));
    ++row;
  }
  if (row != n)
    throw BankError(path + ": " + std::to_string(row) + " payload rows, expected " +
                    std::to_string(n));

  bank.validate();
  return bank;
}

} // namespace nnopls
