#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "nnopls/eval.hpp"
#include "nnopls/filterbank.hpp"
#include "nnopls/io.hpp"
#include "nnopls/nnls.hpp"
#include "nnopls/preprocess.hpp"
#include "nnopls/solvers.hpp"

using json = nlohmann::json;
using namespace nnopls;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write " + tmp);
    out << text;
    if (!out) throw IoError("write failure on " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

json report_to_json(const SolverReport& r) {
  json j;
  j["outer_iterations"] = r.outer_iterations;
  j["loss_trajectory"] = r.loss_trajectory;
  j["eigenvalue_trace_trajectory"] = r.eigenvalue_trace_trajectory;
  j["stop_reason"] = r.stop_reason == StopReason::tolerance ? "tolerance" : "max_iterations";
  j["unordered"] = r.unordered;
  j["convergence_warning"] = r.convergence_warning;
  j["degenerate_columns"] = r.degenerate_columns;
  j["filters_extracted"] = r.filters_extracted;
  return j;
}

std::vector<std::string> read_groups(const std::string& path, std::size_t n_samples) {
  if (path.empty()) {
    std::vector<std::string> g(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) g[i] = std::to_string(i);
    return g;
  }
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::string> g;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) g.push_back(line);
  if (g.size() != n_samples)
    throw IoError(path + ": " + std::to_string(g.size()) + " groups for " +
                  std::to_string(n_samples) + " samples");
  return g;
}

RawDataset load_dataset(const std::string& inputs_path, const std::string& targets_path,
                        const std::string& labels_path) {
  RawDataset data;
  data.inputs = read_csv_matrix(inputs_path);
  if (!labels_path.empty()) {
    auto labels = read_labels(labels_path);
    int m = 0;
    for (int v : labels) {
      if (v < 0) throw IoError(labels_path + ": negative class label");
      m = std::max(m, v + 1);
    }
    data.targets = encode_targets(labels, std::size_t(m));
    data.class_labels = std::move(labels);
  } else {
    data.targets = read_csv_matrix(targets_path);
  }
  if (data.targets.cols() != data.inputs.cols())
    throw IoError("inputs have " + std::to_string(data.inputs.cols()) +
                  " samples, targets have " + std::to_string(data.targets.cols()));
  return data;
}

int cmd_preprocess_image(const std::string& image_path, std::size_t rho,
                         std::size_t tile_rows, std::size_t tile_cols,
                         const std::string& out_path) {
  const GrayImage img = read_image(image_path);
  std::vector<GrayImage> tiles;
  if (tile_rows > 1 || tile_cols > 1)
    tiles = tile_image(img, tile_rows, tile_cols);
  else
    tiles.push_back(img);

  Matrix out(rho * rho, tiles.size());
  for (std::size_t j = 0; j < tiles.size(); ++j) {
    const SpectrumVector s = image_to_spectrum(tiles[j], rho);
    for (std::size_t i = 0; i < s.values.size(); ++i) out(i, j) = s.values[i];
  }
  write_csv_matrix(out, out_path);
  std::cout << "wrote " << out.rows() << "x" << out.cols() << " spectra to "
            << out_path << "\n";
  return kExitOk;
}

int cmd_integrate_audio(const std::string& frames_path, std::size_t window,
                        double frame_rate, const std::string& out_path) {
  FrameSeries series;
  series.coeffs = read_csv_matrix(frames_path);
  series.frame_rate_hz = frame_rate;
  const auto v = integrate_frames(series, window);
  Matrix out(v.size(), 1);
  for (std::size_t i = 0; i < v.size(); ++i) out(i, 0) = v[i];
  write_csv_matrix(out, out_path);
  std::cout << "wrote " << v.size() << " periodogram features to " << out_path << "\n";
  return kExitOk;
}

int cmd_design(const std::string& inputs_path, const std::string& targets_path,
               const std::string& labels_path, const std::string& method,
               const SolverConfig& cfg, const std::string& out_path,
               const std::string& report_path) {
  const RawDataset data = load_dataset(inputs_path, targets_path, labels_path);
  data.validate();
  const CenteredDataset d = center(data);

  SolverResult result;
  bool numerical_failure = false;
  try {
    result = run_solver(method, data, d, cfg);
  } catch (const NnlsFailure& e) {
    std::cerr << "solver failed: " << e.what() << "\n";
    return kExitNumerical;
  }

  FilterBank bank;
  bank.u = result.u;
  bank.method = bank_method_from_string(method);
  bank.ordered_by_relevance = method_is_relevance_ordered(bank.method);
  bank.mu_x = d.mu_x;
  save_bank(bank, out_path);

  if (!report_path.empty()) {
    json j = report_to_json(result.report);
    j["method"] = method;
    j["n"] = bank.n();
    j["n_f"] = bank.n_f();
    j["nz"] = nz_rate(bank);
    write_text_atomic(report_path, j.dump(2) + "\n");
  }
  if (result.report.convergence_warning) {
    std::cerr << "warning: solver did not converge cleanly\n";
    numerical_failure = true;
  }
  std::cout << "wrote bank (" << bank.n() << "x" << bank.n_f() << ") to " << out_path
            << "\n";
  return numerical_failure ? kExitNumerical : kExitOk;
}

int cmd_extract(const std::string& bank_path, const std::string& inputs_path,
                const std::string& out_path) {
  const FilterBank bank = load_bank(bank_path);
  const Matrix inputs = read_csv_matrix(inputs_path);
  if (inputs.rows() != bank.n())
    throw IoError("bank expects " + std::to_string(bank.n()) + " variables, inputs have " +
                  std::to_string(inputs.rows()));
  const FeatureMatrix f = extract(bank, inputs, bank.mu_x);
  write_csv_matrix(f.x_prime, out_path);
  std::cout << "wrote " << f.x_prime.rows() << "x" << f.x_prime.cols()
            << " features to " << out_path << "\n";
  return kExitOk;
}

json eval_report_to_json(const EvalReport& r) {
  json j;
  j["method"] = r.method;
  j["oa_percent"] = r.oa_percent;
  j["per_fold_oa"] = r.per_fold_oa;
  j["n_f"] = r.n_f;
  j["nz"] = r.nz;
  j["im"] = r.im;
  j["truncation_meaningful"] = r.truncation_meaningful;
  std::vector<std::vector<double>> conf;
  for (std::size_t i = 0; i < r.confusion.rows(); ++i)
    conf.emplace_back(r.confusion.row(i), r.confusion.row(i) + r.confusion.cols());
  j["confusion"] = conf;
  if (!r.oa_by_k.empty()) j["oa_by_k"] = r.oa_by_k;
  json reports = json::array();
  for (const auto& sr : r.solver_reports) reports.push_back(report_to_json(sr));
  j["solver_reports"] = reports;
  return j;
}

int cmd_evaluate(const std::string& config_path) {
  std::ifstream in(config_path);
  if (!in) throw IoError("cannot open " + config_path);
  json cfg_json;
  try {
    in >> cfg_json;
  } catch (const json::exception& e) {
    throw IoError(config_path + ": " + e.what());
  }

  const std::string inputs_path = cfg_json.at("inputs");
  const std::string labels_path = cfg_json.at("labels");
  const std::string out_prefix = cfg_json.at("out_prefix");
  const std::vector<std::string> methods = cfg_json.at("methods");

  RawDataset data = load_dataset(inputs_path, "", labels_path);
  const auto groups =
      read_groups(cfg_json.value("groups", std::string()), data.samples());

  EvalConfig base;
  base.folds = cfg_json.value("folds", 10);
  base.seed = cfg_json.value("seed", 0UL);
  base.solver.n_f = cfg_json.value("n_f", 4);
  base.solver.seed = base.seed;
  base.n_ref = cfg_json.value("n_ref", 0);
  base.sorted_subsets = cfg_json.value("sorted_subsets", false);
  base.gabor_dual_features = cfg_json.value("gabor_dual_features", false);
  if (cfg_json.contains("max_outer_iterations"))
    base.solver.max_outer_iterations = cfg_json["max_outer_iterations"];

  const GroupedSplit split = grouped_kfold(groups, base.folds, base.seed);

  std::string summary = "method,oa_percent,n_f,nz,im\n";
  bool any_warning = false;
  char line[256];
  for (const auto& method : methods) {
    EvalConfig cfg = base;
    cfg.method = method;
    const EvalReport report = run_experiment(data, split, cfg);
    std::snprintf(line, sizeof line, "%s,%.4f,%zu,%.6f,%.4f\n", method.c_str(),
                  report.oa_percent, report.n_f, report.nz, report.im);
    summary += line;
    write_text_atomic(out_prefix + "_" + method + "_report.json",
                      eval_report_to_json(report).dump(2) + "\n");
    if (!report.oa_by_k.empty()) {
      std::string curve = "k,oa_percent\n";
      for (std::size_t k = 0; k < report.oa_by_k.size(); ++k) {
        std::snprintf(line, sizeof line, "%zu,%.4f\n", k + 1, report.oa_by_k[k]);
        curve += line;
      }
      write_text_atomic(out_prefix + "_" + method + "_oa_by_k.csv", curve);
    }
    for (const auto& sr : report.solver_reports)
      if (sr.convergence_warning) any_warning = true;
    std::cout << method << ": OA " << report.oa_percent << "%\n";
  }
  write_text_atomic(out_prefix + "_summary.csv", summary);
  return any_warning ? kExitNumerical : kExitOk;
}

int cmd_report(const std::string& report_path) {
  std::ifstream in(report_path);
  if (!in) throw IoError("cannot open " + report_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError(report_path + ": " + e.what());
  }
  std::cout << "method: " << j.value("method", std::string("?")) << "\n";
  if (j.contains("oa_percent")) std::cout << "OA: " << double(j["oa_percent"]) << "%\n";
  if (j.contains("n_f")) std::cout << "n_f: " << int(j["n_f"]) << "\n";
  if (j.contains("nz")) std::cout << "NZ: " << double(j["nz"]) << "\n";
  if (j.contains("im")) std::cout << "IM: " << double(j["im"]) << "\n";
  if (j.contains("per_fold_oa")) {
    std::cout << "per-fold OA:";
    for (double v : j["per_fold_oa"]) std::cout << " " << v;
    std::cout << "\n";
  }
  if (j.contains("outer_iterations"))
    std::cout << "outer iterations: " << int(j["outer_iterations"]) << "\n";
  if (j.value("convergence_warning", false)) std::cout << "convergence warning set\n";
  return kExitOk;
}

int cmd_bank_info(const std::string& bank_path, std::size_t nref,
                  const std::string& heatmap_prefix) {
  const FilterBank bank = load_bank(bank_path);
  const double nz = nz_rate(bank);
  std::cout << "n: " << bank.n() << "\n";
  std::cout << "n_f: " << bank.n_f() << "\n";
  std::cout << "method: " << to_string(bank.method) << "\n";
  std::cout << "ordered_by_relevance: " << (bank.ordered_by_relevance ? "yes" : "no")
            << "\n";
  std::cout << "NZ: " << nz << "\n";
  if (nref > 0)
    std::cout << "IM: " << interpretability(nz, bank.n_f(), nref) << "\n";
  else
    std::cout << "IM: omitted (pass --nref to fix the reference bank size)\n";

  const double thr = default_zero_threshold(bank);
  std::cout << "per-filter support:";
  for (std::size_t j = 0; j < bank.n_f(); ++j) {
    std::size_t support = 0;
    for (std::size_t i = 0; i < bank.n(); ++i)
      if (std::abs(bank.u(i, j)) > thr) ++support;
    std::cout << " " << support;
  }
  std::cout << "\n";

  if (!heatmap_prefix.empty()) {
    const auto it = bank.preproc.find("rho");
    if (it == bank.preproc.end())
      throw IoError(bank_path + ": no rho metadata, cannot reshape filters");
    const auto rho = std::size_t(it->second);
    if (rho * rho != bank.n())
      throw IoError(bank_path + ": rho^2 = " + std::to_string(rho * rho) +
                    " does not match n = " + std::to_string(bank.n()));
    for (std::size_t j = 0; j < bank.n_f(); ++j) {
      Matrix img(rho, rho);
      for (std::size_t i = 0; i < bank.n(); ++i) img(i / rho, i % rho) = bank.u(i, j);
      write_csv_matrix(img, heatmap_prefix + std::to_string(j) + ".csv");
    }
    std::cout << "wrote " << bank.n_f() << " heatmap CSVs to " << heatmap_prefix
              << "*.csv\n";
  }
  return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"supervised filter bank design and evaluation"};
  app.require_subcommand(1);

  if (const char* threads = std::getenv("NNOPLS_THREADS")) {
    // Single-process pipeline; the cap only needs to be well-formed.
    if (std::atoi(threads) < 1) {
      std::cerr << "NNOPLS_THREADS must be a positive integer\n";
      return kExitInput;
    }
  }

  std::string image_path, frames_path, inputs_path, targets_path, labels_path;
  std::string bank_path, out_path, report_path, config_path, heatmap_prefix;
  std::string method = "nopls";
  std::size_t rho = 12, tile_rows = 1, tile_cols = 1, window = 256, nf = 4, nref = 0;
  double frame_rate = 400.0 / 3.0;
  SolverConfig solver;

  auto* pre = app.add_subcommand("preprocess-image", "image to decimated power spectrum");
  pre->add_option("--image", image_path, "PGM/PPM image")->required();
  pre->add_option("--rho", rho, "decimation grid side");
  pre->add_option("--tile-rows", tile_rows, "split image into this many tile rows");
  pre->add_option("--tile-cols", tile_cols, "split image into this many tile columns");
  pre->add_option("--out", out_path, "output CSV")->required();

  auto* integ = app.add_subcommand("integrate-audio", "frame trajectories to periodograms");
  integ->add_option("--frames", frames_path, "CSV, one coefficient trajectory per row")
      ->required();
  integ->add_option("--window", window, "integration window length (frames)");
  integ->add_option("--frame-rate", frame_rate, "frame rate in Hz");
  integ->add_option("--out", out_path, "output CSV")->required();

  auto* design = app.add_subcommand("design", "design a filter bank on a dataset");
  design->add_option("--inputs", inputs_path, "inputs CSV, variables x samples")
      ->required();
  design->add_option("--targets", targets_path, "targets CSV, targets x samples");
  design->add_option("--labels", labels_path, "class labels, one integer per line");
  design->add_option("--method", method, "nopls|pnopls|defnopls|nmf_opls|popls|opls");
  design->add_option("--nf", nf, "number of filters");
  design->add_option("--delta", solver.delta, "convergence tolerance");
  design->add_option("--max-iter", solver.max_outer_iterations, "outer iteration cap");
  design->add_option("--tau", solver.ridge_tau, "ridge regularizer");
  design->add_option("--restarts", solver.popls_restarts, "POPLS multistart count");
  design->add_option("--seed", solver.seed, "random seed");
  design->add_option("--out", out_path, "bank file")->required();
  design->add_option("--report", report_path, "solver report JSON");

  auto* extract_cmd = app.add_subcommand("extract", "apply a bank to inputs");
  extract_cmd->add_option("--bank", bank_path, "bank file")->required();
  extract_cmd->add_option("--inputs", inputs_path, "inputs CSV")->required();
  extract_cmd->add_option("--out", out_path, "features CSV")->required();

  auto* eval_cmd = app.add_subcommand("evaluate", "grouped cross-validation run");
  eval_cmd->add_option("--config", config_path, "JSON experiment config")->required();

  auto* report_cmd = app.add_subcommand("report", "summarize a report JSON");
  report_cmd->add_option("--report", report_path, "report JSON")->required();

  auto* info = app.add_subcommand("bank-info", "inspect a bank file");
  info->add_option("--bank", bank_path, "bank file")->required();
  info->add_option("--nref", nref, "reference bank size for IM");
  info->add_option("--heatmap", heatmap_prefix, "dump filters as rho x rho CSVs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? kExitInput : kExitOk;
  }

  try {
    if (pre->parsed())
      return cmd_preprocess_image(image_path, rho, tile_rows, tile_cols, out_path);
    if (integ->parsed())
      return cmd_integrate_audio(frames_path, window, frame_rate, out_path);
    if (design->parsed()) {
      if (targets_path.empty() == labels_path.empty()) {
        std::cerr << "design needs exactly one of --targets or --labels\n";
        return kExitInput;
      }
      bank_method_from_string(method); // reject bogus names before any I/O
      solver.n_f = nf;
      return cmd_design(inputs_path, targets_path, labels_path, method, solver,
                        out_path, report_path);
    }
    if (extract_cmd->parsed()) return cmd_extract(bank_path, inputs_path, out_path);
    if (eval_cmd->parsed()) return cmd_evaluate(config_path);
    if (report_cmd->parsed()) return cmd_report(report_path);
    if (info->parsed()) return cmd_bank_info(bank_path, nref, heatmap_prefix);
  } catch (const NnlsFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
