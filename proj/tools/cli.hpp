#pragma once

// Command-line front end. Kept in a header so tests can drive it in-process.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "whitekit/whitekit.hpp"

namespace whitekit::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kNumericalError = 3 };

struct WhiteningFlags {
  std::string method = "exact";
  std::size_t iterations = 5;
  double epsilon = 1e-5;
  std::size_t group_size = 0;  // 0 = ungrouped

  void attach(CLI::App& app) {
    app.add_option("--method", method, "exact | iternorm")
        ->check(CLI::IsMember({"exact", "iternorm", "iterative"}));
    app.add_option("--iters", iterations, "Newton iterations (iternorm)")->check(CLI::PositiveNumber);
    app.add_option("--eps", epsilon, "covariance shrinkage")->check(CLI::NonNegativeNumber);
    app.add_option("--group-size", group_size, "whiten consecutive column groups of this size");
  }

  WhiteningConfig config() const {
    WhiteningConfig cfg;
    cfg.method = method == "exact" ? WhiteningMethod::Exact : WhiteningMethod::Iterative;
    cfg.iterations = iterations;
    cfg.epsilon = epsilon;
    if (group_size > 0) cfg.group_size = group_size;
    return cfg;
  }

  ordered_json echo() const {
    ordered_json j;
    j["method"] = method == "exact" ? "exact" : "iternorm";
    j["iters"] = iterations;
    j["eps"] = epsilon;
    j["group_size"] = group_size > 0 ? ordered_json(group_size) : ordered_json(nullptr);
    return j;
  }
};

struct ProbeFlags {
  std::size_t k = 20;
  double l2 = 1e-4;
  double lr = 0.1;
  std::size_t max_iters = 2000;
  double tol = 1e-6;

  void attach(CLI::App& app) {
    app.add_option("--k", k, "neighbors for the k-NN probe")->check(CLI::PositiveNumber);
    app.add_option("--l2", l2, "linear probe L2 penalty")->check(CLI::NonNegativeNumber);
    app.add_option("--lr", lr, "linear probe initial step size")->check(CLI::PositiveNumber);
    app.add_option("--max-iters", max_iters, "linear probe step budget");
    app.add_option("--tol", tol, "linear probe gradient tolerance")->check(CLI::NonNegativeNumber);
  }

  LinearProbeConfig linear() const { return {l2, lr, max_iters, tol}; }

  ordered_json echo() const {
    ordered_json j;
    j["k"] = k;
    j["l2"] = l2;
    j["lr"] = lr;
    j["max_iters"] = max_iters;
    j["tol"] = tol;
    return j;
  }
};

namespace detail {

inline std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

inline void emit(const std::string& text, const std::string& output_path, std::ostream& out) {
  if (output_path.empty()) {
    out << text;
  } else {
    write_atomic(output_path, text);
  }
}

inline double rank_epsilon(const std::string& precision) {
  return precision == "float64" ? kDoubleEpsilon : kFloatEpsilon;
}

/// Probe inputs need a shared class count so train and test rankings agree.
inline std::pair<LabeledEmbeddings, LabeledEmbeddings> labeled_pair(const EmbeddingData& train,
                                                                    const EmbeddingData& test) {
  if (!train.labels) throw Error(ErrorKind::MalformedFile, "training file has no labels");
  if (!test.labels) throw Error(ErrorKind::MalformedFile, "test file has no labels");
  const auto max_label = [](const std::vector<Label>& y) { return *std::max_element(y.begin(), y.end()); };
  const std::size_t classes = std::max(max_label(*train.labels), max_label(*test.labels)) + std::size_t{1};
  return {LabeledEmbeddings(train.features, *train.labels, classes),
          LabeledEmbeddings(test.features, *test.labels, classes)};
}

struct ProbePair {
  ProbeScores linear;
  ProbeScores knn;
};

inline ProbePair run_probes(const LabeledEmbeddings& train, const LabeledEmbeddings& test,
                            const ProbeFlags& flags) {
  const LinearModel model = linear_probe_fit(train, flags.linear());
  return {linear_probe_eval(model, test), knn_probe(train, test, std::min(flags.k, train.size()))};
}

inline ordered_json to_json(const ProbePair& p) {
  ordered_json j;
  j["linear"] = whitekit::to_json(p.linear);
  j["knn"] = whitekit::to_json(p.knn);
  return j;
}

inline ProbeScores difference(const ProbeScores& a, const ProbeScores& b) {
  return {a.top1 - b.top1, a.top5 - b.top5};
}

/// Deterministic shuffled split; the first `fraction` of the permutation trains.
inline std::pair<LabeledEmbeddings, LabeledEmbeddings> split(const LabeledEmbeddings& data,
                                                             double fraction, std::uint64_t seed) {
  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  SplitMix64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next() % i);
    std::swap(order[i - 1], order[j]);
  }
  const auto n_train = static_cast<std::size_t>(fraction * static_cast<double>(n));
  if (n_train < 1 || n_train >= n) {
    throw Error(ErrorKind::DegenerateInput, "split leaves an empty train or test partition (n = " +
                                                std::to_string(n) + ")");
  }
  auto take = [&](std::size_t begin, std::size_t end) {
    Matrix x(end - begin, data.dim());
    std::vector<Label> y(end - begin);
    for (std::size_t r = begin; r < end; ++r) {
      auto src = data.features.row(order[r]);
      std::copy(src.begin(), src.end(), x.row(r - begin).begin());
      y[r - begin] = data.labels[order[r]];
    }
    return LabeledEmbeddings(std::move(x), std::move(y), data.num_classes);
  };
  return {take(0, n_train), take(n_train, n)};
}

inline std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct ManifestEntry {
  std::filesystem::path embeddings;
  std::optional<std::filesystem::path> labels;  // empty = labels stored in the embedding file
  std::string name;
};

/// `<embedding-path> <label-path | -> <name>` per line; '#' starts a comment.
/// Relative paths resolve against the manifest's directory.
inline std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path q(p);
    return q.is_absolute() ? q : base / q;
  };
  std::vector<ManifestEntry> entries;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string emb, lab, name;
    if (!(fields >> emb)) continue;
    if (!(fields >> lab >> name)) {
      throw Error(ErrorKind::MalformedFile, path.string() + ":" + std::to_string(line_no) +
                                                ": expected '<embeddings> <labels|-> <name>'");
    }
    ManifestEntry e{resolve(emb), std::nullopt, name};
    if (lab != "-") e.labels = resolve(lab);
    entries.push_back(std::move(e));
  }
  return entries;
}

inline int exit_code_for(const Error& e) {
  return is_numerical(e.kind()) ? kNumericalError : kInputError;
}

}  // namespace detail

inline int cmd_whiten(const std::string& in_path, const std::string& out_path, bool labels_inline,
                      const WhiteningFlags& flags, std::ostream& err) {
  const EmbeddingData data = load_embeddings(in_path, labels_inline);
  const WhiteningConfig cfg = flags.config();
  const WhiteningResult result = whiten(data.features, cfg);

  // Diagnostics of the batch covariance the transform was fit on.
  const Matrix cov = covariance(center(data.features).centered);
  const SymEig eig = sym_eig(cov);
  const double lmax = eig.eigenvalues.front() + cfg.epsilon;
  const double lmin = std::max(eig.eigenvalues.back() + cfg.epsilon, kEigenvalueFloor);
  ordered_json diag;
  diag["method"] = flags.echo()["method"];
  diag["n"] = data.features.rows();
  diag["f"] = data.features.cols();
  diag["cov_trace"] = trace(cov) + cfg.epsilon * static_cast<double>(cov.rows());
  diag["cov_eig_max"] = lmax;
  diag["cov_eig_min"] = lmin;
  diag["cov_condition"] = lmax / lmin;
  diag["transform_max_abs"] = max_abs(result.transform);
  if (cfg.method == WhiteningMethod::Iterative && !cfg.group_size) {
    diag["newton_residual"] = newton_residuals(data.features, cfg).back();
  }
  err << diag.dump() << "\n";

  EmbeddingData out{result.whitened, data.labels, data.column_names, data.format};
  write_atomic(out_path, encode_embeddings(out, data.format));
  return kOk;
}

inline int cmd_metrics(const std::string& in_path, bool labels_inline, const std::string& precision,
                       const std::string& output_path, std::ostream& out) {
  const EmbeddingData data = load_embeddings(in_path, labels_inline);
  const FeatureReport r = report(data.features, detail::rank_epsilon(precision));
  detail::emit(detail::dump(to_json(r)), output_path, out);
  return kOk;
}

struct ProbeOptions {
  ProbeFlags probe;
  WhiteningFlags whitening;
  bool whiten = false;
  std::string whiten_mode = "train";  // train | batch
  bool labels_inline = false;
  std::string output;
};

inline int cmd_probe(const std::string& train_path, const std::string& test_path,
                     const ProbeOptions& opt, std::ostream& out) {
  const EmbeddingData train_file = load_embeddings(train_path, opt.labels_inline);
  const EmbeddingData test_file = load_embeddings(test_path, opt.labels_inline);
  auto [train, test] = detail::labeled_pair(train_file, test_file);
  if (train.dim() != test.dim()) {
    throw Error(ErrorKind::ShapeMismatch, "train has " + std::to_string(train.dim()) +
                                              " features, test has " + std::to_string(test.dim()));
  }

  const detail::ProbePair raw = detail::run_probes(train, test, opt.probe);
  ordered_json j;
  j["linear"] = to_json(raw.linear);
  j["knn"] = to_json(raw.knn);

  ordered_json config = opt.probe.echo();
  if (opt.whiten) {
    const WhiteningConfig cfg = opt.whitening.config();
    const WhiteningResult fit = whitekit::whiten(train.features, cfg);
    const Matrix test_w = opt.whiten_mode == "batch" ? whitekit::whiten(test.features, cfg).whitened
                                                     : fit.apply(test.features);
    const detail::ProbePair white = detail::run_probes(with_features(train, fit.whitened),
                                                       with_features(test, test_w), opt.probe);
    j["whitened"] = detail::to_json(white);
    ordered_json gain;
    gain["linear"] = to_json(detail::difference(white.linear, raw.linear));
    gain["knn"] = to_json(detail::difference(white.knn, raw.knn));
    j["gain"] = gain;
    ordered_json w = opt.whitening.echo();
    w["mode"] = opt.whiten_mode;
    config["whitening"] = w;
  }
  j["config"] = config;
  detail::emit(detail::dump(j), opt.output, out);
  return kOk;
}

inline int cmd_simulate(const SynthSpec& spec, const std::string& format, const std::string& out_path) {
  const LabeledEmbeddings data = generate(spec);
  const std::optional<std::vector<Label>> labels = data.labels;
  write_atomic(out_path, format == "csv" ? encode_csv(data.features, labels)
                                         : encode_fem1(data.features, labels));
  return kOk;
}

struct ReportOptions {
  ProbeFlags probe;
  double split = 0.8;
  std::uint64_t seed = 0;
  bool labels_inline = false;
  std::string precision = "float32";
};

inline const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols = {
      "name",           "n",           "f",           "mean_abs_corr", "mean_std",
      "anisotropy",     "anisotropy_centered",        "numerical_rank", "linear_top1",
      "linear_top5",    "knn_top1",    "knn_top5",    "singular_values"};
  return cols;
}

inline int cmd_report(const std::string& manifest_path, const std::string& out_path,
                      const ReportOptions& opt) {
  const auto entries = detail::read_manifest(manifest_path);
  std::string csv;
  for (std::size_t i = 0; i < report_columns().size(); ++i) {
    csv += (i ? "," : "") + report_columns()[i];
  }
  csv += '\n';

  for (const auto& entry : entries) {
    EmbeddingData data = load_embeddings(entry.embeddings, opt.labels_inline);
    if (entry.labels) data.labels = read_label_file(*entry.labels);
    if (!data.labels) {
      throw Error(ErrorKind::MalformedFile, entry.embeddings.string() + " has no labels");
    }
    if (data.labels->size() != data.features.rows()) {
      throw Error(ErrorKind::MalformedFile, entry.name + ": " + std::to_string(data.labels->size()) +
                                                " labels for " +
                                                std::to_string(data.features.rows()) + " rows");
    }
    const FeatureReport r = report(data.features, detail::rank_epsilon(opt.precision));
    auto [train, test] = detail::split(data.labeled(), opt.split, opt.seed);
    const detail::ProbePair scores = detail::run_probes(train, test, opt.probe);

    std::string spectrum;
    for (std::size_t i = 0; i < r.singular_values.size(); ++i) {
      spectrum += (i ? ";" : "") + format_double(r.singular_values[i]);
    }
    const std::vector<std::string> row = {
        detail::csv_cell(entry.name),
        std::to_string(r.n),
        std::to_string(r.f),
        format_double(r.mean_abs_corr),
        format_double(r.mean_std),
        format_double(r.anisotropy),
        r.anisotropy_centered ? format_double(*r.anisotropy_centered) : "",
        std::to_string(r.numerical_rank),
        format_double(scores.linear.top1),
        format_double(scores.linear.top5),
        format_double(scores.knn.top1),
        format_double(scores.knn.top5),
        spectrum};
    for (std::size_t i = 0; i < row.size(); ++i) csv += (i ? "," : "") + row[i];
    csv += '\n';
  }
  write_atomic(out_path, csv);
  return kOk;
}

inline int cmd_convert(const std::string& in_path, const std::string& out_path, bool labels_inline,
                       std::string to) {
  const EmbeddingData data = load_embeddings(in_path, labels_inline);
  if (to.empty()) to = std::filesystem::path(out_path).extension() == ".csv" ? "csv" : "fem1";
  write_atomic(out_path, encode_embeddings(data, to == "csv" ? FileFormat::Csv : FileFormat::Fem1));
  return kOk;
}

/// Parses argv and runs one subcommand. Returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"whitekit: batch ZCA whitening and feature-space diagnostics for embeddings"};
  app.require_subcommand(1);

  // whiten
  auto* whiten_cmd = app.add_subcommand("whiten", "whiten an embedding file");
  std::string whiten_in, whiten_out;
  bool whiten_labels_inline = false;
  WhiteningFlags whiten_flags;
  whiten_flags.attach(*whiten_cmd);
  whiten_cmd->add_flag("--labels-inline", whiten_labels_inline, "CSV: last column holds labels");
  whiten_cmd->add_option("input", whiten_in, "FEM1 or CSV input")->required();
  whiten_cmd->add_option("output", whiten_out, "output path (same format as input)")->required();

  // metrics
  auto* metrics_cmd = app.add_subcommand("metrics", "print the feature report as JSON");
  std::string metrics_in, metrics_out;
  std::string metrics_precision = "float32";
  bool metrics_labels_inline = false;
  metrics_cmd->add_option("input", metrics_in, "FEM1 or CSV input")->required();
  metrics_cmd->add_option("-o,--output", metrics_out, "write JSON here instead of stdout");
  metrics_cmd->add_option("--rank-precision", metrics_precision,
                          "rounding level for the numerical-rank threshold")
      ->check(CLI::IsMember({"float32", "float64"}));
  metrics_cmd->add_flag("--labels-inline", metrics_labels_inline, "CSV: last column holds labels");

  // probe
  auto* probe_cmd = app.add_subcommand("probe", "linear and k-NN probe accuracy");
  std::string probe_train, probe_test;
  ProbeOptions probe_opt;
  probe_opt.probe.attach(*probe_cmd);
  probe_opt.whitening.attach(*probe_cmd);
  probe_cmd->add_flag("--whiten", probe_opt.whiten, "also score whitened features");
  probe_cmd->add_option("--whiten-mode", probe_opt.whiten_mode,
                        "train: reuse the train transform on test; batch: whiten test by itself")
      ->check(CLI::IsMember({"train", "batch"}));
  probe_cmd->add_flag("--labels-inline", probe_opt.labels_inline, "CSV: last column holds labels");
  probe_cmd->add_option("-o,--output", probe_opt.output, "write JSON here instead of stdout");
  probe_cmd->add_option("train", probe_train, "labeled training embeddings")->required();
  probe_cmd->add_option("test", probe_test, "labeled test embeddings")->required();

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic embedding file");
  SynthSpec spec;
  std::string sim_pattern = "isotropic", sim_format = "fem1", sim_out;
  sim_cmd->add_option("--pattern", sim_pattern,
                      "isotropic | complete-collapse | dimensional-collapse | correlated | buried-signal");
  sim_cmd->add_option("--n", spec.n, "rows");
  sim_cmd->add_option("--f", spec.f, "features");
  sim_cmd->add_option("--rank", spec.rank, "subspace rank (dimensional-collapse)");
  sim_cmd->add_option("--rho", spec.rho, "pairwise correlation (correlated)");
  sim_cmd->add_option("--classes", spec.num_classes, "number of label classes");
  sim_cmd->add_option("--seed", spec.seed, "PRNG seed");
  sim_cmd->add_option("--format", sim_format, "fem1 | csv")->check(CLI::IsMember({"fem1", "csv"}));
  sim_cmd->add_option("output", sim_out, "output path")->required();

  // report
  auto* report_cmd = app.add_subcommand("report", "metrics and probe scores for many files as CSV");
  std::string manifest, report_out;
  ReportOptions report_opt;
  report_opt.probe.attach(*report_cmd);
  report_cmd->add_option("--split", report_opt.split, "training fraction of each file")
      ->check(CLI::Range(0.0, 1.0));
  report_cmd->add_option("--seed", report_opt.seed, "split shuffle seed");
  report_cmd->add_option("--rank-precision", report_opt.precision,
                         "rounding level for the numerical-rank threshold")
      ->check(CLI::IsMember({"float32", "float64"}));
  report_cmd->add_flag("--labels-inline", report_opt.labels_inline, "CSV: last column holds labels");
  report_cmd->add_option("manifest", manifest, "one '<embeddings> <labels|-> <name>' per line")
      ->required();
  report_cmd->add_option("output", report_out, "CSV output path")->required();

  // convert
  auto* convert_cmd = app.add_subcommand("convert", "convert between FEM1 and CSV");
  std::string conv_in, conv_out, conv_to;
  bool conv_labels_inline = false;
  convert_cmd->add_option("--to", conv_to, "fem1 | csv (default: from output extension)")
      ->check(CLI::IsMember({"fem1", "csv"}));
  convert_cmd->add_flag("--labels-inline", conv_labels_inline, "CSV: last column holds labels");
  convert_cmd->add_option("input", conv_in)->required();
  convert_cmd->add_option("output", conv_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  try {
    if (whiten_cmd->parsed()) {
      return cmd_whiten(whiten_in, whiten_out, whiten_labels_inline, whiten_flags, err);
    }
    if (metrics_cmd->parsed()) {
      return cmd_metrics(metrics_in, metrics_labels_inline, metrics_precision, metrics_out, out);
    }
    if (probe_cmd->parsed()) return cmd_probe(probe_train, probe_test, probe_opt, out);
    if (sim_cmd->parsed()) {
      spec.pattern = parse_pattern(sim_pattern);
      return cmd_simulate(spec, sim_format, sim_out);
    }
    if (report_cmd->parsed()) return cmd_report(manifest, report_out, report_opt);
    if (convert_cmd->parsed()) return cmd_convert(conv_in, conv_out, conv_labels_inline, conv_to);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return detail::exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}

}  // namespace whitekit::cli
