#include "commands.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <thread>
#include <vector>

#include "ntkforge/ansatz.hpp"
#include "ntkforge/kernel.hpp"
#include "ntkforge/net.hpp"
#include "ntkforge/synthesis.hpp"

namespace ntkforge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------- small utilities ----------

void parallel_for(int n, const std::function<void(int)>& fn) {
  int workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, n));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt5(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.5f", v);
  return buf;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

fs::path prepare_out_dir(const CliOptions& opts) {
  fs::create_directories(opts.out_dir);
  return opts.out_dir;
}

void write_manifest(const CliOptions& opts, const std::string& command,
                    const std::vector<std::string>& outputs) {
  json m;
  m["command"] = command;
  m["seed"] = opts.seed;
  m["normalize"] = to_string(opts.normalize);
  m["dummy_index"] = opts.dummy_index;
  m["extended"] = opts.extended;
  m["config"] = opts.config;
  char hash[24];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(
                    fnv1a(opts.config.dump() + command + std::to_string(opts.seed))));
  m["config_hash"] = hash;
  m["outputs"] = outputs;
  m["versions"] = {{"ntkforge", "0.1.0"},
                   {"compiler", __VERSION__},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                 std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)}};
  write_text(fs::path(opts.out_dir) / "manifest.json", m.dump(2) + "\n");
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
  return g;
}

// ---------- JSON -> domain objects ----------

ActivationSpec activation_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type")) {
    throw ConfigError("activation spec must be an object with a \"type\"");
  }
  const std::string type = j["type"];
  const double prefactor = j.value("prefactor", 1.0);
  if (type == "hermite") {
    if (!j.contains("coeffs")) throw ConfigError("hermite activation needs \"coeffs\"");
    return ActivationSpec::hermite_series(
        hermite::HermiteSeries{j["coeffs"].get<std::vector<double>>()}, prefactor);
  }
  if (type == "named") {
    const NamedActivation kind = named_activation_from_string(j.value("name", ""));
    return ActivationSpec::named(kind, j.value("a", 1.0), prefactor);
  }
  if (type == "ansatz") {
    AnsatzParams p;
    p.alpha = j.value("alpha", 0.0);
    p.beta = j.value("beta", 0.0);
    p.gamma = j.value("gamma", 0.0);
    p.delta = j.value("delta", 0.0);
    p.epsilon = j.value("epsilon", 0.0);
    p.zeta = j.value("zeta", 0.0);
    p.eta = j.value("eta", 0.0);
    return ActivationSpec::ansatz(p, prefactor);
  }
  throw ConfigError("unknown activation type: " + type);
}

LayerScales scales_from_json(const json& j, LayerScales fallback) {
  LayerScales s = fallback;
  if (j.is_object()) {
    s.sigma_w = j.value("sigma_w", s.sigma_w);
    s.sigma_b = j.value("sigma_b", s.sigma_b);
  }
  return s;
}

std::vector<LayerScales> deep_scales(int depth, LayerScales hidden, LayerScales readout) {
  std::vector<LayerScales> scales(depth + 1, hidden);
  scales[depth] = readout;
  return scales;
}

// An evaluable kernel target, optionally with an exact power series.
struct KernelSource {
  std::string name;
  std::optional<std::vector<double>> series;
  std::function<double(double)> curve;
};

KernelSource kernel_source_from_json(const json& j);

KernelSource kernel_source_preset(const std::string& name) {
  KernelSource src;
  src.name = name;
  if (name == "linear_2c") {
    src.series = std::vector<double>{0.0, 2.0};
  } else if (name == "quadratic") {
    src.series = std::vector<double>{0.0, 1.0, 1.0};
  } else if (name == "erf_1hl_ntk" || name == "relu_4hl_ntk") {
    json k;
    k["kind"] = "deep";
    k["target"] = "ntk";
    k["depth"] = name == "relu_4hl_ntk" ? 4 : 1;
    k["activation"] = {{"type", "named"}, {"name", name.substr(0, name.find('_'))}};
    KernelSource deep = kernel_source_from_json(k);
    deep.name = name;
    return deep;
  } else {
    throw ConfigError("unknown kernel preset: " + name);
  }
  const std::vector<double> series = *src.series;
  src.curve = [series](double c) { return eval_power_series(series, c); };
  return src;
}

KernelSource kernel_source_from_json(const json& j) {
  if (j.is_string()) return kernel_source_preset(j.get<std::string>());
  if (!j.is_object() || !j.contains("kind")) {
    throw ConfigError("kernel source must be a preset name or an object with \"kind\"");
  }
  const std::string kind = j["kind"];
  KernelSource src;
  src.name = j.value("name", kind);
  if (kind == "series") {
    if (!j.contains("series")) throw ConfigError("series kernel source needs \"series\"");
    src.series = j["series"].get<std::vector<double>>();
    const std::vector<double> series = *src.series;
    src.curve = [series](double c) { return eval_power_series(series, c); };
    return src;
  }
  if (kind == "preset") return kernel_source_preset(j.value("name", ""));
  if (kind == "one_hidden_layer" || kind == "deep") {
    const ActivationSpec act = activation_from_json(
        j.contains("activation") ? j["activation"] : json{{"type", "named"}, {"name", "relu"}});
    const bool want_ntk = j.value("target", "ntk") == "ntk";
    const int depth = kind == "deep" ? j.value("depth", 4) : 1;
    const LayerScales hidden = scales_from_json(j.contains("hidden") ? j["hidden"] : json(),
                                                LayerScales{std::sqrt(2.0), 0.1});
    const LayerScales readout =
        scales_from_json(j.contains("readout") ? j["readout"] : json(), LayerScales{1.0, 0.0});
    const std::vector<LayerScales> scales = deep_scales(depth, hidden, readout);
    src.curve = [act, scales, depth, want_ntk](double c) {
      const DeepKernelValues v = deep_kernels(act, scales, depth, c);
      return want_ntk ? v.ntk : v.nngp;
    };
    return src;
  }
  throw ConfigError("unknown kernel source kind: " + kind);
}

SignPolicy signs_from_json(const json& j) {
  if (j.is_null()) return SignPolicy::all_positive();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "all_positive") return SignPolicy::all_positive();
    if (s == "flip_h2_h3") return SignPolicy::flip_h2_h3();
    throw ConfigError("unknown sign policy: " + s);
  }
  if (j.is_array()) return SignPolicy::explicit_signs(j.get<std::vector<int>>());
  throw ConfigError("sign policy must be a name or an array of +-1");
}

// Synthesis pipeline shared by `synthesize` and `kernel-grid`: polynomial
// fit (when the source is not already a series), PSD clip, PSD check under
// the square root.
struct SynthesisOutcome {
  std::vector<double> kernel_series;
  hermite::HermiteSeries activation;
  double fit_residual = 0.0;
  bool fitted = false;
};

SynthesisOutcome synthesize_from_source(const KernelSource& src, KernelTarget target,
                                        const SignPolicy& signs, int degree,
                                        double endpoint_weight, bool force_fit) {
  SynthesisOutcome out;
  if (src.series && !force_fit) {
    out.kernel_series = *src.series;
  } else {
    FitConfig cfg;
    cfg.degree = degree;
    cfg.endpoint_weight_fraction = endpoint_weight;
    const FitResult fit = fit_polynomial(src.curve, cfg);
    if (fit.rank_deficient) {
      std::cerr << "warning: rank-deficient polynomial fit (rank " << fit.rank << ")\n";
    }
    out.kernel_series = fit.coeffs;
    out.fit_residual = fit.residual;
    out.fitted = true;
  }
  double max_coeff = 0.0;
  for (double a : out.kernel_series) max_coeff = std::max(max_coeff, std::abs(a));
  // Negatives at the scale of the fit's own error are fit noise, not genuine
  // non-PSD structure; direct series input keeps the strict tolerance.
  const double tol = std::max(1e-8 * std::max(1.0, max_coeff), 5.0 * out.fit_residual);
  out.kernel_series = clip_to_psd(out.kernel_series, tol);
  out.activation = synthesize_activation(out.kernel_series, target, signs);
  return out;
}

// Toy circle inputs (sqrt(2) cos t, sqrt(2) sin t); the first point is the
// fixed kernel argument, so c = cos t.
Eigen::MatrixXd circle_points(const std::vector<double>& cs) {
  Eigen::MatrixXd pts(2, cs.size());
  for (size_t i = 0; i < cs.size(); ++i) {
    const double t = std::acos(std::clamp(cs[i], -1.0, 1.0));
    pts(0, i) = std::sqrt(2.0) * std::cos(t);
    pts(1, i) = std::sqrt(2.0) * std::sin(t);
  }
  return pts;
}

// Averaged empirical NTK curve of a 1HL network on the toy circle.
struct EmpiricalCurve {
  std::vector<double> mean;
  std::vector<double> stdev;
};

EmpiricalCurve empirical_1hl_curve(const ActivationSpec& act, const std::vector<double>& cs,
                                   int width, int n_seeds, std::uint64_t seed0) {
  const Eigen::MatrixXd pts = circle_points(cs);
  Eigen::MatrixXd base(2, 1);
  base << std::sqrt(2.0), 0.0;
  Eigen::MatrixXd rows(n_seeds, cs.size());

  NetworkConfig cfg;
  cfg.input_dim = 2;
  cfg.output_dim = 1;
  cfg.hidden_widths = {width};
  cfg.scales = {{1.0, 0.0}, {1.0, 0.0}};
  cfg.activation = act;
  for (int s = 0; s < n_seeds; ++s) {
    cfg.seed = seed0 + static_cast<std::uint64_t>(s);
    const NetworkState state = init(cfg);
    const Eigen::MatrixXd K = empirical_ntk(state, base, pts);
    rows.row(s) = K.row(0);
  }
  EmpiricalCurve curve;
  curve.mean.resize(cs.size());
  curve.stdev.resize(cs.size());
  for (size_t i = 0; i < cs.size(); ++i) {
    const double m = rows.col(i).mean();
    curve.mean[i] = m;
    double var = 0.0;
    for (int s = 0; s < n_seeds; ++s) var += (rows(s, i) - m) * (rows(s, i) - m);
    curve.stdev[i] = n_seeds > 1 ? std::sqrt(var / (n_seeds - 1)) : 0.0;
  }
  return curve;
}

// ---------- dataset loading ----------

Dataset load_dataset_json(const json& j, const CliOptions& opts, std::uint64_t seed) {
  Dataset data;
  if (j.contains("path")) {
    const std::string path = j["path"];
    if (!fs::exists(path)) throw ConfigError("dataset file not found: " + path);
    data = read_csv(path, j.value("target_column", ""), j.value("one_hot_width", 0),
                    j.value("delimiter", std::string(",")).at(0));
    const std::string task = j.value("task", "");
    if (task == "signed") data.kind = TaskKind::SignedScalar;
    if (task == "regression") data.kind = TaskKind::Regression;
    if (task == "one_hot") data.kind = TaskKind::OneHot;
  } else {
    data = synthetic_regression(j.value("n_samples", 512), j.value("dim", 11), seed);
  }
  return normalize(data, opts.normalize, opts.dummy_index);
}

struct ArchPreset {
  std::string name;
  int depth = 1;
  ActivationSpec activation;
  LayerScales hidden{1.0, 0.0};
  LayerScales readout{1.0, 0.0};
};

NetworkConfig arch_config(const ArchPreset& arch, int input_dim, int output_dim, int width,
                          std::uint64_t seed) {
  NetworkConfig cfg;
  cfg.input_dim = input_dim;
  cfg.output_dim = output_dim;
  cfg.hidden_widths.assign(arch.depth, width);
  cfg.scales = deep_scales(arch.depth, arch.hidden, arch.readout);
  cfg.activation = arch.activation;
  cfg.seed = seed;
  return cfg;
}

int epochs_to_threshold(const TrainRecord& rec, double threshold) {
  for (size_t i = 0; i < rec.epochs.size(); ++i) {
    if (rec.train_mse[i] < threshold) return rec.epochs[i];
  }
  return -1;
}

}  // namespace

// ---------- synthesize ----------

int cmd_synthesize(const CliOptions& opts) {
  const json& cfg = opts.config;
  if (!cfg.contains("source")) throw ConfigError("synthesize: config needs a \"source\"");
  const KernelSource src = kernel_source_from_json(cfg["source"]);
  const KernelTarget target =
      cfg.value("target", "ntk") == std::string("nngp") ? KernelTarget::NNGP : KernelTarget::NTK;
  const SignPolicy signs = signs_from_json(cfg.contains("signs") ? cfg["signs"] : json());

  const SynthesisOutcome out = synthesize_from_source(
      src, target, signs, cfg.value("degree", 5), cfg.value("endpoint_weight_fraction", 0.1),
      cfg.value("fit", false));

  // activation listing, zero terms skipped
  std::string line = "phi(z) =";
  bool first = true;
  for (size_t k = 0; k < out.activation.coeffs.size(); ++k) {
    const double b = out.activation.coeffs[k];
    if (std::abs(b) < 1e-9) continue;
    if (first) {
      line += " " + fmt5(b);
      first = false;
    } else {
      line += (b < 0 ? " - " : " + ") + fmt5(std::abs(b));
    }
    line += " h" + std::to_string(k);
  }
  if (first) line += " 0";
  std::cout << line << "\n";
  if (out.fitted) std::cout << "fit residual (sup over grid): " << fmt(out.fit_residual) << "\n";

  const fs::path dir = prepare_out_dir(opts);
  write_text(dir / "activation.json", synthesized_to_json(out.activation, target) + "\n");
  DotProductKernel k;
  k.series = out.kernel_series;
  k.source = src.name + (out.fitted ? " (degree fit)" : " (exact series)");
  write_text(dir / "kernel.json", k.to_json() + "\n");
  write_manifest(opts, "synthesize", {"activation.json", "kernel.json"});
  return 0;
}

// ---------- eval-kernel ----------

int cmd_eval_kernel(const CliOptions& opts) {
  const json& cfg = opts.config;
  const ActivationSpec act = activation_from_json(
      cfg.contains("activation") ? cfg["activation"] : json{{"type", "named"}, {"name", "relu"}});
  const int depth = cfg.value("depth", 1);
  const LayerScales hidden =
      scales_from_json(cfg.contains("hidden") ? cfg["hidden"] : json(), LayerScales{1.0, 0.0});
  const LayerScales readout =
      scales_from_json(cfg.contains("readout") ? cfg["readout"] : json(), LayerScales{1.0, 0.0});
  const std::vector<double> grid = linspace(-1.0, 1.0, cfg.value("grid_points", 64));

  std::vector<double> nngp, ntk;
  deep_kernels_grid(act, deep_scales(depth, hidden, readout), depth, grid, nngp, ntk);

  std::string csv = "c,nngp,ntk\n";
  for (size_t i = 0; i < grid.size(); ++i) {
    csv += fmt(grid[i]) + "," + fmt(nngp[i]) + "," + fmt(ntk[i]) + "\n";
  }
  const fs::path dir = prepare_out_dir(opts);
  write_text(dir / "kernel_curve.csv", csv);
  write_manifest(opts, "eval-kernel", {"kernel_curve.csv"});
  return 0;
}

// ---------- kernel-grid ----------

int cmd_kernel_grid(const CliOptions& opts) {
  const json& cfg = opts.config;
  json targets = cfg.contains("targets") ? cfg["targets"] : json::array();
  if (targets.empty()) {
    targets = json::array({"linear_2c", "quadratic", "erf_1hl_ntk", "relu_4hl_ntk"});
  }
  const int width = cfg.value("width", 8192);
  const int n_seeds = cfg.value("n_seeds", 8);
  const std::vector<double> grid = linspace(-1.0, 1.0, cfg.value("grid_points", 64));
  const SignPolicy signs =
      signs_from_json(cfg.contains("signs") ? cfg["signs"] : json("flip_h2_h3"));
  const int degree = cfg.value("degree", 5);

  std::string csv = "target,c,k_target,k_empirical,stdev\n";
  int failures = 0;
  for (size_t t = 0; t < targets.size(); ++t) {
    try {
      const KernelSource src = kernel_source_from_json(targets[t]);
      const SynthesisOutcome syn = synthesize_from_source(src, KernelTarget::NTK, signs, degree,
                                                          0.1, cfg.value("fit", false));
      const EmpiricalCurve curve =
          empirical_1hl_curve(ActivationSpec::hermite_series(syn.activation), grid, width,
                              n_seeds, opts.seed + 1000 * t);
      for (size_t i = 0; i < grid.size(); ++i) {
        csv += src.name + "," + fmt(grid[i]) + "," + fmt(src.curve(grid[i])) + "," +
               fmt(curve.mean[i]) + "," + fmt(curve.stdev[i]) + "\n";
      }
    } catch (const std::exception& e) {
      ++failures;
      std::cerr << "kernel-grid: target " << t << " failed: " << e.what() << "\n";
    }
  }
  const fs::path dir = prepare_out_dir(opts);
  write_text(dir / "kernel_grid.csv", csv);
  write_manifest(opts, "kernel-grid", {"kernel_grid.csv"});
  if (failures == static_cast<int>(targets.size())) return 3;
  return 0;
}

// ---------- parity ----------

namespace {

std::vector<ArchPreset> parity_archs() {
  std::vector<ArchPreset> archs(3);
  archs[0] = {"relu_4hl", 4, ActivationSpec::named(NamedActivation::Relu),
              {std::sqrt(2.0), 0.1}, {1.0, 0.0}};
  archs[1] = {"sin6_x10", 1, ActivationSpec::named(NamedActivation::Sin, 6.0, 10.0),
              {1.0, 0.0}, {1.0, 0.0}};
  archs[2] = {"sin6_half", 1, ActivationSpec::named(NamedActivation::Sin, 6.0, 0.5),
              {1.0, 0.0}, {1.0, 0.0}};
  return archs;
}

}  // namespace

int cmd_parity(const CliOptions& opts) {
  const json& cfg = opts.config;
  const int n_bits = cfg.value("n_bits", 11);
  const double train_fraction = cfg.value("train_fraction", 0.5);
  const int trials = cfg.value("trials", opts.extended ? 30 : 10);
  const int width = cfg.value("width", 128);
  TrainOptions topt;
  topt.lr = cfg.value("lr", 0.1);
  topt.max_epochs = cfg.value("max_epochs", 10000);
  topt.stop_mse = cfg.value("stop_mse", 1e-3);
  topt.centered = cfg.value("centered", true);

  if (n_bits < 1 || n_bits > 20) throw ConfigError("parity: n_bits must be in [1, 20]");
  const Dataset cube = parity_dataset(n_bits);
  const std::vector<ArchPreset> archs = parity_archs();

  struct TrialResult {
    double test_mse = 0.0, test_acc = 0.0;
    int epochs = 0;
    bool failed = false;
    std::string stop_reason;
  };
  std::vector<std::vector<TrialResult>> results(archs.size(), std::vector<TrialResult>(trials));

  std::vector<std::pair<int, int>> jobs;
  for (size_t a = 0; a < archs.size(); ++a) {
    for (int t = 0; t < trials; ++t) jobs.emplace_back(static_cast<int>(a), t);
  }
  parallel_for(static_cast<int>(jobs.size()), [&](int j) {
    const auto [a, t] = jobs[j];
    TrialResult& res = results[a][t];
    try {
      const std::uint64_t trial_seed = opts.seed + 7919ull * t;
      const auto [train_set, test_set] = split_dataset(cube, train_fraction, trial_seed);
      NetworkConfig ncfg =
          arch_config(archs[a], n_bits, 1, width, trial_seed + 104729ull * (a + 1));
      NetworkState state = init(ncfg);
      const TrainRecord rec = train(state, train_set, &test_set, topt);
      res.stop_reason = rec.stop_reason;
      res.epochs = rec.epochs_run;
      if (rec.diverged()) {
        res.failed = true;
      } else {
        res.test_mse = rec.final_test_mse();
        res.test_acc = rec.final_test_acc();
      }
    } catch (const std::exception& e) {
      res.failed = true;
      res.stop_reason = e.what();
    }
  });

  std::string trial_csv = "arch,trial,test_mse,test_acc_pct,epochs,stop_reason\n";
  std::string csv =
      "arch,trials,failed,mean_test_mse,std_test_mse,mean_test_acc_pct,std_test_acc_pct,"
      "mean_epochs\n";
  for (size_t a = 0; a < archs.size(); ++a) {
    double sum_mse = 0, sum_acc = 0, sum_ep = 0;
    int ok = 0;
    for (int t = 0; t < trials; ++t) {
      const TrialResult& r = results[a][t];
      trial_csv += archs[a].name + "," + std::to_string(t) + "," +
                   (r.failed ? "nan" : fmt(r.test_mse)) + "," +
                   (r.failed ? "nan" : fmt(100.0 * r.test_acc)) + "," +
                   std::to_string(r.epochs) + "," + r.stop_reason + "\n";
      if (!r.failed) {
        sum_mse += r.test_mse;
        sum_acc += r.test_acc;
        sum_ep += r.epochs;
        ++ok;
      }
    }
    const double mean_mse = ok ? sum_mse / ok : std::nan("");
    const double mean_acc = ok ? sum_acc / ok : std::nan("");
    double var_mse = 0, var_acc = 0;
    for (int t = 0; t < trials; ++t) {
      if (results[a][t].failed) continue;
      var_mse += std::pow(results[a][t].test_mse - mean_mse, 2);
      var_acc += std::pow(results[a][t].test_acc - mean_acc, 2);
    }
    const double std_mse = ok > 1 ? std::sqrt(var_mse / (ok - 1)) : 0.0;
    const double std_acc = ok > 1 ? std::sqrt(var_acc / (ok - 1)) : 0.0;
    csv += archs[a].name + "," + std::to_string(trials) + "," + std::to_string(trials - ok) +
           "," + fmt(mean_mse) + "," + fmt(std_mse) + "," + fmt(100.0 * mean_acc) + "," +
           fmt(100.0 * std_acc) + "," + fmt(ok ? sum_ep / ok : std::nan("")) + "\n";
  }
  // reference predictor rows alongside the results
  csv += "chance,0,0,1,0,50,0,nan\n";
  csv += "ideal_odd_kernel,0,0,0.5,0,75,0,nan\n";

  const fs::path dir = prepare_out_dir(opts);
  write_text(dir / "parity_results.csv", csv);
  write_text(dir / "parity_trials.csv", trial_csv);
  write_manifest(opts, "parity", {"parity_results.csv", "parity_trials.csv"});
  std::cout << csv;
  return 0;
}

// ---------- mimic ----------

int cmd_mimic(const CliOptions& opts) {
  const json& cfg = opts.config;

  // target kernel: the deep relu NTK with standard scales
  const int target_depth = cfg.value("target_depth", 4);
  const std::vector<LayerScales> target_scales =
      deep_scales(target_depth, {std::sqrt(2.0), 0.1}, {1.0, 0.0});
  const auto relu = ActivationSpec::named(NamedActivation::Relu);
  const std::vector<double> grid = linspace(-1.0, 1.0, cfg.value("grid_points", 41));
  std::vector<double> target_nngp, target_ntk;
  deep_kernels_grid(relu, target_scales, target_depth, grid, target_nngp, target_ntk);

  KernelObjective objective;
  objective.c_grid = grid;
  const std::vector<double> grid_copy = grid;
  const std::vector<double> ntk_copy = target_ntk;
  objective.target = [grid_copy, ntk_copy, relu, target_scales, target_depth](double c) {
    for (size_t i = 0; i < grid_copy.size(); ++i) {
      if (std::abs(grid_copy[i] - c) < 1e-12) return ntk_copy[i];
    }
    return deep_kernels(relu, target_scales, target_depth, c).ntk;
  };
  AnsatzParams x0{1.0, 1.0, 0.1, 10.0, 1.0, 0.1, 1.0};
  if (cfg.contains("x0")) {
    const json& j = cfg["x0"];
    x0 = AnsatzParams{j.value("alpha", 1.0),   j.value("beta", 1.0), j.value("gamma", 0.1),
                      j.value("delta", 10.0),  j.value("epsilon", 1.0),
                      j.value("zeta", 0.1),    j.value("eta", 1.0)};
  }
  NelderMeadConfig nm;
  nm.max_iters = cfg.value("max_iters", 5000);
  std::cout << "optimizing the mimic activation against the " << target_depth
            << "-hidden-layer relu NTK...\n";
  const MimicFit fit = fit_mimic(objective, x0, nm);
  std::cout << "kernel mismatch (sum of squares over grid): " << fmt(fit.residual) << "\n";

  const fs::path dir = prepare_out_dir(opts);
  write_text(dir / "mimic_ansatz.json", ansatz_to_json(fit.params, fit.residual, grid) + "\n");

  // data
  const std::uint64_t data_seed = opts.seed + 51413ull;
  Dataset all =
      load_dataset_json(cfg.contains("dataset") ? cfg["dataset"] : json::object(), opts, data_seed);
  const double train_fraction = cfg.value("train_fraction", 0.5);
  const auto [train_set, test_set] = split_dataset(all, train_fraction, data_seed);

  // architectures: shallow relu, deep relu, shallow mimic
  std::vector<ArchPreset> archs(3);
  archs[0] = {"relu_1hl", 1, relu, {std::sqrt(2.0), 0.1}, {1.0, 0.0}};
  archs[1] = {"relu_" + std::to_string(target_depth) + "hl", target_depth, relu,
              {std::sqrt(2.0), 0.1}, {1.0, 0.0}};
  archs[2] = {"mimic_1hl", 1, ActivationSpec::ansatz(fit.params), {1.0, 0.0}, {1.0, 0.0}};

  std::vector<int> widths = cfg.value("widths", std::vector<int>{64, 128, 256, 512, 1024});
  TrainOptions topt;
  topt.lr = cfg.value("lr", 0.1);
  topt.max_epochs = cfg.value("max_epochs", 4096);
  topt.stop_mse = cfg.value("stop_mse", 1e-3);
  topt.centered = cfg.value("centered", true);
  if (opts.extended) {
    widths = cfg.value("widths", std::vector<int>{64, 128, 256, 512, 1024, 2048, 4096});
    topt.max_epochs = cfg.value("max_epochs", 65536);
  }
  const double curve_threshold = cfg.value("train_mse_threshold", 0.05);

  struct RunOut {
    TrainRecord rec;
    long long params = 0;
    bool failed = false;
    std::string error;
  };
  std::vector<RunOut> runs(archs.size() * widths.size());
  std::vector<std::pair<int, int>> jobs;
  for (size_t a = 0; a < archs.size(); ++a) {
    for (size_t w = 0; w < widths.size(); ++w) {
      jobs.emplace_back(static_cast<int>(a), static_cast<int>(w));
    }
  }
  parallel_for(static_cast<int>(jobs.size()), [&](int j) {
    const auto [a, w] = jobs[j];
    RunOut& out = runs[a * widths.size() + w];
    try {
      NetworkConfig ncfg =
          arch_config(archs[a], all.dim(), static_cast<int>(all.targets.cols()), widths[w],
                      opts.seed + 31ull * a + 977ull * w);
      out.params = ncfg.parameter_count();
      NetworkState state = init(ncfg);
      out.rec = train(state, train_set, &test_set, topt);
    } catch (const std::exception& e) {
      out.failed = true;
      out.error = e.what();
    }
  });

  std::string summary =
      "arch,width,params,epochs_run,stop_reason,epochs_to_train_mse_threshold,final_train_mse,"
      "final_test_mse,final_train_acc,final_test_acc\n";
  std::vector<std::string> outputs = {"mimic_ansatz.json", "mimic_summary.csv"};
  for (size_t a = 0; a < archs.size(); ++a) {
    for (size_t w = 0; w < widths.size(); ++w) {
      const RunOut& out = runs[a * widths.size() + w];
      if (out.failed) {
        std::cerr << "mimic: " << archs[a].name << " width " << widths[w]
                  << " failed: " << out.error << "\n";
        summary += archs[a].name + "," + std::to_string(widths[w]) + "," +
                   std::to_string(out.params) + ",nan,failed,nan,nan,nan,nan,nan\n";
        continue;
      }
      const std::string curve_name =
          "mimic_curve_" + archs[a].name + "_w" + std::to_string(widths[w]) + ".csv";
      out.rec.write_csv((dir / curve_name).string());
      outputs.push_back(curve_name);
      summary += archs[a].name + "," + std::to_string(widths[w]) + "," +
                 std::to_string(out.params) + "," + std::to_string(out.rec.epochs_run) + "," +
                 out.rec.stop_reason + "," +
                 std::to_string(epochs_to_threshold(out.rec, curve_threshold)) + "," +
                 fmt(out.rec.final_train_mse()) + "," + fmt(out.rec.final_test_mse()) + "," +
                 fmt(out.rec.final_train_acc()) + "," + fmt(out.rec.final_test_acc()) + "\n";
    }
  }
  write_text(dir / "mimic_summary.csv", summary);
  write_manifest(opts, "mimic", outputs);
  std::cout << summary;
  return 0;
}

// ---------- train ----------

int cmd_train(const CliOptions& opts) {
  const json& cfg = opts.config;
  if (!cfg.contains("network")) throw ConfigError("train: config needs a \"network\"");
  const json& net = cfg["network"];

  const std::uint64_t data_seed = opts.seed + 7ull;
  Dataset train_set, test_set;
  bool have_test = false;
  {
    Dataset all =
        load_dataset_json(cfg.contains("dataset") ? cfg["dataset"] : json::object(), opts,
                          data_seed);
    if (cfg.contains("test_dataset")) {
      train_set = std::move(all);
      test_set = load_dataset_json(cfg["test_dataset"], opts, data_seed + 1);
      have_test = true;
    } else if (cfg.value("train_fraction", 1.0) < 1.0) {
      std::tie(train_set, test_set) =
          split_dataset(all, cfg.value("train_fraction", 0.5), data_seed);
      have_test = true;
    } else {
      train_set = std::move(all);
    }
  }

  NetworkConfig ncfg;
  ncfg.input_dim = train_set.dim();
  ncfg.output_dim = static_cast<int>(train_set.targets.cols());
  const int depth = net.value("depth", 1);
  ncfg.hidden_widths.assign(depth, net.value("width", 128));
  if (net.contains("hidden_widths")) {
    ncfg.hidden_widths = net["hidden_widths"].get<std::vector<int>>();
  }
  ncfg.scales = deep_scales(
      static_cast<int>(ncfg.hidden_widths.size()),
      scales_from_json(net.contains("hidden") ? net["hidden"] : json(), {1.0, 0.0}),
      scales_from_json(net.contains("readout") ? net["readout"] : json(), {1.0, 0.0}));
  ncfg.activation = activation_from_json(
      net.contains("activation") ? net["activation"] : json{{"type", "named"}, {"name", "relu"}});
  ncfg.seed = opts.seed;

  TrainOptions topt;
  topt.lr = cfg.value("lr", 0.1);
  topt.max_epochs = cfg.value("max_epochs", 1000);
  topt.stop_mse = cfg.value("stop_mse", 1e-3);
  topt.centered = cfg.value("centered", true);

  NetworkState state = init(ncfg);
  const TrainRecord rec = train(state, train_set, have_test ? &test_set : nullptr, topt);

  const fs::path dir = prepare_out_dir(opts);
  rec.write_csv((dir / "train_record.csv").string());
  write_manifest(opts, "train", {"train_record.csv"});
  std::cout << "stopped after " << rec.epochs_run << " epochs (" << rec.stop_reason
            << "), final train MSE " << fmt(rec.final_train_mse()) << "\n";
  return rec.diverged() ? 3 : 0;
}

}  // namespace ntkforge::cli
