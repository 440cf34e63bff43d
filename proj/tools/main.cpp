#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "commands.hpp"

using ntkforge::cli::CliOptions;
using ntkforge::cli::ConfigError;

namespace {

nlohmann::json load_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "ntkforge: reverse-engineer dot-product kernels into single-hidden-layer "
      "activation functions, evaluate analytic NNGP/NTK kernels, and verify the "
      "construction on finite-width networks"};
  app.require_subcommand(1);
  app.fallthrough();

  CliOptions opts;
  std::string config_path;
  std::string normalize = "per_sample";
  app.add_option("--seed", opts.seed, "base RNG seed");
  app.add_option("--out", opts.out_dir, "output directory")->capture_default_str();
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--normalize", normalize, "input normalization: per_sample|average|off")
      ->check(CLI::IsMember({"per_sample", "average", "off"}));
  app.add_flag("--dummy-index", opts.dummy_index,
               "append a dummy coordinate before normalizing (invertible map)");
  app.add_flag("--extended", opts.extended, "full-scale settings (more trials/widths/epochs)");

  auto* synth = app.add_subcommand("synthesize", "kernel series/curve -> activation coefficients");
  std::string series_arg;
  std::string target_arg = "ntk";
  std::string signs_arg;
  int degree_arg = -1;
  synth->add_option("--series", series_arg, "kernel power series a_0,a_1,... (comma separated)");
  synth->add_option("--target", target_arg, "ntk or nngp")
      ->check(CLI::IsMember({"ntk", "nngp"}));
  synth->add_option("--signs", signs_arg, "all_positive or flip_h2_h3");
  synth->add_option("--degree", degree_arg, "polynomial fit degree for curve sources");

  auto* evalk = app.add_subcommand("eval-kernel", "tabulate analytic NNGP/NTK on a c-grid");
  auto* kgrid = app.add_subcommand("kernel-grid",
                                "synthesize activations and compare empirical NTKs to targets");
  auto* parity = app.add_subcommand("parity", "boolean parity experiment over architecture presets");
  int nbits_arg = -1, trials_arg = -1;
  parity->add_option("--n-bits", nbits_arg, "cube dimension");
  parity->add_option("--trials", trials_arg, "trials per architecture");
  auto* mimic = app.add_subcommand("mimic",
                                "fit the relu+cosine ansatz to a deep relu NTK and train the "
                                "shallow mimic against deep/shallow relu baselines");
  auto* trainc = app.add_subcommand("train", "train one network from a JSON config");

  CLI11_PARSE(app, argc, argv);

  try {
    opts.normalize = ntkforge::normalize_mode_from_string(normalize);
    opts.config = load_config(config_path);

    if (synth->parsed()) {
      if (!series_arg.empty()) {
        std::vector<double> series;
        std::stringstream ss(series_arg);
        std::string tok;
        while (std::getline(ss, tok, ',')) series.push_back(std::stod(tok));
        opts.config["source"] = {{"kind", "series"}, {"series", series}};
      }
      opts.config["target"] = target_arg;
      if (!signs_arg.empty()) opts.config["signs"] = signs_arg;
      if (degree_arg >= 0) opts.config["degree"] = degree_arg;
      return ntkforge::cli::cmd_synthesize(opts);
    }
    if (evalk->parsed()) return ntkforge::cli::cmd_eval_kernel(opts);
    if (kgrid->parsed()) return ntkforge::cli::cmd_kernel_grid(opts);
    if (parity->parsed()) {
      if (nbits_arg > 0) opts.config["n_bits"] = nbits_arg;
      if (trials_arg > 0) opts.config["trials"] = trials_arg;
      return ntkforge::cli::cmd_parity(opts);
    }
    if (mimic->parsed()) return ntkforge::cli::cmd_mimic(opts);
    if (trainc->parsed()) return ntkforge::cli::cmd_train(opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
