// Command-line front end: image restoration with sequential model
// correction, plus utilities for phantom generation, AEM statistics and
// approximation-error scatter data.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "seqc/experiment.hpp"
#include "seqc/noise.hpp"
#include "seqc/pgm.hpp"
#include "seqc/phantoms.hpp"
#include "seqc/rng.hpp"

namespace fs = std::filesystem;

namespace {

std::vector<fs::path> collect_pgms(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".pgm")
      out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> log_spaced(double lo, double hi, int n) {
  std::vector<double> out;
  if (n == 1) {
    out.push_back(lo);
    return out;
  }
  const double step = (std::log(hi) - std::log(lo)) / (n - 1);
  for (int i = 0; i < n; ++i) out.push_back(std::exp(std::log(lo) + i * step));
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> parse_pairs(
    const std::string& text) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos
                                                  ? std::string::npos
                                                  : comma - pos);
    const std::size_t colon = item.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("bad --pairs entry '" + item + "'");
    pairs.emplace_back(std::stoul(item.substr(0, colon)),
                       std::stoul(item.substr(colon + 1)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return pairs;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Nonlinear image restoration by sequential correction of a linear "
      "model approximation"};
  app.require_subcommand(0, 1);

  seqc::ExperimentSpec spec;
  std::string model_str = "nld", correction_str = "fixed",
              noise_str = "gaussian", fidelity_str = "l2";
  std::string input_dir, output_dir, aem_stats_file;
  double lambda_single = 0.0;
  int lambda_sweep = 0;
  double lambda_min = 1e-4, lambda_max = 1.0;
  bool no_warm_start = false;

  app.add_option("--model", model_str, "Forward model")
      ->check(CLI::IsMember({"nld", "cf"}));
  app.add_option("--correction", correction_str, "Correction method")
      ->check(CLI::IsMember({"none", "fixed", "adaptive", "aem"}));
  app.add_option("--noise", noise_str, "Noise kind")
      ->check(CLI::IsMember({"gaussian", "impulse"}));
  app.add_option("--noise-level", spec.noise_level,
                 "Noise level (fraction of dynamic range / pixel fraction)");
  app.add_option("--fidelity", fidelity_str, "Data fidelity")
      ->check(CLI::IsMember({"l2", "l1"}));
  app.add_option("--lambda", lambda_single, "Single regularization weight");
  app.add_option("--lambda-sweep", lambda_sweep,
                 "Number of log-spaced lambda values (default 8 when no "
                 "--lambda given)");
  app.add_option("--lambda-min", lambda_min, "Sweep lower bound");
  app.add_option("--lambda-max", lambda_max, "Sweep upper bound");
  app.add_option("--seed", spec.seed, "Base seed for all randomness");
  app.add_option("--input", input_dir, "Directory of ground-truth PGM images");
  app.add_option("--output", output_dir, "Output directory");
  app.add_option("--size", spec.size, "Grid size (inputs are box-downsampled)");
  app.add_option("--phantoms", spec.phantom_count,
                 "Phantom count when no --input is given");
  app.add_option("--outer-max", spec.outer_max, "Outer iteration cap");
  app.add_option("--inner-max", spec.inner_max, "Inner (primal-dual) cap");
  app.add_option("--aem-stats", aem_stats_file, "Precomputed AEM statistics");
  app.add_option("--damping", spec.damping,
                 "Constant damping step in (0,1]; 0 = default policy");
  app.add_flag("--no-warm-start", no_warm_start,
               "Cold-start the inner solver at every outer iteration");
  app.add_option("--workers", spec.workers, "Parallel image workers (0 = auto)");
  app.add_option("--dt", spec.model_params.dt, "Time step");
  app.add_option("--steps", spec.model_params.steps, "Time steps");
  app.add_option("--kappa", spec.model_params.kappa, "Contrast parameter");
  app.add_option("--psi", spec.model_params.psi, "Curvature-flow threshold");

  // make-phantoms
  auto* mk = app.add_subcommand("make-phantoms",
                                "Write synthetic piecewise-constant images");
  std::string mk_output;
  int mk_count = 8, mk_size = 32;
  std::uint64_t mk_seed = 0;
  mk->add_option("--output", mk_output, "Output directory")->required();
  mk->add_option("--count", mk_count, "Image count");
  mk->add_option("--size", mk_size, "Image size");
  mk->add_option("--seed", mk_seed, "Seed");

  // aem-fit
  auto* fit = app.add_subcommand(
      "aem-fit", "Estimate approximation-error statistics on phantoms");
  std::string fit_model = "nld", fit_output;
  int fit_count = 200, fit_size = 32;
  double fit_sigma = 0.03;
  std::uint64_t fit_seed = 0;
  seqc::ModelParams fit_params;
  fit->add_option("--model", fit_model)->check(CLI::IsMember({"nld", "cf"}));
  fit->add_option("--output", fit_output, "Stats file to write")->required();
  fit->add_option("--count", fit_count, "Training sample count");
  fit->add_option("--size", fit_size, "Grid size");
  fit->add_option("--sigma", fit_sigma, "Known noise standard deviation")
      ->required();
  fit->add_option("--seed", fit_seed, "Seed");
  fit->add_option("--dt", fit_params.dt);
  fit->add_option("--steps", fit_params.steps);
  fit->add_option("--kappa", fit_params.kappa);
  fit->add_option("--psi", fit_params.psi);

  // error-scatter
  auto* scatter = app.add_subcommand(
      "error-scatter",
      "Per-sample approximation-error values at pixel pairs (CSV)");
  std::string sc_model = "nld", sc_output, sc_pairs;
  int sc_count = 200, sc_size = 32;
  std::uint64_t sc_seed = 0;
  seqc::ModelParams sc_params;
  scatter->add_option("--model", sc_model)->check(CLI::IsMember({"nld", "cf"}));
  scatter->add_option("--output", sc_output, "CSV file to write")->required();
  scatter->add_option("--count", sc_count, "Sample count");
  scatter->add_option("--size", sc_size, "Grid size");
  scatter->add_option("--seed", sc_seed, "Seed");
  scatter->add_option("--pairs", sc_pairs,
                      "Flat pixel index pairs, e.g. 100:101,200:300 "
                      "(default: four pairs around the center)");
  scatter->add_option("--dt", sc_params.dt);
  scatter->add_option("--steps", sc_params.steps);
  scatter->add_option("--kappa", sc_params.kappa);
  scatter->add_option("--psi", sc_params.psi);

  CLI11_PARSE(app, argc, argv);

  try {
    if (mk->parsed()) {
      fs::create_directories(mk_output);
      for (int i = 0; i < mk_count; ++i) {
        seqc::Image img = seqc::make_phantom(
            mk_size, mk_size,
            seqc::derive_seed(mk_seed, seqc::kSeedTagPhantom, i));
        char name[32];
        std::snprintf(name, sizeof(name), "phantom_%03d.pgm", i);
        seqc::save_pgm(img, fs::path(mk_output) / name);
      }
      std::cout << "wrote " << mk_count << " phantoms to " << mk_output << "\n";
      return 0;
    }

    if (fit->parsed()) {
      const seqc::ModelKind kind = fit_model == "cf"
                                       ? seqc::ModelKind::CurvatureFlow
                                       : seqc::ModelKind::NonlinearDiffusion;
      seqc::AemStats stats = seqc::fit_aem_stats(kind, fit_params, fit_count,
                                                 fit_size, fit_sigma, fit_seed,
                                                 /*index_offset=*/0);
      seqc::save_stats(stats, fit_output);
      std::cout << "wrote AEM statistics (" << fit_count << " samples, "
                << fit_size << "x" << fit_size << ") to " << fit_output << "\n";
      return 0;
    }

    if (scatter->parsed()) {
      const seqc::ModelKind kind = sc_model == "cf"
                                       ? seqc::ModelKind::CurvatureFlow
                                       : seqc::ModelKind::NonlinearDiffusion;
      seqc::ForwardModel model(kind, sc_params);
      auto approx = seqc::fixed_approx(sc_params);
      std::vector<seqc::Image> samples =
          seqc::make_phantoms(sc_count, sc_size, sc_size, sc_seed);
      std::vector<std::pair<std::size_t, std::size_t>> pairs;
      if (!sc_pairs.empty()) {
        pairs = parse_pairs(sc_pairs);
      } else {
        const std::size_t c = static_cast<std::size_t>(sc_size / 2) * sc_size +
                              sc_size / 2;
        pairs = {{c, c + 1}, {c, c + sc_size}, {c, c + sc_size + 1},
                 {c - sc_size - 1, c + sc_size + 1}};
      }
      auto rows = seqc::error_pair_samples(model, *approx, samples, pairs);
      std::ofstream os(sc_output, std::ios::binary);
      if (!os) throw std::runtime_error("cannot open " + sc_output);
      os << "sample,pixel_a,pixel_b,eps_a,eps_b\n";
      for (const auto& r : rows)
        os << r.sample_index << ',' << r.pixel_a << ',' << r.pixel_b << ','
           << seqc::format_double(r.eps_a) << ','
           << seqc::format_double(r.eps_b) << '\n';
      std::cout << "wrote " << rows.size() << " rows to " << sc_output << "\n";
      return 0;
    }

    // Default action: the reconstruction experiment.
    if (output_dir.empty()) {
      std::cerr << "error: --output is required (see --help)\n";
      return 1;
    }
    spec.model = model_str == "cf" ? seqc::ModelKind::CurvatureFlow
                                   : seqc::ModelKind::NonlinearDiffusion;
    static const std::map<std::string, seqc::CorrectionMethod> corr{
        {"none", seqc::CorrectionMethod::None},
        {"fixed", seqc::CorrectionMethod::Fixed},
        {"adaptive", seqc::CorrectionMethod::Adaptive},
        {"aem", seqc::CorrectionMethod::Aem}};
    spec.correction = corr.at(correction_str);
    spec.noise = noise_str == "impulse" ? seqc::NoiseKind::Impulse
                                        : seqc::NoiseKind::Gaussian;
    spec.fidelity =
        fidelity_str == "l1" ? seqc::Fidelity::L1 : seqc::Fidelity::L2;
    spec.warm_start = !no_warm_start;
    if (!input_dir.empty()) {
      spec.inputs = collect_pgms(input_dir);
      if (spec.inputs.empty())
        throw std::runtime_error("no .pgm files found in " + input_dir);
    }
    if (!aem_stats_file.empty()) spec.aem_stats = aem_stats_file;
    spec.output_dir = output_dir;
    if (lambda_single > 0.0 && lambda_sweep > 0)
      throw std::invalid_argument("--lambda and --lambda-sweep are exclusive");
    if (lambda_single > 0.0)
      spec.lambdas = {lambda_single};
    else
      spec.lambdas =
          log_spaced(lambda_min, lambda_max, lambda_sweep > 0 ? lambda_sweep : 8);

    seqc::RunRecord record = seqc::run_experiment(spec);
    double mean_psnr = 0.0, mean_ssim = 0.0;
    for (const auto& r : record.images) {
      mean_psnr += r.best.psnr_db;
      mean_ssim += r.best.ssim;
      std::cout << r.name << ": lambda " << r.best.lambda << "  psnr "
                << r.best.psnr_db << " dB  ssim " << r.best.ssim
                << "  fidelity " << r.best.data_fidelity << "  ("
                << r.seconds << " s)\n";
    }
    const double n = static_cast<double>(record.images.size());
    std::cout << "mean: psnr " << mean_psnr / n << " dB  ssim "
              << mean_ssim / n << "  (" << record.total_seconds << " s total)\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
