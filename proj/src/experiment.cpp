#include "seqc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "seqc/noise.hpp"
#include "seqc/pgm.hpp"
#include "seqc/phantoms.hpp"
#include "seqc/rng.hpp"

namespace seqc {

const char* to_string(CorrectionMethod m) {
  switch (m) {
    case CorrectionMethod::None: return "none";
    case CorrectionMethod::Fixed: return "fixed";
    case CorrectionMethod::Adaptive: return "adaptive";
    case CorrectionMethod::Aem: return "aem";
  }
  return "?";
}

const char* to_string(NoiseKind n) {
  return n == NoiseKind::Gaussian ? "gaussian" : "impulse";
}

const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::LinearDiffusion: return "ld";
    case ModelKind::NonlinearDiffusion: return "nld";
    case ModelKind::CurvatureFlow: return "cf";
  }
  return "?";
}

const char* to_string(Fidelity f) { return f == Fidelity::L2 ? "l2" : "l1"; }

void ExperimentSpec::validate() const {
  model_params.validate();
  if (model == ModelKind::LinearDiffusion)
    throw std::invalid_argument("ExperimentSpec: model must be nld or cf");
  if (!(noise_level > 0.0 && noise_level < 1.0))
    throw std::invalid_argument("ExperimentSpec: noise_level must be in (0,1)");
  if (correction == CorrectionMethod::Aem && fidelity != Fidelity::L2)
    throw std::invalid_argument(
        "ExperimentSpec: the approximation error method requires L2 fidelity");
  if (lambdas.empty())
    throw std::invalid_argument("ExperimentSpec: no lambda values");
  for (double l : lambdas)
    if (!(l > 0.0))
      throw std::invalid_argument("ExperimentSpec: lambdas must be > 0");
  if (inputs.empty() && phantom_count < 1)
    throw std::invalid_argument("ExperimentSpec: no inputs and no phantoms");
  if (size < 4) throw std::invalid_argument("ExperimentSpec: size too small");
  if (outer_max < 1 || inner_max < 1)
    throw std::invalid_argument("ExperimentSpec: iteration caps must be >= 1");
  if (damping < 0.0 || damping > 1.0)
    throw std::invalid_argument("ExperimentSpec: damping must be in [0,1]");
  if (correction == CorrectionMethod::Aem && !aem_stats &&
      !inputs.empty())
    throw std::invalid_argument(
        "ExperimentSpec: AEM with explicit inputs needs --aem-stats "
        "(training data would overlap the test images)");
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

void export_convergence(const SequenceTrace& trace,
                        const std::filesystem::path& path) {
  if (trace.rows.empty())
    throw std::invalid_argument("export_convergence: empty trace");
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw std::runtime_error("export_convergence: cannot open " + path.string());
  os << "iter,data_fidelity,objective,delta,inner_iters,seconds\n";
  for (const TraceRow& r : trace.rows)
    os << r.iter << ',' << format_double(r.data_fidelity) << ','
       << format_double(r.objective) << ',' << format_double(r.delta) << ','
       << r.inner_iters << ',' << format_double(r.seconds) << '\n';
  if (!os) throw std::runtime_error("export_convergence: write failed");
}

AemStats fit_aem_stats(ModelKind model_kind, const ModelParams& params,
                       int count, int size, double sigma, std::uint64_t seed,
                       std::uint64_t index_offset) {
  ForwardModel model(model_kind, params);
  auto approx = fixed_approx(params);
  std::vector<Image> train = make_phantoms(count, size, size, seed, index_offset);
  return estimate_stats(model, *approx, train, sigma);
}

namespace {

struct ImageTask {
  Image ground_truth;
  Image data;  // distorted + noisy
  std::string name;
};

double capped_psnr(const Image& x, const Image& ref) {
  return std::min(psnr(x, ref), kPsnrCap);
}

SequenceTrace single_point_trace(const ForwardModel& model, const Image& y,
                                 double lambda, Fidelity f, const Image& x0,
                                 const Image& xr, int inner_iters,
                                 double seconds) {
  SequenceTrace t;
  t.rows.push_back({0, data_fidelity(model, y, f, x0),
                    objective(model, y, lambda, f, x0), 0.0, 0, 0.0});
  t.rows.push_back({1, data_fidelity(model, y, f, xr),
                    objective(model, y, lambda, f, xr), 1.0, inner_iters,
                    seconds});
  return t;
}

struct Reconstruction {
  Image image;
  SequenceTrace trace;
};

Reconstruction reconstruct_one(const ExperimentSpec& spec,
                               const ForwardModel& model,
                               std::shared_ptr<const LinearOperator> approx,
                               const std::optional<AemStats>& aem,
                               const Image& y, double lambda,
                               std::uint64_t power_seed) {
  PdhgConfig inner;
  inner.fidelity = spec.fidelity;
  inner.lambda = lambda;
  inner.max_iters = spec.inner_max;
  inner.tol = spec.inner_tol;
  inner.power_seed = power_seed;

  SequenceConfig cfg;
  cfg.fidelity = spec.fidelity;
  cfg.lambda = lambda;
  cfg.outer_max = spec.outer_max;
  cfg.outer_tol = spec.outer_tol;
  cfg.inner = inner;
  cfg.x0_policy = X0Policy::Data;
  cfg.warm_start = spec.warm_start;

  switch (spec.correction) {
    case CorrectionMethod::None: {
      const auto t0 = std::chrono::steady_clock::now();
      Image zero(y.width(), y.height(), 0.0);
      PdhgResult res =
          pdhg_solve(AffineApprox{approx, Image{}}, y, zero, inner, nullptr, &y);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      SequenceTrace trace =
          single_point_trace(model, y, lambda, spec.fidelity, y,
                             res.reconstruction, res.state.iters_used, secs);
      return {std::move(res.reconstruction), std::move(trace)};
    }
    case CorrectionMethod::Fixed: {
      cfg.mode = SequenceMode::Fixed;
      cfg.damping = spec.damping > 0.0 ? Damping::constant(spec.damping)
                                       : Damping::none();
      SequenceResult res = run_fixed(model, approx, y, cfg);
      return {std::move(res.reconstruction), std::move(res.trace)};
    }
    case CorrectionMethod::Adaptive: {
      cfg.mode = SequenceMode::Adaptive;
      cfg.damping = spec.damping > 0.0 ? Damping::constant(spec.damping)
                                       : Damping::line_search(11);
      SequenceResult res = run_adaptive(model, y, cfg);
      return {std::move(res.reconstruction), std::move(res.trace)};
    }
    case CorrectionMethod::Aem: {
      const auto t0 = std::chrono::steady_clock::now();
      Image xr = aem_reconstruct(approx, y, *aem, lambda, inner);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      SequenceTrace trace = single_point_trace(model, y, lambda, spec.fidelity,
                                               y, xr, spec.inner_max, secs);
      return {std::move(xr), std::move(trace)};
    }
  }
  throw std::logic_error("reconstruct_one: unreachable");
}

}  // namespace

RunRecord run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const auto run_start = std::chrono::steady_clock::now();

  ForwardModel model(spec.model, spec.model_params);
  auto approx = fixed_approx(spec.model_params);

  // Prepare tasks (deterministic order).
  std::vector<ImageTask> tasks;
  if (spec.inputs.empty()) {
    for (int i = 0; i < spec.phantom_count; ++i) {
      ImageTask t;
      t.ground_truth = make_phantom(spec.size, spec.size,
                                    derive_seed(spec.seed, kSeedTagPhantom, i));
      char name[32];
      std::snprintf(name, sizeof(name), "phantom_%03d", i);
      t.name = name;
      tasks.push_back(std::move(t));
    }
  } else {
    for (const auto& path : spec.inputs) {
      ImageTask t;
      Image img = load_pgm(path);
      if (img.width() != spec.size || img.height() != spec.size) {
        if (img.width() % spec.size != 0 ||
            img.height() % spec.size != 0 ||
            img.width() / spec.size != img.height() / spec.size)
          throw std::invalid_argument("run_experiment: input " + path.string() +
                                      " cannot be box-downsampled to size");
        img = box_downsample(img, img.width() / spec.size);
      }
      t.ground_truth = std::move(img);
      t.name = path.stem().string();
      tasks.push_back(std::move(t));
    }
  }

  for (std::size_t i = 0; i < tasks.size(); ++i) {
    Image clean = model.evaluate(tasks[i].ground_truth);
    const std::uint64_t nseed = derive_seed(spec.seed, kSeedTagNoise, i);
    tasks[i].data = spec.noise == NoiseKind::Gaussian
                        ? add_gaussian_noise(clean, spec.noise_level, nseed)
                        : add_impulse_noise(clean, spec.noise_level, nseed);
  }

  // AEM statistics: from file, or fitted on phantoms disjoint from the test
  // batch (indices shifted past it). Sigma follows the Gaussian noise
  // convention, averaged over the training corpus.
  std::optional<AemStats> aem;
  if (spec.correction == CorrectionMethod::Aem) {
    if (spec.aem_stats) {
      aem = load_stats(*spec.aem_stats);
      if (aem->width != spec.size || aem->height != spec.size)
        throw std::invalid_argument("run_experiment: AEM stats shape mismatch");
    } else {
      std::vector<Image> train =
          make_phantoms(spec.aem_train_count, spec.size, spec.size, spec.seed,
                        /*index_offset=*/tasks.size());
      double mean_range = 0.0;
      for (const Image& x : train) {
        Image d = model.evaluate(x);
        mean_range += d.max_value() - d.min_value();
      }
      mean_range /= static_cast<double>(train.size());
      aem = estimate_stats(model, *approx, train,
                           spec.noise_level * mean_range);
    }
  }

  // Reconstruct all images, sweeping lambda; workers merge by index.
  std::vector<ImageRunResult> results(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_workers =
      std::min<std::size_t>(spec.workers > 0 ? spec.workers : hw, tasks.size());

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        const auto t0 = std::chrono::steady_clock::now();
        ImageRunResult r;
        r.name = tasks[i].name;
        Image best_image;
        SequenceTrace best_trace;
        for (std::size_t li = 0; li < spec.lambdas.size(); ++li) {
          const double lambda = spec.lambdas[li];
          Reconstruction rec = reconstruct_one(
              spec, model, approx, aem, tasks[i].data, lambda,
              derive_seed(spec.seed, kSeedTagPower, i * 1000 + li));
          MethodScore score;
          score.lambda = lambda;
          score.psnr_db = capped_psnr(rec.image, tasks[i].ground_truth);
          score.ssim = ssim(rec.image, tasks[i].ground_truth);
          score.data_fidelity =
              data_fidelity(model, tasks[i].data, spec.fidelity, rec.image);
          r.sweep.push_back(score);
          if (li == 0 || score.ssim > r.best.ssim) {
            r.best = score;
            best_image = std::move(rec.image);
            best_trace = std::move(rec.trace);
          }
        }
        r.trace = std::move(best_trace);
        r.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        if (!spec.output_dir.empty()) {
          save_pgm(best_image, spec.output_dir / ("recon_" + r.name + ".pgm"));
          save_pgm(tasks[i].data, spec.output_dir / ("data_" + r.name + ".pgm"));
          export_convergence(
              r.trace, spec.output_dir / ("convergence_" + r.name + ".csv"));
        }
        results[i] = std::move(r);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  if (!spec.output_dir.empty())
    std::filesystem::create_directories(spec.output_dir);

  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  RunRecord record;
  record.spec = spec;
  record.images = std::move(results);
  record.total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - run_start)
          .count();

  if (!spec.output_dir.empty()) {
    // Metrics CSV: deterministic content, metadata up front.
    std::ofstream os(spec.output_dir / "metrics.csv", std::ios::binary);
    if (!os) throw std::runtime_error("run_experiment: cannot write metrics.csv");
    os << "# version=" << kVersion << "\n";
    os << "# psnr_peak=1.0 (capped at 99 dB for identical images)\n";
    os << "# noise=" << to_string(spec.noise) << " level="
       << format_double(spec.noise_level)
       << " (gaussian sigma = level * dynamic range of the clean data)\n";
    os << "# inner_stopping=relative primal change < "
       << format_double(spec.inner_tol) << "\n";
    os << "# outer_stopping=relative objective decrease < "
       << format_double(spec.outer_tol) << "\n";
    os << "image,method,lambda,psnr_db,ssim,data_fidelity,best\n";
    for (const auto& r : record.images)
      for (const auto& s : r.sweep)
        os << r.name << ',' << to_string(spec.correction) << ','
           << format_double(s.lambda) << ',' << format_double(s.psnr_db) << ','
           << format_double(s.ssim) << ',' << format_double(s.data_fidelity)
           << ',' << (s.lambda == r.best.lambda ? 1 : 0) << '\n';
    if (!os) throw std::runtime_error("run_experiment: metrics.csv write failed");

    // JSON run record (contains wall times; not covered by the byte-level
    // reproducibility guarantee).
    save_run_record(record, spec.output_dir / "run.json");
  }

  return record;
}

namespace {

nlohmann::json score_to_json(const MethodScore& s) {
  return {{"lambda", s.lambda},
          {"psnr_db", s.psnr_db},
          {"ssim", s.ssim},
          {"data_fidelity", s.data_fidelity}};
}

MethodScore score_from_json(const nlohmann::json& j) {
  return {j.at("lambda"), j.at("psnr_db"), j.at("ssim"),
          j.at("data_fidelity")};
}

}  // namespace

void save_run_record(const RunRecord& record,
                     const std::filesystem::path& path) {
  const ExperimentSpec& spec = record.spec;
  nlohmann::json j;
  j["version"] = record.version;
  j["total_seconds"] = record.total_seconds;
  j["seed_scheme"] =
      "per-purpose streams via splitmix64(splitmix64(seed ^ tag) + index)";

  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& p : spec.inputs) inputs.push_back(p.string());
  j["spec"] = {
      {"model", to_string(spec.model)},
      {"correction", to_string(spec.correction)},
      {"noise", to_string(spec.noise)},
      {"noise_level", spec.noise_level},
      {"fidelity", to_string(spec.fidelity)},
      {"lambdas", spec.lambdas},
      {"seed", spec.seed},
      {"inputs", inputs},
      {"phantom_count", spec.phantom_count},
      {"output_dir", spec.output_dir.string()},
      {"size", spec.size},
      {"outer_max", spec.outer_max},
      {"inner_max", spec.inner_max},
      {"inner_tol", spec.inner_tol},
      {"outer_tol", spec.outer_tol},
      {"damping", spec.damping},
      {"warm_start", spec.warm_start},
      {"aem_stats", spec.aem_stats ? spec.aem_stats->string() : ""},
      {"aem_train_count", spec.aem_train_count},
      {"workers", spec.workers},
      {"model_params",
       {{"dt", spec.model_params.dt},
        {"steps", spec.model_params.steps},
        {"kappa", spec.model_params.kappa},
        {"psi", spec.model_params.psi}}},
  };

  double mean_s = 0.0;
  for (const auto& r : record.images) mean_s += r.seconds;
  mean_s /= std::max<std::size_t>(1, record.images.size());
  double var_s = 0.0;
  for (const auto& r : record.images)
    var_s += (r.seconds - mean_s) * (r.seconds - mean_s);
  var_s /= std::max<std::size_t>(1, record.images.size());
  j["timing"] = {{"mean_seconds", mean_s}, {"std_seconds", std::sqrt(var_s)}};

  auto& imgs = j["images"];
  imgs = nlohmann::json::array();
  for (const auto& r : record.images) {
    nlohmann::json sweep = nlohmann::json::array();
    for (const auto& s : r.sweep) sweep.push_back(score_to_json(s));
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& row : r.trace.rows)
      trace.push_back({row.iter, row.data_fidelity, row.objective, row.delta,
                       row.inner_iters, row.seconds});
    imgs.push_back({{"name", r.name},
                    {"seconds", r.seconds},
                    {"best", score_to_json(r.best)},
                    {"sweep", sweep},
                    {"trace", trace}});
  }

  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw std::runtime_error("save_run_record: cannot open " + path.string());
  os << j.dump(2) << "\n";
  if (!os) throw std::runtime_error("save_run_record: write failed");
}

RunRecord load_run_record(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw std::runtime_error("load_run_record: cannot open " + path.string());
  nlohmann::json j;
  is >> j;

  RunRecord record;
  record.version = j.at("version");
  record.total_seconds = j.at("total_seconds");

  const auto& js = j.at("spec");
  ExperimentSpec& spec = record.spec;
  const std::string model = js.at("model");
  spec.model = model == "cf" ? ModelKind::CurvatureFlow
                             : ModelKind::NonlinearDiffusion;
  const std::string corr = js.at("correction");
  spec.correction = corr == "none"       ? CorrectionMethod::None
                    : corr == "fixed"    ? CorrectionMethod::Fixed
                    : corr == "adaptive" ? CorrectionMethod::Adaptive
                                         : CorrectionMethod::Aem;
  spec.noise = js.at("noise") == "impulse" ? NoiseKind::Impulse
                                           : NoiseKind::Gaussian;
  spec.noise_level = js.at("noise_level");
  spec.fidelity = js.at("fidelity") == "l1" ? Fidelity::L1 : Fidelity::L2;
  spec.lambdas = js.at("lambdas").get<std::vector<double>>();
  spec.seed = js.at("seed");
  for (const auto& p : js.at("inputs"))
    spec.inputs.emplace_back(p.get<std::string>());
  spec.phantom_count = js.at("phantom_count");
  spec.output_dir = js.at("output_dir").get<std::string>();
  spec.size = js.at("size");
  spec.outer_max = js.at("outer_max");
  spec.inner_max = js.at("inner_max");
  spec.inner_tol = js.at("inner_tol");
  spec.outer_tol = js.at("outer_tol");
  spec.damping = js.at("damping");
  spec.warm_start = js.at("warm_start");
  const std::string aem = js.at("aem_stats");
  if (!aem.empty()) spec.aem_stats = aem;
  spec.aem_train_count = js.at("aem_train_count");
  spec.workers = js.at("workers");
  const auto& mp = js.at("model_params");
  spec.model_params.dt = mp.at("dt");
  spec.model_params.steps = mp.at("steps");
  spec.model_params.kappa = mp.at("kappa");
  spec.model_params.psi = mp.at("psi");

  for (const auto& ji : j.at("images")) {
    ImageRunResult r;
    r.name = ji.at("name");
    r.seconds = ji.at("seconds");
    r.best = score_from_json(ji.at("best"));
    for (const auto& s : ji.at("sweep")) r.sweep.push_back(score_from_json(s));
    for (const auto& row : ji.at("trace"))
      r.trace.rows.push_back({row.at(0), row.at(1), row.at(2), row.at(3),
                              row.at(4), row.at(5)});
    record.images.push_back(std::move(r));
  }
  return record;
}

}  // namespace seqc
