#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "seqc/aem.hpp"
#include "seqc/metrics.hpp"
#include "seqc/models.hpp"
#include "seqc/pdhg.hpp"
#include "seqc/sequence.hpp"

namespace seqc {

inline constexpr const char* kVersion = "0.1.0";

enum class CorrectionMethod { None, Fixed, Adaptive, Aem };
enum class NoiseKind { Gaussian, Impulse };

const char* to_string(CorrectionMethod m);
const char* to_string(NoiseKind n);
const char* to_string(ModelKind k);
const char* to_string(Fidelity f);

struct ExperimentSpec {
  ModelKind model = ModelKind::NonlinearDiffusion;  // nld or cf
  ModelParams model_params;
  CorrectionMethod correction = CorrectionMethod::Fixed;
  NoiseKind noise = NoiseKind::Gaussian;
  double noise_level = 0.03;
  Fidelity fidelity = Fidelity::L2;
  std::vector<double> lambdas = {0.01};
  std::uint64_t seed = 0;
  std::vector<std::filesystem::path> inputs;  // PGM files; empty -> phantoms
  int phantom_count = 8;                      // used when inputs is empty
  std::filesystem::path output_dir;
  int size = 32;
  int outer_max = 30;
  int inner_max = 2000;
  double inner_tol = 1e-6;
  double outer_tol = 1e-5;
  double damping = 0.0;  ///< 0 selects the default policy per method
  bool warm_start = true;
  std::optional<std::filesystem::path> aem_stats;
  int aem_train_count = 200;  ///< training phantoms when no stats file
  int workers = 0;            ///< 0 -> hardware concurrency

  void validate() const;
};

struct MethodScore {
  double lambda = 0.0;
  double psnr_db = 0.0;  // capped at 99 dB
  double ssim = 0.0;
  double data_fidelity = 0.0;  // F(A(x), y) with the true model
};

struct ImageRunResult {
  std::string name;
  MethodScore best;
  std::vector<MethodScore> sweep;  // one entry per lambda
  SequenceTrace trace;             // at the best lambda
  double seconds = 0.0;
};

struct RunRecord {
  ExperimentSpec spec;
  std::vector<ImageRunResult> images;
  double total_seconds = 0.0;
  std::string version = kVersion;
};

/// Runs the full experiment batch: loads or generates ground truths,
/// distorts them with the true model, adds noise, reconstructs for every
/// lambda, scores against the ground truth and keeps the best-SSIM lambda.
/// Writes reconstructions (16-bit PGM), data images, per-image convergence
/// CSVs, a metrics CSV and a JSON run record into spec.output_dir. All
/// randomness derives from spec.seed; repeated runs produce identical
/// images and identical CSV content apart from the wall-time columns.
RunRecord run_experiment(const ExperimentSpec& spec);

/// Writes a SequenceTrace as CSV with header
/// iter,data_fidelity,objective,delta,inner_iters,seconds.
void export_convergence(const SequenceTrace& trace,
                        const std::filesystem::path& path);

/// Lossless JSON round trip of a run record (run_experiment writes this as
/// run.json).
void save_run_record(const RunRecord& record,
                     const std::filesystem::path& path);
RunRecord load_run_record(const std::filesystem::path& path);

/// Shortest round-trip decimal formatting, locale independent.
std::string format_double(double v);

/// AEM statistics for a phantom corpus: distorts `count` training phantoms
/// with the model, measures errors against the linear-diffusion
/// approximation. sigma is the assumed measurement-noise standard deviation.
AemStats fit_aem_stats(ModelKind model_kind, const ModelParams& params,
                       int count, int size, double sigma,
                       std::uint64_t seed, std::uint64_t index_offset);

}  // namespace seqc
