#include "seqc/aem.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace seqc {

namespace {

class WhitenedOperator : public LinearOperator {
 public:
  WhitenedOperator(std::shared_ptr<const LinearOperator> inner,
                   Eigen::MatrixXd chol, int width, int height)
      : inner_(std::move(inner)),
        chol_(std::move(chol)),
        width_(width),
        height_(height) {}

  Image apply(const Image& x) const override {
    Eigen::VectorXd v = to_vector(inner_->apply(x));
    return from_vector(width_, height_,
                       chol_.triangularView<Eigen::Lower>().solve(v));
  }

  Image apply_adjoint(const Image& w) const override {
    Eigen::VectorXd v = to_vector(w);
    Eigen::VectorXd back =
        chol_.transpose().triangularView<Eigen::Upper>().solve(v);
    return inner_->apply_adjoint(from_vector(width_, height_, back));
  }

 private:
  std::shared_ptr<const LinearOperator> inner_;
  Eigen::MatrixXd chol_;
  int width_, height_;
};

}  // namespace

AemStats estimate_stats(const ForwardModel& model, const LinearOperator& approx,
                        const std::vector<Image>& samples, double sigma_noise) {
  return estimate_stats(NonlinearExactModel(model), approx, samples,
                        sigma_noise);
}

AemStats estimate_stats(const ExactModel& model, const LinearOperator& approx,
                        const std::vector<Image>& samples, double sigma_noise) {
  if (samples.size() < 2)
    throw std::invalid_argument("estimate_stats: need at least 2 samples");
  if (!(sigma_noise > 0.0))
    throw std::invalid_argument("estimate_stats: sigma_noise must be > 0");
  const Image& first = samples.front();
  const std::size_t n = first.size();
  if (n > 4096)
    throw std::invalid_argument(
        "estimate_stats: grid too large for dense covariance (limit 4096)");
  for (const Image& s : samples)
    if (!s.same_shape(first))
      throw std::invalid_argument("estimate_stats: sample shape mismatch");

  const int count = static_cast<int>(samples.size());
  Eigen::MatrixXd errors(n, count);
  for (int i = 0; i < count; ++i)
    errors.col(i) = to_vector(approx_error(model, approx, samples[i]));

  AemStats stats;
  stats.width = first.width();
  stats.height = first.height();
  stats.n_samples = count;
  stats.sigma_noise = sigma_noise;
  stats.mu = errors.rowwise().mean();

  Eigen::MatrixXd centered = errors.colwise() - stats.mu;
  Eigen::MatrixXd cov =
      (centered * centered.transpose()) / static_cast<double>(count - 1);
  cov.diagonal().array() += sigma_noise * sigma_noise;

  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("estimate_stats: Cholesky factorization failed");
  stats.chol = llt.matrixL();
  return stats;
}

std::shared_ptr<const LinearOperator> whitened_operator(
    std::shared_ptr<const LinearOperator> approx, const AemStats& stats) {
  if (!approx) throw std::invalid_argument("whitened_operator: null operator");
  return std::make_shared<WhitenedOperator>(std::move(approx), stats.chol,
                                            stats.width, stats.height);
}

Image aem_reconstruct(std::shared_ptr<const LinearOperator> approx,
                      const Image& y, const AemStats& stats, double lambda,
                      const PdhgConfig& inner) {
  if (inner.fidelity != Fidelity::L2)
    throw std::invalid_argument(
        "aem_reconstruct: the approximation error method assumes squared-L2 "
        "data fidelity; L1 is not supported");
  if (y.width() != stats.width || y.height() != stats.height)
    throw std::invalid_argument("aem_reconstruct: y/stats shape mismatch");

  auto wop = whitened_operator(std::move(approx), stats);
  Eigen::VectorXd shifted = to_vector(y) - stats.mu;
  Image y_white = from_vector(
      stats.width, stats.height,
      stats.chol.triangularView<Eigen::Lower>().solve(shifted));

  PdhgConfig cfg = inner;
  cfg.lambda = lambda;
  Image zero(stats.width, stats.height, 0.0);
  PdhgResult res = pdhg_solve(AffineApprox{wop, Image{}}, y_white, zero, cfg);
  return res.reconstruction;
}

namespace {

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

void write_f64(std::ostream& os, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  write_u64(os, bits);
}

double read_f64(std::istream& is) {
  const std::uint64_t bits = read_u64(is);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

constexpr std::uint64_t kStatsMagic = 0x736d617473636573ull;  // "secstats"

}  // namespace

void save_stats(const AemStats& stats, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_stats: cannot open " + path.string());
  write_u64(os, kStatsMagic);
  write_u64(os, static_cast<std::uint64_t>(stats.width));
  write_u64(os, static_cast<std::uint64_t>(stats.height));
  write_u64(os, static_cast<std::uint64_t>(stats.n_samples));
  write_f64(os, stats.sigma_noise);
  const Eigen::Index n = stats.mu.size();
  for (Eigen::Index i = 0; i < n; ++i) write_f64(os, stats.mu[i]);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) write_f64(os, stats.chol(i, j));
  if (!os) throw std::runtime_error("save_stats: write failed");
}

AemStats load_stats(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_stats: cannot open " + path.string());
  if (read_u64(is) != kStatsMagic)
    throw std::runtime_error("load_stats: bad magic in " + path.string());
  AemStats stats;
  stats.width = static_cast<int>(read_u64(is));
  stats.height = static_cast<int>(read_u64(is));
  stats.n_samples = static_cast<int>(read_u64(is));
  stats.sigma_noise = read_f64(is);
  if (stats.width <= 0 || stats.height <= 0 ||
      static_cast<std::size_t>(stats.width) * stats.height > 4096)
    throw std::runtime_error("load_stats: implausible shape header");
  const Eigen::Index n =
      static_cast<Eigen::Index>(stats.width) * stats.height;
  stats.mu.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) stats.mu[i] = read_f64(is);
  stats.chol.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) stats.chol(i, j) = read_f64(is);
  if (!is) throw std::runtime_error("load_stats: truncated file");
  return stats;
}

}  // namespace seqc
