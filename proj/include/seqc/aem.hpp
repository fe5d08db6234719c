#pragma once

#include <filesystem>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "seqc/grid.hpp"
#include "seqc/linearize.hpp"
#include "seqc/models.hpp"
#include "seqc/pdhg.hpp"

namespace seqc {

/// Sample statistics of the approximation error plus measurement noise:
/// mean mu and the lower-triangular Cholesky factor of Sigma + sigma^2 I
/// over flattened pixel space.
struct AemStats {
  int width = 0, height = 0;
  Eigen::VectorXd mu;
  Eigen::MatrixXd chol;  // lower triangular, chol * chol^T = Sigma + sigma^2 I
  int n_samples = 0;
  double sigma_noise = 0.0;
};

/// Estimates mean and covariance of eps_i = A(x_i) - approx(x_i) over the
/// sample list, adds the noise variance and factorizes. Needs at least two
/// samples; dense covariance limits grids to 4096 pixels.
AemStats estimate_stats(const ExactModel& model, const LinearOperator& approx,
                        const std::vector<Image>& samples, double sigma_noise);
AemStats estimate_stats(const ForwardModel& model, const LinearOperator& approx,
                        const std::vector<Image>& samples, double sigma_noise);

/// Solves the whitened linear problem
///   min_u 1/2 || chol^{-1} (approx(u) - y + mu) ||^2 + lambda TV(u)
/// with the inner primal-dual solver. Squared-L2 fidelity only; refuses an
/// L1 configuration.
Image aem_reconstruct(std::shared_ptr<const LinearOperator> approx,
                      const Image& y, const AemStats& stats, double lambda,
                      const PdhgConfig& inner);

/// Linear operator u -> chol^{-1} approx(u); exposed so its adjoint can be
/// probed directly.
std::shared_ptr<const LinearOperator> whitened_operator(
    std::shared_ptr<const LinearOperator> approx, const AemStats& stats);

/// Binary serialization: shape header plus raw little-endian 64-bit reals
/// for mu and chol.
void save_stats(const AemStats& stats, const std::filesystem::path& path);
AemStats load_stats(const std::filesystem::path& path);

}  // namespace seqc
