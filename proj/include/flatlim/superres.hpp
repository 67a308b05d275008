#pragma once

// Spike signals on the torus, Fourier measurements, the complex
// Vandermonde U, and NLS / 2-D ESPRIT node recovery with the scaled error
// kappa = max_j |x_hat_j - x_j|_inf / sigma.

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "flatlim/fit.hpp"
#include "flatlim/kernels.hpp"
#include "flatlim/spectral.hpp"
#include "flatlim/vandermonde.hpp"
#include "flatlim/wide.hpp"

namespace flatlim {

// Infinity-norm distance on T^d = [-pi, pi)^d.
double wrap_distance(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                     const Eigen::Ref<const Eigen::RowVectorXd>& y);

// Reduce every coordinate to [-pi, pi).
Eigen::MatrixXd wrap_to_torus(const Eigen::MatrixXd& points);

struct SpikeSignal {
  Eigen::MatrixXd nodes;             // n x d
  Eigen::VectorXcd coefficients;     // n

  SpikeSignal() = default;
  SpikeSignal(Eigen::MatrixXd x, Eigen::VectorXcd a);
  int size() const { return static_cast<int>(nodes.rows()); }
  int dim() const { return static_cast<int>(nodes.cols()); }
};

struct ClusterSpec {
  double Delta = 0.0;
  double tau = 2.0;
  int n = 0;
};

// Every distinct pair satisfies Delta <= |x - y|_T <= tau Delta (with a
// 1e-12 relative allowance on both bounds).
bool cluster_check(const Eigen::MatrixXd& nodes, const ClusterSpec& spec);

// Entry (omega, j) = exp(i <omega, x_j>).
Eigen::MatrixXcd complex_vandermonde(const Eigen::MatrixXd& nodes, const SamplingSet& grid);

struct MeasurementSet {
  SamplingSet grid;
  Eigen::VectorXcd values;
  Eigen::VectorXcd noise;
  double noise_level = 0.0;
  std::uint64_t rng_seed = 0;
  // Same samples in extended precision (empty unless requested), needed
  // when the noise level lies below double rounding.
  VectorCW values_wide;
};

// f(omega) = sum_j a_j exp(i <omega, x_j>) + e(omega), e uniform on the
// disk of radius noise_level.
MeasurementSet fourier_measurements(const SpikeSignal& signal, const SamplingSet& grid,
                                    double noise_level, std::uint64_t seed, bool extended = false);

struct Matching {
  std::vector<int> assignment;  // truth j -> estimate assignment[j]
  double max_distance = 0.0;
};

// Assignment minimizing the largest entry of dist(truth, estimate).
Matching bottleneck_assignment(const Eigen::MatrixXd& dist);

// Assignment minimizing the largest wrap distance (bottleneck matching).
Matching optimal_matching(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& estimate);

double error_kappa(const SpikeSignal& truth, const SpikeSignal& estimate, double sigma);

struct RecoveryResult {
  SpikeSignal estimate;
  MatrixW nodes_wide;  // extended-precision node estimates, when available
  Matching matching;
  double max_node_error = 0.0;
  // max_node_error / noise_level; unscaled when the noise level is zero.
  double kappa = 0.0;
  bool converged = false;
  int iterations = 0;
  double final_gradient_norm = 0.0;
  std::vector<double> cost_history;  // cost after each accepted step
  std::string diagnostic;
};

// Real parameter vector [Re a (n), Im a (n), x (n*d, row-major by node)].
class NlsProblem {
 public:
  NlsProblem(const MeasurementSet& meas, int n);

  int num_params() const { return 2 * n_ + n_ * d_; }
  int num_residuals() const { return 2 * static_cast<int>(freqs_.rows()); }

  Eigen::VectorXd pack(const SpikeSignal& s) const;
  SpikeSignal unpack(const Eigen::VectorXd& p) const;

  // [Re(model - data); Im(model - data)]
  Eigen::VectorXd residual(const Eigen::VectorXd& p) const;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& p) const;
  double cost(const Eigen::VectorXd& p) const { return 0.5 * residual(p).squaredNorm(); }

 private:
  Eigen::MatrixXd freqs_;
  Eigen::VectorXcd data_;
  int n_;
  int d_;
};

struct NlsOptions {
  int max_iters = 200;
  double gradient_tol = 1e-12;
  double step_tol = 1e-14;
  int polish_steps = 10;  // undamped Gauss-Newton steps after convergence
};

RecoveryResult nls_recover(const MeasurementSet& meas, int n, const SpikeSignal& init,
                           const NlsOptions& opts = {}, const SpikeSignal* truth = nullptr);

struct EspritParams {
  int M1 = 40, M2 = 40;
  int L1 = 10, L2 = 10;
  double beta1 = 0.5, beta2 = 0.5;
  // Run the subspace steps on MeasurementSet::values_wide. The signal
  // subspace then comes from the eigenvectors of E E*, built from the
  // Hankel structure, instead of an SVD of E.
  bool extended_precision = false;
};

// Uses the M1 x M2 block of consecutive frequencies starting at the
// smallest frequency in each coordinate of a full 2-D grid.
RecoveryResult esprit_2d(const MeasurementSet& meas, int n, const EspritParams& params = {},
                         const SpikeSignal* truth = nullptr);

// Least-squares (log x, log y) slope; needs >= 4 positive points.
LinearFit slope_fit(const std::vector<double>& x, const std::vector<double>& y);

struct SingularScalingReport {
  std::vector<double> delta_grid;   // descending
  std::vector<double> ndelta_grid;  // N * Delta
  // Spectra of U*U / (2N)^d, i.e. sigma_k(U)^2 / (2N)^d, grouped by the
  // rank profile of the unscaled geometry.
  EigenGroupReport report;
  int N = 0;
  double sigma_min_sq_exponent = 0.0;
};

SingularScalingReport singular_scaling_fit(const NodeSet& geometry, int N, std::vector<double> delta_grid,
                                           GridConvention convention = GridConvention::closed,
                                           const SpectralOptions& opts = {});

}  // namespace flatlim
