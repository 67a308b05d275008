#pragma once

// Flat-limit spectra: eigenvalue grouping by rank increments, log-log
// scaling fits, the tightness constant det(R W R^T) and perturbation checks.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "flatlim/fit.hpp"
#include "flatlim/kernels.hpp"
#include "flatlim/vandermonde.hpp"
#include "flatlim/wide.hpp"

namespace flatlim {

// Full spectrum of a symmetric matrix, descending. Throws on asymmetry
// beyond 1e-10 relative to the largest entry.
std::vector<double> eigenvalues_sym(const Eigen::MatrixXd& m);
std::vector<wide> eigenvalues_sym(const MatrixW& m);

struct GroupPrediction {
  int exponent = 0;  // 2k
  int count = 0;     // t_k
};

std::vector<GroupPrediction> predict_groups(const RankProfile& profile);

struct EigenGroup {
  int predicted_exponent = 0;
  int count = 0;
  int first_position = 0;  // 0-based index into the descending spectrum
  double fitted_slope = 0.0;
  double slope_stderr = 0.0;
  double fit_r2 = 1.0;  // minimum over the members
  std::vector<double> member_slopes;
};

struct EigenGroupReport {
  std::vector<double> eps_grid;
  std::vector<std::vector<double>> eigenvalues;  // per eps, descending
  std::vector<EigenGroup> groups;
  RankProfile profile;
  std::vector<bool> underflow;  // per eps: smallest eigenvalue below the floor
  int points_used = 0;
  double working_epsilon = 0.0;
  std::vector<std::string> warnings;

  bool any_underflow() const;
};

struct SpectralOptions {
  std::optional<double> rank_tol;
  GradedOrder order = GradedOrder::grevlex;
  double underflow_factor = 1e2;
};

// Strictly decreasing geometric grid from hi down to lo.
std::vector<double> geometric_grid(double hi, double lo, int points);
// 20 log-spaced points spanning one and a half decades below eps_max.
std::vector<double> default_eps_grid(double eps_max = 0.1);

EigenGroupReport fit_scaling(const KernelSpec& spec, const NodeSet& nodes,
                             const std::vector<double>& eps_grid, const SpectralOptions& opts = {});

struct TightnessCertificate {
  Eigen::MatrixXd R_tilde;  // n x p_m, block diagonal in the degree blocks
  double constant_C = 0.0;
  double imag_residue = 0.0;  // relative anti-Hermitian part of R W R^T
  WronskianSource wronskian_source = WronskianSource::supplied;
  RankProfile profile;
  int r_tilde_rank = 0;
};

TightnessCertificate tightness_constant(const NodeSet& nodes, const WronskianMatrix& w,
                                        const SpectralOptions& opts = {});

struct DetScaling {
  double fitted_exponent = 0.0;
  int predicted_exponent = 0;  // 2 sum_k k t_k
  double slope_stderr = 0.0;
  double fit_r2 = 1.0;
  std::vector<double> log_det;  // natural log, per eps
  RankProfile profile;
};

DetScaling det_scaling_check(const KernelSpec& spec, const NodeSet& nodes,
                             const std::vector<double>& eps_grid, const SpectralOptions& opts = {});

struct BauerFike {
  double max_eigen_gap = 0.0;     // max over mu in spec(B) of dist(mu, spec(A))
  double spectral_norm_diff = 0.0;  // ||A - B||_2
  // gap <= norm diff, decided on extended-precision spectra with an
  // allowance of 1e-40 (||A|| + ||B||) for the equality case.
  bool holds_wide = true;
  bool holds() const { return holds_wide; }
};

BauerFike bauer_fike_gap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

struct ConvergenceRow {
  int N = 0;
  double sup_entry_diff = 0.0;
  double max_eigen_gap = 0.0;
  double max_norm_diff = 0.0;
  bool bauer_fike_holds = true;
};

struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;
  double entry_rate = 0.0;  // slope of log sup_entry_diff vs log N
  bool entry_non_increasing = true;  // up to the jitter allowance
  bool gap_non_increasing = true;
};

// D_N vs Sinc over eps in [0, eps_max] (eps_points equispaced values).
ConvergenceStudy convergence_study(const NodeSet& nodes, double eps_max, const std::vector<int>& N_list,
                                   int eps_points = 21, GridConvention convention = GridConvention::closed,
                                   double jitter = 0.10);

}  // namespace flatlim
