#pragma once

// Kernel evaluators (Dirichlet over a symmetric frequency set, sinc, custom),
// scaled kernel matrices K_eps(X) = [K(eps x, eps x')] and Wronskian matrices
// W = [K^{(alpha,beta)}(0,0) / (alpha! beta!)].

#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>

#include <Eigen/Core>

#include "flatlim/monomial.hpp"
#include "flatlim/vandermonde.hpp"
#include "flatlim/wide.hpp"

namespace flatlim {

// closed: {-N, ..., N}^d (used with the (2N)^d normalization).
// open:   {-N+1, ..., N-1}^d.
enum class GridConvention { closed, open };

class SamplingSet {
 public:
  // Full tensor grid; normalization defaults to (2N)^d for either convention.
  static SamplingSet full_grid(int N, int d, GridConvention convention = GridConvention::closed);

  // Explicit frequency list (one per row). Rejects sets that are not
  // symmetric about the origin. Normalization defaults to 1.
  static SamplingSet from_list(Eigen::MatrixXd frequencies, double normalization = 1.0);

  const Eigen::MatrixXd& frequencies() const { return freqs_; }
  int size() const { return static_cast<int>(freqs_.rows()); }
  int dim() const { return static_cast<int>(freqs_.cols()); }
  bool is_full_grid() const { return full_grid_; }
  int grid_N() const { return N_; }
  // Largest |omega_i| in a full grid: N (closed) or N-1 (open).
  int half_width() const { return half_width_; }
  GridConvention convention() const { return convention_; }
  double normalization() const { return normalization_; }
  SamplingSet with_normalization(double c) const;

 private:
  SamplingSet() = default;

  Eigen::MatrixXd freqs_;
  bool full_grid_ = false;
  int N_ = 0;
  int half_width_ = 0;
  GridConvention convention_ = GridConvention::closed;
  double normalization_ = 1.0;
};

// D_S(u) = sum_{omega in S} cos<u, omega>. Full grids use the product of
// 1-D closed forms sin((M+1/2)u)/sin(u/2); explicit lists sum directly.
double dirichlet_eval(const SamplingSet& s, std::span<const double> u);
wide dirichlet_eval(const SamplingSet& s, std::span<const wide> u);
// Direct summation regardless of the set's structure.
double dirichlet_eval_direct(const SamplingSet& s, std::span<const double> u);
// sum exp(i<u, omega>), for verifying cancellation of the imaginary part.
std::complex<double> dirichlet_eval_complex(const SamplingSet& s, std::span<const double> u);

double sinc(double u);
wide sinc(const wide& u);

struct DirichletKernel {
  SamplingSet sampling;
  double scale = 1.0;  // K(x, y) = scale * D_S(x - y)
};

struct SincKernel {};  // K(x, y) = prod_i sinc(x_i - y_i)

struct CustomKernel {
  std::string name;
  std::function<double(std::span<const double>, std::span<const double>)> eval;
  // Optional extended-precision evaluator; without it, wide matrices are
  // assembled from the double evaluator and carry double accuracy only.
  std::function<wide(std::span<const wide>, std::span<const wide>)> eval_wide;
};

class KernelSpec {
 public:
  static KernelSpec dirichlet(SamplingSet s, double scale = 1.0);
  static KernelSpec sinc();
  static KernelSpec custom(CustomKernel k);

  double operator()(std::span<const double> x, std::span<const double> y) const;
  wide evaluate(std::span<const wide> x, std::span<const wide> y) const;

  // Relative accuracy of wide-precision matrices built from this kernel.
  double working_epsilon() const;
  std::string name() const;

  const DirichletKernel* as_dirichlet() const { return std::get_if<DirichletKernel>(&kind_); }
  bool is_sinc() const { return std::holds_alternative<SincKernel>(kind_); }
  const CustomKernel* as_custom() const { return std::get_if<CustomKernel>(&kind_); }

 private:
  explicit KernelSpec(std::variant<DirichletKernel, SincKernel, CustomKernel> k)
      : kind_(std::move(k)) {}
  std::variant<DirichletKernel, SincKernel, CustomKernel> kind_;
};

// K_eps(X); symmetric by construction.
Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const NodeSet& nodes, double eps);
MatrixW kernel_matrix_wide(const KernelSpec& spec, const NodeSet& nodes, const wide& eps);

// (2N)^{-d} D_{G_N}(eps (x - x') / N), i.e. D_N of the super-resolution setting.
Eigen::MatrixXd dirichlet_matrix_normalized(const NodeSet& nodes, int N, double eps,
                                            GridConvention convention = GridConvention::closed);
MatrixW dirichlet_matrix_normalized_wide(const NodeSet& nodes, int N, const wide& eps,
                                         GridConvention convention = GridConvention::closed);

Eigen::MatrixXd sinc_matrix(const NodeSet& nodes, double eps);
MatrixW sinc_matrix_wide(const NodeSet& nodes, const wide& eps);

enum class WronskianSource { dirichlet_finite, limit_gram, finite_difference, supplied };

struct WronskianMatrix {
  Eigen::MatrixXcd entries;  // rows/cols indexed by P_m in graded order
  int degree = 0;
  int dim = 1;
  WronskianSource source = WronskianSource::supplied;
};

// W = F V_{<=m}(S)^T V_{<=m}(S) F^*, F = diag(i^{|alpha|}/alpha!), with the
// frequencies multiplied by frequency_scale (1/N gives W_N of K_N).
WronskianMatrix wronskian_dirichlet(const SamplingSet& s, int m, double frequency_scale = 1.0,
                                    GradedOrder order = GradedOrder::grevlex);

// Limit of (2N)^{-d} W_N: the monomial Gram matrix on [-1,1]^d with weight 2^{-d}.
WronskianMatrix wronskian_limit_gram(int m, int d, GradedOrder order = GradedOrder::grevlex);

// Central finite differences of a kernel at (0, 0). Accuracy is limited by
// the step (O(h^2)) and, for double-only kernels, by cancellation ~eps/h^{|a|+|b|}.
WronskianMatrix wronskian_finite_difference(const KernelSpec& spec, int m, int d, double h = 1e-3,
                                            GradedOrder order = GradedOrder::grevlex);

// rank(V_{<=m}(S)) >= n.
bool rank_condition_check(const SamplingSet& s, int m, int n, std::optional<double> tol = std::nullopt);

}  // namespace flatlim
