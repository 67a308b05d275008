#pragma once

// Extended-precision real type used where flat-limit eigenvalues fall far
// below double precision (groups decaying like eps^{2k} for k >= 3).

#include <complex>
#include <limits>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <Eigen/Core>

namespace flatlim {

using wide = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<50>,
                                           boost::multiprecision::et_off>;

using MatrixW = Eigen::Matrix<wide, Eigen::Dynamic, Eigen::Dynamic>;
using VectorW = Eigen::Matrix<wide, Eigen::Dynamic, 1>;
using complex_wide = std::complex<wide>;
using MatrixCW = Eigen::Matrix<complex_wide, Eigen::Dynamic, Eigen::Dynamic>;
using VectorCW = Eigen::Matrix<complex_wide, Eigen::Dynamic, 1>;

inline double to_double(const wide& x) { return x.convert_to<double>(); }
inline double to_double(double x) { return x; }

}  // namespace flatlim

namespace Eigen {

template <>
struct NumTraits<flatlim::wide> : GenericNumTraits<flatlim::wide> {
  using Real = flatlim::wide;
  using NonInteger = flatlim::wide;
  using Literal = flatlim::wide;
  using Nested = flatlim::wide;

  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 10,
    AddCost = 20,
    MulCost = 50
  };

  static inline Real epsilon() { return std::numeric_limits<Real>::epsilon(); }
  static inline Real dummy_precision() { return Real(1e-45); }
  static inline Real highest() { return (std::numeric_limits<Real>::max)(); }
  static inline Real lowest() { return std::numeric_limits<Real>::lowest(); }
  static inline Real infinity() { return std::numeric_limits<Real>::infinity(); }
  static inline Real quiet_NaN() { return std::numeric_limits<Real>::quiet_NaN(); }
  static inline int digits10() { return std::numeric_limits<Real>::digits10; }
  static inline int digits() { return std::numeric_limits<Real>::digits; }
};

}  // namespace Eigen
