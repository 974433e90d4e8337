#pragma once

#include <stdexcept>
#include <string>

namespace deconv {

/// Raised when 1/|f_eps*| exceeds the overflow guard on the requested
/// frequency cutoff. Carries the smallest bandwidth that would pass.
class BandwidthTooSmall : public std::runtime_error
{
public:
  BandwidthTooSmall(double h, double min_feasible_h)
    : std::runtime_error("bandwidth_too_small: h=" + std::to_string(h) +
                         " overflows the deconvolution guard; minimum "
                         "feasible h is " +
                         std::to_string(min_feasible_h))
    , h_(h)
    , min_feasible_h_(min_feasible_h)
  {
  }

  double bandwidth() const noexcept { return h_; }
  double min_feasible_bandwidth() const noexcept { return min_feasible_h_; }

private:
  double h_;
  double min_feasible_h_;
};

/// A spectrum that should be Hermitian is not, or an inverse transform left
/// an imaginary residue. Always an upstream bug.
class SymmetryViolation : public std::logic_error
{
public:
  using std::logic_error::logic_error;
};

} // namespace deconv
