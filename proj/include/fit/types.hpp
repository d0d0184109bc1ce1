// Basic aliases and numeric constants. All rates and energies are expressed
// in units of the target intermediate-state decay rate (written "G" below);
// lengths are in micrometers.
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <numbers>

namespace fit {

using cplx = std::complex<double>;
using Mat  = Eigen::MatrixXcd;
using Vec  = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

// Reference decay rate used for unit conversion: G = 2*pi * 6.06 MHz.
inline constexpr double kGammaRefMHz = 6.06;

// Converts a dispersion coefficient quoted in 1e9 rad/s * um^6 ("GHz um^6",
// angular convention) into G * um^6.
inline double c6_from_ghz(double c6_ghz, double gamma_mhz = kGammaRefMHz) {
    return c6_ghz * 1.0e3 / (2.0 * kPi * gamma_mhz);
}

} // namespace fit
