// Dressed-state analysis of the 4-dimensional interaction subspace spanned by
// {|2A 1B>, |2A 3B>, |3A 1B>, |3A 3B>} (damping excluded by construction).
#pragma once

#include <utility>

#include "fit/errors.hpp"
#include "fit/types.hpp"

namespace fit {

struct DressedResult {
    RVec eigenvalues;  // ascending
    Mat eigenvectors;  // columns, orthonormal, deterministic phase
};

struct EigResult {
    RVec eigenvalues;
    Mat eigenvectors;
};

// 4x4 subspace Hamiltonian in the documented basis order.
Mat dressed_hamiltonian(double omega, double omega_c, double delta_c, double v_ab);

// Hermitian eigendecomposition with a deterministic ordering: ascending
// eigenvalues, near-degenerate pairs tie-broken by the index of the largest
// |component|, and each vector phased so its largest component is real > 0.
EigResult eigendecompose_hermitian(const Mat& m);

DressedResult dressed_solve(double omega, double omega_c, double delta_c, double v_ab);

// Detunings at which a dressed eigenvalue crosses zero:
//   dc_pm = -v/2 +- sqrt(v^2 + ((omega^2-omega_c^2)/omega)^2)/2.
std::pair<double, double> resonance_detunings(double omega, double omega_c, double v_ab);

// Same roots found numerically from det H0(dc) sign changes (cross-check).
std::pair<double, double> resonance_detunings_numeric(double omega, double omega_c, double v_ab);

// Gap between the two resonances; algebraically identical to dc_plus - dc_minus.
double energy_gap(double omega, double omega_c, double v_ab);

// (psi_E, psi_F) = ((|3A1B> - |2A3B>)/sqrt2, (|3A3B> - |2A1B>)/sqrt2).
std::pair<Vec, Vec> bell_states();

} // namespace fit
