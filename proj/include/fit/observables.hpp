#pragma once
// Scalar observables and detuning sweeps: coherences, populations, two-body
// correlators, the approximate-coherence reconstruction, Mandel Q, Bell-state
// fidelities, susceptibility, and single-/multi-target spectra.

#include <map>
#include <optional>
#include <vector>

#include "fit/hilbert.hpp"
#include "fit/lindblad.hpp"

namespace fit {

struct Peak {
    double position = 0.0; // sub-grid refined abscissa
    double height = 0.0;
    double prominence = 0.0;
};

struct Spectrum {
    std::vector<double> delta_c;
    std::vector<double> im_rho21;
    std::vector<double> re_rho21;
    std::vector<double> rho33_A;
    std::vector<double> rho33_B;
    std::vector<double> o_ab;    // |connected correlation|
    std::vector<double> mandel_q;
    std::vector<double> fidelity_B;
    std::vector<double> fidelity_F;
    std::vector<Peak> peaks;     // local maxima of im_rho21
};

// Constants for the optional SI susceptibility mode. The dimensionless mode
// needs none of these; defaults are typical cold-Rb values.
struct SusceptibilityConstants {
    double dipole_moment = 1.0e-29;  // C m
    double density = 1.0e18;         // m^-3
    double epsilon0 = 8.8541878128e-12;
    double hbar = 1.054571817e-34;
};

struct RingGeometry {
    int n_targets = 1;
    double r_fac = 6.0;               // shell radius, um
    std::vector<double> angles;       // radians, one per target

    static RingGeometry regular(int n, double r);
};

// Tr(rho * op); exact trace of the product.
cplx expectation(const DensityMatrix& rho, const Operator& op);

// <sigma_13^A sigma_33^B> on a [target, control] two-site space.
cplx two_body_correlator(const CompositeSpace& space, const DensityMatrix& rho);

// <s13 s33> - <s13><s33>; vanishes on product states.
cplx connected_correlation(const CompositeSpace& space, const DensityMatrix& rho);

// Simplified coherence reconstruction: -2 v_ab corr / omega.
cplx approx_coherence(cplx correlator, double v_ab, double omega);

// Inputs for the full reconstruction, which keeps the gamma_13-proportional
// population term and the rho_32 cross term dropped by the simplified form.
struct CoherenceInputs {
    cplx correlator;  // <s13^A s33^B>
    double rho11 = 0.0;
    double rho22 = 0.0;
    cplx rho32;       // target 3-2 coherence
    double gamma12 = 0.5;  // half the target 2->1 decay rate
    double gamma13 = 0.0;  // half the target 3->2 decay rate
};

cplx approx_coherence_full(const CoherenceInputs& in, double v_ab, double omega, double omega_p);

// Q = var(n)/<n> - 1 with n = sum of sigma_33 over all sites.
double mandel_q(const CompositeSpace& space, const DensityMatrix& rho);

// <psi|rho|psi> for a unit-norm pure target state.
double fidelity_pure(const DensityMatrix& rho, const Vec& psi);

// Entangled / facilitated Bell vectors in the full two-site space:
// (|3A 1B> - |2A 3B>)/sqrt2 and (|3A 3B> - |2A 1B>)/sqrt2.
std::pair<Vec, Vec> bell_states_full(const CompositeSpace& space);

// Blockaded product state |1A 3B> (target ground, control excited). The
// entangled Bell vector decays into this state, so fidelity against it is
// the blockade witness reported in a Spectrum.
Vec blockade_state_full(const CompositeSpace& space);

// Dimensionless probe susceptibility rho21 / omega_p.
cplx susceptibility(cplx rho21, double omega_p);
// SI variant applying the printed prefactor hbar eps0 / (N mu^2 omega_p).
cplx susceptibility_si(cplx rho21, double omega_p, const SusceptibilityConstants& constants);

// Local maxima of y(x) with prominence >= prominence_frac * max(y),
// refined by a parabola through the three bracketing samples.
std::vector<Peak> find_peaks(const std::vector<double>& x, const std::vector<double>& y,
                             double prominence_frac = 0.05);

// Default sweep grid: n points spanning [-2 v_ab, +v_ab].
std::vector<double> default_delta_c_grid(double v_ab, int n = 401);

// Keep the listed sites (ascending order) and trace out the rest.
struct ReducedState {
    CompositeSpace space;
    DensityMatrix rho;
};
ReducedState partial_trace(const CompositeSpace& space, const DensityMatrix& rho,
                           const std::vector<int>& keep_sites);

struct SpectrumConfig {
    CompositeSpace space;
    DriveParams drive;              // delta_c is overridden per grid point
    DissipatorSpec dissipators;
    InteractionSpec interaction;
    double prominence = 0.05;
    SteadyOptions steady;
};

// Steady-state sweep over delta_c; observables are evaluated on the
// (first target, control) pair, reduced by partial trace when N > 1.
Spectrum coherence_spectrum(const SpectrumConfig& config, const std::vector<double>& delta_c_grid);

// One control at the ring centre, n_targets on the shell; uniform
// control-target coupling v_ct and target-target coupling from v_tt_grid.
// pair_dissipators is written for a [target, control] pair (sites 0, 1) and
// is replicated across all targets.
std::map<double, Spectrum> multi_target_spectrum(const RingGeometry& ring, double v_ct,
                                                 const std::vector<double>& v_tt_grid,
                                                 const std::vector<double>& delta_c_grid,
                                                 const DriveParams& drive,
                                                 const DissipatorSpec& pair_dissipators,
                                                 const SteadyOptions& steady = {});

} // namespace fit
