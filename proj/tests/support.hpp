#pragma once
// Shared fixtures for the unit suites: the standard dual-channel pair space
// and the drive/dissipator sets used throughout the bundled configurations.

#include <array>
#include <cmath>

#include "fit/hilbert.hpp"
#include "fit/lindblad.hpp"

namespace fit::testing {

inline CompositeSpace pair_space() {
    AtomSite target;
    target.level_count = 3;
    target.role = Role::target;
    AtomSite control;
    control.level_count = 2;
    control.role = Role::control;
    return CompositeSpace({target, control});
}

// Strong ladder drive (omega = omega_c = 5) with a bright control channel.
inline DriveParams drive_a(double omega_p = 0.5, double delta_c = 0.0) {
    DriveParams d;
    d.omega_p = omega_p;
    d.omega = 5.0;
    d.omega_c = 5.0;
    d.delta_c = delta_c;
    return d;
}

// Weaker drive (omega = omega_c = 3) with a long-lived control channel.
inline DriveParams drive_b(double omega_p = 0.5, double delta_c = 0.0) {
    DriveParams d;
    d.omega_p = omega_p;
    d.omega = 3.0;
    d.omega_c = 3.0;
    d.delta_c = delta_c;
    return d;
}

inline DissipatorSpec pair_dissipators(double gamma_13B) {
    DissipatorSpec diss;
    diss.decays.push_back({0, 2, 1, 1.0});
    diss.decays.push_back({0, 3, 2, 1.0e-3});
    diss.decays.push_back({1, 3, 1, gamma_13B});
    return diss;
}

inline InteractionSpec v_override(double v) {
    InteractionSpec spec;
    spec.pair_overrides[{0, 1}] = v;
    return spec;
}

inline Operator pair_op(const CompositeSpace& space, int site, int a, int b) {
    return embed_operator(space, site, local_sigma(space.site(site).level_count, a, b));
}

// rho21 of the target channel: Tr(rho |1A><2A| x I).
inline cplx probe_coherence(const CompositeSpace& space, const DensityMatrix& rho) {
    const Operator op = pair_op(space, 0, 1, 2);
    return (rho.entries * op.entries).trace();
}

} // namespace fit::testing
