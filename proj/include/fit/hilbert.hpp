// Composite Hilbert spaces, operator embedding, and Hamiltonian assembly for
// dual- and multi-channel Rydberg systems.
//
// Conventions (fixed):
//  * site 0 is the slowest-varying tensor factor;
//  * three-level sites use the basis {|1>,|2>,|3>} (indices 0,1,2);
//  * two-level control sites use the basis {|1>,|3>} (indices 0,1), so the
//    level labels 1 and 3 address indices 0 and 1;
//  * detuning enters the Hamiltonian as +delta_c * sigma_33, counted once;
//  * every Rydberg pair (j,l) contributes +V_jl * sigma_33(j) sigma_33(l).
//    V_jl computed from geometry uses the attractive-convention formula
//    -c6/r^6; configs aiming at a positive (repulsive-shift) V therefore
//    carry a negative c6.
#pragma once

#include <array>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "fit/errors.hpp"
#include "fit/types.hpp"

namespace fit {

enum class Role { target, control };
enum class DriveScheme { one_photon, two_photon };

struct AtomSite {
    int level_count = 3;
    Role role = Role::target;
    std::array<double, 3> position{0.0, 0.0, 0.0}; // um; z = propagation axis
    DriveScheme drive_scheme = DriveScheme::one_photon;
};

class CompositeSpace {
  public:
    explicit CompositeSpace(std::vector<AtomSite> sites);

    const std::vector<AtomSite>& sites() const { return sites_; }
    const AtomSite& site(int i) const { return sites_.at(i); }
    int site_count() const { return static_cast<int>(sites_.size()); }
    int total_dim() const { return total_dim_; }

    // Local basis index of a level label (1, 2 or 3) at a site.
    int level_index(int site_index, int level) const;

  private:
    std::vector<AtomSite> sites_;
    int total_dim_ = 1;
};

struct TwoPhotonParams {
    double omega_c1 = 0.0;
    double omega_c2 = 0.0;
    double delta = 0.0; // intermediate-state detuning, must be nonzero
};

struct DriveParams {
    double omega_p = 0.0;
    double omega = 0.0;
    double omega_c = 0.0;
    double delta_c = 0.0;
    std::optional<TwoPhotonParams> two_photon;
};

struct InteractionSpec {
    double c6 = 0.0; // G * um^6; negative c6 gives positive pair shifts
    // Explicit V values per (site, site) pair; keys are normalized with
    // first < second. When a pair is absent, V is computed from geometry.
    std::map<std::pair<int, int>, double> pair_overrides;
};

struct Operator {
    int dim = 0;
    Mat entries;

    Operator() = default;
    Operator(int d, Mat m) : dim(d), entries(std::move(m)) {}
    explicit Operator(Mat m) : dim(static_cast<int>(m.rows())), entries(std::move(m)) {}
};

// |a><b| on a single site with the given level count (level labels, not
// indices; the two-level basis is {|1>,|3>}).
Operator local_sigma(int level_count, int a, int b);

// I x ... x local x ... x I with site 0 slowest-varying.
Operator embed_operator(const CompositeSpace& space, int site_index, const Operator& local);

// -c6 / (delta_z^2 + d^2)^3, the axial-offset van der Waals pair shift.
double pair_potential(double delta_z, double d, double c6);

// Pair shift from the 3D site geometry (axial offset = z difference,
// transverse separation = xy distance).
double pair_potential_from_positions(const AtomSite& a, const AtomSite& b, double c6);

// Full system Hamiltonian: drive terms per site plus all Rydberg pair shifts.
Operator build_hamiltonian(const CompositeSpace& space, const DriveParams& drive,
                           const InteractionSpec& interaction);

} // namespace fit
