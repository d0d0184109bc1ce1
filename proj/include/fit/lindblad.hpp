// Lindblad generator assembly, time evolution, and steady-state solvers.
//
// The dissipator has two parts:
//  * decay channels  G_ba [ s_ba r s_ba^+ - (s_aa r + r s_aa)/2 ]  (standard
//    Lindblad form with jump s_ba = |b><a|);
//  * dephasing in the doubled convention  g_a [ 2 s_aa r s_aa - r s_aa
//    - s_aa r ], i.e. twice the standard form — kept verbatim, so coherences
//    touching level a damp at g_a rather than the standard form's g_a/2.
//    Users of standard-convention codes should halve their g inputs.
#pragma once

#include <optional>
#include <vector>

#include "fit/errors.hpp"
#include "fit/hilbert.hpp"
#include "fit/types.hpp"

namespace fit {

struct Decay {
    int site = 0;
    int from_level = 3;
    int to_level = 2;
    double rate = 0.0;
};

struct Dephasing {
    int site = 0;
    int level = 3;
    double rate = 0.0;
};

struct DissipatorSpec {
    std::vector<Decay> decays;
    std::vector<Dephasing> dephasings;
};

struct DensityMatrix {
    Mat entries;

    DensityMatrix() = default;
    explicit DensityMatrix(Mat m) : entries(std::move(m)) {}
    int dim() const { return static_cast<int>(entries.rows()); }

    // All population in the global ground state |1...1>.
    static DensityMatrix ground(int dim);
};

void validate_density_matrix(const DensityMatrix& rho, double trace_tol = 1e-9,
                             double herm_tol = 1e-9, double pos_tol = 1e-8,
                             bool check_positivity = true);

class Liouvillian {
  public:
    Liouvillian(CompositeSpace space, Operator hamiltonian, DissipatorSpec dissipators);

    int dim() const { return static_cast<int>(h_.rows()); }
    const CompositeSpace& space() const { return space_; }
    const Mat& hamiltonian() const { return h_; }
    const DissipatorSpec& dissipators() const { return diss_; }

    // out = -i[H, rho] + decay + dephasing terms; trace(out) = 0.
    void apply_into(const Mat& rho, Mat& out) const;
    Mat apply(const Mat& rho) const;

    // Conservative spectral-scale estimate used for automatic time steps.
    double stiffness_scale() const;

  private:
    CompositeSpace space_;
    Mat h_;
    DissipatorSpec diss_;

    struct JumpData {
        double rate;
        std::vector<int> src, dst; // basis indices with local level a -> b
    };
    std::vector<JumpData> jumps_;
    Mat damping_; // elementwise damping weights (anticommutators + dephasing)
};

Mat apply_liouvillian(const Liouvillian& l, const DensityMatrix& rho);

// Dense dim^2 x dim^2 superoperator in the column-major vectorization
// vec(rho)[i + dim*j] = rho(i,j); acting on vec(rho) reproduces apply.
// Requires dim^2 <= cap.
Mat assemble_superoperator(const Liouvillian& l, int cap = 2048);

struct EvolveOptions {
    double dt = 0.0;          // 0 = automatic from the stiffness scale
    int store_every = 1;      // 0 = keep only the initial and final states
    bool check_invariants = true;
    bool check_positivity = false; // eigensolve per stored state; opt-in
    double trace_tol = 1e-9;
    double herm_tol = 1e-9;
    double pos_tol = 1e-8;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<DensityMatrix> states;
};

Trajectory evolve(const Liouvillian& l, const DensityMatrix& rho0, double t_final,
                  const EvolveOptions& opts);
Trajectory evolve(const Liouvillian& l, const DensityMatrix& rho0, double t_final, double dt);

struct SteadyOptions {
    int lu_dim_max = 36;    // null-space route for dim <= this ...
    int superop_cap = 2048; // ... provided dim^2 fits the cap
    double residual_tol = 1e-10;
    bool uniqueness_check = true; // kernel-rank + second pivot-row solve (LU route)
    // evolution route
    double dt = 0.0;
    double transient_time = 40.0;
    double snapshot_spacing = 5.0;
    int snapshots = 12;
    double max_time = 40000.0;
};

// Dispatches between the dense null-space route (small dims) and long-time
// RK4 evolution with residual-verified sequence extrapolation (large dims).
DensityMatrix steady_state(const Liouvillian& l, const SteadyOptions& opts = {});
DensityMatrix steady_state_lu(const Liouvillian& l, const SteadyOptions& opts = {});
DensityMatrix steady_state_evolution(const Liouvillian& l, const SteadyOptions& opts = {});

// Precomputed affine family L(delta_c, v) = L0 + delta_c*Ld + v*Lv for the
// two-channel system; solve() is const and thread-safe. This is the hot path
// of the propagation and Monte-Carlo drivers.
class AffineSteadySolver {
  public:
    AffineSteadySolver(const CompositeSpace& space, const DriveParams& drive_base,
                       const DissipatorSpec& diss, double residual_tol = 1e-10);

    DensityMatrix solve(double delta_c, double v_ab) const;
    int dim() const { return dim_; }

  private:
    int dim_;
    double residual_tol_;
    Mat s0_, sd_, sv_;
};

} // namespace fit
