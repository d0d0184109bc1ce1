#include "fit/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "fit/dressed.hpp"

namespace fit {

namespace {

Vec vectorize(const Mat& m) {
    return Eigen::Map<const Vec>(m.data(), m.size());
}

Mat unvectorize(const Vec& v, int dim) {
    return Eigen::Map<const Mat>(v.data(), dim, dim);
}

void hermitize(Mat& rho) {
    rho = 0.5 * (rho + rho.adjoint()).eval();
    const double tr = rho.real().trace();
    if (std::abs(tr) > 1e-300) rho /= tr;
}

// -i (I x H - H^T x I) in the column-major vectorization.
Mat hamiltonian_superop(const Mat& h) {
    const int dim = static_cast<int>(h.rows());
    const int n2 = dim * dim;
    Mat s = Mat::Zero(n2, n2);
    for (int j = 0; j < dim; ++j)
        for (int i = 0; i < dim; ++i) {
            const int row = i + dim * j;
            for (int k = 0; k < dim; ++k) {
                if (h(i, k) != 0.0) s(row, k + dim * j) += -kI * h(i, k); // H rho
                if (h(k, j) != 0.0) s(row, i + dim * k) += kI * h(k, j);  // rho H
            }
        }
    return s;
}

struct LuSolveResult {
    Vec x;
    double residual;
};

// Null-space solve with one row replaced by the trace condition.
LuSolveResult lu_null_space(const Mat& s, int dim, int replaced_row) {
    const int n2 = dim * dim;
    Mat s2 = s;
    s2.row(replaced_row).setZero();
    for (int i = 0; i < dim; ++i) s2(replaced_row, i + dim * i) = 1.0;
    Vec b = Vec::Zero(n2);
    b[replaced_row] = 1.0;
    Vec x = s2.partialPivLu().solve(b);
    // Singular pivots surface as non-finite entries; report them as an
    // infinite residual so every caller-side gate rejects the solve.
    if (!x.allFinite()) return {std::move(x), std::numeric_limits<double>::infinity()};
    Vec r = s * x; // residual against the unmodified generator
    return {std::move(x), r.cwiseAbs().maxCoeff()};
}

} // namespace

DensityMatrix DensityMatrix::ground(int dim) {
    Mat m = Mat::Zero(dim, dim);
    m(0, 0) = 1.0;
    return DensityMatrix(std::move(m));
}

void validate_density_matrix(const DensityMatrix& rho, double trace_tol, double herm_tol,
                             double pos_tol, bool check_positivity) {
    const Mat& m = rho.entries;
    if (m.rows() != m.cols()) throw DimensionError("density matrix must be square");
    if (!m.allFinite()) throw NumericalInstabilityError("density matrix has non-finite entries");
    const double tr_err = std::abs(m.trace() - cplx(1.0, 0.0));
    if (tr_err >= trace_tol)
        throw NumericalInstabilityError("trace deviates from 1 by " + std::to_string(tr_err));
    const double herm_err = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (herm_err >= herm_tol)
        throw NumericalInstabilityError("hermiticity violated by " + std::to_string(herm_err));
    if (check_positivity) {
        EigResult e = eigendecompose_hermitian(m);
        const double min_eig = e.eigenvalues.minCoeff();
        if (min_eig <= -pos_tol)
            throw NumericalInstabilityError("negative eigenvalue " + std::to_string(min_eig));
    }
}

Liouvillian::Liouvillian(CompositeSpace space, Operator hamiltonian, DissipatorSpec dissipators)
    : space_(std::move(space)), h_(std::move(hamiltonian.entries)), diss_(std::move(dissipators)) {
    const int dim = space_.total_dim();
    if (h_.rows() != dim || h_.cols() != dim)
        throw DimensionError("hamiltonian dim does not match the composite space");
    const double herm_err = (h_ - h_.adjoint()).cwiseAbs().maxCoeff();
    if (herm_err >= 1e-12)
        throw HermiticityError("hamiltonian is not hermitian (max deviation " +
                               std::to_string(herm_err) + ")");

    // Per-site strides for mixed-radix index arithmetic (site 0 slowest).
    std::vector<int> strides(space_.site_count());
    int acc = 1;
    for (int i = space_.site_count() - 1; i >= 0; --i) {
        strides[i] = acc;
        acc *= space_.site(i).level_count;
    }

    Eigen::MatrixXd damping = Eigen::MatrixXd::Zero(dim, dim);
    auto level_occupied = [&](int k, int site, int local_idx) {
        const int q = space_.site(site).level_count;
        return (k / strides[site]) % q == local_idx;
    };

    for (const Decay& d : diss_.decays) {
        if (d.rate < 0) throw ConfigError("decay rate must be >= 0");
        if (d.site < 0 || d.site >= space_.site_count())
            throw ConfigError("decay site index out of range");
        if (d.rate == 0) continue;
        const int a = space_.level_index(d.site, d.from_level);
        const int b = space_.level_index(d.site, d.to_level);
        JumpData jd;
        jd.rate = d.rate;
        RVec n = RVec::Zero(dim);
        for (int k = 0; k < dim; ++k) {
            if (level_occupied(k, d.site, a)) {
                jd.src.push_back(k);
                jd.dst.push_back(k + (b - a) * strides[d.site]);
                n[k] = 1.0;
            }
        }
        for (int j = 0; j < dim; ++j)
            for (int i = 0; i < dim; ++i) damping(i, j) -= 0.5 * d.rate * (n[i] + n[j]);
        jumps_.push_back(std::move(jd));
    }

    for (const Dephasing& d : diss_.dephasings) {
        if (d.rate < 0) throw ConfigError("dephasing rate must be >= 0");
        if (d.site < 0 || d.site >= space_.site_count())
            throw ConfigError("dephasing site index out of range");
        if (d.rate == 0) continue;
        const int a = space_.level_index(d.site, d.level);
        RVec p = RVec::Zero(dim);
        for (int k = 0; k < dim; ++k)
            if (level_occupied(k, d.site, a)) p[k] = 1.0;
        // doubled convention: 2 P rho P - rho P - P rho
        for (int j = 0; j < dim; ++j)
            for (int i = 0; i < dim; ++i)
                damping(i, j) += d.rate * (2.0 * p[i] * p[j] - p[i] - p[j]);
    }

    damping_ = damping.cast<cplx>();
}

void Liouvillian::apply_into(const Mat& rho, Mat& out) const {
    out.noalias() = h_ * rho;
    out.noalias() -= rho * h_;
    out *= -kI;
    out += damping_.cwiseProduct(rho);
    for (const JumpData& j : jumps_) {
        const std::size_t m = j.src.size();
        for (std::size_t b = 0; b < m; ++b)
            for (std::size_t a = 0; a < m; ++a)
                out(j.dst[a], j.dst[b]) += j.rate * rho(j.src[a], j.src[b]);
    }
}

Mat Liouvillian::apply(const Mat& rho) const {
    if (rho.rows() != dim() || rho.cols() != dim())
        throw DimensionError("state dim does not match the generator");
    Mat out(dim(), dim());
    apply_into(rho, out);
    return out;
}

double Liouvillian::stiffness_scale() const {
    double scale = 2.0 * h_.cwiseAbs().rowwise().sum().maxCoeff();
    for (const Decay& d : diss_.decays) scale += 2.0 * d.rate;
    for (const Dephasing& d : diss_.dephasings) scale += 4.0 * d.rate;
    return std::max(scale, 1e-6);
}

Mat apply_liouvillian(const Liouvillian& l, const DensityMatrix& rho) {
    return l.apply(rho.entries);
}

Mat assemble_superoperator(const Liouvillian& l, int cap) {
    const int dim = l.dim();
    const int n2 = dim * dim;
    if (n2 > cap)
        throw CapacityError("superoperator side " + std::to_string(n2) + " exceeds cap " +
                            std::to_string(cap) + "; use the matrix-free path");
    Mat s = Mat::Zero(n2, n2);
    // Column-by-column from the matrix-free action on basis matrices; exact
    // by linearity and keeps a single source of truth for the generator.
    Mat basis = Mat::Zero(dim, dim), out(dim, dim);
    for (int col = 0; col < n2; ++col) {
        basis(col % dim, col / dim) = 1.0;
        l.apply_into(basis, out);
        s.col(col) = vectorize(out);
        basis(col % dim, col / dim) = 0.0;
    }
    return s;
}

namespace {

class Rk4Stepper {
  public:
    explicit Rk4Stepper(const Liouvillian& l)
        : l_(l), k1_(l.dim(), l.dim()), k2_(l.dim(), l.dim()), k3_(l.dim(), l.dim()),
          k4_(l.dim(), l.dim()), tmp_(l.dim(), l.dim()) {}

    void step(Mat& rho, double dt) {
        l_.apply_into(rho, k1_);
        tmp_ = rho + (0.5 * dt) * k1_;
        l_.apply_into(tmp_, k2_);
        tmp_ = rho + (0.5 * dt) * k2_;
        l_.apply_into(tmp_, k3_);
        tmp_ = rho + dt * k3_;
        l_.apply_into(tmp_, k4_);
        rho += (dt / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
    }

  private:
    const Liouvillian& l_;
    Mat k1_, k2_, k3_, k4_, tmp_;
};

} // namespace

Trajectory evolve(const Liouvillian& l, const DensityMatrix& rho0, double t_final,
                  const EvolveOptions& opts) {
    if (t_final < 0) throw ConfigError("t_final must be >= 0");
    double dt = opts.dt;
    if (dt <= 0) dt = 2.5 / l.stiffness_scale();
    if (rho0.dim() != l.dim()) throw DimensionError("initial state dim mismatch");

    const long n_steps = std::max(1L, static_cast<long>(std::ceil(t_final / dt - 1e-12)));
    const double h = t_final / static_cast<double>(n_steps);

    Trajectory traj;
    Mat rho = rho0.entries;
    Rk4Stepper stepper(l);

    auto store = [&](double t, long step) {
        DensityMatrix snap{rho};
        if (opts.check_invariants) {
            try {
                validate_density_matrix(snap, opts.trace_tol, opts.herm_tol, opts.pos_tol,
                                        opts.check_positivity);
            } catch (const NumericalInstabilityError& e) {
                throw NumericalInstabilityError(std::string(e.what()) + " at step " +
                                                std::to_string(step));
            }
        }
        traj.times.push_back(t);
        traj.states.push_back(std::move(snap));
    };

    store(0.0, 0);
    for (long s = 1; s <= n_steps; ++s) {
        stepper.step(rho, h);
        const bool last = (s == n_steps);
        if (last || (opts.store_every > 0 && s % opts.store_every == 0))
            store(h * static_cast<double>(s), s);
    }
    return traj;
}

Trajectory evolve(const Liouvillian& l, const DensityMatrix& rho0, double t_final, double dt) {
    EvolveOptions opts;
    opts.dt = dt;
    return evolve(l, rho0, t_final, opts);
}

DensityMatrix steady_state_lu(const Liouvillian& l, const SteadyOptions& opts) {
    const int dim = l.dim();
    const int n2 = dim * dim;
    Mat s = assemble_superoperator(l, opts.superop_cap);

    // All gates use negated comparisons so NaN residuals cannot slip through.
    LuSolveResult first = lu_null_space(s, dim, 0);
    if (!(first.residual < opts.residual_tol)) {
        // One retry with a different pivot row in case row 0 was unlucky.
        first = lu_null_space(s, dim, n2 / 2);
        if (!(first.residual < opts.residual_tol))
            throw NonUniqueSteadyStateError(
                "null-space solve residual " + std::to_string(first.residual) +
                "; generator is singular beyond the trace freedom");
    }
    if (opts.uniqueness_check) {
        LuSolveResult second = lu_null_space(s, dim, n2 - 1);
        const double diff = (first.x - second.x).cwiseAbs().maxCoeff();
        if (!(second.residual < opts.residual_tol) || !(diff <= 1e-8))
            throw NonUniqueSteadyStateError("steady state is not unique (pivot-row solves differ by " +
                                            std::to_string(diff) + ")");
        // The cross-solve misses degeneracies whose representatives coincide
        // under both pivot choices (decoupled sectors with exactly sparse
        // generators), so also require the kernel to be one-dimensional.
        const auto kernel_dim = Eigen::FullPivLU<Mat>(s).dimensionOfKernel();
        if (kernel_dim != 1)
            throw NonUniqueSteadyStateError("generator kernel dimension " +
                                            std::to_string(kernel_dim) +
                                            "; steady state is not unique");
    }

    Mat rho = unvectorize(first.x, dim);
    hermitize(rho);
    DensityMatrix out{std::move(rho)};
    const double resid = l.apply(out.entries).cwiseAbs().maxCoeff();
    if (!(resid < opts.residual_tol))
        throw NonUniqueSteadyStateError("hermitized steady state residual " + std::to_string(resid));
    return out;
}

namespace {

// Reduced-rank extrapolation over a window of snapshots: finds the affine
// combination of states that minimizes the successive-difference residual.
// Used only as an accelerant; the caller always verifies the generator
// residual before accepting the result.
Mat rre_extrapolate(const std::deque<Vec>& snaps, int dim) {
    const int m = static_cast<int>(snaps.size()) - 1;
    const Eigen::Index n = snaps.front().size();
    Mat u(n, m);
    for (int k = 0; k < m; ++k) u.col(k) = snaps[k + 1] - snaps[k];
    Mat g = u.adjoint() * u;
    const double ridge = 1e-13 * std::max(1e-300, g.real().trace() / m);
    g += ridge * Mat::Identity(m, m);
    Vec y = g.ldlt().solve(Vec::Ones(m));
    const cplx denom = y.sum();
    if (std::abs(denom) < 1e-300) return unvectorize(snaps.back(), dim);
    Vec a = y / denom;
    Vec x = Vec::Zero(n);
    for (int k = 0; k < m; ++k) x += a[k] * snaps[k + 1];
    return unvectorize(x, dim);
}

} // namespace

DensityMatrix steady_state_evolution(const Liouvillian& l, const SteadyOptions& opts) {
    const int dim = l.dim();
    double dt = opts.dt > 0 ? opts.dt : 2.5 / l.stiffness_scale();

    Mat rho = DensityMatrix::ground(dim).entries;
    Rk4Stepper stepper(l);
    auto advance = [&](double span) {
        const long n = std::max(1L, static_cast<long>(std::ceil(span / dt - 1e-12)));
        const double h = span / static_cast<double>(n);
        for (long i = 0; i < n; ++i) stepper.step(rho, h);
    };

    auto residual_of = [&](const Mat& m) { return l.apply(m).cwiseAbs().maxCoeff(); };

    advance(opts.transient_time);
    double t = opts.transient_time;

    std::deque<Vec> snaps;
    double best_resid = std::numeric_limits<double>::infinity();
    while (t < opts.max_time) {
        advance(opts.snapshot_spacing);
        t += opts.snapshot_spacing;
        hermitize(rho);
        if (!rho.allFinite())
            throw NumericalInstabilityError("evolution diverged at t = " + std::to_string(t));

        const double resid = residual_of(rho);
        best_resid = std::min(best_resid, resid);
        if (resid < opts.residual_tol) return DensityMatrix{rho};

        snaps.push_back(vectorize(rho));
        if (static_cast<int>(snaps.size()) > opts.snapshots + 1) snaps.pop_front();
        if (static_cast<int>(snaps.size()) == opts.snapshots + 1) {
            Mat cand = rre_extrapolate(snaps, dim);
            hermitize(cand);
            const double cand_resid = residual_of(cand);
            if (cand_resid < opts.residual_tol) {
                validate_density_matrix(DensityMatrix{cand}, 1e-9, 1e-9, 1e-8, false);
                return DensityMatrix{cand};
            }
            best_resid = std::min(best_resid, cand_resid);
        }
    }
    throw NumericalInstabilityError("steady state not reached by t = " +
                                    std::to_string(opts.max_time) + " (best residual " +
                                    std::to_string(best_resid) + ")");
}

DensityMatrix steady_state(const Liouvillian& l, const SteadyOptions& opts) {
    const int dim = l.dim();
    if (dim <= opts.lu_dim_max && dim * dim <= opts.superop_cap) return steady_state_lu(l, opts);
    return steady_state_evolution(l, opts);
}

AffineSteadySolver::AffineSteadySolver(const CompositeSpace& space, const DriveParams& drive_base,
                                       const DissipatorSpec& diss, double residual_tol)
    : residual_tol_(residual_tol) {
    if (space.site_count() != 2 || space.site(0).role != Role::target ||
        space.site(1).role != Role::control)
        throw ConfigError("affine solver expects the [target, control] two-site layout");
    dim_ = space.total_dim();

    DriveParams d0 = drive_base;
    d0.delta_c = 0.0;
    InteractionSpec no_pairs;
    no_pairs.pair_overrides[{0, 1}] = 0.0;
    Liouvillian l0(space, build_hamiltonian(space, d0, no_pairs), diss);
    s0_ = assemble_superoperator(l0, dim_ * dim_);

    const Mat d_op = embed_operator(space, 1, local_sigma(space.site(1).level_count, 3, 3)).entries;
    const Mat pa = embed_operator(space, 0, local_sigma(3, 3, 3)).entries;
    const Mat v_op =
        (pa.diagonal().cwiseProduct(d_op.diagonal())).asDiagonal().toDenseMatrix();
    sd_ = hamiltonian_superop(d_op);
    sv_ = hamiltonian_superop(v_op);
}

DensityMatrix AffineSteadySolver::solve(double delta_c, double v_ab) const {
    const int n2 = dim_ * dim_;
    Mat s = s0_ + delta_c * sd_ + v_ab * sv_;
    LuSolveResult r = lu_null_space(s, dim_, 0);
    if (!(r.residual < residual_tol_)) {
        r = lu_null_space(s, dim_, n2 / 2);
        if (!(r.residual < residual_tol_))
            throw NonUniqueSteadyStateError("cell steady-state residual " +
                                            std::to_string(r.residual));
    }
    Mat rho = unvectorize(r.x, dim_);
    hermitize(rho);
    return DensityMatrix{std::move(rho)};
}

} // namespace fit
