#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "fit/delocalize.hpp"
#include "fit/dressed.hpp"
#include "fit/lindblad.hpp"
#include "fit/observables.hpp"
#include "fit/rng.hpp"
#include "fit/propagation.hpp"
#include "fit/runners.hpp"
#include "fit/types.hpp"

namespace fit::runners {

namespace {

struct Check {
    std::string name;
    bool pass;
    bool documented; // known physics deviation, reported but not fatal
    std::string detail;
};

void add(std::vector<Check>& checks, std::string name, bool pass, std::string detail,
         bool documented = false) {
    checks.push_back({std::move(name), pass, documented, std::move(detail)});
}

CompositeSpace fig_space() {
    AtomSite target;
    target.level_count = 3;
    target.role = Role::target;
    AtomSite control;
    control.level_count = 2;
    control.role = Role::control;
    return CompositeSpace({target, control});
}

DriveParams fig2_drive(double delta_c) {
    DriveParams d;
    d.omega_p = 0.5;
    d.omega = 5.0;
    d.omega_c = 5.0;
    d.delta_c = delta_c;
    return d;
}

DissipatorSpec fig2_diss() {
    DissipatorSpec s;
    s.decays = {{0, 2, 1, 1.0}, {0, 3, 2, 1e-3}, {1, 3, 1, 1.0}};
    return s;
}

Mat random_density(int dim, RngStream& rng) {
    Mat a(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) a(i, j) = cplx(rng.uniform() - 0.5, rng.uniform() - 0.5);
    Mat rho = a * a.adjoint();
    rho /= rho.trace();
    return rho;
}

} // namespace

int run_validate(const CommonArgs&) {
    std::vector<Check> checks;
    RngStream rng(12345);

    { // operator embedding is an algebra homomorphism
        const CompositeSpace space = fig_space();
        Operator a = local_sigma(3, 1, 3);
        Operator b = local_sigma(3, 3, 2);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                a.entries(i, j) += cplx(rng.uniform(), rng.uniform());
                b.entries(i, j) += cplx(rng.uniform(), rng.uniform());
            }
        Operator ab{3, a.entries * b.entries};
        const Mat lhs = embed_operator(space, 0, a).entries * embed_operator(space, 0, b).entries;
        const Mat rhs = embed_operator(space, 0, ab).entries;
        const double err = (lhs - rhs).cwiseAbs().maxCoeff();
        add(checks, "embedding homomorphism", err < 1e-12, "max deviation " + std::to_string(err));
    }

    { // Hamiltonian hermiticity and site-order invariance of its spectrum
        const CompositeSpace fwd = fig_space();
        AtomSite target;
        target.level_count = 3;
        target.role = Role::target;
        AtomSite control;
        control.level_count = 2;
        control.role = Role::control;
        const CompositeSpace rev({control, target});
        InteractionSpec inter;
        inter.pair_overrides[{0, 1}] = 15.0;
        const Mat h1 = build_hamiltonian(fwd, fig2_drive(-7.0), inter).entries;
        const Mat h2 = build_hamiltonian(rev, fig2_drive(-7.0), inter).entries;
        const double herm = (h1 - h1.adjoint()).cwiseAbs().maxCoeff();
        Eigen::VectorXd e1 = Eigen::SelfAdjointEigenSolver<Mat>(h1).eigenvalues();
        Eigen::VectorXd e2 = Eigen::SelfAdjointEigenSolver<Mat>(h2).eigenvalues();
        const double gap = (e1 - e2).cwiseAbs().maxCoeff();
        add(checks, "hamiltonian hermitian, site-order invariant", herm < 1e-12 && gap < 1e-10,
            "hermiticity " + std::to_string(herm) + ", spectrum gap " + std::to_string(gap));
    }

    { // pair potential magnitude decreases monotonically with separation
        const double c6 = -7.0386e5;
        bool mono = true;
        double prev = std::abs(pair_potential(0.0, 6.0, c6));
        for (double dz = 1.0; dz <= 40.0; dz += 1.0) {
            const double cur = std::abs(pair_potential(dz, 6.0, c6));
            if (cur >= prev) mono = false;
            prev = cur;
        }
        add(checks, "pair potential monotone decay", mono && pair_potential(0.0, 6.0, c6) > 0,
            "attractive c6 gives positive shift");
    }

    { // assembled superoperator matches the matrix-free action
        const CompositeSpace space = fig_space();
        InteractionSpec inter;
        inter.pair_overrides[{0, 1}] = 15.0;
        Liouvillian l(space, build_hamiltonian(space, fig2_drive(-3.0), inter), fig2_diss());
        const Mat s = assemble_superoperator(l);
        const Mat rho = random_density(l.dim(), rng);
        const Eigen::Map<const Vec> v(rho.data(), rho.size());
        Vec lhs = s * v;
        const Mat out = l.apply(rho);
        const Eigen::Map<const Vec> rhs(out.data(), out.size());
        const double err = (lhs - rhs).cwiseAbs().maxCoeff();
        add(checks, "superoperator consistency", err < 1e-12, "max deviation " + std::to_string(err));
    }

    { // coherent Rabi oscillation reproduced by the integrator
        AtomSite site;
        site.level_count = 2;
        site.role = Role::control;
        const CompositeSpace space({site});
        const double omega = 1.0;
        Operator h{2, Mat::Zero(2, 2)};
        h.entries(0, 1) = -omega / 2.0;
        h.entries(1, 0) = -omega / 2.0;
        Liouvillian l(space, h, DissipatorSpec{});
        const double t = 3.7;
        const Trajectory traj = evolve(l, DensityMatrix::ground(2), t, 1e-3);
        const double got = traj.states.back().entries(1, 1).real();
        const double want = std::pow(std::sin(omega * t / 2.0), 2);
        add(checks, "rabi oscillation accuracy", std::abs(got - want) < 1e-6,
            "pop err " + std::to_string(std::abs(got - want)));
    }

    { // spontaneous-decay Liouvillian has the textbook eigenvalue set
        AtomSite site;
        site.level_count = 2;
        site.role = Role::control;
        const CompositeSpace space({site});
        DissipatorSpec diss;
        diss.decays = {{0, 3, 1, 1.0}};
        Liouvillian l(space, Operator{2, Mat::Zero(2, 2)}, diss);
        Eigen::ComplexEigenSolver<Mat> eig(assemble_superoperator(l));
        std::vector<double> re;
        for (int i = 0; i < 4; ++i) re.push_back(eig.eigenvalues()[i].real());
        std::sort(re.begin(), re.end());
        const double err = std::abs(re[0] + 1.0) + std::abs(re[1] + 0.5) +
                           std::abs(re[2] + 0.5) + std::abs(re[3]);
        add(checks, "decay superoperator spectrum", err < 1e-10,
            "deviation from {-G,-G/2,-G/2,0}: " + std::to_string(err));
    }

    { // without drive the steady state is the ground projector
        const CompositeSpace space = fig_space();
        DriveParams drive;
        drive.omega_p = 0.0;
        drive.omega = 0.0;
        drive.omega_c = 0.0;
        Liouvillian l(space, build_hamiltonian(space, drive, InteractionSpec{}), fig2_diss());
        const DensityMatrix rho = steady_state(l);
        Mat want = Mat::Zero(l.dim(), l.dim());
        want(0, 0) = 1.0;
        const double err = (rho.entries - want).cwiseAbs().maxCoeff();
        add(checks, "no-drive steady state is ground", err < 1e-8,
            "max deviation " + std::to_string(err));
    }

    double dual_err = -1.0;
    { // direct and evolution steady-state routes agree
        const CompositeSpace space = fig_space();
        InteractionSpec inter;
        inter.pair_overrides[{0, 1}] = 15.0;
        Liouvillian l(space, build_hamiltonian(space, fig2_drive(-15.0), inter), fig2_diss());
        SteadyOptions opts;
        const DensityMatrix a = steady_state_lu(l, opts);
        const DensityMatrix b = steady_state_evolution(l, opts);
        dual_err = (a.entries - b.entries).cwiseAbs().maxCoeff();
        add(checks, "dual-route steady state agreement", dual_err < 1e-6,
            "max deviation " + std::to_string(dual_err));

        // completeness: pure-state fidelities against a basis sum to the trace
        double sum = 0.0;
        for (int k = 0; k < l.dim(); ++k) {
            Vec e = Vec::Zero(l.dim());
            e[k] = 1.0;
            sum += fidelity_pure(a, e);
        }
        add(checks, "fidelity completeness", std::abs(sum - 1.0) < 1e-10,
            "basis fidelity sum " + std::to_string(sum));
    }

    { // analytic resonance detunings are determinant roots; gap identity holds
        double worst_det = 0.0, worst_gap = 0.0;
        bool mono = true;
        for (int k = 0; k < 100; ++k) {
            const double omega = 0.5 + 9.5 * rng.uniform();
            const double oc = 0.5 + 9.5 * rng.uniform();
            const double v = 2.0 + 28.0 * rng.uniform();
            const auto [dcp, dcm] = resonance_detunings(omega, oc, v);
            worst_det = std::max(worst_det,
                                 std::abs(dressed_hamiltonian(omega, oc, dcp, v).determinant()));
            worst_det = std::max(worst_det,
                                 std::abs(dressed_hamiltonian(omega, oc, dcm, v).determinant()));
            worst_gap = std::max(worst_gap, std::abs((dcp - dcm) - energy_gap(omega, oc, v)));
        }
        double prev = energy_gap(3.0, 5.0, 2.0);
        for (double v = 4.0; v <= 30.0; v += 2.0) {
            const double cur = energy_gap(3.0, 5.0, v);
            if (cur <= prev) mono = false;
            prev = cur;
        }
        add(checks, "resonance determinant roots", worst_det < 1e-8,
            "max |det| " + std::to_string(worst_det));
        add(checks, "gap identity", worst_gap < 1e-12, "max deviation " + std::to_string(worst_gap));
        add(checks, "gap monotone in V", mono, "energy gap strictly increasing");
    }

    { // resonant dressed eigenstates are the Bell-type superpositions
        const double omega = 3.0, oc = 3.0, v = 15.0;
        const auto [dcp, dcm] = resonance_detunings(omega, oc, v);
        const auto [psi_e, psi_f] = bell_states();
        auto best_overlap = [](const DressedResult& d, const Vec& psi) {
            double best = 0.0;
            for (int k = 0; k < 4; ++k)
                best = std::max(best, std::norm(psi.dot(d.eigenvectors.col(k))));
            return best;
        };
        const double oe = best_overlap(dressed_solve(omega, oc, dcp, v), psi_e);
        const double of = best_overlap(dressed_solve(omega, oc, dcm, v), psi_f);
        add(checks, "bell-state overlap at resonances", oe > 0.95 && of > 0.95,
            "blockade " + std::to_string(oe) + ", facilitation " + std::to_string(of));
    }

    { // Mandel Q: -1 for a number state, 0 for a Poisson-matched mixture
        const CompositeSpace space = fig_space();
        Mat pure = Mat::Zero(6, 6);
        pure(5, 5) = 1.0; // both atoms in the Rydberg level
        const double q_pure = mandel_q(space, DensityMatrix{pure});
        Mat mix = Mat::Zero(6, 6);
        mix(0, 0) = 0.68; // n = 0
        mix(4, 4) = 0.24; // n = 1
        mix(5, 5) = 0.08; // n = 2, chosen so variance equals mean
        const double q_mix = mandel_q(space, DensityMatrix{mix});
        add(checks, "mandel q reference values",
            std::abs(q_pure + 1.0) < 1e-12 && std::abs(q_mix) < 1e-12,
            "number state " + std::to_string(q_pure) + ", poisson mixture " + std::to_string(q_mix));
    }

    { // blockade suppression of the target Rydberg population (weak probe)
        const CompositeSpace space = fig_space();
        DriveParams drive = fig2_drive(0.0);
        drive.omega_p = 0.1;
        AffineSteadySolver solver(space, drive, fig2_diss());
        const Operator p33a = embed_operator(space, 0, local_sigma(3, 3, 3));
        bool ok = true;
        double worst = 0.0;
        for (double v : {10.0, 15.0, 20.0, 30.0}) {
            const double r33 = expectation(solver.solve(0.0, v), p33a).real();
            worst = std::max(worst, r33);
            if (r33 >= 0.02) ok = false;
        }
        add(checks, "blockade population suppression", ok,
            "max rho33_A " + std::to_string(worst) + " (threshold 0.02)");

        // passivity of the probe response across the sweep
        const Operator s12a = embed_operator(space, 0, local_sigma(3, 1, 2));
        bool passive = true;
        for (double dc = -30.0; dc <= 15.0 + 1e-9; dc += 45.0 / 40.0) {
            const double im = expectation(solver.solve(dc, 15.0), s12a).imag();
            if (im < -1e-12) passive = false;
        }
        add(checks, "probe response passive", passive, "Im rho21 >= 0 across sweep");
    }

    { // spectral peaks versus analytic resonances (known light-shift pull on
      // the facilitation peak at these drive strengths)
        const CompositeSpace space = fig_space();
        SpectrumConfig sc{space, fig2_drive(0.0), fig2_diss(), InteractionSpec{}, 0.05,
                          SteadyOptions{}};
        sc.interaction.pair_overrides[{0, 1}] = 15.0;
        const Spectrum s = coherence_spectrum(sc, default_delta_c_grid(15.0));
        const auto [dcp, dcm] = resonance_detunings(5.0, 5.0, 15.0);
        double worst = 0.0;
        for (const Peak& p : s.peaks)
            worst = std::max(worst,
                             std::min(std::abs(p.position - dcp), std::abs(p.position - dcm)));
        add(checks, "peak-resonance correspondence", worst < 0.5,
            "worst offset " + std::to_string(worst) + " Gamma", true);
    }

    { // offset sampler: component variance, 1D mode, determinism
        DelocalizationSpec spec;
        spec.sigma = 2.0;
        spec.c6 = -7.0386e5;
        RngStream draws = RngStream::for_trajectory(7, 0);
        double sum = 0.0, sum2 = 0.0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) {
            const auto r = sample_offset(spec, draws);
            sum += r[2];
            sum2 += r[2] * r[2];
        }
        const double var = sum2 / n - (sum / n) * (sum / n);
        const double want = spec.sigma * spec.sigma / 2.0;
        const bool var_ok = std::abs(var - want) / want < 0.02;

        DelocalizationSpec flat = spec;
        flat.sigma = 0.0;
        const auto z = sample_offset(flat, draws);
        const bool zero_ok = z[0] == 0.0 && z[1] == 0.0 && z[2] == 0.0;

        RngStream r1 = RngStream::for_trajectory(42, 3);
        RngStream r2 = RngStream::for_trajectory(42, 3);
        bool det_ok = true;
        for (int i = 0; i < 100; ++i) {
            const auto a = sample_offset(spec, r1);
            const auto b = sample_offset(spec, r2);
            if (a != b) det_ok = false;
        }
        add(checks, "offset sampler statistics", var_ok && zero_ok && det_ok,
            "var " + std::to_string(var) + " vs " + std::to_string(want) +
                ", zero/determinism " + (zero_ok && det_ok ? "ok" : "broken"));
    }

    { // detuning ramp asymptotes and midpoint
        RampSpec ramp;
        ramp.delta_c0 = 30.0;
        ramp.delta_cF = -15.0;
        ramp.z_q = 50.0;
        ramp.z_s = 5.0;
        const double lo = detuning_ramp(ramp.z_q - 30.0 * ramp.z_s, ramp);
        const double hi = detuning_ramp(ramp.z_q + 30.0 * ramp.z_s, ramp);
        const double mid = detuning_ramp(ramp.z_q + ramp.z_s, ramp); // tanh argument zero here
        const bool ok = std::abs(lo - ramp.delta_c0) < 1e-10 &&
                        std::abs(hi - ramp.delta_cF) < 1e-10 &&
                        std::abs(mid - 0.5 * (ramp.delta_c0 + ramp.delta_cF)) < 1e-12;
        add(checks, "detuning ramp asymptotes", ok, "plateaus and midpoint reproduced");
    }

    int failed = 0, documented = 0;
    for (const Check& c : checks) {
        const char* tag = c.pass ? "PASS" : (c.documented ? "FAIL (documented deviation)" : "FAIL");
        std::printf("%-42s %s  [%s]\n", c.name.c_str(), tag, c.detail.c_str());
        if (!c.pass) {
            if (c.documented)
                ++documented;
            else
                ++failed;
        }
    }
    std::printf("validate: %zu checks, %d failed, %d documented deviations\n", checks.size(),
                failed, documented);
    return failed == 0 ? 0 : 3;
}

} // namespace fit::runners
