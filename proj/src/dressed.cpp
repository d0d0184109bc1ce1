#include "fit/dressed.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace fit {

Mat dressed_hamiltonian(double omega, double omega_c, double delta_c, double v_ab) {
    Mat h = Mat::Zero(4, 4);
    const double oc = -0.5 * omega_c;
    const double om = -0.5 * omega;
    // basis: 0 = |2A1B>, 1 = |2A3B>, 2 = |3A1B>, 3 = |3A3B>
    h(0, 1) = oc;
    h(1, 0) = oc;
    h(2, 3) = oc;
    h(3, 2) = oc;
    h(0, 2) = om;
    h(2, 0) = om;
    h(1, 3) = om;
    h(3, 1) = om;
    h(1, 1) = delta_c;
    h(3, 3) = delta_c + v_ab;
    return h;
}

EigResult eigendecompose_hermitian(const Mat& m) {
    if (m.rows() != m.cols()) throw DimensionError("eigendecomposition needs a square matrix");
    const double herm_err = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (herm_err >= 1e-10)
        throw HermiticityError("matrix is not hermitian (max deviation " +
                               std::to_string(herm_err) + ")");
    Eigen::SelfAdjointEigenSolver<Mat> solver(0.5 * (m + m.adjoint()));
    if (solver.info() != Eigen::Success)
        throw NumericalInstabilityError("hermitian eigensolver failed to converge");

    RVec vals = solver.eigenvalues();
    Mat vecs = solver.eigenvectors();
    const int n = static_cast<int>(vals.size());

    // Deterministic ordering: ascending eigenvalues; within near-degenerate
    // clusters order by the row index of the largest |component|.
    const double scale = std::max(1.0, vals.cwiseAbs().maxCoeff());
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    auto peak_row = [&](int col) {
        int r = 0;
        vecs.col(col).cwiseAbs().maxCoeff(&r);
        return r;
    };
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (std::abs(vals[a] - vals[b]) > 1e-9 * scale) return vals[a] < vals[b];
        return peak_row(a) < peak_row(b);
    });

    EigResult out;
    out.eigenvalues.resize(n);
    out.eigenvectors.resize(n, n);
    for (int i = 0; i < n; ++i) {
        out.eigenvalues[i] = vals[order[i]];
        Vec v = vecs.col(order[i]);
        int r = 0;
        v.cwiseAbs().maxCoeff(&r);
        const cplx pivot = v[r];
        if (std::abs(pivot) > 0.0) v *= std::conj(pivot) / std::abs(pivot);
        out.eigenvectors.col(i) = v;
    }
    return out;
}

DressedResult dressed_solve(double omega, double omega_c, double delta_c, double v_ab) {
    EigResult e = eigendecompose_hermitian(dressed_hamiltonian(omega, omega_c, delta_c, v_ab));
    return DressedResult{std::move(e.eigenvalues), std::move(e.eigenvectors)};
}

std::pair<double, double> resonance_detunings(double omega, double omega_c, double v_ab) {
    if (omega == 0.0) throw DivisionByZeroError("resonance detunings need omega != 0");
    const double t = (omega * omega - omega_c * omega_c) / omega;
    const double disc = std::sqrt(v_ab * v_ab + t * t);
    return {0.5 * (-v_ab + disc), 0.5 * (-v_ab - disc)};
}

std::pair<double, double> resonance_detunings_numeric(double omega, double omega_c, double v_ab) {
    if (omega == 0.0) throw DivisionByZeroError("resonance detunings need omega != 0");
    auto det = [&](double dc) {
        return dressed_hamiltonian(omega, omega_c, dc, v_ab).determinant().real();
    };
    const double span = std::abs(v_ab) + (omega * omega + omega_c * omega_c) / std::abs(omega) + 1.0;
    const double lo = -span - std::abs(v_ab), hi = span;
    const int n = 4000;
    std::vector<double> roots;
    double prev_x = lo, prev_f = det(lo);
    for (int i = 1; i <= n; ++i) {
        const double x = lo + (hi - lo) * i / n;
        const double f = det(x);
        if (prev_f == 0.0) roots.push_back(prev_x);
        else if (prev_f * f < 0.0) {
            double a = prev_x, b = x, fa = prev_f;
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (a + b), fm = det(mid);
                if (fa * fm <= 0.0) b = mid;
                else { a = mid; fa = fm; }
            }
            roots.push_back(0.5 * (a + b));
        }
        prev_x = x;
        prev_f = f;
    }
    if (roots.size() < 2)
        throw NumericalInstabilityError("expected two determinant roots, found " +
                                        std::to_string(roots.size()));
    return {roots.back(), roots.front()};
}

double energy_gap(double omega, double omega_c, double v_ab) {
    auto [plus, minus] = resonance_detunings(omega, omega_c, v_ab);
    return plus - minus;
}

std::pair<Vec, Vec> bell_states() {
    const double r = 1.0 / std::sqrt(2.0);
    Vec psi_e = Vec::Zero(4), psi_f = Vec::Zero(4);
    psi_e[2] = r;   // |3A1B>
    psi_e[1] = -r;  // |2A3B>
    psi_f[3] = r;   // |3A3B>
    psi_f[0] = -r;  // |2A1B>
    return {psi_e, psi_f};
}

} // namespace fit
