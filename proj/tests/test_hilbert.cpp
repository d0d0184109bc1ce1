#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fit/dressed.hpp"
#include "fit/hilbert.hpp"
#include "support.hpp"

using namespace fit;
using fit::testing::pair_space;

namespace {

Mat pseudo_random(int n, unsigned seed) {
    Mat m(n, n);
    unsigned s = seed;
    auto next = [&s]() {
        s = s * 1664525u + 1013904223u;
        return static_cast<double>(s >> 8) / static_cast<double>(1u << 24) - 0.5;
    };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = cplx(next(), next());
    return m;
}

} // namespace

TEST_CASE("local_sigma builds matrix units from level labels") {
    const Operator s21 = local_sigma(3, 2, 1);
    CHECK(s21.dim == 3);
    CHECK(s21.entries(1, 0) == cplx(1.0, 0.0));
    CHECK(s21.entries.cwiseAbs().sum() == 1.0);

    // two-level control basis {|1>,|3>}: labels 1 and 3 address rows 0 and 1
    const Operator s31 = local_sigma(2, 3, 1);
    CHECK(s31.dim == 2);
    CHECK(s31.entries(1, 0) == cplx(1.0, 0.0));
    CHECK(s31.entries.cwiseAbs().sum() == 1.0);
    CHECK((local_sigma(2, 1, 3).entries - s31.entries.adjoint()).norm() == 0.0);

    CHECK_THROWS_AS((void)local_sigma(2, 2, 1), DimensionError);
    CHECK_THROWS_AS((void)local_sigma(3, 4, 1), DimensionError);
    CHECK_THROWS_AS((void)local_sigma(3, 1, 0), DimensionError);
}

TEST_CASE("composite space validates sites and indexes level labels") {
    const CompositeSpace space = pair_space();
    CHECK(space.site_count() == 2);
    CHECK(space.total_dim() == 6);
    CHECK(space.level_index(0, 1) == 0);
    CHECK(space.level_index(0, 2) == 1);
    CHECK(space.level_index(0, 3) == 2);
    CHECK(space.level_index(1, 1) == 0);
    CHECK(space.level_index(1, 3) == 1);
    CHECK_THROWS_AS((void)space.level_index(1, 2), DimensionError);

    CHECK_THROWS_AS(CompositeSpace({}), ConfigError);
    AtomSite bad;
    bad.level_count = 4;
    CHECK_THROWS_AS(CompositeSpace({bad}), ConfigError);
}

TEST_CASE("embed_operator is an algebra homomorphism") {
    AtomSite t3;
    AtomSite c2;
    c2.level_count = 2;
    c2.role = Role::control;
    const CompositeSpace space({t3, c2, t3});
    CHECK(space.total_dim() == 18);

    const Operator a(3, pseudo_random(3, 7));
    const Operator b(3, pseudo_random(3, 11));
    const Operator c(2, pseudo_random(2, 13));

    // same site: embedding commutes with the product
    const Mat lhs = embed_operator(space, 0, a).entries * embed_operator(space, 0, b).entries;
    const Mat rhs = embed_operator(space, 0, Operator(3, Mat(a.entries * b.entries))).entries;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);

    // distinct sites: embedded operators commute
    const Mat ea = embed_operator(space, 2, a).entries;
    const Mat ec = embed_operator(space, 1, c).entries;
    CHECK((ea * ec - ec * ea).cwiseAbs().maxCoeff() < 1e-12);

    // identity embeds to the identity
    const Mat id = embed_operator(space, 1, Operator(2, Mat(Mat::Identity(2, 2)))).entries;
    CHECK((id - Mat::Identity(18, 18)).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS((void)embed_operator(space, 3, a), DimensionError);
    CHECK_THROWS_AS((void)embed_operator(space, 1, a), DimensionError);
}

TEST_CASE("embedding matches the row-major index map (site 0 slowest)") {
    const CompositeSpace space = pair_space();
    // global index = i_target * 2 + i_control
    const Mat n_a = fit::testing::pair_op(space, 0, 3, 3).entries;
    const Mat n_b = fit::testing::pair_op(space, 1, 3, 3).entries;
    for (int g = 0; g < 6; ++g) {
        CHECK(n_a(g, g).real() == ((g / 2 == 2) ? 1.0 : 0.0));
        CHECK(n_b(g, g).real() == ((g % 2 == 1) ? 1.0 : 0.0));
    }
}

TEST_CASE("pair potential is -c6/r^6 with the axial offset in quadrature") {
    const double c6 = -7.0e5;
    CHECK(pair_potential(0.0, 6.0, c6) == doctest::Approx(-c6 / std::pow(6.0, 6)).epsilon(1e-15));
    CHECK(pair_potential(3.0, 4.0, c6) == doctest::Approx(-c6 / std::pow(25.0, 3)).epsilon(1e-15));
    // even in the offset, decaying away from the control
    CHECK(pair_potential(2.0, 6.0, c6) == pair_potential(-2.0, 6.0, c6));
    CHECK(pair_potential(0.0, 6.0, c6) > pair_potential(1.0, 6.0, c6));
    CHECK(pair_potential(1.0, 6.0, c6) > pair_potential(5.0, 6.0, c6));
    CHECK_THROWS_AS((void)pair_potential(0.0, 0.0, c6), SingularGeometryError);

    AtomSite a;
    AtomSite b;
    b.level_count = 2;
    b.role = Role::control;
    a.position = {1.0, 2.0, 3.0};
    b.position = {4.0, 6.0, 1.0};  // transverse distance 5, axial offset 2
    CHECK(pair_potential_from_positions(a, b, c6) ==
          doctest::Approx(pair_potential(2.0, 5.0, c6)).epsilon(1e-15));
}

TEST_CASE("printed dispersion coefficients give V near 15 Gamma") {
    // C6 = 2.68e4 GHz um^6 at d = 6 um and C6 = 5.77e5 GHz um^6 at d = 10 um
    const double v6 = pair_potential(0.0, 6.0, -c6_from_ghz(2.68e4));
    const double v10 = pair_potential(0.0, 10.0, -c6_from_ghz(5.77e5));
    CHECK(std::abs(v6 - 15.086024) < 1e-5);
    CHECK(std::abs(v10 - 15.153862) < 1e-5);
    CHECK(std::abs(v6 - 15.0) / 15.0 < 0.02);
    CHECK(std::abs(v10 - 15.0) / 15.0 < 0.02);
}

TEST_CASE("hamiltonian reproduces the interaction-subspace block") {
    const CompositeSpace space = pair_space();
    DriveParams drive = fit::testing::drive_a(0.0, -3.0);
    const Operator h = build_hamiltonian(space, drive, fit::testing::v_override(15.0));
    CHECK((h.entries - h.entries.adjoint()).cwiseAbs().maxCoeff() == 0.0);

    // rows/cols {2,3,4,5} = {|2A1B>,|2A3B>,|3A1B>,|3A3B>}
    const Mat block = h.entries.block(2, 2, 4, 4);
    const Mat ref = dressed_hamiltonian(5.0, 5.0, -3.0, 15.0);
    CHECK((block - ref).cwiseAbs().maxCoeff() < 1e-15);

    drive.omega_p = 0.5;
    const Mat full = build_hamiltonian(space, drive, fit::testing::v_override(15.0)).entries;
    CHECK(full(0, 2) == cplx(-0.25, 0.0));  // -omega_p/2 on |1A1B> <-> |2A1B>
    CHECK(full(2, 4) == cplx(-2.5, 0.0));   // -omega/2   on |2A1B> <-> |3A1B>
    CHECK(full(0, 1) == cplx(-2.5, 0.0));   // -omega_c/2 on |1A1B> <-> |1A3B>
    CHECK(full(5, 5) == cplx(12.0, 0.0));   // delta_c + V on |3A3B>
    CHECK(full(4, 4) == cplx(0.0, 0.0));    // no detuning on the target alone
    CHECK(full(1, 1) == cplx(-3.0, 0.0));   // delta_c on |1A3B>
}

TEST_CASE("geometry fills pair interactions unless overridden") {
    AtomSite target;
    AtomSite control;
    control.level_count = 2;
    control.role = Role::control;
    control.position = {6.0, 0.0, 2.0};
    const CompositeSpace space({target, control});
    const DriveParams drive = fit::testing::drive_a(0.5, -1.0);

    InteractionSpec geom;
    geom.c6 = -7.0e5;
    const Mat h = build_hamiltonian(space, drive, geom).entries;
    const double v = pair_potential(2.0, 6.0, geom.c6);
    CHECK(std::abs(h(5, 5).real() - (-1.0 + v)) < 1e-12);

    InteractionSpec forced = geom;
    forced.pair_overrides[{0, 1}] = 7.0;
    CHECK(build_hamiltonian(space, drive, forced).entries(5, 5) == cplx(6.0, 0.0));

    // coincident sites only fail when the geometric route is actually used
    AtomSite on_top = control;
    on_top.position = {0.0, 0.0, 0.0};
    const CompositeSpace overlap({target, on_top});
    CHECK_THROWS_AS((void)build_hamiltonian(overlap, drive, geom), SingularGeometryError);
    CHECK_NOTHROW((void)build_hamiltonian(overlap, drive, forced));
}

TEST_CASE("two-photon control sites carry the ladder drive and detunings") {
    AtomSite target;
    AtomSite control;
    control.level_count = 3;
    control.role = Role::control;
    control.drive_scheme = DriveScheme::two_photon;
    const CompositeSpace space({target, control});
    CHECK(space.total_dim() == 9);

    DriveParams drive;
    drive.omega_p = 0.8;
    drive.omega = 4.0;
    drive.delta_c = -15.0;
    drive.two_photon = TwoPhotonParams{0.8, 4.0, 10.0};
    const Mat h = build_hamiltonian(space, drive, fit::testing::v_override(15.0)).entries;
    CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(h(0, 1) == cplx(-0.4, 0.0));   // -omega_c1/2 on |1B> <-> |2B>
    CHECK(h(1, 2) == cplx(-2.0, 0.0));   // -omega_c2/2 on |2B> <-> |3B>
    CHECK(h(1, 1) == cplx(10.0, 0.0));   // intermediate detuning on |2B>
    CHECK(h(2, 2) == cplx(-15.0, 0.0));  // delta_c on |3B>
    CHECK(h(8, 8) == cplx(0.0, 0.0));    // |3A3B>: delta_c + V = 0

    DriveParams missing = drive;
    missing.two_photon.reset();
    CHECK_THROWS_AS((void)build_hamiltonian(space, missing, fit::testing::v_override(15.0)),
                    ConfigError);
    DriveParams zero_delta = drive;
    zero_delta.two_photon->delta = 0.0;
    CHECK_THROWS_AS((void)build_hamiltonian(space, zero_delta, fit::testing::v_override(15.0)),
                    ConfigError);
}

TEST_CASE("drive scheme and level-count mismatches are rejected") {
    AtomSite t2;
    t2.level_count = 2;
    const CompositeSpace bad_target({t2});
    CHECK_THROWS_AS((void)build_hamiltonian(bad_target, fit::testing::drive_a(), {}), ConfigError);

    AtomSite c3;
    c3.level_count = 3;
    c3.role = Role::control;  // one-photon scheme needs the 2-level basis
    AtomSite target;
    const CompositeSpace bad_control({target, c3});
    CHECK_THROWS_AS(
        (void)build_hamiltonian(bad_control, fit::testing::drive_a(), fit::testing::v_override(1.0)),
        ConfigError);
}
