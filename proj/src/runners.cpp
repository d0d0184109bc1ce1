#include "fit/runners.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "fit/csv.hpp"
#include "fit/delocalize.hpp"
#include "fit/dressed.hpp"
#include "fit/manifest.hpp"
#include "fit/observables.hpp"
#include "fit/parallel.hpp"
#include "fit/propagation.hpp"
#include "fit/types.hpp"

namespace fit::runners {

using nlohmann::json;

namespace {

constexpr const char* kUnitsLine = "units: rates and detunings in Gamma; lengths in um";

// Reads config fields with defaults while recording every value actually
// used, so the manifest always holds the fully resolved configuration.
class ConfigReader {
  public:
    explicit ConfigReader(const json& src) : src_(src) {
        if (!src.is_object()) throw ConfigError("config root must be a table");
    }

    bool has(const std::string& sec, const std::string& key) const {
        return src_.contains(sec) && src_[sec].is_object() && src_[sec].contains(key);
    }

    double num(const std::string& sec, const std::string& key, double dflt) {
        if (!has(sec, key)) {
            resolved_[sec][key] = dflt;
            return dflt;
        }
        const json& v = src_[sec][key];
        if (!v.is_number()) throw ConfigError("[" + sec + "]." + key + " must be a number");
        resolved_[sec][key] = v;
        return v.get<double>();
    }

    long long integer(const std::string& sec, const std::string& key, long long dflt) {
        if (!has(sec, key)) {
            resolved_[sec][key] = dflt;
            return dflt;
        }
        const json& v = src_[sec][key];
        if (!v.is_number_integer())
            throw ConfigError("[" + sec + "]." + key + " must be an integer");
        resolved_[sec][key] = v;
        return v.get<long long>();
    }

    bool flag(const std::string& sec, const std::string& key, bool dflt) {
        if (!has(sec, key)) {
            resolved_[sec][key] = dflt;
            return dflt;
        }
        const json& v = src_[sec][key];
        if (!v.is_boolean()) throw ConfigError("[" + sec + "]." + key + " must be a boolean");
        resolved_[sec][key] = v;
        return v.get<bool>();
    }

    std::vector<double> list(const std::string& sec, const std::string& key,
                             std::vector<double> dflt) {
        if (!has(sec, key)) {
            resolved_[sec][key] = dflt;
            return dflt;
        }
        const json& v = src_[sec][key];
        if (!v.is_array()) throw ConfigError("[" + sec + "]." + key + " must be an array");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number())
                throw ConfigError("[" + sec + "]." + key + " must contain only numbers");
            out.push_back(e.get<double>());
        }
        resolved_[sec][key] = out;
        return out;
    }

    const json& resolved() const { return resolved_; }

  private:
    const json& src_;
    json resolved_;
};

struct PairSetup {
    DriveParams drive;
    DissipatorSpec diss;
    bool two_photon = false;
};

PairSetup pair_setup(ConfigReader& cfg) {
    PairSetup s;
    s.drive.omega_p = cfg.num("drive", "omega_p", 0.5);
    s.drive.omega = cfg.num("drive", "omega", 5.0);
    s.drive.omega_c = cfg.num("drive", "omega_c", 5.0);
    s.drive.delta_c = cfg.num("drive", "delta_c", 0.0);
    s.two_photon = cfg.has("two_photon", "omega_c1") || cfg.has("two_photon", "omega_c2");
    if (s.two_photon) {
        TwoPhotonParams tp;
        tp.omega_c1 = cfg.num("two_photon", "omega_c1", 0.8);
        tp.omega_c2 = cfg.num("two_photon", "omega_c2", 4.0);
        tp.delta = cfg.num("two_photon", "delta", 10.0);
        s.drive.two_photon = tp;
    }

    const double g12a = cfg.num("rates", "gamma_12A", 1.0);
    const double g23a = cfg.num("rates", "gamma_23A", 1e-3);
    s.diss.decays.push_back({0, 2, 1, g12a});
    s.diss.decays.push_back({0, 3, 2, g23a});
    if (s.two_photon) {
        s.diss.decays.push_back({1, 2, 1, cfg.num("rates", "gamma_12B", 1.0)});
        s.diss.decays.push_back({1, 3, 2, cfg.num("rates", "gamma_23B", 1e-3)});
    } else {
        s.diss.decays.push_back({1, 3, 1, cfg.num("rates", "gamma_13B", 1.0)});
    }
    const double deph_a = cfg.num("rates", "dephasing_3A", 0.0);
    const double deph_b = cfg.num("rates", "dephasing_3B", 0.0);
    if (deph_a > 0) s.diss.dephasings.push_back({0, 3, deph_a});
    if (deph_b > 0) s.diss.dephasings.push_back({1, 3, deph_b});
    return s;
}

CompositeSpace pair_space(const PairSetup& s) {
    AtomSite target;
    target.level_count = 3;
    target.role = Role::target;
    AtomSite control;
    control.role = Role::control;
    control.level_count = s.two_photon ? 3 : 2;
    control.drive_scheme = s.two_photon ? DriveScheme::two_photon : DriveScheme::one_photon;
    return CompositeSpace({target, control});
}

// Signed c6 in Gamma um^6 (attractive convention: published positive
// GHz um^6 magnitudes map to negative c6 so the level shift is positive).
double signed_c6(ConfigReader& cfg, const std::string& sec, double dflt_ghz) {
    if (cfg.has(sec, "c6")) return cfg.num(sec, "c6", 0.0);
    return -c6_from_ghz(cfg.num(sec, "c6_ghz", dflt_ghz));
}

std::vector<double> linspace(double lo, double hi, int n) {
    if (n < 2) throw ConfigError("grid needs at least 2 points");
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
    return g;
}

std::vector<double> sweep_grid(ConfigReader& cfg, const std::string& sec, double v_ab) {
    const int points = static_cast<int>(cfg.integer(sec, "points", 401));
    const double lo = cfg.num(sec, "min", v_ab > 0 ? -2.0 * v_ab : -5.0);
    const double hi = cfg.num(sec, "max", v_ab > 0 ? v_ab : 5.0);
    return linspace(lo, hi, points);
}

SteadyOptions steady_from(ConfigReader& cfg) {
    SteadyOptions opts;
    opts.lu_dim_max = static_cast<int>(cfg.integer("steady", "lu_dim_max", opts.lu_dim_max));
    opts.superop_cap = static_cast<int>(cfg.integer("steady", "superop_cap", opts.superop_cap));
    opts.residual_tol = cfg.num("steady", "residual_tol", opts.residual_tol);
    opts.uniqueness_check = cfg.flag("steady", "uniqueness_check", opts.uniqueness_check);
    opts.max_time = cfg.num("steady", "max_time", opts.max_time);
    return opts;
}

std::vector<std::string> table_comments(const std::string& schema, const RunManifest& m,
                                        std::vector<std::string> extra = {}) {
    std::vector<std::string> c{std::string("schema=") + schema + "/v" + kCsvSchemaVersion,
                               manifest_comment(m), kUnitsLine};
    for (auto& e : extra) c.push_back(std::move(e));
    return c;
}

std::string out_path(const CommonArgs& args, const std::string& name) {
    std::filesystem::create_directories(args.out_dir);
    return (std::filesystem::path(args.out_dir) / name).string();
}

struct WallTimer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

CsvTable spectrum_table(const Spectrum& s) {
    CsvTable t;
    t.column_names = {"delta_c", "im_rho21", "re_rho21", "rho33_A",    "rho33_B",
                      "o_ab",    "mandel_q", "fidelity_B", "fidelity_F"};
    t.columns = {s.delta_c, s.im_rho21, s.re_rho21, s.rho33_A,    s.rho33_B,
                 s.o_ab,    s.mandel_q, s.fidelity_B, s.fidelity_F};
    return t;
}

CsvTable propagation_table(const PropagationResult& r) {
    CsvTable t;
    t.column_names = {"z", "i_s", "rho33_A", "rho33_B", "re_rho31_B", "delta_c"};
    t.columns = {r.z, r.i_s, r.rho33_A, r.rho33_B, r.re_rho31_B, r.delta_c};
    return t;
}

std::string num_tag(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    std::string s = buf;
    for (char& c : s)
        if (c == '.' || c == '-') c = c == '.' ? 'p' : 'm';
    return s;
}

} // namespace

int run_spectrum(const json& cfg_json, const CommonArgs& args) {
    WallTimer timer;
    set_default_threads(args.threads);
    ConfigReader cfg(cfg_json);
    PairSetup setup = pair_setup(cfg);
    const CompositeSpace space = pair_space(setup);

    const double v_ab = cfg.num("interaction", "v_ab", 15.0);
    std::vector<double> v_list = cfg.list("sweep", "v_list", {v_ab});
    const double prominence = cfg.num("sweep", "prominence", 0.05);
    const std::vector<double> grid = sweep_grid(cfg, "sweep", v_ab);

    RunManifest manifest;
    manifest.command = "spectrum";
    manifest.seed = args.seed_set ? args.seed : 0;
    manifest.threads = args.threads;
    manifest.config = cfg.resolved();

    CsvTable peaks;
    peaks.column_names = {"v_ab", "position", "height", "prominence"};
    peaks.columns.assign(4, {});

    for (std::size_t k = 0; k < v_list.size(); ++k) {
        SpectrumConfig sc{space, setup.drive, setup.diss, InteractionSpec{}, prominence,
                          steady_from(cfg)};
        sc.interaction.pair_overrides[{0, 1}] = v_list[k];
        const Spectrum s = coherence_spectrum(sc, grid);

        CsvTable t = spectrum_table(s);
        t.comments = table_comments(
            "spectrum", manifest,
            {"v_ab=" + format_g17(v_list[k]), "peak_count=" + std::to_string(s.peaks.size())});
        const std::string name =
            v_list.size() == 1 ? "spectrum.csv" : "spectrum_v" + num_tag(v_list[k]) + ".csv";
        write_csv(out_path(args, name), t);

        for (const Peak& p : s.peaks) {
            peaks.columns[0].push_back(v_list[k]);
            peaks.columns[1].push_back(p.position);
            peaks.columns[2].push_back(p.height);
            peaks.columns[3].push_back(p.prominence);
        }
        std::printf("spectrum: v_ab=%g -> %zu peaks\n", v_list[k], s.peaks.size());
    }
    peaks.comments = table_comments("peaks", manifest);
    write_csv(out_path(args, "peaks.csv"), peaks);

    manifest.config = cfg.resolved();
    manifest.wall_seconds = timer.seconds();
    write_manifest(out_path(args, "run_manifest.json"), manifest);
    return 0;
}

int run_dressed(const json& cfg_json, const CommonArgs& args) {
    WallTimer timer;
    set_default_threads(args.threads);
    ConfigReader cfg(cfg_json);

    const double omega = cfg.num("dressed", "omega", 3.0);
    const double omega_p = cfg.num("dressed", "omega_p", 0.1);
    const double g13b = cfg.num("rates", "gamma_13B", 0.1);
    const std::vector<double> oc_list = cfg.list("dressed", "omega_c_list", {3.0, 5.0});
    std::vector<double> v_default;
    for (double v = 2.0; v <= 30.0; v += 2.0) v_default.push_back(v);
    const std::vector<double> v_list = cfg.list("dressed", "v_list", v_default);
    const int points = static_cast<int>(cfg.integer("dressed", "points", 401));
    const double eig_v = cfg.num("dressed", "eigencurve_v", 15.0);

    RunManifest manifest;
    manifest.command = "dressed";
    manifest.threads = args.threads;
    manifest.config = cfg.resolved();

    PairSetup setup;
    setup.drive.omega_p = omega_p;
    setup.drive.omega = omega;
    setup.diss.decays = {{0, 2, 1, cfg.num("rates", "gamma_12A", 1.0)},
                         {0, 3, 2, cfg.num("rates", "gamma_23A", 1e-3)},
                         {1, 3, 1, g13b}};
    const CompositeSpace space = pair_space(setup);

    CsvTable t;
    t.column_names = {"v_ab",          "omega_c",        "dc_plus_analytic", "dc_minus_analytic",
                      "dc_plus_numeric", "dc_minus_numeric", "delta_e_analytic", "delta_e_peaks",
                      "delta_e_reference"};
    t.columns.assign(9, {});

    for (double oc : oc_list) {
        for (double v : v_list) {
            const auto [dcp, dcm] = resonance_detunings(omega, oc, v);
            const auto [ndcp, ndcm] = resonance_detunings_numeric(omega, oc, v);

            DriveParams drive = setup.drive;
            drive.omega_c = oc;
            SpectrumConfig sc{space, drive, setup.diss, InteractionSpec{}, 0.05, SteadyOptions{}};
            sc.interaction.pair_overrides[{0, 1}] = v;
            const Spectrum s = coherence_spectrum(sc, linspace(-2.0 * v, v, points));
            double de_peaks = std::numeric_limits<double>::quiet_NaN();
            if (s.peaks.size() >= 2)
                de_peaks = s.peaks.back().position - s.peaks.front().position;

            t.columns[0].push_back(v);
            t.columns[1].push_back(oc);
            t.columns[2].push_back(dcp);
            t.columns[3].push_back(dcm);
            t.columns[4].push_back(ndcp);
            t.columns[5].push_back(ndcm);
            t.columns[6].push_back(energy_gap(omega, oc, v));
            t.columns[7].push_back(de_peaks);
            t.columns[8].push_back(v);
        }
    }
    t.comments = table_comments("dressed_scaling", manifest);
    write_csv(out_path(args, "dressed_scaling.csv"), t);

    CsvTable eig;
    eig.column_names = {"delta_c", "e0", "e1", "e2", "e3"};
    eig.columns.assign(5, {});
    for (double dc : linspace(-2.0 * eig_v, eig_v, points)) {
        const DressedResult d = dressed_solve(omega, oc_list.front(), dc, eig_v);
        eig.columns[0].push_back(dc);
        for (int i = 0; i < 4; ++i) eig.columns[i + 1].push_back(d.eigenvalues[i]);
    }
    eig.comments = table_comments("eigencurves", manifest,
                                  {"v_ab=" + format_g17(eig_v),
                                   "omega_c=" + format_g17(oc_list.front())});
    write_csv(out_path(args, "eigencurves.csv"), eig);

    std::printf("dressed: %zu (v, omega_c) rows\n", t.columns[0].size());
    manifest.config = cfg.resolved();
    manifest.wall_seconds = timer.seconds();
    write_manifest(out_path(args, "run_manifest.json"), manifest);
    return 0;
}

int run_switch(const json& cfg_json, const CommonArgs& args) {
    WallTimer timer;
    set_default_threads(args.threads);
    ConfigReader cfg(cfg_json);
    PairSetup setup = pair_setup(cfg);

    const double d = cfg.num("geometry", "d", 6.0);
    const double c6 = signed_c6(cfg, "geometry", 2.68e4);
    const double v0 = pair_potential(0.0, d, c6);

    PropagationConfig base;
    base.drive = setup.drive;
    base.dissipators = setup.diss;
    base.c6 = c6;
    base.d = d;
    base.grid.z_min = cfg.num("propagation", "z_min", 0.0);
    base.grid.z_max = cfg.num("propagation", "z_max", 100.0);
    base.grid.n_cells = static_cast<int>(cfg.integer("propagation", "n_cells", 250));

    RampSpec ramp;
    ramp.delta_c0 = cfg.num("ramp", "delta_c0", 30.0);
    ramp.z_q = cfg.num("ramp", "z_q", 50.0);
    ramp.z_s = cfg.num("ramp", "z_s", 5.0);
    const std::vector<double> dcf_list = cfg.list("ramp", "delta_cF_list", {0.0, -v0});

    RunManifest manifest;
    manifest.command = "switch";
    manifest.threads = args.threads;
    manifest.config = cfg.resolved();

    double kappa = cfg.num("propagation", "kappa", 0.0);
    const double cal_len = cfg.num("propagation", "calibration_length", base.grid.z_max);
    if (kappa <= 0) {
        PropagationConfig ref = base;
        ref.ramp = ramp;
        ref.ramp->delta_cF = 0.0;
        ref.kappa = 1.0; // placeholder; calibrate_kappa scans kappa itself
        kappa = calibrate_kappa(cal_len, ref);
        std::printf("switch: calibrated kappa = %.6f /um for T(%g um) = 0.01\n", kappa, cal_len);
    }
    base.kappa = kappa;

    json report;
    report["kappa"] = kappa;
    report["calibration_length"] = cal_len;

    for (std::size_t k = 0; k < dcf_list.size(); ++k) {
        PropagationConfig rc = base;
        rc.ramp = ramp;
        rc.ramp->delta_cF = dcf_list[k];
        const std::string name = "switch_ramp_dcf" + num_tag(dcf_list[k]);
        PropagationResult res;
        if (args.mode == "td") {
            rc.mode = PropagationMode::time_dependent;
            rc.c_um_per_gamma = cfg.num("td", "c", 10.0);
            rc.td_record_delay = cfg.num("td", "record_delay", 5.0);
            const double dt = cfg.num("td", "dt", 0.9 * td_stable_dt(rc));
            const double lead = 3.0 * rc.c_um_per_gamma;
            const double width = 1.0 * rc.c_um_per_gamma;
            const double z0 = rc.grid.z_min - lead;
            auto pulse = [z0, width](double u) { return 0.5 * (1.0 + std::tanh((z0 - u) / width)); };
            const double t_final =
                (rc.grid.z_max - rc.grid.z_min) / rc.c_um_per_gamma + rc.td_record_delay + 2.0;
            const TdPropagationResult td = propagate_td(rc, pulse, t_final, dt);
            res = td.result;
            json slices;
            slices["times"] = td.times;
            slices["i_s"] = td.i_s_slices;
            std::ofstream f(out_path(args, name + "_slices.json"), std::ios::binary);
            f << slices.dump() << "\n";
        } else {
            res = propagate_cw(rc);
        }
        CsvTable t = propagation_table(res);
        t.comments = table_comments("propagation", manifest,
                                    {"scenario=ramp", "delta_cF=" + format_g17(dcf_list[k]),
                                     "kappa=" + format_g17(kappa),
                                     "transmission=" + format_g17(res.transmission)});
        write_csv(out_path(args, name + ".csv"), t);
        report["ramp_transmission"][num_tag(dcf_list[k])] = res.transmission;
        std::printf("switch: ramp delta_cF=%g -> T = %.6g\n", dcf_list[k], res.transmission);
    }

    if (cfg.flag("localized", "enabled", true)) {
        PropagationConfig lc = base;
        lc.grid.z_min = cfg.num("localized", "z_min", -10.0);
        lc.grid.z_max = cfg.num("localized", "z_max", 10.0);
        lc.grid.n_cells = static_cast<int>(cfg.integer("localized", "n_cells", 50));
        lc.ramp.reset();
        lc.control_position = cfg.num("localized", "control_position", 0.0);
        const std::vector<double> dc_list =
            cfg.list("localized", "delta_c_list", {0.0, -v0 / 2.0, -v0});
        for (std::size_t k = 0; k < dc_list.size(); ++k) {
            lc.drive.delta_c = dc_list[k];
            const PropagationResult res = propagate_cw(lc);
            CsvTable t = propagation_table(res);
            t.comments = table_comments(
                "propagation", manifest,
                {"scenario=localized", "delta_c=" + format_g17(dc_list[k]),
                 "kappa=" + format_g17(kappa), "transmission=" + format_g17(res.transmission)});
            write_csv(out_path(args, "switch_localized_dc" + num_tag(dc_list[k]) + ".csv"), t);
            report["localized_transmission"][num_tag(dc_list[k])] = res.transmission;
            std::printf("switch: localized delta_c=%g -> T = %.6g\n", dc_list[k],
                        res.transmission);
        }
    }

    {
        std::ofstream f(out_path(args, "kappa_report.json"), std::ios::binary);
        f << report.dump(2) << "\n";
    }
    manifest.config = cfg.resolved();
    manifest.wall_seconds = timer.seconds();
    write_manifest(out_path(args, "run_manifest.json"), manifest);
    return 0;
}

int run_montecarlo(const json& cfg_json, const CommonArgs& args) {
    WallTimer timer;
    set_default_threads(args.threads);
    ConfigReader cfg(cfg_json);
    PairSetup setup = pair_setup(cfg);

    DelocalizationSpec spec;
    spec.sigma = cfg.num("montecarlo", "sigma", 1.0);
    spec.n_trajectories = static_cast<int>(cfg.integer("montecarlo", "n_trajectories", 300));
    spec.rng_seed = static_cast<std::uint64_t>(cfg.integer("montecarlo", "seed", 1));
    spec.sampling_1d = cfg.flag("montecarlo", "sampling_1d", false);
    if (args.seed_set) spec.rng_seed = args.seed;

    RunManifest manifest;
    manifest.command = "montecarlo";
    manifest.seed = spec.rng_seed;
    manifest.threads = args.threads;
    manifest.config = cfg.resolved();

    if (cfg.flag("mc_spectrum", "enabled", true)) {
        const std::vector<double> d_list = cfg.list("mc_spectrum", "d_list", {6.0, 10.0});
        const std::vector<double> c6_list =
            cfg.list("mc_spectrum", "c6_ghz_list", {2.68e4, 5.77e5});
        if (d_list.size() != c6_list.size())
            throw ConfigError("[mc_spectrum] d_list and c6_ghz_list lengths differ");
        const double window = cfg.num("mc_spectrum", "window_halfwidth", 10.0);
        const int n_cells = static_cast<int>(cfg.integer("mc_spectrum", "n_cells", 50));
        const double kappa = cfg.num("mc_spectrum", "kappa", 0.2);
        const std::vector<double> grid =
            linspace(cfg.num("mc_spectrum", "min", -30.0), cfg.num("mc_spectrum", "max", 15.0),
                     static_cast<int>(cfg.integer("mc_spectrum", "points", 401)));

        for (std::size_t k = 0; k < d_list.size(); ++k) {
            DelocalizationSpec sp = spec;
            sp.d = d_list[k];
            sp.c6 = -c6_from_ghz(c6_list[k]);

            PropagationConfig base;
            base.drive = setup.drive;
            base.dissipators = setup.diss;
            base.c6 = sp.c6;
            base.d = sp.d;
            base.grid = {-window, window, n_cells};
            base.control_position = 0.0;
            base.kappa = kappa;

            const McSpectrumResult mc = mc_spectrum(sp, base, grid);
            std::vector<double> localized(grid.size());
            PropagationConfig loc = base;
            for (std::size_t j = 0; j < grid.size(); ++j) {
                loc.drive.delta_c = grid[j];
                localized[j] = propagate_cw(loc).transmission;
            }

            CsvTable t;
            t.column_names = {"delta_c", "mean_t", "stderr_t", "localized_t"};
            t.columns = {mc.delta_c, mc.mean_t, mc.stderr_t, localized};
            t.comments = table_comments(
                "mc_spectrum", manifest,
                {"d=" + format_g17(sp.d), "sigma=" + format_g17(sp.sigma),
                 "n_trajectories=" + std::to_string(mc.n_trajectories),
                 "n_failed=" + std::to_string(mc.n_failed),
                 std::string("converged=") + (mc.converged ? "true" : "false")});
            write_csv(out_path(args, "mc_spectrum_d" + num_tag(sp.d) + ".csv"), t);
            std::printf("montecarlo: spectrum d=%g done (failed %d of %d, converged=%s)\n", sp.d,
                        mc.n_failed, spec.n_trajectories, mc.converged ? "yes" : "no");
        }
    }

    if (cfg.flag("mc_switch", "enabled", true)) {
        DelocalizationSpec sp = spec;
        sp.d = cfg.num("mc_switch", "d", 6.0);
        sp.c6 = -c6_from_ghz(cfg.num("mc_switch", "c6_ghz", 2.68e4));
        const double v0 = -sp.c6 / std::pow(sp.d, 6);

        PropagationConfig base;
        base.drive = setup.drive;
        base.dissipators = setup.diss;
        base.c6 = sp.c6;
        base.d = sp.d;
        base.grid.z_min = cfg.num("mc_switch", "z_min", 0.0);
        base.grid.z_max = cfg.num("mc_switch", "z_max", 100.0);
        base.grid.n_cells = static_cast<int>(cfg.integer("mc_switch", "n_cells", 250));
        base.kappa = cfg.num("mc_switch", "kappa", 0.22923);
        RampSpec ramp;
        ramp.delta_c0 = cfg.num("mc_switch", "delta_c0", 30.0);
        ramp.z_q = cfg.num("mc_switch", "z_q", 50.0);
        ramp.z_s = cfg.num("mc_switch", "z_s", 5.0);

        const std::vector<std::pair<std::string, double>> cases = {
            {"blockade", 0.0}, {"facilitated", -v0}};
        for (const auto& [label, dcf] : cases) {
            PropagationConfig rc = base;
            rc.ramp = ramp;
            rc.ramp->delta_cF = dcf;
            const McSwitchResult mc = mc_switch(sp, rc);
            CsvTable t;
            t.column_names = {"z",
                              "i_s_single",
                              "rho33_A_single",
                              "rho33_B_single",
                              "re_rho31_B_single",
                              "i_s_mean",
                              "i_s_stderr",
                              "rho33_A_mean",
                              "rho33_B_mean",
                              "re_rho31_B_mean"};
            t.columns = {mc.z,
                         mc.i_s_single,
                         mc.rho33_A_single,
                         mc.rho33_B_single,
                         mc.re_rho31_B_single,
                         mc.i_s_mean,
                         mc.i_s_stderr,
                         mc.rho33_A_mean,
                         mc.rho33_B_mean,
                         mc.re_rho31_B_mean};
            t.comments = table_comments(
                "mc_switch", manifest,
                {"delta_cF=" + format_g17(dcf), "d=" + format_g17(sp.d),
                 "n_trajectories=" + std::to_string(mc.n_trajectories),
                 "n_failed=" + std::to_string(mc.n_failed)});
            write_csv(out_path(args, "mc_switch_" + label + ".csv"), t);
            std::printf("montecarlo: switch %s -> mean T = %.6g (failed %d)\n", label.c_str(),
                        mc.i_s_mean.back(), mc.n_failed);
        }
    }

    if (cfg.flag("montecarlo", "self_check", true)) {
        DelocalizationSpec sp = spec;
        sp.d = 6.0;
        sp.c6 = -c6_from_ghz(2.68e4);
        sp.n_trajectories = 2;
        PropagationConfig base;
        base.drive = setup.drive;
        base.dissipators = setup.diss;
        base.c6 = sp.c6;
        base.d = sp.d;
        base.grid = {-10.0, 10.0, 20};
        base.control_position = 0.0;
        base.kappa = 0.2;
        const std::vector<double> small = linspace(-20.0, 0.0, 11);
        const McSpectrumResult a = mc_spectrum(sp, base, small);
        const McSpectrumResult b = mc_spectrum(sp, base, small);
        if (a.mean_t != b.mean_t)
            throw NumericalInstabilityError("seed-repeat determinism check failed");
        std::printf("montecarlo: seed-repeat determinism check OK\n");
    }

    manifest.config = cfg.resolved();
    manifest.wall_seconds = timer.seconds();
    write_manifest(out_path(args, "run_manifest.json"), manifest);
    return 0;
}

int run_multichannel(const json& cfg_json, const CommonArgs& args) {
    WallTimer timer;
    set_default_threads(args.threads);
    ConfigReader cfg(cfg_json);
    PairSetup setup = pair_setup(cfg);

    const std::vector<double> n_list = cfg.list("multichannel", "n_list", {1.0, 2.0});
    const double r_fac = cfg.num("multichannel", "r_fac", 6.0);
    const double v_ct = cfg.num("multichannel", "v_ct", 15.0);
    const double v_tt = cfg.num("multichannel", "v_tt", 5.0);
    const std::vector<double> sat_list =
        cfg.list("multichannel", "saturation_v_tt", {0.0, 5.0, 10.0, 20.0, 40.0, 80.0});
    const std::vector<double> grid =
        linspace(cfg.num("multichannel", "min", -30.0), cfg.num("multichannel", "max", 15.0),
                 static_cast<int>(cfg.integer("multichannel", "points", 41)));
    SteadyOptions steady = steady_from(cfg);
    // dim 54 (three targets) still admits the direct dense route
    steady.lu_dim_max = std::max(steady.lu_dim_max, 54);
    steady.superop_cap = std::max(steady.superop_cap, 54 * 54);

    RunManifest manifest;
    manifest.command = "multichannel";
    manifest.threads = args.threads;
    manifest.config = cfg.resolved();

    for (double n_real : n_list) {
        const int n = static_cast<int>(n_real);
        const RingGeometry ring = RingGeometry::regular(n, r_fac);
        const auto spectra =
            multi_target_spectrum(ring, v_ct, {v_tt}, grid, setup.drive, setup.diss, steady);
        const Spectrum& s = spectra.at(v_tt);
        CsvTable t = spectrum_table(s);
        t.comments = table_comments("spectrum", manifest,
                                    {"n_targets=" + std::to_string(n),
                                     "v_ct=" + format_g17(v_ct), "v_tt=" + format_g17(v_tt),
                                     "peak_count=" + std::to_string(s.peaks.size())});
        write_csv(out_path(args, "multichannel_n" + std::to_string(n) + ".csv"), t);
        std::printf("multichannel: N=%d -> %zu peaks\n", n, s.peaks.size());
    }

    if (cfg.flag("multichannel", "saturation", true)) {
        const RingGeometry ring = RingGeometry::regular(2, r_fac);
        std::vector<double> vtts = sat_list;
        if (std::find(vtts.begin(), vtts.end(), 0.0) == vtts.end())
            vtts.insert(vtts.begin(), 0.0);
        const auto spectra =
            multi_target_spectrum(ring, v_ct, vtts, grid, setup.drive, setup.diss, steady);
        const Spectrum& base = spectra.at(0.0);
        CsvTable t;
        t.column_names = {"v_tt", "sup_diff_im_rho21"};
        t.columns.assign(2, {});
        for (double v : vtts) {
            if (v == 0.0) continue;
            const Spectrum& s = spectra.at(v);
            double sup = 0.0;
            for (std::size_t i = 0; i < s.im_rho21.size(); ++i)
                sup = std::max(sup, std::abs(s.im_rho21[i] - base.im_rho21[i]));
            t.columns[0].push_back(v);
            t.columns[1].push_back(sup);
        }
        t.comments = table_comments("multichannel_saturation", manifest,
                                    {"n_targets=2", "v_ct=" + format_g17(v_ct)});
        write_csv(out_path(args, "multichannel_saturation.csv"), t);
        std::printf("multichannel: saturation table with %zu rows\n", t.columns[0].size());
    }

    manifest.config = cfg.resolved();
    manifest.wall_seconds = timer.seconds();
    write_manifest(out_path(args, "run_manifest.json"), manifest);
    return 0;
}

} // namespace fit::runners
