#include "fit/hilbert.hpp"

#include <cmath>
#include <string>

namespace fit {

namespace {

Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

} // namespace

CompositeSpace::CompositeSpace(std::vector<AtomSite> sites) : sites_(std::move(sites)) {
    if (sites_.empty()) throw ConfigError("composite space needs at least one site");
    for (std::size_t i = 0; i < sites_.size(); ++i) {
        const AtomSite& s = sites_[i];
        if (s.level_count != 2 && s.level_count != 3)
            throw ConfigError("site " + std::to_string(i) + ": level_count must be 2 or 3");
        if (s.drive_scheme == DriveScheme::two_photon && s.level_count != 3)
            throw ConfigError("site " + std::to_string(i) +
                              ": two-photon drive requires a 3-level site");
        total_dim_ *= s.level_count;
    }
}

int CompositeSpace::level_index(int site_index, int level) const {
    const AtomSite& s = site(site_index);
    if (s.level_count == 3) {
        if (level >= 1 && level <= 3) return level - 1;
    } else { // two-level basis {|1>,|3>}
        if (level == 1) return 0;
        if (level == 3) return 1;
    }
    throw DimensionError("level " + std::to_string(level) + " not present on a " +
                         std::to_string(s.level_count) + "-level site");
}

Operator local_sigma(int level_count, int a, int b) {
    auto idx = [level_count](int level) {
        if (level_count == 3) {
            if (level >= 1 && level <= 3) return level - 1;
        } else if (level_count == 2) {
            if (level == 1) return 0;
            if (level == 3) return 1;
        }
        throw DimensionError("level " + std::to_string(level) + " not present on a " +
                             std::to_string(level_count) + "-level site");
    };
    Mat m = Mat::Zero(level_count, level_count);
    m(idx(a), idx(b)) = 1.0;
    return Operator(level_count, std::move(m));
}

Operator embed_operator(const CompositeSpace& space, int site_index, const Operator& local) {
    if (site_index < 0 || site_index >= space.site_count())
        throw DimensionError("site index " + std::to_string(site_index) + " out of range");
    if (local.dim != space.site(site_index).level_count)
        throw DimensionError("local operator dim " + std::to_string(local.dim) +
                             " does not match site level count " +
                             std::to_string(space.site(site_index).level_count));
    Mat out = Mat::Identity(1, 1);
    for (int i = 0; i < space.site_count(); ++i) {
        if (i == site_index)
            out = kron(out, local.entries);
        else
            out = kron(out, Mat::Identity(space.site(i).level_count, space.site(i).level_count));
    }
    return Operator(space.total_dim(), std::move(out));
}

double pair_potential(double delta_z, double d, double c6) {
    const double r2 = delta_z * delta_z + d * d;
    if (r2 == 0.0) throw SingularGeometryError("coincident sites: pair potential diverges");
    return -c6 / (r2 * r2 * r2);
}

double pair_potential_from_positions(const AtomSite& a, const AtomSite& b, double c6) {
    const double dz = a.position[2] - b.position[2];
    const double dx = a.position[0] - b.position[0];
    const double dy = a.position[1] - b.position[1];
    return pair_potential(dz, std::hypot(dx, dy), c6);
}

Operator build_hamiltonian(const CompositeSpace& space, const DriveParams& drive,
                           const InteractionSpec& interaction) {
    const int dim = space.total_dim();
    Mat h = Mat::Zero(dim, dim);

    auto add_local = [&](int site, const Mat& local, double coeff) {
        Operator op(static_cast<int>(local.rows()), local);
        h += coeff * embed_operator(space, site, op).entries;
    };

    for (int i = 0; i < space.site_count(); ++i) {
        const AtomSite& s = space.site(i);
        const int q = s.level_count;
        auto sig = [&](int a, int b) { return local_sigma(q, a, b).entries; };

        if (s.role == Role::target) {
            if (q != 3 || s.drive_scheme != DriveScheme::one_photon)
                throw ConfigError("target sites must be 3-level with the ladder drive");
            add_local(i, sig(2, 1) + sig(1, 2), -0.5 * drive.omega_p);
            add_local(i, sig(3, 2) + sig(2, 3), -0.5 * drive.omega);
        } else if (s.drive_scheme == DriveScheme::one_photon) {
            if (q != 2)
                throw ConfigError("one-photon control sites use the 2-level basis {|1>,|3>}");
            add_local(i, sig(3, 1) + sig(1, 3), -0.5 * drive.omega_c);
            add_local(i, sig(3, 3), drive.delta_c);
        } else {
            if (!drive.two_photon)
                throw ConfigError("two-photon control site needs omega_c1/omega_c2/delta");
            const TwoPhotonParams& tp = *drive.two_photon;
            if (tp.delta == 0.0)
                throw ConfigError("two-photon intermediate detuning must be nonzero");
            add_local(i, sig(2, 1) + sig(1, 2), -0.5 * tp.omega_c1);
            add_local(i, sig(3, 2) + sig(2, 3), -0.5 * tp.omega_c2);
            add_local(i, sig(2, 2), tp.delta);
            add_local(i, sig(3, 3), drive.delta_c);
        }
    }

    for (int i = 0; i < space.site_count(); ++i) {
        for (int j = i + 1; j < space.site_count(); ++j) {
            double v;
            auto it = interaction.pair_overrides.find({i, j});
            if (it != interaction.pair_overrides.end())
                v = it->second;
            else if (interaction.c6 != 0.0)
                v = pair_potential_from_positions(space.site(i), space.site(j), interaction.c6);
            else
                continue;
            const Mat pi = embed_operator(space, i, local_sigma(space.site(i).level_count, 3, 3)).entries;
            const Mat pj = embed_operator(space, j, local_sigma(space.site(j).level_count, 3, 3)).entries;
            // both projectors are diagonal, so the product is a cheap diagonal term
            h += v * (pi.diagonal().cwiseProduct(pj.diagonal())).asDiagonal().toDenseMatrix();
        }
    }

    return Operator(dim, std::move(h));
}

} // namespace fit
