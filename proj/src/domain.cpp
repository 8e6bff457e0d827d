#include "pshex/domain.hpp"

#include "pshex/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pshex {

double Domain::boundary_distance(const CVec& z) const {
    if (!membership(z))
        throw std::domain_error("boundary_distance: point not in domain: " + z.to_string());
    return distance(z);
}

Domain make_ball(const CVec& center, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("make_ball: radius must be > 0");
    Domain V;
    V.name = "ball";
    V.params = {radius};
    V.pseudoconvex_hint = true;
    V.membership = [center, radius](const CVec& z) { return dist(z, center) < radius; };
    V.distance = [center, radius](const CVec& z) { return radius - dist(z, center); };
    V.neg_log_dist_grad = [center, radius](const CVec& z) {
        const CVec w = z - center;
        const double s = w.norm();
        const double d = radius - s;
        std::vector<cplx> g(z.dim());
        if (s == 0.0) return g; // flat direction at the center
        for (int j = 0; j < z.dim(); ++j) g[j] = std::conj(w[j]) / (2.0 * s * d);
        return g;
    };
    V.neg_log_dist_hessian = [center, radius](const CVec& z) {
        const int n = z.dim();
        const CVec w = z - center;
        const double s = w.norm();
        const double d = radius - s;
        Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(n, n);
        if (s == 0.0) return H;
        const double kappa = (1.0 / (4.0 * s * s * d)) * (1.0 / d - 1.0 / s);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j)
                H(i, j) = kappa * w[j] * std::conj(w[i]);
            H(i, i) += 1.0 / (2.0 * s * d);
        }
        return H;
    };
    return V;
}

Domain make_ball(double radius, int dim) { return make_ball(CVec(dim), radius); }

Domain make_polydisc(const std::vector<double>& radii, int dim) {
    if (radii.empty()) throw std::invalid_argument("make_polydisc: no radii");
    for (double r : radii)
        if (!(r > 0.0)) throw std::invalid_argument("make_polydisc: radii must be > 0");
    if (static_cast<int>(radii.size()) > dim)
        throw std::invalid_argument("make_polydisc: more radii than dimensions");
    Domain V;
    V.name = "polydisc";
    V.params = radii;
    V.pseudoconvex_hint = true;
    V.membership = [radii](const CVec& z) {
        for (std::size_t k = 0; k < radii.size(); ++k)
            if (std::abs(z[static_cast<int>(k)]) >= radii[k]) return false;
        return true;
    };
    auto face = [radii](const CVec& z, int& arg) {
        double best = std::numeric_limits<double>::infinity();
        arg = 0;
        for (std::size_t k = 0; k < radii.size(); ++k) {
            const double d = radii[k] - std::abs(z[static_cast<int>(k)]);
            if (d < best) { best = d; arg = static_cast<int>(k); }
        }
        return best;
    };
    V.distance = [face](const CVec& z) {
        int arg;
        return face(z, arg);
    };
    V.neg_log_dist_grad = [face](const CVec& z) {
        int K;
        const double d = face(z, K);
        std::vector<cplx> g(z.dim());
        const double s = std::abs(z[K]);
        if (s == 0.0) return g;
        g[K] = std::conj(z[K]) / (2.0 * s * d);
        return g;
    };
    V.neg_log_dist_hessian = [face](const CVec& z) {
        int K;
        const double d = face(z, K);
        Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(z.dim(), z.dim());
        const double s = std::abs(z[K]);
        if (s == 0.0) return H;
        H(K, K) = 1.0 / (4.0 * s * d) + 1.0 / (4.0 * d * d);
        return H;
    };
    return V;
}

Domain make_halfspace_intersection(const std::vector<CVec>& normals,
                                   const std::vector<double>& offsets, int dim) {
    if (normals.empty() || normals.size() != offsets.size())
        throw std::invalid_argument("make_halfspace_intersection: need matching normals/offsets");
    std::vector<double> norms;
    for (const auto& a : normals) {
        const double na = a.norm();
        if (!(na > 0.0))
            throw std::invalid_argument("make_halfspace_intersection: zero normal");
        norms.push_back(na);
    }
    Domain V;
    V.name = "halfspace";
    V.pseudoconvex_hint = true; // convex
    auto slack = [normals, offsets, norms](const CVec& z, int& arg) {
        double best = std::numeric_limits<double>::infinity();
        arg = 0;
        for (std::size_t k = 0; k < normals.size(); ++k) {
            const double d = (offsets[k] - inner(z, normals[k]).real()) / norms[k];
            if (d < best) { best = d; arg = static_cast<int>(k); }
        }
        return best;
    };
    V.membership = [slack](const CVec& z) {
        int arg;
        return slack(z, arg) > 0.0;
    };
    V.distance = [slack](const CVec& z) {
        int arg;
        return slack(z, arg);
    };
    V.neg_log_dist_grad = [slack, normals, norms](const CVec& z) {
        int K;
        const double d = slack(z, K);
        std::vector<cplx> g(z.dim());
        for (int j = 0; j < z.dim(); ++j)
            g[j] = std::conj(normals[K][j]) / (2.0 * norms[K] * d);
        return g;
    };
    V.neg_log_dist_hessian = [slack, normals, norms](const CVec& z) {
        int K;
        const double d = slack(z, K);
        const int n = z.dim();
        Eigen::MatrixXcd H(n, n);
        const double coef = 1.0 / (4.0 * norms[K] * norms[K] * d * d);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                H(i, j) = coef * normals[K][j] * std::conj(normals[K][i]);
        return H;
    };
    return V;
}

Domain make_hartogs_wedge(double r, int dim) {
    if (!(r > 0.0)) throw std::invalid_argument("make_hartogs_wedge: r must be > 0");
    if (dim < 2) throw std::invalid_argument("make_hartogs_wedge: needs dim >= 2");
    Domain V;
    V.name = "hartogs_wedge";
    V.params = {r};
    V.pseudoconvex_hint = true;
    V.membership = [r](const CVec& z) {
        const double s1 = std::abs(z[0]), s2 = std::abs(z[1]);
        return s1 < s2 && s2 < r;
    };
    // Faces: outer cylinder |z_2| = r at distance r - s2; the cone |z_1| = |z_2|
    // at distance (s2 - s1)/sqrt(2).
    V.distance = [r](const CVec& z) {
        const double s1 = std::abs(z[0]), s2 = std::abs(z[1]);
        return std::min(r - s2, (s2 - s1) / std::sqrt(2.0));
    };
    V.neg_log_dist_grad = [r](const CVec& z) {
        const double s1 = std::abs(z[0]), s2 = std::abs(z[1]);
        std::vector<cplx> g(z.dim());
        const double d_outer = r - s2;
        const double d_cone = (s2 - s1) / std::sqrt(2.0);
        if (d_outer <= d_cone) {
            if (s2 > 0.0) g[1] = std::conj(z[1]) / (2.0 * s2 * d_outer);
        } else {
            const double gg = s2 - s1;
            if (s1 > 0.0) g[0] = std::conj(z[0]) / (2.0 * s1 * gg);
            if (s2 > 0.0) g[1] = -std::conj(z[1]) / (2.0 * s2 * gg);
        }
        return g;
    };
    V.neg_log_dist_hessian = [r](const CVec& z) {
        const double s1 = std::abs(z[0]), s2 = std::abs(z[1]);
        Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(z.dim(), z.dim());
        const double d_outer = r - s2;
        const double d_cone = (s2 - s1) / std::sqrt(2.0);
        if (d_outer <= d_cone) {
            if (s2 > 0.0)
                H(1, 1) = 1.0 / (4.0 * s2 * d_outer) + 1.0 / (4.0 * d_outer * d_outer);
        } else {
            const double g = s2 - s1;
            if (s1 > 0.0) H(0, 0) = 1.0 / (4.0 * s1 * g) + 1.0 / (4.0 * g * g);
            if (s2 > 0.0) H(1, 1) = -1.0 / (4.0 * s2 * g) + 1.0 / (4.0 * g * g);
            if (s1 > 0.0 && s2 > 0.0) {
                H(0, 1) = -z[1] * std::conj(z[0]) / (4.0 * s1 * s2 * g * g);
                H(1, 0) = std::conj(H(0, 1));
            }
        }
        return H;
    };
    return V;
}

Domain make_full_space(int dim) {
    if (dim < 1) throw std::invalid_argument("make_full_space: dim must be >= 1");
    Domain V;
    V.name = "full_space";
    V.is_full_space = true;
    V.pseudoconvex_hint = true;
    V.membership = [](const CVec&) { return true; };
    V.distance = [](const CVec&) { return std::numeric_limits<double>::infinity(); };
    return V;
}

Domain make_hollowed_ball(double outer, double inner, int dim) {
    if (!(outer > inner && inner > 0.0))
        throw std::invalid_argument("make_hollowed_ball: need outer > inner > 0");
    Domain V;
    V.name = "hollowed_ball";
    V.params = {outer, inner};
    V.pseudoconvex_hint = false;
    V.membership = [outer, inner](const CVec& z) {
        const double s = z.norm();
        return s < outer && s > inner;
    };
    V.distance = [outer, inner](const CVec& z) {
        const double s = z.norm();
        return std::min(outer - s, s - inner);
    };
    V.neg_log_dist_grad = [outer, inner](const CVec& z) {
        const double s = z.norm();
        std::vector<cplx> g(z.dim());
        if (s == 0.0) return g;
        if (outer - s <= s - inner) {
            const double d = outer - s;
            for (int j = 0; j < z.dim(); ++j) g[j] = std::conj(z[j]) / (2.0 * s * d);
        } else {
            const double d = s - inner;
            for (int j = 0; j < z.dim(); ++j) g[j] = -std::conj(z[j]) / (2.0 * s * d);
        }
        return g;
    };
    V.neg_log_dist_hessian = [outer, inner](const CVec& z) {
        const int n = z.dim();
        const double s = z.norm();
        Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(n, n);
        if (s == 0.0) return H;
        if (outer - s <= s - inner) {
            const double d = outer - s;
            const double kappa = (1.0 / (4.0 * s * s * d)) * (1.0 / d - 1.0 / s);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) H(i, j) = kappa * z[j] * std::conj(z[i]);
                H(i, i) += 1.0 / (2.0 * s * d);
            }
        } else {
            const double d = s - inner;
            const double kappa = 1.0 / (4.0 * s * s * d) * (1.0 / s + 1.0 / d);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) H(i, j) = kappa * z[j] * std::conj(z[i]);
                H(i, i) += -1.0 / (2.0 * s * d);
            }
        }
        return H;
    };
    return V;
}

double uniform_inclusion_margin(const std::vector<CVec>& S, const Domain& V) {
    if (S.empty()) throw std::invalid_argument("uniform_inclusion_margin: empty set");
    std::ostringstream offenders;
    long bad = 0;
    double margin = std::numeric_limits<double>::infinity();
    for (const auto& z : S) {
        if (!V.contains(z)) {
            if (bad < 4) offenders << (bad ? "; " : "") << z.to_string();
            ++bad;
            continue;
        }
        margin = std::min(margin, V.distance(z));
    }
    if (bad > 0)
        throw std::domain_error("uniform_inclusion_margin: " + std::to_string(bad) +
                                " point(s) outside the domain: " + offenders.str());
    return margin;
}

double numeric_distance_oracle(const Domain& V, const CVec& z, int coarse_rays,
                               int refine_rounds, std::uint64_t seed) {
    if (!V.contains(z))
        throw std::domain_error("numeric_distance_oracle: point not in domain");
    if (V.is_full_space) return std::numeric_limits<double>::infinity();
    const int n = z.dim();
    CounterRng rng(seed, streams::scalar_misc);

    auto ray_exit = [&](const CVec& u) {
        // first exit of the open set along z + t u, u unit
        double hi = 1.0, lo = 0.0;
        const double cap = 1e6;
        while (V.contains(z + u * cplx{hi, 0.0})) {
            lo = hi;
            hi *= 2.0;
            if (hi > cap) return std::numeric_limits<double>::infinity();
        }
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (V.contains(z + u * cplx{mid, 0.0}))
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    };

    std::uint64_t ctr = 0;
    auto random_dir = [&]() {
        CVec u(n);
        for (int i = 0; i < n; ++i) {
            double a, b;
            rng.normal_pair(ctr++, a, b);
            u.set(i, cplx{a, b});
        }
        return normalized(u);
    };

    double best = std::numeric_limits<double>::infinity();
    CVec best_dir = CVec::axis(0, n);
    for (int i = 0; i < n; ++i) {
        for (const cplx ph : {cplx{1, 0}, cplx{-1, 0}, cplx{0, 1}, cplx{0, -1}}) {
            const CVec u = CVec::axis(i, n, ph);
            const double t = ray_exit(u);
            if (t < best) { best = t; best_dir = u; }
        }
    }
    for (int k = 0; k < coarse_rays; ++k) {
        const CVec u = random_dir();
        const double t = ray_exit(u);
        if (t < best) { best = t; best_dir = u; }
    }
    double sigma = 0.5;
    for (int round = 0; round < refine_rounds; ++round) {
        for (int k = 0; k < 8; ++k) {
            CVec u = best_dir;
            for (int i = 0; i < n; ++i) {
                double a, b;
                rng.normal_pair(ctr++, a, b);
                u.set(i, u[i] + sigma * cplx{a, b});
            }
            if (u.norm() == 0.0) continue;
            u = normalized(u);
            const double t = ray_exit(u);
            if (t < best) { best = t; best_dir = u; }
        }
        sigma *= 0.8;
    }
    return best;
}

SublevelSet sublevel(const ScalarField& field, double t, const Domain& V,
                     bool open_flag) {
    SublevelSet s;
    s.field = field;
    s.level = t;
    s.domain = &V;
    s.open_flag = open_flag;
    return s;
}

static std::vector<CVec> sample_sublevel_impl(const SublevelSet& set, long count,
                                              const GaussianSpec& spec,
                                              std::uint64_t stream_id,
                                              bool may_throw) {
    std::vector<CVec> out;
    const long budget = spec.sample_budget();
    long proposed = 0;
    for (; proposed < budget && static_cast<long>(out.size()) < count; ++proposed) {
        const CVec z = spec.draw(stream_id, static_cast<std::uint64_t>(proposed));
        if (!set.domain->contains(z)) continue;
        const double v = set.field(z);
        const bool ok = set.open_flag ? (v < set.level) : (v <= set.level);
        if (ok) out.push_back(z);
    }
    if (may_throw && proposed >= budget &&
        static_cast<double>(out.size()) < 1e-4 * static_cast<double>(proposed)) {
        throw ThinSublevelError("sample_sublevel: empty-or-thin sublevel at level " +
                                format_double(set.level) + " (accepted " +
                                std::to_string(out.size()) + " of " +
                                std::to_string(proposed) + ")");
    }
    return out;
}

std::vector<CVec> sample_sublevel(const SublevelSet& set, long count,
                                  const GaussianSpec& spec, std::uint64_t stream_id) {
    return sample_sublevel_impl(set, count, spec, stream_id, true);
}

std::vector<CVec> try_sample_sublevel(const SublevelSet& set, long count,
                                      const GaussianSpec& spec,
                                      std::uint64_t stream_id) {
    return sample_sublevel_impl(set, count, spec, stream_id, false);
}

} // namespace pshex
