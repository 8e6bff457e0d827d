#include "pshex/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pshex/rng.hpp"

namespace pshex {

namespace {

CVec shift(const CVec& z, int coord, double dx, double dy) {
    CVec w = z;
    w.set(coord, w[coord] + cplx{dx, dy});
    return w;
}

// first central difference with one Richardson level
double d1(const std::function<double(double)>& g, double h) {
    const double Dh = (g(h) - g(-h)) / (2.0 * h);
    const double Dh2 = (g(h / 2) - g(-h / 2)) / h;
    return (4.0 * Dh2 - Dh) / 3.0;
}

// second central difference with one Richardson level
double d2(const std::function<double(double)>& g, double f0, double h) {
    const double Dh = (g(h) - 2.0 * f0 + g(-h)) / (h * h);
    const double Dh2 = (g(h / 2) - 2.0 * f0 + g(-h / 2)) / (h * h / 4.0);
    return (4.0 * Dh2 - Dh) / 3.0;
}

// mixed second difference d^2 f / du dv with one Richardson level
double d2_cross(const std::function<double(double, double)>& g, double h) {
    auto stencil = [&](double s) {
        return (g(s, s) - g(s, -s) - g(-s, s) + g(-s, -s)) / (4.0 * s * s);
    };
    const double Dh = stencil(h);
    const double Dh2 = stencil(h / 2);
    return (4.0 * Dh2 - Dh) / 3.0;
}

} // namespace

WirtingerGrad wirtinger_grad(const ScalarField& f, const CVec& z, double h) {
    const int n = z.dim();
    WirtingerGrad g;
    g.holo.resize(n);
    g.anti.resize(n);
    for (int j = 0; j < n; ++j) {
        const double dx = d1([&](double s) { return f(shift(z, j, s, 0.0)); }, h);
        const double dy = d1([&](double s) { return f(shift(z, j, 0.0, s)); }, h);
        g.holo[j] = 0.5 * cplx{dx, -dy};
        g.anti[j] = 0.5 * cplx{dx, dy};
    }
    return g;
}

double HessianForm::min_eig(int n) const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H.topLeftCorner(n, n),
                                                       Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double HessianForm::max_eig(int n) const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H.topLeftCorner(n, n),
                                                       Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

HessianForm fd_mixed_hessian(const ScalarField& f, const CVec& z, double h) {
    const int n = z.dim();
    const double f0 = f(z);
    // second partials over the 2n real coordinates; coordinate 2i is x_i, 2i+1 is y_i
    auto real_shift = [&](int u, double s) {
        return shift(z, u / 2, (u % 2 == 0) ? s : 0.0, (u % 2 == 1) ? s : 0.0);
    };
    auto real_shift2 = [&](int u, double su, int v, double sv) {
        CVec w = real_shift(u, su);
        const int cv = v / 2;
        w.set(cv, w[cv] + ((v % 2 == 0) ? cplx{sv, 0.0} : cplx{0.0, sv}));
        return w;
    };
    Eigen::MatrixXd P(2 * n, 2 * n); // raw real second partials
    for (int u = 0; u < 2 * n; ++u) {
        P(u, u) = d2([&](double s) { return f(real_shift(u, s)); }, f0, h);
        for (int v = u + 1; v < 2 * n; ++v) {
            const double m = d2_cross(
                [&](double su, double sv) { return f(real_shift2(u, su, v, sv)); }, h);
            P(u, v) = m;
            P(v, u) = m;
        }
    }
    HessianForm out;
    out.z = z;
    out.H.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double re = P(2 * i, 2 * j) + P(2 * i + 1, 2 * j + 1);
            const double im = P(2 * i, 2 * j + 1) - P(2 * i + 1, 2 * j);
            out.H(i, j) = 0.25 * cplx{re, im};
        }
    out.herm_defect = (out.H - out.H.adjoint()).cwiseAbs().maxCoeff();
    out.H = 0.5 * (out.H + out.H.adjoint().eval());
    return out;
}

HessianForm mixed_hessian(const ScalarField& f, const CVec& z, double h) {
    if (f.has_hessian()) {
        HessianForm out;
        out.z = z;
        out.H = f.hessian(z);
        out.herm_defect = (out.H - out.H.adjoint()).cwiseAbs().maxCoeff();
        out.H = 0.5 * (out.H + out.H.adjoint().eval());
        return out;
    }
    return fd_mixed_hessian(f, z, h);
}

double hessian_quadratic_form(const ScalarField& f, const CVec& z, const CVec& w,
                              double h) {
    if (f.has_hessian()) {
        const Eigen::MatrixXcd H = f.hessian(z);
        cplx q{0.0, 0.0};
        for (int i = 0; i < z.dim(); ++i)
            for (int j = 0; j < z.dim(); ++j) q += H(i, j) * w[i] * std::conj(w[j]);
        return q.real();
    }
    const double f0 = f(z);
    auto g = [&](double a, double b) { return f(z + cplx{a, b} * w); };
    auto lap = [&](double s) {
        return (g(s, 0) + g(-s, 0) + g(0, s) + g(0, -s) - 4.0 * f0) / (s * s);
    };
    const double Dh = lap(h), Dh2 = lap(h / 2);
    return 0.25 * (4.0 * Dh2 - Dh) / 3.0;
}

double circle_mean(const ScalarField& f, const CVec& a, const CVec& b, double r,
                   int m, const Domain* V) {
    if (m < 4) throw std::invalid_argument("circle_mean: need at least 4 nodes");
    std::vector<CVec> nodes;
    nodes.reserve(m);
    for (int k = 0; k < m; ++k) {
        const double th = 2.0 * M_PI * k / m;
        nodes.push_back(a + std::polar(r, th) * b);
        if (V && !V->contains(nodes.back())) {
            std::ostringstream oss;
            oss << "circle_mean: node " << k << " outside domain at "
                << nodes.back().to_string();
            throw std::domain_error(oss.str());
        }
    }
    double s = 0.0;
    for (const auto& p : nodes) s += f(p);
    return s / m;
}

std::vector<CVec> sweep_directions(const GaussianSpec& spec, int count,
                                   std::uint64_t stream_id) {
    std::vector<CVec> dirs;
    const int n = spec.truncation();
    for (int i = 0; i < n; ++i) dirs.push_back(CVec::axis(i, n));
    for (int k = 0; k < count; ++k) {
        const CVec g = spec.draw(stream_id, static_cast<std::uint64_t>(k));
        if (g.norm() > 0.0) dirs.push_back(normalized(g));
    }
    return dirs;
}

CertificationReport certify_psh(const ScalarField& f, const Domain& V,
                                const std::vector<CVec>& points,
                                const std::vector<CVec>& directions,
                                const CertifyOptions& opt) {
    CertificationReport rep;
    rep.name = "psh[" + f.provenance + "]";

    // circle-mean inequality f(a) <= mean
    CertRecord circ;
    circ.check = "psh.circle_mean";
    circ.anchor = "psh.circle_mean";
    circ.tolerance = opt.tol;
    double worst = -std::numeric_limits<double>::infinity();
    std::string worst_at;
    long tested = 0, skipped = 0;
    for (const auto& a : points) {
        if (!V.contains(a)) { ++skipped; continue; }
        const double fa = f(a);
        for (const auto& b : directions) {
            for (double r : opt.radii) {
                bool inside = true;
                for (int k = 0; k < opt.circle_nodes && inside; ++k) {
                    const double th = 2.0 * M_PI * k / opt.circle_nodes;
                    inside = V.contains(a + std::polar(r, th) * b);
                }
                if (!inside) { ++skipped; continue; }
                const double mean = circle_mean(f, a, b, r, opt.circle_nodes);
                const double defect = fa - mean; // <= 0 wanted
                ++tested;
                if (defect > worst) {
                    worst = defect;
                    worst_at = "a=" + a.to_string() + " r=" + format_double(r);
                }
            }
        }
    }
    circ.samples = tested;
    circ.worst = (tested > 0) ? worst : 0.0;
    circ.pass = tested > 0 ? (worst <= opt.tol) : false;
    circ.worst_at = worst_at + (skipped ? " (skipped " + std::to_string(skipped) + ")" : "");
    rep.add(circ);

    // Hessian lower bound across the truncation sweep
    CertRecord hes;
    hes.check = "psh.hessian_min";
    hes.anchor = "psh.hessian_min_dimfree";
    hes.tolerance = opt.tol;
    double worst_eig = std::numeric_limits<double>::infinity();
    std::string worst_eig_at;
    long hn = 0;
    for (const auto& a : points) {
        if (!V.contains(a)) continue;
        const HessianForm Hf = mixed_hessian(f, a, opt.fd_step);
        const int sweep = opt.dim_sweep_max > 0
                              ? std::min(opt.dim_sweep_max, a.dim())
                              : a.dim();
        for (int np = 1; np <= sweep; ++np) {
            const double lm = Hf.min_eig(np);
            ++hn;
            if (lm < worst_eig) {
                worst_eig = lm;
                worst_eig_at = "z=" + a.to_string() + " n'=" + std::to_string(np);
            }
        }
    }
    hes.samples = hn;
    hes.worst = (hn > 0) ? -worst_eig : 0.0; // violation = -lambda_min
    hes.pass = hn > 0 ? (worst_eig >= -opt.tol) : false;
    hes.worst_at = worst_eig_at;
    rep.add(hes);
    return rep;
}

SemiAntiPshResult certify_semi_anti_psh(const ScalarField& f, const Domain& V,
                                        const std::vector<CVec>& points,
                                        double tol, double fd_step,
                                        int dim_sweep_max) {
    SemiAntiPshResult res;
    res.report.name = "semi_anti_psh[" + f.provenance + "]";
    int sweep = 0;
    for (const auto& z : points) sweep = std::max(sweep, z.dim());
    if (dim_sweep_max > 0) sweep = std::min(sweep, dim_sweep_max);
    res.C_by_truncation.assign(sweep, -std::numeric_limits<double>::infinity());
    std::string worst_at;
    long used = 0;
    for (const auto& z : points) {
        if (!V.contains(z)) continue;
        const HessianForm Hf = mixed_hessian(f, z, fd_step);
        ++used;
        for (int np = 1; np <= std::min(sweep, z.dim()); ++np) {
            const double lm = Hf.max_eig(np);
            if (lm > res.C_by_truncation[np - 1]) {
                res.C_by_truncation[np - 1] = lm;
                if (np == sweep) worst_at = "z=" + z.to_string();
            }
        }
    }
    res.C_estimate = used > 0 ? res.C_by_truncation.back() : 0.0;
    res.passes = used > 0 && std::isfinite(res.C_estimate);

    CertRecord rec;
    rec.check = "semi_anti_psh.hessian_max";
    rec.anchor = "semi_anti_psh.hessian_upper";
    rec.samples = used;
    rec.tolerance = tol;
    rec.worst = res.C_estimate;
    rec.pass = res.passes;
    rec.worst_at = worst_at;
    res.report.add(rec);
    return res;
}

double estimate_lipschitz(const ScalarField& f, const std::vector<CVec>& S) {
    if (S.size() < 2) throw std::invalid_argument("estimate_lipschitz: need |S| >= 2");
    std::vector<double> vals(S.size());
    for (std::size_t i = 0; i < S.size(); ++i) vals[i] = f(S[i]);
    double best = -1.0;
    for (std::size_t i = 0; i < S.size(); ++i)
        for (std::size_t j = i + 1; j < S.size(); ++j) {
            const double d = dist(S[i], S[j]);
            if (d == 0.0) continue;
            best = std::max(best, std::abs(vals[i] - vals[j]) / d);
        }
    if (best < 0.0)
        throw std::invalid_argument("estimate_lipschitz: all points coincide");
    return best;
}

CertificationReport certify_exhaustion(const ScalarField& f, const Domain& V,
                                       const std::vector<double>& levels,
                                       const GaussianSpec& spec,
                                       long samples_per_level) {
    CertificationReport rep;
    rep.name = "exhaustion[" + f.provenance + "]";
    std::vector<double> sorted = levels;
    std::sort(sorted.begin(), sorted.end());

    std::vector<std::vector<CVec>> per_level;
    for (std::size_t li = 0; li < sorted.size(); ++li) {
        const double t = sorted[li];
        auto pts = try_sample_sublevel(sublevel(f, t, V), samples_per_level, spec,
                                       streams::sublevel + li);
        per_level.push_back(pts);

        CertRecord rec;
        rec.check = "exhaustion.margin[t=" + format_double(t) + "]";
        rec.anchor = "exhaustion.sublevel_margin";
        rec.samples = static_cast<long>(pts.size());
        rec.tolerance = 0.0;
        if (pts.empty()) {
            // empty sublevel sets are uniformly included by convention
            rec.worst = -std::numeric_limits<double>::infinity();
            rec.pass = true;
            rec.worst_at = "empty sublevel (vacuous)";
        } else {
            const double margin = uniform_inclusion_margin(pts, V);
            rec.worst = -margin; // violation = -margin, want margin > 0
            rec.pass = margin > 0.0;
            rec.worst_at = "margin=" + format_double(margin);
        }
        rep.add(rec);
    }

    // nested-level margins: points at level s sit strictly inside the open
    // t-sublevel, with a positive gap bounded through the Lipschitz estimate
    for (std::size_t li = 0; li + 1 < sorted.size(); ++li) {
        const double s = sorted[li], t = sorted[li + 1];
        const auto& lo = per_level[li];
        const auto& hi = per_level[li + 1];
        CertRecord rec;
        rec.check = "exhaustion.nested[s=" + format_double(s) +
                    ",t=" + format_double(t) + "]";
        rec.anchor = "exhaustion.nested_margin";
        rec.tolerance = 0.0;
        if (lo.empty()) {
            rec.pass = true;
            rec.worst = -std::numeric_limits<double>::infinity();
            rec.worst_at = "empty inner level (vacuous)";
        } else {
            double sup_lo = -std::numeric_limits<double>::infinity();
            for (const auto& z : lo) sup_lo = std::max(sup_lo, f(z));
            std::vector<CVec> all = hi;
            all.insert(all.end(), lo.begin(), lo.end());
            double C = 1.0;
            if (all.size() >= 2) C = std::max(1e-9, 2.0 * estimate_lipschitz(f, all));
            const double margin = (t - sup_lo) / C;
            rec.samples = static_cast<long>(lo.size());
            rec.worst = -margin;
            rec.pass = margin > 0.0;
            rec.worst_at = "gap=" + format_double(t - sup_lo) +
                           " C=" + format_double(C);
        }
        rep.add(rec);
    }
    return rep;
}

} // namespace pshex
