#include "pshex/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pshex/rng.hpp"

namespace pshex {

double ModulusTable::operator()(double t) const {
    if (grid.empty()) return 0.0;
    if (t <= 0.0) return 0.0;
    if (t >= grid.back()) return values.back();
    // piecewise linear through (0,0), (grid[k], values[k])
    double t0 = 0.0, v0 = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (t <= grid[k]) {
            const double u = (t - t0) / (grid[k] - t0);
            return v0 + u * (values[k] - v0);
        }
        t0 = grid[k];
        v0 = values[k];
    }
    return values.back();
}

ModulusTable estimate_modulus(const ScalarField& f, const std::vector<CVec>& S,
                              int buckets) {
    if (S.size() < 2) throw std::invalid_argument("estimate_modulus: need |S| >= 2");
    std::vector<double> vals(S.size());
    for (std::size_t i = 0; i < S.size(); ++i) vals[i] = f(S[i]);
    double dmax = 0.0;
    for (std::size_t i = 0; i < S.size(); ++i)
        for (std::size_t j = i + 1; j < S.size(); ++j)
            dmax = std::max(dmax, dist(S[i], S[j]));
    ModulusTable tab;
    if (dmax == 0.0) {
        tab.grid = {1.0};
        tab.values = {0.0};
        return tab;
    }
    tab.grid.resize(buckets);
    tab.values.assign(buckets, 0.0);
    for (int k = 0; k < buckets; ++k) tab.grid[k] = dmax * (k + 1) / buckets;
    for (std::size_t i = 0; i < S.size(); ++i)
        for (std::size_t j = i + 1; j < S.size(); ++j) {
            const double d = dist(S[i], S[j]);
            int k = std::min<int>(buckets - 1,
                                  static_cast<int>(std::ceil(d / dmax * buckets)) - 1);
            if (k < 0) k = 0;
            tab.values[k] = std::max(tab.values[k], std::abs(vals[i] - vals[j]));
        }
    // monotone envelope
    for (int k = 1; k < buckets; ++k)
        tab.values[k] = std::max(tab.values[k], tab.values[k - 1]);
    // subadditive upper completion on the uniform grid (two settling passes)
    for (int pass = 0; pass < 2; ++pass)
        for (int k = 1; k < buckets; ++k)
            for (int i = 0; i < k; ++i)
                tab.values[k] =
                    std::min(tab.values[k], tab.values[i] + tab.values[k - i - 1]);
    // re-impose monotonicity (completion keeps it on a uniform grid, but be safe)
    for (int k = 1; k < buckets; ++k)
        tab.values[k] = std::max(tab.values[k], tab.values[k - 1]);
    return tab;
}

double EnvelopeSpec::effective_radius() const {
    const double base = std::sqrt(std::max(0.0, 4.0 * t * sup_f)) + 1e-6;
    return search_radius > base ? search_radius : base;
}

namespace {

// real gradient of g as a complex vector G_j = 2 conj(d_j g)
CVec real_gradient(const ScalarField& f, const CVec& z, double h) {
    const int n = z.dim();
    CVec G(n);
    if (f.has_grad()) {
        const auto dg = f.grad(z);
        for (int j = 0; j < n; ++j) G.set(j, 2.0 * std::conj(dg[j]));
        return G;
    }
    for (int j = 0; j < n; ++j) {
        CVec zp = z, zm = z;
        zp.set(j, z[j] + cplx{h, 0.0});
        zm.set(j, z[j] - cplx{h, 0.0});
        const double dx = (f(zp) - f(zm)) / (2.0 * h);
        zp = z; zm = z;
        zp.set(j, z[j] + cplx{0.0, h});
        zm.set(j, z[j] - cplx{0.0, h});
        const double dy = (f(zp) - f(zm)) / (2.0 * h);
        G.set(j, cplx{dx, dy});
    }
    return G;
}

} // namespace

ScalarField lasry_lions(const ScalarField& f, const EnvelopeSpec& env,
                        std::shared_ptr<EnvelopeDiagnostics> diag) {
    if (!(env.t > 0.0)) throw std::invalid_argument("lasry_lions: t must be > 0");
    const double R = env.effective_radius();
    const double t = env.t;
    // frozen start offsets, shared by all queries so the field is a
    // deterministic function of z
    auto offsets = std::make_shared<std::vector<CVec>>();
    offsets->push_back(CVec(1)); // the query point itself
    {
        CounterRng rng(env.seed, streams::envelope_start);
        std::uint64_t ctr = 0;
        for (int s = 1; s < std::max(1, env.starts); ++s) {
            CVec off(64); // ambient fixed later by re-dimensioning on use
            for (int i = 0; i < 64; ++i) {
                double a, b;
                rng.normal_pair(ctr++, a, b);
                off.set(i, 0.5 * R * cplx{a, b} / 8.0);
            }
            offsets->push_back(off);
        }
    }

    auto inner = f.eval;
    auto grad_fn = f.grad;
    ScalarField g_inner = f;
    const int iters = env.max_iters;
    const double gtol = env.grad_tol;
    const double fd_h = env.fd_step;

    ScalarField out;
    out.provenance = "envelope[" + f.provenance + "]";
    out.eval = [inner, g_inner, offsets, R, t, iters, gtol, fd_h, diag](const CVec& z) {
        const int n = z.dim();
        auto objective = [&](const CVec& zeta) {
            const CVec d = zeta - z;
            return inner(zeta) + d.norm_sq() / (2.0 * t);
        };
        double best = objective(z);
        double best_res = 0.0;
        bool best_converged = true;

        for (const auto& off_raw : *offsets) {
            // clip the start into the search ball
            CVec zeta = z;
            {
                CVec off(n);
                for (int i = 0; i < n; ++i) off.set(i, off_raw[i]);
                const double on = off.norm();
                if (on > R) off = off * cplx{R / on, 0.0};
                zeta = z + off;
            }
            double fv = objective(zeta);
            double step = t;
            bool converged = false;
            double res = 0.0;
            for (int it = 0; it < iters; ++it) {
                CVec G = real_gradient(g_inner, zeta, fd_h);
                for (int i = 0; i < n; ++i) G.set(i, G[i] + (zeta[i] - z[i]) / t);
                res = G.norm();
                if (res <= gtol) { converged = true; break; }
                // backtracking line search with projection onto the ball
                bool moved = false;
                double gamma = step;
                for (int bt = 0; bt < 30; ++bt) {
                    CVec cand = zeta - cplx{gamma, 0.0} * G;
                    CVec d = cand - z;
                    const double dn = d.norm();
                    if (dn > R) cand = z + d * cplx{R / dn, 0.0};
                    const double cv = objective(cand);
                    if (cv <= fv - 0.25 * gamma * res * res) {
                        zeta = cand;
                        fv = cv;
                        step = std::min(gamma * 2.0, 4.0 * t);
                        moved = true;
                        break;
                    }
                    gamma *= 0.5;
                }
                if (!moved) { converged = res <= 1e2 * gtol; break; }
            }
            if (fv < best) {
                best = fv;
                best_res = res;
                best_converged = converged;
            }
        }
        if (diag) {
            diag->worst_grad_norm = std::max(diag->worst_grad_norm, best_res);
            diag->solver_gap =
                std::max(diag->solver_gap, best_res * best_res * t / 2.0 + 1e-12);
            if (!best_converged) ++diag->non_converged;
        }
        return best;
    };
    return out;
}

} // namespace pshex
