#include "pshex/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "pshex/mollify.hpp"

namespace pshex {

std::string stage_name(PipelineStage s) {
    switch (s) {
        case PipelineStage::lipschitz_eta: return "lipschitz_eta";
        case PipelineStage::smooth_Psi: return "smooth_Psi";
        case PipelineStage::semi_anti_Psi: return "semi_anti_Psi";
        case PipelineStage::psh_eta: return "psh_eta";
    }
    return "?";
}

std::string PipelineState::to_json() const {
    nlohmann::json j;
    j["stage"] = stage_name(stage);
    j["c0"] = c0;
    j["truncation_K"] = truncation_K;
    j["kit_c"] = kit_c;
    j["kit_K0"] = kit_K0;
    for (const auto& [k, v] : lipschitz_table) j["lipschitz_table"][std::to_string(k)] = v;
    j["eps_seq"] = eps_seq;
    j["level_sup"] = level_sup;
    for (const auto& [t, l] : lambda_table) j["lambda_table"][format_double(t)] = l;
    j["t_seq"] = t_seq;
    j["alpha_seq"] = alpha_seq;
    j["s_seq"] = s_seq;
    j["cjk_seq"] = cjk_seq;
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& r : construction_checks.records)
        checks.push_back(nlohmann::json::parse(r.to_json()));
    j["construction_checks"] = checks;
    return j.dump(2);
}

// ---------------------------------------------------------------------------

ScalarField lipschitz_exhaustion(const Domain& V, double c0) {
    ScalarField f;
    f.provenance = "lipschitz_eta[" + V.name + "]";
    if (V.is_full_space) {
        auto base = fields::sq_norm();
        f.eval = [c0, base](const CVec& z) { return 1.0 + base(z) + c0; };
        f.grad = base.grad;
        f.hessian = base.hessian;
        return f;
    }
    const Domain Vc = V;
    f.eval = [Vc, c0](const CVec& z) {
        if (!Vc.contains(z)) return std::numeric_limits<double>::infinity();
        return -std::log(Vc.distance(z)) + z.norm_sq() + c0;
    };
    if (V.neg_log_dist_grad) {
        f.grad = [Vc](const CVec& z) {
            auto g = Vc.neg_log_dist_grad(z);
            for (int j = 0; j < z.dim(); ++j) g[j] += std::conj(z[j]);
            return g;
        };
    }
    if (V.neg_log_dist_hessian) {
        f.hessian = [Vc](const CVec& z) {
            Eigen::MatrixXcd H = Vc.neg_log_dist_hessian(z);
            for (int i = 0; i < z.dim(); ++i) H(i, i) += 1.0;
            return H;
        };
    }
    return f;
}

double choose_c0(const Domain& V, const GaussianSpec& spec, long samples) {
    if (V.is_full_space) return 0.0;
    double inf_v = std::numeric_limits<double>::infinity();
    long found = 0;
    for (long k = 0; k < samples; ++k) {
        const CVec z = spec.draw(streams::cert_points, static_cast<std::uint64_t>(k));
        if (!V.contains(z)) continue;
        ++found;
        inf_v = std::min(inf_v, z.norm_sq() - std::log(V.distance(z)));
    }
    if (found == 0)
        throw PipelineAbort("choose_c0: no Gaussian sample lands in the domain");
    return std::max(0.0, 1.0 - inf_v) + 1.0;
}

// ---------------------------------------------------------------------------

namespace {

struct LevelConstant {
    double C = 1.0;
    long samples = 0;
};

LevelConstant estimate_level_constant(const ScalarField& eta,
                                      const std::vector<CVec>& pts, double safety) {
    LevelConstant lc;
    lc.samples = static_cast<long>(pts.size());
    if (pts.size() < 2) return lc;
    double sup = 0.0;
    for (const auto& z : pts) sup = std::max(sup, std::abs(eta(z)));
    const double lip = estimate_lipschitz(eta, pts);
    lc.C = safety * std::max({lip, sup, 1.0});
    return lc;
}

// the cutoff-level product: z in V ? I_tau(eta(z)) * eta(z) : 0
ScalarField cutoff_level_field(const Domain& V, const ScalarField& eta, double tau) {
    ScalarField f;
    f.provenance = "cutoff_level";
    const Domain Vc = V;
    auto ev = eta.eval;
    f.eval = [Vc, ev, tau](const CVec& z) {
        if (!Vc.contains(z)) return 0.0;
        const double e = ev(z);
        const double w = eval_cutoff(tau, e);
        return w == 0.0 ? 0.0 : w * e;
    };
    if (eta.grad) {
        auto gr = eta.grad;
        f.grad = [Vc, ev, gr, tau](const CVec& z) {
            if (!Vc.contains(z)) return std::vector<cplx>(z.dim());
            const double e = ev(z);
            const double w = eval_cutoff(tau, e);
            const double dw = eval_cutoff_deriv(tau, e);
            if (w == 0.0 && dw == 0.0) return std::vector<cplx>(z.dim());
            const double chain = dw * e + w; // (I(s) s)' at s = eta(z)
            auto g = gr(z);
            for (auto& c : g) c *= chain;
            return g;
        };
    }
    return f;
}

CertRecord make_check(const std::string& check, const std::string& anchor,
                      long samples, double tol, double worst, bool pass,
                      std::string at = "") {
    CertRecord r;
    r.check = check;
    r.anchor = anchor;
    r.samples = samples;
    r.tolerance = tol;
    r.worst = worst;
    r.pass = pass;
    r.worst_at = std::move(at);
    return r;
}

std::vector<cplx> field_grad_at(const ScalarField& f, const CVec& z) {
    if (f.grad) return f.grad(z);
    return wirtinger_grad(f, z).holo;
}

Eigen::MatrixXcd field_hess_at(const ScalarField& f, const CVec& z) {
    return mixed_hessian(f, z).H;
}

} // namespace

// ---------------------------------------------------------------------------
// smooth exhaustion

ConstructedField smooth_exhaustion(const Domain& V, const CutoffKit& kit,
                                   const GaussianSpec& spec,
                                   const PipelineOptions& opt) {
    if (V.is_full_space)
        throw std::invalid_argument(
            "smooth_exhaustion: trivial on the full space, use the squared norm");

    PipelineState st;
    st.stage = PipelineStage::smooth_Psi;
    st.kit_c = kit.c;
    st.kit_K0 = kit.K0;
    st.c0 = opt.c0 >= 0.0 ? opt.c0 : choose_c0(V, spec, 4096);
    const ScalarField eta = lipschitz_exhaustion(V, st.c0);
    const int K = opt.series_K;
    st.truncation_K = K;

    auto dirs = sweep_directions(spec, 8);

    std::vector<ScalarField> eta_j;
    std::vector<double> Cj(K + 1, 1.0), epsj(K + 1, 0.0);
    std::vector<double> weight(K + 1, 0.0);

    for (int j = 1; j <= K; ++j) {
        auto level_pts = try_sample_sublevel(sublevel(eta, j + 0.5, V), opt.level_samples,
                                             spec, streams::sublevel + 100 + j);
        const LevelConstant lc = estimate_level_constant(eta, level_pts, opt.safety);
        Cj[j] = lc.C;
        st.lipschitz_table[j] = lc.C;

        auto inner_pts = try_sample_sublevel(sublevel(eta, static_cast<double>(j), V, true),
                                             opt.cert_samples, spec,
                                             streams::sublevel + 200 + j);
        // sup of eta over the level set is capped by the level itself
        weight[j] = static_cast<double>(j);

        std::vector<CVec> shell;
        {
            auto wide = try_sample_sublevel(sublevel(eta, j + 4.0, V), opt.cert_samples,
                                            spec, streams::sublevel + 300 + j);
            for (const auto& z : wide)
                if (eta(z) >= j + 3.0) shell.push_back(z);
        }

        double eps = std::min(0.999 / (2.0 * Cj[j]), 0.5);
        bool ok = false;
        long tested = 0;
        for (int halve = 0; halve < opt.eps_halving_limit && !ok; ++halve) {
            ok = true;
            tested = 0;
            // closed-ball inclusion into the half-level up
            for (const auto& z : inner_pts) {
                for (const auto& u : dirs) {
                    for (double rho : {1.0, 0.5}) {
                        const CVec y = z + u * cplx{rho * eps, 0.0};
                        ++tested;
                        if (!V.contains(y) || eta(y) >= j + 0.5) { ok = false; break; }
                    }
                    if (!ok) break;
                }
                if (!ok) break;
            }
            // separation of the far shell from the (j+2)-sublevel
            if (ok) {
                for (const auto& z : shell) {
                    for (const auto& u : dirs) {
                        const CVec y = z + u * cplx{eps, 0.0};
                        ++tested;
                        const bool in_lvl = V.contains(y) && eta(y) < j + 2.0;
                        if (in_lvl) { ok = false; break; }
                    }
                    if (!ok) break;
                }
            }
            if (!ok) {
                eps *= 0.5;
                if (eps < opt.eps_floor)
                    throw PipelineAbort("smooth_exhaustion: domain resolution exceeded at level " +
                                        std::to_string(j));
            }
        }
        epsj[j] = eps;
        st.construction_checks.add(make_check(
            "smooth.eps_inclusions[j=" + std::to_string(j) + "]",
            "exhaustion.eps_geometry", tested, 0.0, ok ? -1.0 : 1.0, ok,
            "eps=" + format_double(eps)));

        MollifyOptions mo;
        mo.budget = opt.mollify_budget;
        mo.normalized = true;
        mo.stream_offset = static_cast<std::uint64_t>(j) * 1000003ULL;
        eta_j.push_back(mollify(cutoff_level_field(V, eta, j + 1.0), eps, kit, spec, mo));
    }
    st.eps_seq.assign(epsj.begin() + 1, epsj.end());
    st.level_sup.assign(weight.begin() + 1, weight.end());

    const double inv_psi1 = 1.0 / psi0(1.0);
    auto terms = std::make_shared<std::vector<ScalarField>>(std::move(eta_j));
    auto wts = std::make_shared<std::vector<double>>(weight);
    auto cj = std::make_shared<std::vector<double>>(Cj);
    auto ej = std::make_shared<std::vector<double>>(epsj);

    auto partial = [terms, wts, cj, ej, inv_psi1, K](const CVec& z, int upto) {
        double s = 0.0;
        const int kmax = std::min(upto, K);
        for (int j = 1; j <= kmax; ++j) {
            const double arg = (*terms)[j - 1](z) + (*cj)[j] * (*ej)[j] + 2.0 - j;
            s += (*wts)[j] * inv_psi1 * psi0(arg);
        }
        return s;
    };

    ConstructedField out;
    out.state = std::move(st);
    out.partial_eval = partial;
    out.field = make_field([partial, K](const CVec& z) { return partial(z, K); },
                           "pipeline:smooth_Psi");
    out.level_fields = *terms;
    return out;
}

// ---------------------------------------------------------------------------
// semi-anti-psh exhaustion (and the bound bundle reused by the psh pipeline)

namespace {

// Quadratic inf-convolution of one cutoff level, specialized for the series:
// damped fixed-point iteration on the stationarity map zeta = y - t grad,
// a few frozen extra starts, analytic gradients when the level has them.
struct ProxLevel {
    ScalarField g;
    double t = 1.0;
    double radius = 1.0;
    int iters = 40;
    std::vector<CVec> offsets; // frozen unit starts (scaled by radius/2)

    CVec grad_of_g(const CVec& zeta) const {
        const int n = zeta.dim();
        CVec G(n); // real gradient as a complex vector: G_j = 2 conj(d_j g)
        if (g.grad) {
            const auto dg = g.grad(zeta);
            for (int i = 0; i < n; ++i) G.set(i, 2.0 * std::conj(dg[i]));
            return G;
        }
        const double h = 1e-6;
        for (int i = 0; i < n; ++i) {
            CVec p = zeta, m = zeta;
            p.set(i, zeta[i] + cplx{h, 0});
            m.set(i, zeta[i] - cplx{h, 0});
            const double dx = (g(p) - g(m)) / (2 * h);
            p = zeta; m = zeta;
            p.set(i, zeta[i] + cplx{0, h});
            m.set(i, zeta[i] - cplx{0, h});
            const double dy = (g(p) - g(m)) / (2 * h);
            G.set(i, cplx{dx, dy});
        }
        return G;
    }

    double eval(const CVec& y) const {
        auto obj = [&](const CVec& zeta) {
            const double gz = g(zeta);
            return gz + dist(zeta, y) * dist(zeta, y) / (2.0 * t);
        };
        double best = g(y); // zeta = y keeps U <= g
        const int n = y.dim();
        for (std::size_t s = 0; s <= offsets.size(); ++s) {
            CVec zeta = y;
            if (s > 0) {
                CVec off(n);
                for (int i = 0; i < n; ++i) off.set(i, offsets[s - 1][i]);
                zeta = y + off * cplx{0.5 * radius, 0.0};
            }
            double fv = obj(zeta);
            for (int it = 0; it < iters; ++it) {
                CVec G = grad_of_g(zeta);
                // stationarity residual of the full objective
                CVec res = G;
                for (int i = 0; i < n; ++i) res.set(i, res[i] + (zeta[i] - y[i]) / t);
                if (res.norm() <= 1e-10) break;
                CVec cand = y - G * cplx{t, 0.0}; // fixed point of the prox map
                {
                    CVec d = cand - y;
                    const double dn = d.norm();
                    if (dn > radius) cand = y + d * cplx{radius / dn, 0.0};
                }
                double cv = obj(cand);
                if (cv <= fv - 1e-14 * (1.0 + std::abs(fv))) {
                    zeta = cand;
                    fv = cv;
                    continue;
                }
                // damped relaxation toward the fixed point
                double beta = 0.5;
                bool moved = false;
                while (beta > 1e-3) {
                    CVec mid = zeta + (cand - zeta) * cplx{beta, 0.0};
                    const double mv = obj(mid);
                    if (mv < fv - 1e-14 * (1.0 + std::abs(fv))) {
                        zeta = mid; fv = mv; moved = true; break;
                    }
                    beta *= 0.5;
                }
                if (!moved) break;
            }
            best = std::min(best, fv);
        }
        return best;
    }
};

struct PsiBundle {
    int K = 0;
    double inv_psi1 = 0.0;
    std::vector<double> t_seq;
    std::vector<ScalarField> P;          // I_j eta, defined everywhere
    std::vector<ProxLevel> prox;         // the inf-convolution engines
    std::vector<double> gap;             // sampled sup of P_j - U_j (<= 1)
    mutable long exact_evals = 0;

    double U(int j, const CVec& z) const { return prox[j - 1].eval(z); }

    double term_from(int j, double u) const { return j * inv_psi1 * psi0(u + 3.0 - j); }

    double exact(const CVec& z) const {
        ++exact_evals;
        return partial(z, K);
    }
    double partial(const CVec& z, int upto) const {
        double s = 0.0;
        for (int j = 1; j <= std::min(upto, K); ++j) {
            // U_j <= P_j, so the term vanishes whenever psi's argument cannot
            // reach past zero; skip the inner solve in that case
            const double pv = P[j - 1](z);
            if (pv + 3.0 - j <= 0.0) continue;
            s += term_from(j, U(j, z));
        }
        return s;
    }
    double ub(const CVec& z) const {
        double s = 0.0;
        for (int j = 1; j <= K; ++j) s += term_from(j, P[j - 1](z));
        return s;
    }
    double lb(const CVec& z) const {
        // the selected t_j certify U_j >= P_j - 1 on the sampled sets
        double s = 0.0;
        for (int j = 1; j <= K; ++j) s += term_from(j, P[j - 1](z) - 1.0);
        return s;
    }
    /// Is Psi(z) < level, deciding through the cheap bounds when possible.
    bool below(const CVec& z, double level) const {
        const double u = ub(z);
        if (u < level) return true;
        const double l = lb(z);
        if (l >= level) return false;
        return exact(z) < level;
    }
};

ScalarField bundle_exact_field(std::shared_ptr<PsiBundle> B) {
    return make_field([B](const CVec& z) { return B->exact(z); },
                      "pipeline:semi_anti_Psi");
}

std::shared_ptr<PsiBundle> build_psi_bundle(const Domain& V, const ScalarField& eta,
                                            const GaussianSpec& spec,
                                            const PipelineOptions& opt,
                                            PipelineState& st) {
    auto B = std::make_shared<PsiBundle>();
    B->K = opt.series_K;
    B->inv_psi1 = 1.0 / psi0(1.0);

    // frozen unit start offsets shared by every level
    std::vector<CVec> offsets;
    for (int s = 0; s < 3; ++s) {
        CVec g = spec.draw(streams::envelope_start, 1000 + s);
        if (g.norm() > 0.0) offsets.push_back(normalized(g));
    }

    for (int j = 1; j <= B->K; ++j) {
        ScalarField Pj = cutoff_level_field(V, eta, static_cast<double>(j));
        Pj.provenance = "cutoff_level[" + std::to_string(j) + "]";
        const double sup_bound = j + 1.0; // the cutoff support caps the product

        // points where the sandwich is binding: the level set plus ambient mass
        std::vector<CVec> check;
        {
            auto lvl = try_sample_sublevel(sublevel(eta, j + 1.0, V), opt.cert_samples / 2,
                                           spec, streams::sublevel + 400 + j);
            check.insert(check.end(), lvl.begin(), lvl.end());
            for (long k = 0; k < opt.cert_samples / 2; ++k)
                check.push_back(spec.draw(streams::cert_points, 50000 + k));
        }
        ModulusTable wtab = estimate_modulus(
            Pj, std::vector<CVec>(check.begin(),
                                  check.begin() + std::min<std::size_t>(check.size(), 96)));

        double t = 1.0;
        bool ok = false;
        double worst_gap = 0.0;
        for (int depth = 0; depth < opt.tj_bisect_depth && !ok; ++depth) {
            if (wtab(2.0 * std::sqrt(t * sup_bound)) > 1.0 - 1e-3 &&
                depth + 1 < opt.tj_bisect_depth) {
                t *= 0.5;
                continue;
            }
            ProxLevel prox;
            prox.g = Pj;
            prox.t = t;
            prox.radius = std::sqrt(4.0 * t * sup_bound) + 1e-6;
            prox.iters = opt.envelope_iters;
            prox.offsets = offsets;

            ok = true;
            worst_gap = 0.0;
            for (const auto& z : check) {
                const double gap = Pj(z) - prox.eval(z); // in [0, 1] wanted
                worst_gap = std::max(worst_gap, gap);
                if (gap > 1.0 + 1e-9) { ok = false; break; }
            }
            if (ok) {
                B->t_seq.push_back(t);
                B->P.push_back(Pj);
                B->prox.push_back(std::move(prox));
                B->gap.push_back(std::min(1.0, worst_gap + 1e-6));
            } else {
                t *= 0.5;
            }
        }
        if (!ok)
            throw PipelineAbort("semi_anti_psh_exhaustion: envelope level " +
                                std::to_string(j) + " failed the sandwich after bisection");
        st.construction_checks.add(make_check(
            "semi_anti.envelope_sandwich[j=" + std::to_string(j) + "]",
            "envelope.sandwich", static_cast<long>(check.size()), 1.0,
            worst_gap - 1.0, true, "t_j=" + format_double(t)));
    }
    st.t_seq = B->t_seq;
    return B;
}

ConstructedField bundle_to_field(std::shared_ptr<PsiBundle> B, PipelineState st) {
    ConstructedField out;
    st.stage = PipelineStage::semi_anti_Psi;
    out.state = std::move(st);
    out.partial_eval = [B](const CVec& z, int upto) { return B->partial(z, upto); };
    out.field = bundle_exact_field(B);
    for (int j = 1; j <= B->K; ++j)
        out.level_fields.push_back(make_field(
            [B, j](const CVec& z) { return B->U(j, z); },
            "envelope_level[" + std::to_string(j) + "]"));
    return out;
}

} // namespace

ConstructedField semi_anti_psh_exhaustion(const Domain& V, const CutoffKit& kit,
                                          const GaussianSpec& spec,
                                          const PipelineOptions& opt) {
    PipelineState st;
    st.kit_c = kit.c;
    st.kit_K0 = kit.K0;
    st.c0 = opt.c0 >= 0.0 ? opt.c0 : choose_c0(V, spec, 4096);
    st.truncation_K = opt.series_K;
    const ScalarField eta = lipschitz_exhaustion(V, st.c0);
    auto B = build_psi_bundle(V, eta, spec, opt, st);
    return bundle_to_field(B, std::move(st));
}

// ---------------------------------------------------------------------------
// plurisubharmonic exhaustion (four steps)

double lambda_of(const ScalarField& rho, const ScalarField& Psi, double t,
                 const Domain& V, const GaussianSpec& spec, long samples) {
    auto pts = try_sample_sublevel(sublevel(rho, t, V, true), samples, spec,
                                   streams::sublevel + 7000 + static_cast<int>(t * 16));
    double sup = -std::numeric_limits<double>::infinity();
    for (const auto& z : pts) sup = std::max(sup, Psi(z));
    return 1.0 + std::max(t, sup);
}

namespace {

// One mollified level of the final series. The cutoff weight is
// I_{lambda_j + 1}(Psi(.)); in the certified region every kernel point keeps
// weight one, outside it the weight is decided per sample through the cheap
// Psi brackets, with the exact envelope only inside the transition window.
struct RhoJ {
    double eps = 0.0;
    double thresh = 0.0;    // cutoff threshold lambda_j + 1
    double bound_lip = 1e12; // certified slope of the Psi brackets (x safety)
    std::vector<CVec> pts;  // eps-scaled kernel offsets with positive weight
    std::vector<double> wts;
    double scale = 1.0;
    Domain V;
    ScalarField rho;
    std::shared_ptr<PsiBundle> psi;

    // Weight of one kernel point. The dispatch is continuous: the bracket
    // branches agree with the exact cutoff value wherever they meet it.
    // window = strictly inside the cutoff transition, where the product is
    // not locally (constant weight) * rho.
    double weight(const CVec& y, bool* in_window = nullptr) const {
        if (in_window) *in_window = false;
        if (!V.contains(y)) return 0.0;
        if (psi->ub(y) <= thresh) return 1.0;
        if (psi->lb(y) >= thresh + 1.0) return 0.0;
        const double p = psi->exact(y);
        if (p <= thresh) return 1.0;
        if (p >= thresh + 1.0) return 0.0;
        if (in_window) *in_window = true;
        return eval_cutoff(thresh, p);
    }

    // Whole-kernel shortcuts, consistent with the per-sample dispatch through
    // the certified bracket slope.
    bool all_one(const CVec& z) const {
        return psi->ub(z) + bound_lip * eps <= thresh;
    }
    bool all_zero(const CVec& z) const {
        return psi->lb(z) - bound_lip * eps >= thresh + 1.0;
    }

    double eval(const CVec& z) const {
        const double tail = eps * z.norm_sq();
        if (all_zero(z)) return tail;
        const bool one = all_one(z);
        double s = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const CVec y = z - pts[i];
            const double w = one ? (V.contains(y) ? 1.0 : 0.0) : weight(y);
            if (w > 0.0) s += wts[i] * w * rho(y);
        }
        return s * scale + tail;
    }

    // the single-sample product as a field, for the rare transition samples
    ScalarField sample_product(std::size_t i) const {
        const CVec off = pts[i];
        const RhoJ* self = this;
        return make_field([self, off](const CVec& z) {
            const CVec y = z - off;
            const double w = self->weight(y);
            return w > 0.0 ? w * self->rho(y) : 0.0;
        });
    }
};

ScalarField rhoj_field(std::shared_ptr<RhoJ> R, int j) {
    ScalarField f;
    f.provenance = "pipeline:rho_j[" + std::to_string(j) + "]";
    f.eval = [R](const CVec& z) { return R->eval(z); };
    const bool closed = static_cast<bool>(R->rho.grad) && static_cast<bool>(R->rho.hessian);
    if (!closed) return f;

    f.grad = [R](const CVec& z) {
        std::vector<cplx> acc(z.dim(), cplx{0.0, 0.0});
        if (!R->all_zero(z)) {
            const bool one = R->all_one(z);
            for (std::size_t i = 0; i < R->pts.size(); ++i) {
                const CVec y = z - R->pts[i];
                bool window = false;
                const double w =
                    one ? (R->V.contains(y) ? 1.0 : 0.0) : R->weight(y, &window);
                if (window) {
                    const auto g = wirtinger_grad(R->sample_product(i), z, 1e-5).holo;
                    for (int c = 0; c < z.dim(); ++c) acc[c] += R->wts[i] * g[c];
                } else if (w > 0.0) {
                    const auto g = R->rho.grad(y);
                    for (int c = 0; c < z.dim(); ++c) acc[c] += R->wts[i] * w * g[c];
                }
            }
        }
        for (int c = 0; c < z.dim(); ++c)
            acc[c] = acc[c] * R->scale + R->eps * std::conj(z[c]);
        return acc;
    };
    f.hessian = [R](const CVec& z) {
        Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(z.dim(), z.dim());
        if (!R->all_zero(z)) {
            const bool one = R->all_one(z);
            for (std::size_t i = 0; i < R->pts.size(); ++i) {
                const CVec y = z - R->pts[i];
                bool window = false;
                const double w =
                    one ? (R->V.contains(y) ? 1.0 : 0.0) : R->weight(y, &window);
                if (window) {
                    H += R->wts[i] * fd_mixed_hessian(R->sample_product(i), z, 1e-4).H;
                } else if (w > 0.0) {
                    H += (R->wts[i] * w) * R->rho.hessian(y);
                }
            }
        }
        H *= R->scale;
        for (int c = 0; c < z.dim(); ++c) H(c, c) += R->eps;
        return H;
    };
    return f;
}

std::vector<CVec> sample_psi_sublevel(const PsiBundle& B, const Domain& V,
                                      const GaussianSpec& spec, double level,
                                      long want, std::uint64_t stream) {
    std::vector<CVec> out;
    const long budget = spec.sample_budget();
    for (long k = 0; k < budget && static_cast<long>(out.size()) < want; ++k) {
        const CVec z = spec.draw(stream, static_cast<std::uint64_t>(k));
        if (!V.contains(z)) continue;
        if (B.below(z, level)) out.push_back(z);
    }
    return out;
}

} // namespace

ConstructedField psh_exhaustion(const Domain& V, const CutoffKit& kit,
                                const GaussianSpec& spec,
                                const PipelineOptions& opt) {
    if (V.is_full_space) {
        // trivial answer on the whole space
        PipelineState st;
        st.stage = PipelineStage::psh_eta;
        st.kit_c = kit.c;
        st.kit_K0 = kit.K0;
        ConstructedField out;
        out.state = std::move(st);
        auto sq = fields::sq_norm();
        out.field = sq;
        out.field.provenance = "pipeline:psh_eta";
        out.partial_eval = [sq](const CVec& z, int) { return sq(z); };
        return out;
    }

    PipelineState st;
    st.stage = PipelineStage::psh_eta;
    st.kit_c = kit.c;
    st.kit_K0 = kit.K0;
    st.c0 = opt.c0 >= 0.0 ? opt.c0 : choose_c0(V, spec, 4096);
    const int K = opt.series_K;
    st.truncation_K = K;

    // Step 1: the Lipschitz core, the envelope bundle above it, the level map
    const ScalarField rho = lipschitz_exhaustion(V, st.c0);
    auto B = build_psi_bundle(V, rho, spec, opt, st);
    ScalarField PsiExact = bundle_exact_field(B);

    std::vector<double> lambda(K + 2, 0.0);
    for (int t = 1; t <= K + 1; ++t) {
        const double raw = lambda_of(rho, PsiExact, t, V, spec, opt.level_samples);
        lambda[t] = std::max({raw, t + 1.0, (t > 1 ? lambda[t - 1] + 1e-9 : 0.0)});
        st.lambda_table[t] = lambda[t];
    }

    auto dirs = sweep_directions(spec, 8);
    std::vector<std::shared_ptr<RhoJ>> rj(K + 1);
    std::vector<ScalarField> rho_j(K + 1);

    for (int j = 1; j <= K; ++j) {
        // level constant at the rho-sublevel lambda(j)+1/2 covers both fields
        auto cpts = try_sample_sublevel(sublevel(rho, lambda[j] + 0.5, V),
                                        opt.level_samples, spec,
                                        streams::sublevel + 500 + j);
        LevelConstant lc = estimate_level_constant(rho, cpts, opt.safety);
        {
            const long m = std::min<long>(static_cast<long>(cpts.size()), 32);
            if (m >= 2) {
                std::vector<CVec> sub(cpts.begin(), cpts.begin() + m);
                double psisup = 0.0;
                for (const auto& z : sub) psisup = std::max(psisup, B->ub(z));
                const double psilip = estimate_lipschitz(PsiExact, sub);
                lc.C = std::max({lc.C, opt.safety * psilip, opt.safety * psisup});
            }
        }
        st.lipschitz_table[j] = lc.C;

        auto region = sample_psi_sublevel(*B, V, spec, lambda[j], opt.cert_samples,
                                          streams::sublevel + 600 + j);
        double max_nsq = 0.0;
        for (const auto& z : region) max_nsq = std::max(max_nsq, z.norm_sq());
        double eps = 0.999 / (1.0 + max_nsq + lc.C);

        auto region4 = sample_psi_sublevel(*B, V, spec, lambda[j] + 4.0,
                                           opt.cert_samples / 2,
                                           streams::sublevel + 700 + j);
        // outer shell for the support check
        std::vector<CVec> outer;
        for (long k = 0; k < spec.sample_budget() &&
                         static_cast<long>(outer.size()) < opt.cert_samples / 4; ++k) {
            const CVec z = spec.draw(streams::sublevel + 800 + j, static_cast<std::uint64_t>(k));
            if (!V.contains(z)) continue;
            if (!B->below(z, lambda[j] + 3.0)) outer.push_back(z);
        }

        bool ok = false;
        long tested = 0;
        for (int halve = 0; halve < opt.eps_halving_limit && !ok; ++halve) {
            ok = true;
            tested = 0;
            for (const auto& z : region) {
                for (const auto& u : dirs) {
                    const CVec y = z - u * cplx{eps, 0.0};
                    ++tested;
                    if (!V.contains(y) || !B->below(y, lambda[j] + 0.5)) { ok = false; break; }
                }
                if (!ok) break;
            }
            if (ok) {
                for (const auto& z : outer) {
                    for (const auto& u : dirs) {
                        const CVec y = z - u * cplx{eps, 0.0};
                        ++tested;
                        if (V.contains(y) && B->below(y, lambda[j] + 2.0)) { ok = false; break; }
                    }
                    if (!ok) break;
                }
            }
            if (ok) {
                for (const auto& z : region4) {
                    for (const auto& u : dirs) {
                        const CVec y = z - u * cplx{eps, 0.0};
                        ++tested;
                        if (!V.contains(y) || !B->below(y, lambda[j] + 5.0)) { ok = false; break; }
                    }
                    if (!ok) break;
                }
            }
            if (!ok) {
                eps *= 0.5;
                if (eps < opt.eps_floor)
                    throw PipelineAbort("psh_exhaustion: domain resolution exceeded at level " +
                                        std::to_string(j));
            }
        }
        st.eps_seq.push_back(eps);
        st.construction_checks.add(make_check(
            "psh.eps_inclusions[j=" + std::to_string(j) + "]",
            "exhaustion.eps_geometry", tested, 0.0, ok ? -1.0 : 1.0, ok,
            "eps=" + format_double(eps)));

        // the mollified level field rho_j
        auto R = std::make_shared<RhoJ>();
        R->eps = eps;
        R->thresh = lambda[j] + 1.0;
        R->V = V;
        R->rho = rho;
        R->psi = B;
        {
            // certified slope of the Psi bracket fields on the sampled region
            double lip = 1.0;
            const long m = std::min<long>(static_cast<long>(cpts.size()), 48);
            if (m >= 2) {
                std::vector<CVec> sub(cpts.begin(), cpts.begin() + m);
                ScalarField ubf = make_field([Bc = B](const CVec& y) { return Bc->ub(y); });
                ScalarField lbf = make_field([Bc = B](const CVec& y) { return Bc->lb(y); });
                lip = std::max(estimate_lipschitz(ubf, sub), estimate_lipschitz(lbf, sub));
            }
            R->bound_lip = opt.safety * std::max(lip, 1.0);
        }
        {
            const long budget = opt.mollify_budget;
            double mass = 0.0;
            for (long k = 0; k < budget; ++k) {
                const CVec zeta = spec.draw(streams::mollify_kernel,
                                            static_cast<std::uint64_t>(j) * 2000003ULL + k);
                const double w = CutoffKit::kernel(zeta);
                mass += w;
                if (w > 0.0) {
                    R->pts.push_back(zeta * cplx{eps, 0.0});
                    R->wts.push_back(w);
                }
            }
            R->scale = 1.0 / mass; // the normalized kernel: c * integral
        }
        rj[j] = R;
        rho_j[j] = rhoj_field(R, j);
    }

    // Step 2: dimension-free Hessian floor of each rho_j over the widest region
    std::vector<double> Cjk(K + 1, 0.0);
    {
        auto wide = sample_psi_sublevel(*B, V, spec, lambda[K],
                                        std::min<long>(opt.level_samples, 64),
                                        streams::sublevel + 900);
        for (int j = 1; j <= K; ++j) {
            auto res = certify_semi_anti_psh(fields::scale(-1.0, rho_j[j]), V, wide,
                                             1e-6, 1e-4, 0);
            Cjk[j] = std::max(0.0, res.C_estimate);
            st.construction_checks.add(make_check(
                "psh.step2_defect_bound[j=" + std::to_string(j) + "]",
                "psh.hessian_min_dimfree", static_cast<long>(wide.size()), 0.0,
                Cjk[j], res.passes, "C_jk"));
            st.cjk_seq.push_back(Cjk[j]);
        }
    }

    // Step 3: sandwich and strict plurisubharmonicity of rho_j - eps ||z||^2
    for (int j = 1; j <= K; ++j) {
        auto region = sample_psi_sublevel(*B, V, spec, lambda[j], opt.cert_samples / 2,
                                          streams::sublevel + 1000 + j);
        const double slack =
            3.0 * st.lipschitz_table[j] * st.eps_seq[j - 1] /
                std::sqrt(static_cast<double>(opt.mollify_budget)) + 1e-7;
        double worst = -std::numeric_limits<double>::infinity();
        std::string worst_at;
        for (const auto& z : region) {
            const double r0 = rho(z), r1 = rho_j[j](z);
            const double viol = std::max(r0 - r1, r1 - (r0 + 1.0));
            if (viol > worst) { worst = viol; worst_at = z.to_string(); }
            if (viol > slack)
                throw PipelineAbort("psh_exhaustion: level sandwich violated at " +
                                    z.to_string() + " by " + format_double(viol));
        }
        st.construction_checks.add(make_check(
            "psh.step3_sandwich[j=" + std::to_string(j) + "]", "psh.level_sandwich",
            static_cast<long>(region.size()), slack,
            region.empty() ? 0.0 : worst, true, worst_at));

        double min_eig = std::numeric_limits<double>::infinity();
        const long m = std::min<long>(static_cast<long>(region.size()), 48);
        for (long i = 0; i < m; ++i) {
            const HessianForm H = mixed_hessian(rho_j[j], region[i], 1e-4);
            min_eig = std::min(min_eig, H.min_eig(region[i].dim()) - st.eps_seq[j - 1]);
        }
        st.construction_checks.add(make_check(
            "psh.step3_core_psh[j=" + std::to_string(j) + "]", "psh.mollified_core",
            m, 1e-6, m ? -min_eig : 0.0, m == 0 || min_eig >= -1e-6, ""));
    }

    // Step 4: the alpha recursion
    std::vector<double> alpha(K + 1, 0.0);
    alpha[1] = lambda[1] / psi0(1.0);
    st.alpha_seq.push_back(alpha[1]);

    auto eta_k_hessian = [&](const CVec& z, int upto) {
        Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(z.dim(), z.dim());
        for (int j = 1; j <= upto; ++j) {
            const double a = rho_j[j](z) + 2.0 - j;
            const PsiValues pv = eval_psi(a);
            if (pv.psi1 == 0.0 && pv.psi2 == 0.0) continue;
            const auto g = field_grad_at(rho_j[j], z);
            Eigen::VectorXcd gv(z.dim());
            for (int c = 0; c < z.dim(); ++c) gv(c) = g[c];
            H += alpha[j] * (pv.psi2 * (gv * gv.adjoint()) +
                             pv.psi1 * field_hess_at(rho_j[j], z));
        }
        return H;
    };

    for (int k = 1; k < K; ++k) {
        // sampled shell between the Psi-levels lambda(k) and lambda(k+1)
        std::vector<CVec> shell;
        for (long i = 0; i < spec.sample_budget() &&
                         static_cast<long>(shell.size()) < opt.cert_samples / 8; ++i) {
            const CVec z = spec.draw(streams::sublevel + 1100 + k, static_cast<std::uint64_t>(i));
            if (!V.contains(z)) continue;
            if (B->below(z, lambda[k + 1]) && !B->below(z, lambda[k])) shell.push_back(z);
        }
        double sk = 0.0;
        if (!shell.empty()) {
            sk = std::numeric_limits<double>::infinity();
            for (const auto& z : shell) {
                const Eigen::MatrixXcd H = eta_k_hessian(z, k);
                for (int np = 1; np <= z.dim(); ++np) {
                    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
                        H.topLeftCorner(np, np), Eigen::EigenvaluesOnly);
                    sk = std::min(sk, es.eigenvalues().minCoeff());
                }
            }
        }
        st.s_seq.push_back(sk);
        const double neg = std::max(0.0, -std::min(sk, 0.0));
        alpha[k + 1] = std::max(neg / (st.eps_seq[k] * psi1(1.0)),
                                lambda[k + 1] / psi0(1.0));
        st.alpha_seq.push_back(alpha[k + 1]);
    }

    // assemble the series with its closed-form derivatives
    auto rho_terms = std::make_shared<std::vector<ScalarField>>(rho_j.begin() + 1,
                                                                rho_j.end());
    auto alphas = std::make_shared<std::vector<double>>(alpha.begin() + 1, alpha.end());

    auto partial = [rho_terms, alphas, K](const CVec& z, int upto) {
        double s = 0.0;
        for (int j = 1; j <= std::min(upto, K); ++j)
            s += (*alphas)[j - 1] * psi0((*rho_terms)[j - 1](z) + 2.0 - j);
        return s;
    };

    ConstructedField out;
    out.state = std::move(st);
    out.partial_eval = partial;
    out.level_fields = *rho_terms;
    out.field.provenance = "pipeline:psh_eta";
    out.field.eval = [partial, K](const CVec& z) { return partial(z, K); };
    out.field.grad = [rho_terms, alphas, K](const CVec& z) {
        std::vector<cplx> acc(z.dim(), cplx{0.0, 0.0});
        for (int j = 1; j <= K; ++j) {
            const double a = (*rho_terms)[j - 1](z) + 2.0 - j;
            const double p1 = psi1(a);
            if (p1 == 0.0) continue;
            const auto g = field_grad_at((*rho_terms)[j - 1], z);
            for (int c = 0; c < z.dim(); ++c) acc[c] += (*alphas)[j - 1] * p1 * g[c];
        }
        return acc;
    };
    out.field.hessian = [rho_terms, alphas, K](const CVec& z) {
        Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(z.dim(), z.dim());
        for (int j = 1; j <= K; ++j) {
            const double a = (*rho_terms)[j - 1](z) + 2.0 - j;
            const PsiValues pv = eval_psi(a);
            if (pv.psi1 == 0.0 && pv.psi2 == 0.0) continue;
            const auto g = field_grad_at((*rho_terms)[j - 1], z);
            Eigen::VectorXcd gv(z.dim());
            for (int c = 0; c < z.dim(); ++c) gv(c) = g[c];
            H += (*alphas)[j - 1] * (pv.psi2 * (gv * gv.adjoint()) +
                                     pv.psi1 * field_hess_at((*rho_terms)[j - 1], z));
        }
        return H;
    };
    return out;
}

} // namespace pshex
