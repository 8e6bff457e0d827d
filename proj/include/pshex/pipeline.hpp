#ifndef PSHEX_PIPELINE_HPP
#define PSHEX_PIPELINE_HPP

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pshex/calculus.hpp"
#include "pshex/cutoff.hpp"
#include "pshex/domain.hpp"
#include "pshex/envelope.hpp"
#include "pshex/gaussian.hpp"
#include "pshex/report.hpp"

namespace pshex {

enum class PipelineStage { lipschitz_eta, smooth_Psi, semi_anti_Psi, psh_eta };

std::string stage_name(PipelineStage s);

/// Tunables shared by the constructions. Every "for all z" quantifier is
/// realized over sampled sets of the recorded sizes.
struct PipelineOptions {
    int series_K = 8;            // retained series terms
    long mollify_budget = 2048;  // frozen kernel samples per level
    long cert_samples = 512;     // samples per geometric check
    long level_samples = 256;    // samples per sublevel estimate
    double safety = 2.0;         // multiplies sampled Lipschitz estimates
    int eps_halving_limit = 40;
    double eps_floor = 1e-12;
    int tj_bisect_depth = 60;
    int envelope_starts = 16;
    int envelope_iters = 500;
    double c0 = -1.0;            // negative: choose automatically
};

struct PipelineAbort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Everything a finished construction decided: the per-level constants and
/// the checks that validated them. Serializable so certification can be
/// re-run without re-construction.
struct PipelineState {
    PipelineStage stage = PipelineStage::lipschitz_eta;
    double c0 = 0.0;
    int truncation_K = 0;
    std::map<int, double> lipschitz_table; // level -> C(level) estimate (x safety)
    std::vector<double> eps_seq;           // eps_j, 1-based as eps_seq[j-1]
    std::vector<double> level_sup;         // per-level sup weight used in the series
    std::map<double, double> lambda_table; // t -> lambda(t)
    std::vector<double> t_seq;             // t_j for the envelope levels
    std::vector<double> alpha_seq;         // alpha_k
    std::vector<double> s_seq;             // s_k Hessian infima
    std::vector<double> cjk_seq;           // C_{j,K} bounds from the defect sweep
    double kit_c = 1.0;
    double kit_K0 = 0.0;
    CertificationReport construction_checks;

    std::string to_json() const;
};

/// A field together with the state that produced it and the finite series
/// truncation that is exact on the certified region.
struct ConstructedField {
    ScalarField field;
    PipelineState state;
    /// Same series with only the first k terms (for truncation-exactness tests).
    std::function<double(const CVec&, int)> partial_eval;
    /// Per-level ingredient fields (mollified levels, envelope levels, or the
    /// mollified core fields, depending on the stage), 1-based as [j-1].
    std::vector<ScalarField> level_fields;
};

/// eta(z) = -ln d(z, boundary) + ||z||^2 + c0, or 1 + ||z||^2 on the full
/// space. Lipschitz on every sublevel, bounded below by c0.
ScalarField lipschitz_exhaustion(const Domain& V, double c0);

/// c0 chosen as max(0, 1 - sampled inf of (||z||^2 - ln d)) + 1.
double choose_c0(const Domain& V, const GaussianSpec& spec, long samples = 4096);

/// Smooth exhaustion: mollified cutoff levels assembled through the convex
/// profile, dominating the Lipschitz exhaustion.
ConstructedField smooth_exhaustion(const Domain& V, const CutoffKit& kit,
                                   const GaussianSpec& spec,
                                   const PipelineOptions& opt = {});

/// Lipschitz, semi-anti-psh exhaustion built from inf-convolutions of the
/// cutoff levels.
ConstructedField semi_anti_psh_exhaustion(const Domain& V, const CutoffKit& kit,
                                          const GaussianSpec& spec,
                                          const PipelineOptions& opt = {});

/// The four-step construction of a smooth plurisubharmonic exhaustion on a
/// pseudo-convex domain. Proceeds regardless of the hint; on a domain that is
/// not pseudo-convex the certificates fail, which is the intended detector.
ConstructedField psh_exhaustion(const Domain& V, const CutoffKit& kit,
                                const GaussianSpec& spec,
                                const PipelineOptions& opt = {});

/// Internal handle used by psh_exhaustion and exposed for its own tests:
/// lambda(t) = 1 + max(t, sampled sup of Psi over the rho-sublevel at t).
double lambda_of(const ScalarField& rho, const ScalarField& Psi, double t,
                 const Domain& V, const GaussianSpec& spec, long samples = 256);

} // namespace pshex

#endif
