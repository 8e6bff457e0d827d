#ifndef PSHEX_ENVELOPE_HPP
#define PSHEX_ENVELOPE_HPP

#include <memory>
#include <vector>

#include "pshex/cvec.hpp"
#include "pshex/gaussian.hpp"
#include "pshex/scalar_field.hpp"

namespace pshex {

/// Empirical modulus of continuity w(t) = sup{|f(z)-f(w)| : ||z-w|| <= t} on a
/// grid, monotone and subadditively completed.
struct ModulusTable {
    std::vector<double> grid;   // right edges of distance buckets
    std::vector<double> values; // completed modulus at each edge

    double operator()(double t) const; // piecewise-linear lookup, clamped
};

ModulusTable estimate_modulus(const ScalarField& f, const std::vector<CVec>& S,
                              int buckets = 64);

/// Parameters of one inf-convolution query family.
struct EnvelopeSpec {
    double t = 0.5;            // envelope parameter
    double sup_f = 1.0;        // certified bound on sup |f|
    double search_radius = 0.0; // derived as sqrt(4 t sup_f) + pad when 0
    int starts = 16;
    int max_iters = 500;
    double grad_tol = 1e-8;
    double fd_step = 1e-6;     // used when f has no closed-form gradient
    std::uint64_t seed = 77;

    double effective_radius() const;
};

struct EnvelopeDiagnostics {
    double worst_grad_norm = 0.0;  // stationarity residual at the returned minimizer
    double solver_gap = 0.0;       // value-accuracy bound from strong convexity
    long non_converged = 0;
};

/// The quadratic inf-convolution (U_t f)(z) = inf over zeta of
/// { f(zeta) + ||z - zeta||^2 / (2t) }, realized by multi-start projected
/// descent inside the ball of the search radius around z. The returned value
/// is an upper bound on the true infimum. Diagnostics accumulate across
/// evaluations of the returned field.
ScalarField lasry_lions(const ScalarField& f, const EnvelopeSpec& env,
                        std::shared_ptr<EnvelopeDiagnostics> diag = nullptr);

} // namespace pshex

#endif
