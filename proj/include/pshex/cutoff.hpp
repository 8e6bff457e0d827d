#ifndef PSHEX_CUTOFF_HPP
#define PSHEX_CUTOFF_HPP

#include <cstdint>

#include "pshex/gaussian.hpp"
#include "pshex/scalar_field.hpp"

namespace pshex {

/// The three-piece smooth step-down: 1 on (-inf, tau], the explicit bump
/// transition on (tau, tau+1), 0 on [tau+1, +inf). All derivatives vanish at
/// both junctions; the slope is bounded below by -K0 uniformly in tau.
double eval_cutoff(double tau, double t);
double eval_cutoff_deriv(double tau, double t);

/// K0 = max over (0,1) of |transition slope|, dense grid + golden-section
/// refinement, cached after the first call.
double compute_K0();

/// Smooth plateau bump: 1 on |t| <= 1/4, 0 on |t| >= 1, built from the
/// two-sided exponential smoothstep.
double theta_bump(double t);

struct PsiValues {
    double psi, psi1, psi2;
};

/// The convex auxiliary profile: psi(t) = int_0^t (t-u) e^{-1/u} du for t > 0
/// and 0 otherwise, so psi'' (t) = e^{-1/t} and psi, psi', psi'' > 0 on t > 0.
/// Backed by an adaptive-quadrature table with Hermite interpolation.
PsiValues eval_psi(double t);
double psi0(double t);
double psi1(double t);
double psi2(double t);

/// Bundle of regularization constants tied to one Gaussian measure:
/// the kernel normalization c = (integral of theta(||z||^2))^{-1} with its
/// Monte-Carlo error, and K0.
struct CutoffKit {
    double K0 = 0.0;
    double c = 1.0;
    double c_std_error = 0.0;
    long c_budget = 0;
    std::uint64_t seed = 0;

    /// theta(||z||^2), the radial mollifier kernel profile.
    static double kernel(const CVec& z) { return theta_bump(z.norm_sq()); }
};

CutoffKit make_cutoff_kit(const GaussianSpec& spec, long c_budget = 1000000);

} // namespace pshex

#endif
