#ifndef PSHEX_CALCULUS_HPP
#define PSHEX_CALCULUS_HPP

#include <Eigen/Dense>
#include <vector>

#include "pshex/cvec.hpp"
#include "pshex/domain.hpp"
#include "pshex/report.hpp"
#include "pshex/scalar_field.hpp"

namespace pshex {

struct WirtingerGrad {
    std::vector<cplx> holo;  // d_j f
    std::vector<cplx> anti;  // dbar_j f
};

/// Central-difference Wirtinger partials at z, step h, one Richardson level.
WirtingerGrad wirtinger_grad(const ScalarField& f, const CVec& z, double h = 1e-4);

/// Mixed complex Hessian H_ij = d_i dbar_j f(z) at truncation z.dim().
struct HessianForm {
    CVec z;
    Eigen::MatrixXcd H;        // Hermitian-symmetrized
    double herm_defect = 0.0;  // max |H - H*| before symmetrization

    /// Extreme eigenvalues of the leading n x n block (dimension sweep).
    double min_eig(int n) const;
    double max_eig(int n) const;
};

/// Uses the field's closed-form Hessian when present, else nested central
/// differences over the real coordinates.
HessianForm mixed_hessian(const ScalarField& f, const CVec& z, double h = 1e-4);

/// Always the finite-difference route (the independent check of closed forms).
HessianForm fd_mixed_hessian(const ScalarField& f, const CVec& z, double h = 1e-4);

/// Hessian quadratic form sum_ij H_ij w_i conj(w_j) via the complex-line
/// Laplacian stencil (or the closed form when available).
double hessian_quadratic_form(const ScalarField& f, const CVec& z, const CVec& w,
                              double h = 1e-4);

/// Trapezoidal mean of f over the circle {a + r e^{i theta} b}, m nodes.
/// If V is given, every node is membership-checked first (throws otherwise).
double circle_mean(const ScalarField& f, const CVec& a, const CVec& b, double r,
                   int m = 64, const Domain* V = nullptr);

struct CertifyOptions {
    double tol = 1e-6;
    int circle_nodes = 64;
    std::vector<double> radii = {0.1, 0.01};
    double fd_step = 1e-4;
    int dim_sweep_max = 0; // 0: up to the ambient dimension
};

/// Plurisubharmonicity certificate: the circle-mean inequality at sampled
/// (point, direction, radius) triples, plus the minimum Hessian eigenvalue
/// across the truncation sweep. Failures become report records, not errors.
CertificationReport certify_psh(const ScalarField& f, const Domain& V,
                                const std::vector<CVec>& points,
                                const std::vector<CVec>& directions,
                                const CertifyOptions& opt = {});

struct SemiAntiPshResult {
    bool passes = false;
    double C_estimate = 0.0;             // max over points and truncations of lambda_max
    std::vector<double> C_by_truncation; // index k holds the sweep value at n' = k+1
    CertificationReport report;
};

/// Upper Hessian bound certificate: smallest C with H <= C * Identity on the
/// sampled set, swept over truncations.
SemiAntiPshResult certify_semi_anti_psh(const ScalarField& f, const Domain& V,
                                        const std::vector<CVec>& points,
                                        double tol = 1e-6, double fd_step = 1e-4,
                                        int dim_sweep_max = 0);

/// Largest pairwise difference quotient over S (a lower bound on the true
/// Lipschitz constant). Throws if all points coincide.
double estimate_lipschitz(const ScalarField& f, const std::vector<CVec>& S);

/// Exhaustion certificate: each sampled sublevel set keeps a positive distance
/// to the boundary, and nested levels keep a positive relative margin. Empty
/// sublevels pass vacuously (the empty set is uniformly included).
CertificationReport certify_exhaustion(const ScalarField& f, const Domain& V,
                                       const std::vector<double>& levels,
                                       const GaussianSpec& spec,
                                       long samples_per_level = 256);

/// Unit directions for sweeps: Gaussian draws normalized, plus all axes.
std::vector<CVec> sweep_directions(const GaussianSpec& spec, int count,
                                   std::uint64_t stream_id = streams::directions);

} // namespace pshex

#endif
