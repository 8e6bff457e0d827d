#ifndef PSHEX_SCALAR_FIELD_HPP
#define PSHEX_SCALAR_FIELD_HPP

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "pshex/cvec.hpp"

namespace pshex {

/// A real-valued function on the truncated sequence space, with optional
/// closed-form Wirtinger derivatives. `grad(z)` returns the holomorphic
/// partials (d_j f) for j < z.dim(); for real-valued fields the
/// anti-holomorphic partials are their conjugates. `hessian(z)` returns the
/// mixed matrix H_ij = d_i dbar_j f(z) of size z.dim().
struct ScalarField {
    std::function<double(const CVec&)> eval;
    std::function<std::vector<cplx>(const CVec&)> grad;
    std::function<Eigen::MatrixXcd(const CVec&)> hessian;
    std::string provenance = "raw";

    double operator()(const CVec& z) const { return eval(z); }
    bool has_grad() const { return static_cast<bool>(grad); }
    bool has_hessian() const { return static_cast<bool>(hessian); }
};

inline ScalarField make_field(std::function<double(const CVec&)> f,
                              std::string provenance = "raw") {
    ScalarField s;
    s.eval = std::move(f);
    s.provenance = std::move(provenance);
    return s;
}

// Small catalog of analytic test fields.
namespace fields {

/// ||z||^2, gradient conj(z_j), mixed Hessian = identity.
ScalarField sq_norm();

/// Re z_j (pluriharmonic), gradient e_j/2, zero Hessian.
ScalarField re_coord(int j);

/// |z_j|^2.
ScalarField abs2_coord(int j);

/// |z_j|^4, H_jj = 4|z_j|^2.
ScalarField abs4_coord(int j);

/// Constant c.
ScalarField constant(double c);

/// ||z|| clipped into a C-Lipschitz shape: min(||z||, cap).
ScalarField norm_clipped(double cap);

ScalarField scale(double a, const ScalarField& f);
ScalarField sum(const ScalarField& f, const ScalarField& g);

} // namespace fields

} // namespace pshex

#endif
