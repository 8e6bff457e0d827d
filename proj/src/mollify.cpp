#include "pshex/mollify.hpp"

#include <cmath>
#include <stdexcept>

namespace pshex {

ScalarField mollify(const ScalarField& f, double eps, const CutoffKit& kit,
                    const GaussianSpec& spec, const MollifyOptions& opt) {
    if (!(eps > 0.0)) throw std::invalid_argument("mollify: eps must be > 0");
    const long budget = opt.budget > 0 ? opt.budget : spec.sample_budget();

    struct Kernel {
        std::vector<CVec> pts;      // samples with positive weight, pre-scaled by eps
        std::vector<double> wts;    // kernel weights theta(||zeta||^2)
        double scale = 1.0;         // c-normalization or 1/M
    };
    auto ker = std::make_shared<Kernel>();
    double mass = 0.0;
    for (long k = 0; k < budget; ++k) {
        const CVec zeta = spec.draw(opt.stream_id, opt.stream_offset + k);
        const double w = CutoffKit::kernel(zeta);
        mass += w;
        if (w > 0.0) {
            ker->pts.push_back(zeta * cplx{eps, 0.0});
            ker->wts.push_back(w);
        }
    }
    if (!(mass > 0.0)) throw std::runtime_error("mollify: kernel mass vanished");
    ker->scale = opt.normalized ? 1.0 / mass : 1.0 / static_cast<double>(budget);

    auto inner = f.eval;
    ScalarField out;
    out.provenance = "mollified[" + f.provenance + "]";
    out.eval = [inner, ker](const CVec& z) {
        double s = 0.0;
        for (std::size_t i = 0; i < ker->pts.size(); ++i) {
            const double v = inner(z - ker->pts[i]);
            if (!std::isfinite(v))
                throw std::runtime_error("mollify: non-finite inner value at sample " +
                                         std::to_string(i));
            s += ker->wts[i] * v;
        }
        return s * ker->scale;
    };
    if (f.grad) {
        auto g = f.grad;
        out.grad = [g, ker](const CVec& z) {
            std::vector<cplx> acc(z.dim(), cplx{0.0, 0.0});
            for (std::size_t i = 0; i < ker->pts.size(); ++i) {
                const auto gi = g(z - ker->pts[i]);
                for (int j = 0; j < z.dim(); ++j) acc[j] += ker->wts[i] * gi[j];
            }
            for (auto& c : acc) c *= ker->scale;
            return acc;
        };
    }
    if (f.hessian) {
        auto h = f.hessian;
        out.hessian = [h, ker](const CVec& z) {
            Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(z.dim(), z.dim());
            for (std::size_t i = 0; i < ker->pts.size(); ++i)
                H += ker->wts[i] * h(z - ker->pts[i]);
            return (H * ker->scale).eval();
        };
    }
    return out;
}

} // namespace pshex
