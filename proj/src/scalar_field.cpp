#include "pshex/scalar_field.hpp"

#include <iomanip>
#include <sstream>

namespace pshex {

std::string CVec::to_string() const {
    std::ostringstream oss;
    oss << std::setprecision(17) << "(";
    for (int i = 0; i < static_cast<int>(entries_.size()); ++i) {
        if (i) oss << ", ";
        oss << entries_[i].real() << (entries_[i].imag() < 0 ? "-" : "+")
            << std::abs(entries_[i].imag()) << "i";
    }
    oss << ")@" << dim_;
    return oss.str();
}

namespace fields {

ScalarField sq_norm() {
    ScalarField f;
    f.eval = [](const CVec& z) { return z.norm_sq(); };
    f.grad = [](const CVec& z) {
        std::vector<cplx> g(z.dim());
        for (int j = 0; j < z.dim(); ++j) g[j] = std::conj(z[j]);
        return g;
    };
    f.hessian = [](const CVec& z) {
        return Eigen::MatrixXcd::Identity(z.dim(), z.dim()).eval();
    };
    f.provenance = "raw:sq_norm";
    return f;
}

ScalarField re_coord(int j) {
    ScalarField f;
    f.eval = [j](const CVec& z) { return z[j].real(); };
    f.grad = [j](const CVec& z) {
        std::vector<cplx> g(z.dim());
        if (j < z.dim()) g[j] = cplx{0.5, 0.0};
        return g;
    };
    f.hessian = [](const CVec& z) {
        return Eigen::MatrixXcd::Zero(z.dim(), z.dim()).eval();
    };
    f.provenance = "raw:re_coord";
    return f;
}

ScalarField abs2_coord(int j) {
    ScalarField f;
    f.eval = [j](const CVec& z) { return std::norm(z[j]); };
    f.grad = [j](const CVec& z) {
        std::vector<cplx> g(z.dim());
        if (j < z.dim()) g[j] = std::conj(z[j]);
        return g;
    };
    f.hessian = [j](const CVec& z) {
        Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(z.dim(), z.dim());
        if (j < z.dim()) H(j, j) = 1.0;
        return H;
    };
    f.provenance = "raw:abs2_coord";
    return f;
}

ScalarField abs4_coord(int j) {
    ScalarField f;
    f.eval = [j](const CVec& z) {
        const double a = std::norm(z[j]);
        return a * a;
    };
    f.grad = [j](const CVec& z) {
        std::vector<cplx> g(z.dim());
        if (j < z.dim()) g[j] = 2.0 * std::norm(z[j]) * std::conj(z[j]);
        return g;
    };
    f.hessian = [j](const CVec& z) {
        Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(z.dim(), z.dim());
        if (j < z.dim()) H(j, j) = 4.0 * std::norm(z[j]);
        return H;
    };
    f.provenance = "raw:abs4_coord";
    return f;
}

ScalarField constant(double c) {
    ScalarField f;
    f.eval = [c](const CVec&) { return c; };
    f.grad = [](const CVec& z) { return std::vector<cplx>(z.dim()); };
    f.hessian = [](const CVec& z) {
        return Eigen::MatrixXcd::Zero(z.dim(), z.dim()).eval();
    };
    f.provenance = "raw:constant";
    return f;
}

ScalarField norm_clipped(double cap) {
    ScalarField f;
    f.eval = [cap](const CVec& z) { return std::min(z.norm(), cap); };
    f.provenance = "raw:norm_clipped";
    return f;
}

ScalarField scale(double a, const ScalarField& f) {
    ScalarField g;
    auto ev = f.eval;
    g.eval = [a, ev](const CVec& z) { return a * ev(z); };
    if (f.grad) {
        auto gr = f.grad;
        g.grad = [a, gr](const CVec& z) {
            auto v = gr(z);
            for (auto& c : v) c *= a;
            return v;
        };
    }
    if (f.hessian) {
        auto he = f.hessian;
        g.hessian = [a, he](const CVec& z) { return (a * he(z)).eval(); };
    }
    g.provenance = f.provenance;
    return g;
}

ScalarField sum(const ScalarField& f, const ScalarField& g) {
    ScalarField h;
    auto fe = f.eval, ge = g.eval;
    h.eval = [fe, ge](const CVec& z) { return fe(z) + ge(z); };
    if (f.grad && g.grad) {
        auto fg = f.grad, gg = g.grad;
        h.grad = [fg, gg](const CVec& z) {
            auto a = fg(z);
            auto b = gg(z);
            for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
            return a;
        };
    }
    if (f.hessian && g.hessian) {
        auto fh = f.hessian, gh = g.hessian;
        h.hessian = [fh, gh](const CVec& z) { return (fh(z) + gh(z)).eval(); };
    }
    h.provenance = f.provenance + "+" + g.provenance;
    return h;
}

} // namespace fields
} // namespace pshex
