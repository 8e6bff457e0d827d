#include "pshex/cutoff.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace pshex {

namespace {

// transition bump on (0,1): value of the step-down minus its plateaus
double bridge(double x) {
    const double A = std::exp(1.0 / (x - 1.0));
    return (A - 1.0) * std::exp(-A / x) + 1.0;
}

double bridge_deriv(double x) {
    const double A = std::exp(1.0 / (x - 1.0));
    const double pre = std::exp(1.0 / (x - 1.0) - A / x) / (x * x * (1.0 - x) * (1.0 - x));
    return pre * (-2.0 * x * x + x + A * (x * x - x + 1.0) - 1.0);
}

} // namespace

double eval_cutoff(double tau, double t) {
    if (tau < 0.0) throw std::invalid_argument("eval_cutoff: tau must be >= 0");
    const double x = t - tau;
    if (x <= 0.0) return 1.0;
    if (x >= 1.0) return 0.0;
    return bridge(x);
}

double eval_cutoff_deriv(double tau, double t) {
    if (tau < 0.0) throw std::invalid_argument("eval_cutoff_deriv: tau must be >= 0");
    const double x = t - tau;
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return bridge_deriv(x);
}

double compute_K0() {
    static double cached = -1.0;
    static std::once_flag flag;
    std::call_once(flag, [] {
        const int N = 8192;
        double best = 0.0;
        int best_k = 1;
        for (int k = 1; k < N; ++k) {
            const double v = std::abs(bridge_deriv(static_cast<double>(k) / N));
            if (v > best) { best = v; best_k = k; }
        }
        double a = std::max(1e-12, (best_k - 2.0) / N);
        double b = std::min(1.0 - 1e-12, (best_k + 2.0) / N);
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double c = b - gr * (b - a), d = a + gr * (b - a);
        for (int it = 0; it < 200; ++it) {
            if (std::abs(bridge_deriv(c)) > std::abs(bridge_deriv(d)))
                b = d;
            else
                a = c;
            c = b - gr * (b - a);
            d = a + gr * (b - a);
        }
        cached = std::abs(bridge_deriv(0.5 * (a + b)));
    });
    return cached;
}

namespace {

double smooth_g(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }

double smoothstep(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double a = smooth_g(x);
    return a / (a + smooth_g(1.0 - x));
}

} // namespace

double theta_bump(double t) { return smoothstep((1.0 - std::abs(t)) / 0.75); }

// ---- psi ------------------------------------------------------------------
//
// psi''(t) = e^{-1/t}; with E(t) = int_0^t e^{-1/u} du, integration by parts
// gives psi'(t) = E(t) and psi(t) = (t + 1/2) E(t) - (t^2/2) e^{-1/t}.
// E is tabulated by adaptive quadrature on a fine grid and interpolated with
// a Hermite cubic (its derivative e^{-1/t} is exact at the nodes).

namespace {

double integrand(double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; }

double adaptive_simpson(double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = integrand(lm), frm = integrand(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           adaptive_simpson(m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

double quad_E(double a, double b, double tol = 1e-14) {
    const double fa = integrand(a), fb = integrand(b), fm = integrand(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(a, b, fa, fm, fb, whole, tol, 40);
}

struct PsiTable {
    static constexpr double t_max = 64.0;
    static constexpr int per_unit = 256;
    std::vector<double> E; // cumulative at nodes k/per_unit

    PsiTable() {
        const int n = static_cast<int>(t_max) * per_unit;
        E.resize(n + 1, 0.0);
        const double h = 1.0 / per_unit;
        for (int k = 1; k <= n; ++k)
            E[k] = E[k - 1] + quad_E((k - 1) * h, k * h);
    }

    double operator()(double t) const {
        if (t <= 0.0) return 0.0;
        if (t >= t_max) {
            // rare far tail, integrated on demand
            return E.back() + quad_E(t_max, t, 1e-12);
        }
        const double h = 1.0 / per_unit;
        const int k = std::min<int>(static_cast<int>(t / h), static_cast<int>(E.size()) - 2);
        const double t0 = k * h, t1 = (k + 1) * h;
        const double u = (t - t0) / h;
        const double y0 = E[k], y1 = E[k + 1];
        const double m0 = integrand(t0) * h, m1 = integrand(t1) * h;
        const double u2 = u * u, u3 = u2 * u;
        return (2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * m0 +
               (-2 * u3 + 3 * u2) * y1 + (u3 - u2) * m1;
    }
};

const PsiTable& psi_table() {
    static PsiTable table;
    return table;
}

} // namespace

PsiValues eval_psi(double t) {
    PsiValues v{0.0, 0.0, 0.0};
    if (t <= 0.0) return v;
    const double Et = psi_table()(t);
    const double e = std::exp(-1.0 / t);
    v.psi = (t + 0.5) * Et - 0.5 * t * t * e;
    v.psi1 = Et;
    v.psi2 = e;
    return v;
}

double psi0(double t) { return eval_psi(t).psi; }
double psi1(double t) { return t <= 0.0 ? 0.0 : psi_table()(t); }
double psi2(double t) { return t <= 0.0 ? 0.0 : std::exp(-1.0 / t); }

CutoffKit make_cutoff_kit(const GaussianSpec& spec, long c_budget) {
    CutoffKit kit;
    kit.K0 = compute_K0();
    kit.seed = spec.seed();
    kit.c_budget = c_budget;
    const McEstimate m =
        integrate(make_field([](const CVec& z) { return CutoffKit::kernel(z); }),
                  spec.with_budget(c_budget), streams::normalization);
    if (!(m.estimate > 0.0))
        throw std::runtime_error("make_cutoff_kit: kernel mass must be positive");
    kit.c = 1.0 / m.estimate;
    kit.c_std_error = m.std_error / (m.estimate * m.estimate);
    return kit;
}

} // namespace pshex
