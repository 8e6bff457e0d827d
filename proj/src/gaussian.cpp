#include "pshex/gaussian.hpp"

#include <cmath>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "pshex/report.hpp"

namespace pshex {

GaussianSpec::GaussianSpec(std::vector<double> weights, std::uint64_t seed,
                           long sample_budget)
    : weights_(std::move(weights)), seed_(seed), sample_budget_(sample_budget) {
    if (weights_.empty())
        throw std::invalid_argument("GaussianSpec: empty weight sequence");
    double sum = 0.0;
    for (double a : weights_) {
        if (!(a > 0.0))
            throw std::invalid_argument("GaussianSpec: weights must be positive");
        sum += a;
    }
    if (!(sum < 1.0))
        throw std::invalid_argument(
            "GaussianSpec: the standing hypothesis sum(a_i) < 1 fails (sum = " +
            std::to_string(sum) + ")");
    if (sample_budget_ < 1)
        throw std::invalid_argument("GaussianSpec: sample budget must be >= 1");
}

GaussianSpec GaussianSpec::dyadic(int truncation, std::uint64_t seed,
                                  long sample_budget) {
    if (truncation < 1)
        throw std::invalid_argument("GaussianSpec: truncation must be >= 1");
    std::vector<double> w(truncation);
    for (int i = 0; i < truncation; ++i) w[i] = std::ldexp(1.0, -(i + 2));
    return GaussianSpec(std::move(w), seed, sample_budget);
}

CVec GaussianSpec::draw(std::uint64_t stream_id, std::uint64_t k,
                        int coord_lo, int coord_hi) const {
    const int n = truncation();
    if (coord_hi < 0) coord_hi = n;
    CounterRng rng(seed_, stream_id);
    CVec z(n);
    for (int i = coord_lo; i < coord_hi; ++i) {
        double x, y;
        rng.normal_pair(k * static_cast<std::uint64_t>(n) + i, x, y);
        z.set(i, cplx{weights_[i] * x, weights_[i] * y});
    }
    return z;
}

std::vector<CVec> sample_gaussian(const GaussianSpec& spec, long count,
                                  std::uint64_t stream_id) {
    if (count < 1)
        throw std::invalid_argument("sample_gaussian: count must be >= 1");
    std::vector<CVec> out;
    out.reserve(count);
    for (long k = 0; k < count; ++k)
        out.push_back(spec.draw(stream_id, static_cast<std::uint64_t>(k)));
    return out;
}

McEstimate integrate(const ScalarField& f, const GaussianSpec& spec,
                     std::uint64_t stream_id) {
    const long n = spec.sample_budget();
    double sum = 0.0, sum_sq = 0.0;
    for (long k = 0; k < n; ++k) {
        const CVec z = spec.draw(stream_id, static_cast<std::uint64_t>(k));
        const double v = f(z);
        if (!std::isfinite(v)) {
            std::ostringstream oss;
            oss << "integrate: non-finite value " << v << " at sample " << k
                << " = " << z.to_string();
            throw std::runtime_error(oss.str());
        }
        sum += v;
        sum_sq += v * v;
    }
    McEstimate e;
    e.samples = n;
    e.estimate = sum / static_cast<double>(n);
    const double var = std::max(0.0, (sum_sq - sum * sum / n) / std::max<long>(n - 1, 1));
    e.std_error = std::sqrt(var / static_cast<double>(n));
    return e;
}

ScalarField project_fn(const ScalarField& f, int n, const GaussianSpec& spec) {
    const int trunc = spec.truncation();
    if (n < 1 || n >= trunc)
        throw std::invalid_argument("project_fn: need 1 <= n < truncation");
    const long m = spec.sample_budget();
    auto tails = std::make_shared<std::vector<CVec>>();
    tails->reserve(m);
    for (long k = 0; k < m; ++k)
        tails->push_back(spec.draw(streams::projection, static_cast<std::uint64_t>(k), n, trunc));

    auto inner = f.eval;
    ScalarField g = make_field(
        [inner, tails, n](const CVec& z) {
            const CVec head = z.head(n);
            double sum = 0.0;
            for (const auto& tail : *tails) sum += inner(head + tail);
            return sum / static_cast<double>(tails->size());
        },
        "projected");
    return g;
}

CertificationReport check_rotation_invariance(const ScalarField& f,
                                              const std::vector<double>& thetas,
                                              const GaussianSpec& spec,
                                              double sigma_factor) {
    std::vector<cplx> phases(spec.truncation(), cplx{1.0, 0.0});
    for (std::size_t i = 0; i < thetas.size() && i < phases.size(); ++i)
        phases[i] = std::polar(1.0, thetas[i]);

    auto inner = f.eval;
    ScalarField rotated = make_field([inner, phases](const CVec& z) {
        CVec w(z.dim());
        for (int i = 0; i < z.dim(); ++i) w.set(i, phases[i] * z[i]);
        return inner(w);
    });

    const McEstimate a = integrate(f, spec, streams::integrate);
    const McEstimate b = integrate(rotated, spec, streams::integrate_alt);

    const double diff = std::abs(a.estimate - b.estimate);
    const double combined = std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
    // Exactly invariant integrands have zero combined error; keep an absolute floor.
    const double tol = sigma_factor * combined + 1e-12;

    CertificationReport rep;
    rep.name = "rotation_invariance";
    CertRecord rec;
    rec.check = "measure.rotation_invariance";
    rec.anchor = "measure.rotation_invariance";
    rec.samples = a.samples + b.samples;
    rec.tolerance = tol;
    rec.worst = diff - tol;
    rec.pass = diff <= tol;
    rec.worst_at = "difference=" + format_double(diff);
    rep.add(std::move(rec));
    return rep;
}

} // namespace pshex
