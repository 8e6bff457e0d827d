#ifndef PSHEX_GAUSSIAN_HPP
#define PSHEX_GAUSSIAN_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "pshex/cvec.hpp"
#include "pshex/rng.hpp"
#include "pshex/scalar_field.hpp"

namespace pshex {

struct CertificationReport;

/// The anisotropic Gaussian product measure on the truncated space: each
/// coordinate z_i has independent real and imaginary parts ~ Normal(0, a_i^2),
/// where the positive weights satisfy sum(a_i) < 1.
class GaussianSpec {
public:
    GaussianSpec(std::vector<double> weights, std::uint64_t seed,
                 long sample_budget = 200000);

    /// Default dyadic weights a_i = 2^{-(i+1)} (sum = 1/2).
    static GaussianSpec dyadic(int truncation, std::uint64_t seed,
                               long sample_budget = 200000);

    int truncation() const { return static_cast<int>(weights_.size()); }
    const std::vector<double>& weights() const { return weights_; }
    std::uint64_t seed() const { return seed_; }
    long sample_budget() const { return sample_budget_; }

    GaussianSpec with_seed(std::uint64_t seed) const {
        GaussianSpec s = *this;
        s.seed_ = seed;
        return s;
    }
    GaussianSpec with_budget(long budget) const {
        GaussianSpec s = *this;
        s.sample_budget_ = budget;
        return s;
    }

    /// Sample with index k from the stream (seed, stream_id). Coordinates in
    /// [coord_lo, coord_hi) are drawn; the rest stay zero.
    CVec draw(std::uint64_t stream_id, std::uint64_t k,
              int coord_lo = 0, int coord_hi = -1) const;

private:
    std::vector<double> weights_;
    std::uint64_t seed_;
    long sample_budget_;
};

/// Draw `count` i.i.d. samples from the measure; reproducible from the seed.
std::vector<CVec> sample_gaussian(const GaussianSpec& spec, long count,
                                  std::uint64_t stream_id = streams::integrate);

struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    long samples = 0;
};

/// Monte-Carlo estimate of the integral of f against the measure.
/// Throws if f is non-finite at a sample (the message names the sample).
McEstimate integrate(const ScalarField& f, const GaussianSpec& spec,
                     std::uint64_t stream_id = streams::integrate);

/// Conditional expectation onto the first n coordinates: the returned field
/// maps z to the average of f(z_1..z_n, tail) over a frozen set of tail
/// samples, so it depends only on the first n coordinates and is
/// deterministic under the seed.
ScalarField project_fn(const ScalarField& f, int n, const GaussianSpec& spec);

/// Compares the integral of f with the integral of the coordinate-rotated
/// f(e^{i theta_1} z_1, ...) on an independent sample stream; records whether
/// the difference sits inside the combined Monte-Carlo error.
CertificationReport check_rotation_invariance(const ScalarField& f,
                                              const std::vector<double>& thetas,
                                              const GaussianSpec& spec,
                                              double sigma_factor = 3.0);

} // namespace pshex

#endif
