#ifndef PSHEX_MOLLIFY_HPP
#define PSHEX_MOLLIFY_HPP

#include <cstdint>
#include <memory>

#include "pshex/cutoff.hpp"
#include "pshex/gaussian.hpp"
#include "pshex/scalar_field.hpp"

namespace pshex {

struct MollifyOptions {
    long budget = 0;            // 0: use spec.sample_budget
    bool normalized = true;     // divide by the kernel mass over the frozen set
    std::uint64_t stream_id = streams::mollify_kernel;
    std::uint64_t stream_offset = 0; // shifts the counter shard
};

/// Smoothing by averaging translates against the radial kernel under the
/// Gaussian measure: z -> mean over the frozen sample set of
/// f(z - eps * zeta_s) * theta(||zeta_s||^2), optionally normalized so a
/// constant passes through exactly. One frozen sample set per returned field,
/// so the result is a deterministic smooth function of z; closed-form
/// derivatives of f propagate through the translates.
ScalarField mollify(const ScalarField& f, double eps, const CutoffKit& kit,
                    const GaussianSpec& spec, const MollifyOptions& opt = {});

} // namespace pshex

#endif
