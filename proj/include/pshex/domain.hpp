#ifndef PSHEX_DOMAIN_HPP
#define PSHEX_DOMAIN_HPP

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "pshex/cvec.hpp"
#include "pshex/gaussian.hpp"
#include "pshex/scalar_field.hpp"

namespace pshex {

/// An open set V of the truncated sequence space: membership plus the
/// distance to the boundary (+infinity when V is the whole space). The
/// distance evaluator is 1-Lipschitz by construction for every catalog entry.
/// Catalog entries also carry closed-form Wirtinger derivatives of -ln d
/// where the geometry admits them (valid away from branch ties).
class Domain {
public:
    std::function<bool(const CVec&)> membership;
    std::function<double(const CVec&)> distance; // only called on members
    bool is_full_space = false;
    bool pseudoconvex_hint = false; // metadata, never trusted by certifiers
    std::string name = "custom";
    std::vector<double> params;

    // Optional closed forms for -ln d(.,boundary); empty when unavailable.
    std::function<std::vector<cplx>(const CVec&)> neg_log_dist_grad;
    std::function<Eigen::MatrixXcd(const CVec&)> neg_log_dist_hessian;

    bool contains(const CVec& z) const { return membership(z); }

    /// d(z, boundary of V); throws if z is not a member.
    double boundary_distance(const CVec& z) const;
};

Domain make_ball(const CVec& center, double radius);
Domain make_ball(double radius, int dim); // centered at the origin
Domain make_polydisc(const std::vector<double>& radii, int dim);
Domain make_halfspace_intersection(const std::vector<CVec>& normals,
                                   const std::vector<double>& offsets, int dim);
Domain make_hartogs_wedge(double r, int dim);
Domain make_full_space(int dim);
/// Ball of radius `outer` with the closed ball of radius `inner` removed
/// (not pseudo-convex for dim >= 2; the negative-control entry).
Domain make_hollowed_ball(double outer, double inner, int dim);

/// Positive infimum of boundary distance over S; throws (listing offenders)
/// if any point of S lies outside V. S uniformly included in V iff > 0.
double uniform_inclusion_margin(const std::vector<CVec>& S, const Domain& V);

/// Independent numerical distance oracle: ray casting in many directions with
/// local refinement of the best direction (dense-sampling fallback).
double numeric_distance_oracle(const Domain& V, const CVec& z, int coarse_rays = 64,
                               int refine_rounds = 60, std::uint64_t seed = 9881);

/// A sublevel set {z in V : field(z) <= level}.
struct SublevelSet {
    ScalarField field;
    double level = 0.0;
    const Domain* domain = nullptr;
    bool open_flag = false; // strict inequality when true
};

SublevelSet sublevel(const ScalarField& field, double t, const Domain& V,
                     bool open_flag = false);

struct ThinSublevelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Rejection sampling of the sublevel set from the Gaussian proposal
/// restricted to V. Deterministic under the seed. Throws ThinSublevelError if
/// the acceptance rate falls below 1e-4 over the proposal budget.
std::vector<CVec> sample_sublevel(const SublevelSet& set, long count,
                                  const GaussianSpec& spec,
                                  std::uint64_t stream_id = streams::sublevel);

/// Variant tolerant of empty sets: returns what was accepted (possibly
/// nothing) instead of throwing.
std::vector<CVec> try_sample_sublevel(const SublevelSet& set, long count,
                                      const GaussianSpec& spec,
                                      std::uint64_t stream_id = streams::sublevel);

} // namespace pshex

#endif
