#ifndef VECOT_PARTITION_HPP
#define VECOT_PARTITION_HPP

#include "vecot/lp.hpp"
#include "vecot/measure.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace vecot {

/// Per-point agent labels in {0, ..., n}; 0 is the null agent (unsold).
using Assignment = std::vector<int>;

/// T x (n+1) matrix; row t splits point t's mass over agents 0..n.
using FractionalAssignment = Matrix;

/// n x q matrix of layer masses demanded by each agent.
using DemandMatrix = Matrix;

/// Largest number of label sequences the exact oracle will enumerate.
inline constexpr double kEnumerationLimit = 1e7;

/// Throws SizeMismatch / IndexOutOfRange for a malformed labelling.
void check_assignment(const LayeredMeasure& m, const Assignment& a, Index agents);

/// Layer masses collected by each agent 1..n under `a`.
DemandMatrix demand_of(const LayeredMeasure& m, const Assignment& a,
                       Index agents);

/// Demand of a fractional assignment (column 0, the null agent, is ignored).
DemandMatrix demand_of(const LayeredMeasure& m, const FractionalAssignment& a);

/// Total production cost sum_t w_t c_{a_t}(x_t); unsold points cost nothing.
double monge_cost(const LayeredMeasure& m, const CostField& c,
                  const Assignment& a);

/// Column sums of `d` within total_mass(m) + 1e-9.
bool feasible_necessary(const DemandMatrix& d, const LayeredMeasure& m);

/// Per-layer excess of the summed demand over the available mass (<= 0 when
/// the necessary condition holds for that layer).
Vector layer_excess(const DemandMatrix& d, const LayeredMeasure& m);

struct ExactAchievability {
  bool achievable = false;
  std::optional<Assignment> witness;  ///< lexicographically first
  std::uint64_t witness_count = 0;
};

/// (n+1)^T, saturated at a large value.
double enumeration_size(Index agents, Index points);

/// Brute force over every labelling. Throws TooLarge when (n+1)^T > 1e7.
ExactAchievability achievable_exact(const DemandMatrix& d, const LayeredMeasure& m,
                                    double tol = 1e-9);

struct RelaxedAchievability {
  bool achievable = false;
  std::optional<FractionalAssignment> witness;
  std::optional<lp::FarkasCertificate> certificate;
};

/// The achievability constraints as an LP over pi(t, i), i = 1..n, stored
/// row-major by point: variable t*n + (i-1). Rows 0..T-1 are the point
/// capacity rows, then n*q demand rows with index T + i*q + j.
lp::LinearProgram achievability_program(const DemandMatrix& d,
                                        const LayeredMeasure& m);

/// LP feasibility of the fractional relaxation.
RelaxedAchievability achievable_relaxed(const DemandMatrix& d,
                                        const LayeredMeasure& m);

/// Whether a single demand row is met by some fractional selection of points,
/// ignoring every other agent.
bool row_achievable(const Eigen::Ref<const RowVector>& row,
                    const LayeredMeasure& m);

struct SampledDemand {
  DemandMatrix demand;
  Assignment labels;
};

/// Uniformly random labels over {0..n}, then their demand.
SampledDemand sample_achievable(const LayeredMeasure& m, Index agents,
                                std::uint64_t seed);

}  // namespace vecot

#endif  // VECOT_PARTITION_HPP
