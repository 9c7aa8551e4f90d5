#ifndef VECOT_PRICING_HPP
#define VECOT_PRICING_HPP

#include "vecot/measure.hpp"
#include "vecot/partition.hpp"

#include <map>
#include <optional>
#include <vector>

namespace vecot {

/// n x q prices; row i is agent i's price vector. The null agent's zero row is
/// implicit.
using PriceMatrix = Matrix;

/// How points with several income-maximizing labels are resolved. The
/// default picks the lowest tied label, so ties at zero income go to the null
/// agent. An override applies only when its label is among the tied ones.
struct TieRule {
  std::map<Index, int> overrides;
};

/// Two incomes closer than this (relative to 1 + |best|) count as tied.
inline constexpr double kTieTolerance = 1e-9;

/// Net incomes p_i . zeta(x_t) - c_i(x_t) as a T x n matrix.
Matrix net_income(const LayeredMeasure& m, const CostField& c,
                  const PriceMatrix& p);

/// [max_k p_k . zeta(x_t) - c_k(x_t)]_+
double phi_at(const LayeredMeasure& m, const CostField& c, const PriceMatrix& p,
              Index t);

/// phi at every point.
Vector phi(const LayeredMeasure& m, const CostField& c, const PriceMatrix& p);

/// Labels (0 = null agent) whose income is within `tolerance * (1 + |best|)`
/// of the best income at each point, in increasing order.
std::vector<std::vector<int>> candidate_labels(const LayeredMeasure& m,
                                               const CostField& c,
                                               const PriceMatrix& p,
                                               double tolerance = kTieTolerance);

Assignment assign_by_price(const LayeredMeasure& m, const CostField& c,
                           const PriceMatrix& p, const TieRule& rule = {});

/// assign_by_price with zero production costs.
Assignment zero_cost_assign(const LayeredMeasure& m, const PriceMatrix& p,
                            const TieRule& rule = {});

DemandMatrix induced_demand(const LayeredMeasure& m, const CostField& c,
                            const PriceMatrix& p, const TieRule& rule = {});

/// sum_ij p_ij d_ij - sum_t w_t phi(x_t); concave in p.
double dual_objective(const LayeredMeasure& m, const CostField& c,
                      const PriceMatrix& p, const DemandMatrix& target);

/// target - induced demand: a supergradient of dual_objective at p.
Matrix dual_supergradient(const LayeredMeasure& m, const CostField& c,
                          const PriceMatrix& p, const DemandMatrix& target,
                          const TieRule& rule = {});

enum class TieCompletion {
  Integral,    ///< each tied point goes wholly to one tied label
  Fractional,  ///< tied points may be split among their tied labels
};

/// Largest number of integral tie completions is_equilibrium will enumerate.
inline constexpr double kTieCompletionLimit = 1048576.0;

/// Whether some completion of the ties at p meets `target` within `tol` in the
/// max norm. Without tie search only the lowest-index rule is tried. Integral
/// search throws TooManyTies above 2^20 completions.
bool is_equilibrium(const LayeredMeasure& m, const CostField& c,
                    const PriceMatrix& p, const DemandMatrix& target, double tol,
                    bool allow_tie_search = true,
                    TieCompletion completion = TieCompletion::Integral,
                    double tie_tolerance = kTieTolerance);

/// First integral completion of the ties at p (odometer order over tied
/// points) meeting `target` within `tol`. Throws TooManyTies above 2^20.
std::optional<Assignment> integral_tie_completion(
    const LayeredMeasure& m, const CostField& c, const PriceMatrix& p,
    const DemandMatrix& target, double tol,
    double tie_tolerance = kTieTolerance);

struct TieCompletionResult {
  double residual = 0.0;          ///< max-norm distance to the target
  FractionalAssignment plan;      ///< best completion found
};

/// Smallest max-norm residual over fractional splits of the tied points
/// (labels within `tie_tolerance` of the best income).
TieCompletionResult best_fractional_completion(const LayeredMeasure& m,
                                               const CostField& c,
                                               const PriceMatrix& p,
                                               const DemandMatrix& target,
                                               double tie_tolerance);

/// Cheapest fractional plan meeting the target exactly while using only
/// labels within `tie_tolerance` of the best income. Empty when none exists.
std::optional<FractionalAssignment> cheapest_completion(const LayeredMeasure& m,
                                                        const CostField& c,
                                                        const PriceMatrix& p,
                                                        const DemandMatrix& target,
                                                        double tie_tolerance);

/// The fractional primal: minimize sum_ti pi_ti w_t c_i(x_t) subject to the
/// demand rows and point capacities. Its demand-row duals are prices whose
/// dual objective equals the optimal value.
struct RelaxedTransport {
  double value = 0.0;
  FractionalAssignment plan;
  PriceMatrix prices;
};

/// Throws InfeasibleDemand when the target is not fractionally achievable.
RelaxedTransport relaxed_transport(const LayeredMeasure& m, const CostField& c,
                                   const DemandMatrix& target);

}  // namespace vecot

#endif  // VECOT_PRICING_HPP
