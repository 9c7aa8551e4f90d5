#ifndef VECOT_DUAL_SOLVER_HPP
#define VECOT_DUAL_SOLVER_HPP

#include "vecot/error.hpp"
#include "vecot/pricing.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace vecot {

enum class StepRule {
  Diminishing,  ///< alpha_k = scale / (k + 1)
  Polyak,       ///< alpha_k = (estimate - D(P_k)) / |g_k|^2
};

enum class SolveStatus { Converged, Diverged, IterationCap };

std::string_view to_string(SolveStatus status) noexcept;
std::string_view to_string(StepRule rule) noexcept;

struct SolverConfig {
  long max_iterations = 50000;
  double tolerance = 1e-6;             ///< max-norm residual
  double divergence_threshold = 1e4;   ///< Frobenius price norm
  StepRule step_rule = StepRule::Diminishing;
  double step_scale = 1.0;
  /// Optimistic estimate of the dual supremum for Polyak steps. Without it
  /// the target level is the best value so far plus a shrinking margin.
  std::optional<double> polyak_estimate;
  /// Reported prices: 0 = best-objective iterate, otherwise the mean of the
  /// last `averaging_window` iterates.
  long averaging_window = 0;
  /// Random start (entries normal, scaled by the largest cost) when set.
  std::optional<std::uint64_t> seed;
  std::optional<PriceMatrix> initial_prices;

  /// Equilibrium certification from the current iterate.
  bool certify = true;
  long certify_every = 10;
  long tie_window = 20;    ///< iterates used to size the tie tolerance
  long stall_window = 1000;  ///< residual floor window for divergence

  void validate() const;
};

struct HistoryRow {
  double objective;
  double residual;      ///< max-norm residual under the lowest-index rule
  double price_norm;    ///< Frobenius
};

struct DualReport {
  /// Best or averaged iterate; on Diverged, the iterate that crossed the
  /// threshold.
  PriceMatrix prices;
  double objective = 0.0;
  double best_objective = 0.0;
  Matrix residual_matrix;       ///< target minus the demand of `completion`
  double residual = 0.0;        ///< tie-completed residual at `prices`
  double integral_residual = 0.0;  ///< lowest-index residual at `prices`
  double price_norm = 0.0;
  /// Smallest lowest-index residual over the final stall window.
  double residual_floor = 0.0;
  long iterations = 0;
  SolveStatus status = SolveStatus::IterationCap;
  std::vector<HistoryRow> history;
  FractionalAssignment completion;  ///< tie completion behind `residual`
};

/// Supergradient ascent on the dual functional. Throws InfeasibleDemand when
/// the target violates the necessary mass condition.
DualReport solve_dual(const LayeredMeasure& m, const CostField& c,
                      const DemandMatrix& target, const SolverConfig& cfg = {});

/// solve_dual for a single layer; `target` holds one demand per agent.
DualReport solve_scalar(const LayeredMeasure& m, const CostField& c,
                        const Vector& target, const SolverConfig& cfg = {});

struct StablePartition {
  Assignment labels;
  double cost = 0.0;
  bool lp_integral = false;  ///< LP optimum was integral as returned
};

/// Raised by stable_partition when only fractional plans attain the optimum.
class FractionalOnlyError : public Error {
 public:
  FractionalOnlyError(double value, FractionalAssignment plan);
  double value() const noexcept { return value_; }
  const FractionalAssignment& plan() const noexcept { return plan_; }

 private:
  double value_;
  FractionalAssignment plan_;
};

/// Cost-minimizing sub-partition meeting the target, from the fractional LP.
StablePartition stable_partition(const LayeredMeasure& m, const CostField& c,
                                 const DemandMatrix& target,
                                 const SolverConfig& cfg = {});

}  // namespace vecot

#endif  // VECOT_DUAL_SOLVER_HPP
