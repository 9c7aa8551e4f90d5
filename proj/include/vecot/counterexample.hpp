#ifndef VECOT_COUNTEREXAMPLE_HPP
#define VECOT_COUNTEREXAMPLE_HPP

#include "vecot/dual_solver.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace vecot {

struct WitnessConfig {
  Index layers = 2;
  Index agents = 2;
  Index interior_per_agent = 3;
  double boundary_scale = 0.05;
  std::uint64_t seed = 7;
  /// Smallest relative distance of an interior sample of the designated pair
  /// from their shared boundary.
  double interior_gap = 1e-5;
  /// Boundary atoms all get weight `boundary_scale` instead of s * 2^l.
  bool equal_boundary_weights = false;
  /// Drop the boundary atoms entirely (obstruction-free control level).
  bool include_boundary = true;
  /// Agent (1-based) receiving each boundary atom; defaults to i, k, i, ...
  std::optional<std::vector<int>> boundary_split;
  int pair_i = 1;
  int pair_k = 2;
};

/// A demand with a unique sub-partition and costs under which no price is an
/// equilibrium. Every point except the boundary atoms lies strictly inside
/// its agent's zero-cost cell at `base_prices`; the atoms sit on the shared
/// boundary of agents pair_i and pair_k.
struct WitnessInstance {
  LayeredMeasure measure;
  CostField cost;
  PriceMatrix base_prices;
  DemandMatrix target;
  Assignment designated;
  std::vector<Index> boundary;   ///< point indices of the q+1 atoms
  Vector adversarial;            ///< c_i - c_k on the atoms, not in V
  RowVector boundary_row;        ///< shared density row of the atoms
  WitnessConfig config;
};

WitnessInstance build_witness(const WitnessConfig& cfg = {});

WitnessInstance build_witness(Index layers, Index agents,
                              Index interior_per_agent, double boundary_scale,
                              std::uint64_t seed);

/// Least-squares distance from w to V = {(t . zeta(x_l))_l : t in R^q}.
double span_residual(const WitnessInstance& wit);

/// Same instance with every cost set to zero.
WitnessInstance without_costs(const WitnessInstance& wit);

struct UniquenessReport {
  bool unique = false;
  std::uint64_t witness_count = 0;
  std::optional<Assignment> witness;
};

/// Brute force over every labelling; throws TooLarge beyond the guard.
UniquenessReport verify_uniqueness(const WitnessInstance& wit);

struct GridSpec {
  Index per_axis = 41;
  double low = -10.0;
  double high = 10.0;
  double tolerance = 1e-9;
  /// Worker count; 0 reads VECOT_THREADS, falling back to the hardware.
  unsigned threads = 0;
};

/// Worker count from VECOT_THREADS (>= 1), else hardware concurrency.
unsigned worker_count(unsigned requested = 0);

struct NoEquilibriumEvidence {
  double threshold_lower = 0.0;   ///< max w over atoms sold to pair_i
  double threshold_upper = 0.0;   ///< min w over atoms sold to pair_k
  bool threshold_infeasible = false;
  std::uint64_t grid_points = 0;
  std::uint64_t grid_equilibria = 0;
  std::optional<PriceMatrix> first_grid_equilibrium;
  DualReport solver;
  double smallest_atom_mass = 0.0;
  bool solver_diverged = false;
  bool residual_floor_ok = false;  ///< floor >= half the smallest atom mass
  /// Verdict: decided by the threshold argument alone.
  bool no_equilibrium = false;
};

/// Threshold interval for the designated split on the atoms.
std::pair<double, double> threshold_interval(const WitnessInstance& wit);

NoEquilibriumEvidence verify_no_equilibrium(const WitnessInstance& wit,
                                            const GridSpec& grid = {},
                                            const SolverConfig& solver = {});

/// Number of equilibria found on the grid (tie search over integral
/// completions), plus the first one in grid order.
std::pair<std::uint64_t, std::optional<PriceMatrix>> grid_search(
    const LayeredMeasure& m, const CostField& c, const DemandMatrix& target,
    const GridSpec& grid);

struct RefinementRow {
  Index level = 0;
  double boundary_scale = 0.0;
  double interior_gap = 0.0;
  bool has_boundary = true;
  /// Smallest max-norm price attaining the relaxed dual optimum, i.e. the
  /// price size needed for zero tie-completed residual.
  double attainment_norm = 0.0;
  SolveStatus status = SolveStatus::IterationCap;
  double best_residual = 0.0;  ///< smallest residual seen by the solver
  double final_price_norm = 0.0;
};

/// Smallest max-norm maximizer of the dual functional (an LP over the
/// optimal face of the fractional transport dual).
double attainment_norm(const LayeredMeasure& m, const CostField& c,
                       const DemandMatrix& target);

/// Levels l = 0..levels-1 shrink the boundary scale and the interior gap by
/// 4^l; a final row removes the boundary atoms.
std::vector<RefinementRow> refinement_study(const WitnessConfig& base,
                                            Index levels,
                                            const SolverConfig& solver = {});

}  // namespace vecot

#endif  // VECOT_COUNTEREXAMPLE_HPP
