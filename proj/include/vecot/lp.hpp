#ifndef VECOT_LP_HPP
#define VECOT_LP_HPP

#include "vecot/measure.hpp"

#include <limits>
#include <vector>

namespace vecot::lp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Primal feasibility tolerance shared by every oracle built on this solver.
inline constexpr double kFeasibilityTolerance = 1e-9;
/// Relative tolerance for primal/dual objective agreement.
inline constexpr double kDualityGapTolerance = 1e-8;

enum class Sense { LessEqual, Equal, GreaterEqual };
enum class Direction { Minimize, Maximize };

/// Dense linear program
///   optimize cost . x  subject to  A x (senses) rhs,  lower <= x <= upper.
/// Lower bounds are finite or -inf, upper bounds finite or +inf.
struct LinearProgram {
  Direction direction = Direction::Minimize;
  Vector cost;
  Matrix constraints;
  std::vector<Sense> senses;
  Vector rhs;
  Vector lower;
  Vector upper;

  LinearProgram() = default;
  /// `variables` nonnegative variables, no rows, zero objective.
  explicit LinearProgram(Index variables);

  Index variables() const noexcept { return cost.size(); }
  Index rows() const noexcept { return rhs.size(); }

  /// Appends a row and returns its index.
  Index add_row(const Eigen::Ref<const RowVector>& coefficients, Sense sense,
                double bound);

  /// Throws SizeMismatch / InvalidArgument when dimensions or coefficients
  /// are inconsistent.
  void validate() const;
};

enum class Status { Optimal, Infeasible, Unbounded };

/// For an Optimal solution the dual quantities satisfy
///   cost = A^T duals + upper_duals + reduced_costs
/// with sign conditions matching each row sense and bound (for a minimization:
/// duals <= 0 on <= rows, >= 0 on >= rows; upper_duals <= 0; reduced_costs
/// >= 0 on variables with a finite lower bound, 0 on free variables), and
///   objective = rhs . duals + upper . upper_duals + lower . reduced_costs
/// where the products skip infinite bounds. For a maximization every sign
/// flips.
struct Solution {
  Status status = Status::Infeasible;
  Vector primal;
  Vector duals;
  Vector upper_duals;
  Vector reduced_costs;
  double objective = 0.0;
  long pivots = 0;
};

/// Dense two-phase simplex. Dantzig pricing switches to Bland's rule after a
/// run of degenerate pivots, so the method terminates; the pivot sequence is
/// a deterministic function of the input.
Solution solve(const LinearProgram& program);

/// Objective of the dual solution: rhs . duals + bound terms.
double dual_objective(const LinearProgram& program, const Solution& solution);

/// Largest violation of the primal constraints and bounds by `x`.
double primal_residual(const LinearProgram& program, const Vector& x);

/// Largest violation of dual sign conditions and of complementary slackness
/// for an Optimal solution.
double complementarity_residual(const LinearProgram& program,
                                const Solution& solution);

/// Multipliers y for the rows and z for the finite upper bounds such that
///   y on <= rows <= 0, y on >= rows >= 0, z <= 0,
///   (A^T y + z)_j <= 0 for variables bounded below, = 0 for free variables,
///   rhs . y + upper . z - sum_j lower_j (A^T y + z)_j > 0.
/// Any such pair proves the system has no solution.
struct FarkasCertificate {
  Vector rows;
  Vector upper;
};

struct Feasibility {
  bool feasible = false;
  Vector point;                    ///< a feasible point when feasible
  FarkasCertificate certificate;   ///< set when infeasible
};

/// Phase-one only: decides whether the constraint system has a solution.
Feasibility feasibility(const LinearProgram& program);

/// Returns the certificate's margin rhs.y + ... (positive for a valid
/// certificate) after checking every sign condition within `tolerance`;
/// returns a non-positive value when any condition fails.
double farkas_margin(const LinearProgram& program,
                     const FarkasCertificate& certificate,
                     double tolerance = 1e-9);

inline bool verify_farkas(const LinearProgram& program,
                          const FarkasCertificate& certificate,
                          double tolerance = 1e-9) {
  return farkas_margin(program, certificate, tolerance) > tolerance;
}

}  // namespace vecot::lp

#endif  // VECOT_LP_HPP
