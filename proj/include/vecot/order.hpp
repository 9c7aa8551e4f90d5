#ifndef VECOT_ORDER_HPP
#define VECOT_ORDER_HPP

#include "vecot/lp.hpp"
#include "vecot/partition.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace vecot {

/// T_X x T_Y row-stochastic matrix: row t spreads source point t over Y.
using KernelMatrix = Matrix;

/// Non-negative convex function on the simplex of density rows.
struct ConvexFunction {
  enum class Kind { MaxAffine, Coordinate, MaxCoordinate, L1, L2, LInf };
  Kind kind = Kind::MaxAffine;
  Index coordinate = 0;  ///< for Coordinate
  Matrix slopes;         ///< for MaxAffine: one slope row per piece
  Vector intercepts;     ///< for MaxAffine; the zero function is an extra piece
  std::string name;

  double operator()(const Eigen::Ref<const RowVector>& z) const;
};

struct ConvexTestFamily {
  std::vector<ConvexFunction> members;

  /// Coordinates, the coordinate maximum, l1/l2/linf norms and
  /// `random_pieces` max-affine functions with three random pieces each.
  static ConvexTestFamily builtin(Index layers, Index random_pieces,
                                  std::uint64_t seed);
};

/// sum_t w_t f(zeta(x_t))
double convex_functional(const LayeredMeasure& m, const ConvexFunction& f);

enum class DominanceVerdict { Holds, FailsWithWitness };

struct DominanceResult {
  DominanceVerdict verdict = DominanceVerdict::Holds;
  std::optional<DemandMatrix> witness;  ///< achievable in Y, not in X
  std::optional<Assignment> y_labels;   ///< Y labelling behind the witness
  std::size_t demands_tested = 0;
  bool exhaustive = false;  ///< every Y labelling was tried
};

/// Y labellings tried exhaustively when (n+1)^T_Y is at most this.
inline constexpr double kExhaustiveDominanceLimit = 4096.0;

/// Sampling evidence for inclusion of the achievable demand sets. Tries the
/// single-agent full assignment, `trials` random labellings, `trials`
/// price-induced (extreme) labellings, and every labelling when small enough.
/// Holds is evidence, not proof.
DominanceResult dominates_n(const LayeredMeasure& mx, const LayeredMeasure& my,
                            Index agents, std::size_t trials, std::uint64_t seed);

/// Pads a demand matrix with zero rows up to `agents` rows.
DemandMatrix pad_demand(const DemandMatrix& d, Index agents);

struct KernelResult {
  bool exists = false;
  std::optional<KernelMatrix> kernel;
  std::optional<lp::FarkasCertificate> certificate;
  lp::LinearProgram program;  ///< the feasibility system, for checking
};

/// Variables K(t, s) at index t * T_Y + s; rows 0..T_X-1 are the row sums,
/// then the mass rows s * q + j.
lp::LinearProgram kernel_program(const LayeredMeasure& mx, const LayeredMeasure& my);

KernelResult kernel_exists(const LayeredMeasure& mx, const LayeredMeasure& my);

struct ConvexCriterionResult {
  bool holds = true;
  std::optional<std::size_t> failing;  ///< index into the family
  double worst_gap = 0.0;  ///< min over f of (X side - Y side)
};

ConvexCriterionResult convex_criterion(const LayeredMeasure& mx,
                                       const LayeredMeasure& my,
                                       const ConvexTestFamily& family);

struct Pushforward {
  LayeredMeasure measure;
  std::vector<Index> dropped;  ///< target points that received no mass
};

/// Image of mx under K placed at `target_points` (T_Y x d).
Pushforward kernel_pushforward(const LayeredMeasure& mx, const KernelMatrix& k,
                               const Matrix& target_points);

struct KantorovichResult {
  double value = 0.0;
  Matrix plan;     ///< T_X x T_Y
  Vector phi;      ///< T_X
  Matrix psi;      ///< T_Y x q
  double dual_value = 0.0;
  /// Largest violation of phi_t + zeta(x_t) . psi_s <= c(t, s).
  double dual_violation = 0.0;
};

/// Value of a dual pair: sum_t w_t phi_t + sum_{s,j} w_s zeta_j(y_s) psi_sj.
double kantorovich_dual_value(const LayeredMeasure& mx, const LayeredMeasure& my,
                              const Vector& phi, const Matrix& psi);

/// Largest violation of the dual constraints by (phi, psi).
double kantorovich_dual_violation(const LayeredMeasure& mx,
                                  const LayeredMeasure& my,
                                  const Matrix& pair_cost, const Vector& phi,
                                  const Matrix& psi);

/// Minimizes sum c(t,s) pi(t,s) over plans with first marginal w and layer
/// marginals nu. Throws InfeasiblePlan when no such plan exists.
KantorovichResult kantorovich_q(const LayeredMeasure& mx, const LayeredMeasure& my,
                                const Matrix& pair_cost);

}  // namespace vecot

#endif  // VECOT_ORDER_HPP
