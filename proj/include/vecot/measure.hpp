#ifndef VECOT_MEASURE_HPP
#define VECOT_MEASURE_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace vecot {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

/// Accepted deviation of a raw density row sum from 1 before renormalizing.
inline constexpr double kSimplexAcceptTolerance = 1e-9;
/// Deviation allowed after renormalization.
inline constexpr double kSimplexTolerance = 1e-12;

/// A finite weighted point cloud with q layers. Row t of `densities` is the
/// vector of relative layer densities at point t and lies on the probability
/// simplex; layer j carries mass weight(t) * densities(t, j) at point t.
///
/// Instances are immutable once built and are only obtained through
/// build_measure, so every instance satisfies the structural invariants.
class LayeredMeasure {
 public:
  Index size() const noexcept { return weights_.size(); }
  Index layers() const noexcept { return densities_.cols(); }
  Index dimension() const noexcept { return points_.cols(); }

  const Matrix& points() const noexcept { return points_; }
  const Vector& weights() const noexcept { return weights_; }
  const Matrix& densities() const noexcept { return densities_; }

  double weight(Index t) const { return weights_(t); }
  auto density(Index t) const { return densities_.row(t); }

  /// Sum of all point weights.
  double scalar_mass() const noexcept { return weights_.sum(); }

 private:
  friend LayeredMeasure build_measure(Matrix points, Vector weights,
                                      Matrix densities);
  LayeredMeasure() = default;

  Matrix points_;
  Vector weights_;
  Matrix densities_;
};

/// Validates and assembles a measure. Points are T x d, weights length T,
/// densities T x q. Density rows within 1e-9 of the simplex are renormalized;
/// anything further off is rejected with NonSimplexRow.
LayeredMeasure build_measure(Matrix points, Vector weights, Matrix densities);

/// Per-layer total masses: entry j is the sum over t of w_t * zeta_j(x_t).
Vector total_mass(const LayeredMeasure& m);

/// Per-agent production costs c_i(x_t), stored n x T. The null agent has zero
/// cost everywhere and is never stored.
class CostField {
 public:
  explicit CostField(Matrix costs);

  Index agents() const noexcept { return costs_.rows(); }
  Index points() const noexcept { return costs_.cols(); }
  const Matrix& values() const noexcept { return costs_; }
  double operator()(Index agent, Index point) const {
    return costs_(agent, point);
  }

  /// Zero cost for `agents` agents over `points` points.
  static CostField zero(Index agents, Index points);

 private:
  Matrix costs_;
};

/// Throws SizeMismatch unless the cost field covers exactly the measure's
/// points.
void check_compatible(const LayeredMeasure& m, const CostField& c);

struct GenericityReport {
  /// Groups of point indices sharing an identical density row.
  std::vector<std::vector<Index>> duplicate_rows;
  /// Per probe direction, weight of points with |lambda . zeta| < 1e-9.
  std::vector<double> orthogonal_weight;
  /// Per probe direction and ordered agent pair (i < k), weight of points
  /// with |lambda . zeta - (c_i - c_k)| < 1e-9.
  std::vector<double> cost_aligned_weight;
  double max_orthogonal_weight = 0.0;
  double max_cost_aligned_weight = 0.0;
};

/// Advisory diagnostics for the generic-position assumptions on densities
/// and cost differences. Never throws for valid, paired inputs.
GenericityReport genericity_report(const LayeredMeasure& m, const CostField& c,
                                   std::size_t probes, std::uint64_t seed);

/// Same report with caller-supplied probe directions (each of length q).
GenericityReport genericity_report(const LayeredMeasure& m, const CostField& c,
                                   const std::vector<Vector>& directions);

}  // namespace vecot

#endif  // VECOT_MEASURE_HPP
