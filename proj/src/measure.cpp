#include "vecot/measure.hpp"

#include "vecot/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>

namespace vecot {

LayeredMeasure build_measure(Matrix points, Vector weights, Matrix densities) {
  const Index count = weights.size();
  if (count == 0) throw Error(ErrorCode::EmptyMeasure, "measure has no points");
  if (densities.cols() == 0)
    throw Error(ErrorCode::EmptyMeasure, "measure has no layers");
  if (points.rows() != count || densities.rows() != count)
    throw Error(ErrorCode::SizeMismatch,
                "points, weights and densities disagree on point count");
  if (points.cols() == 0)
    throw Error(ErrorCode::SizeMismatch, "points need at least one coordinate");
  if (!points.allFinite())
    throw Error(ErrorCode::InvalidArgument, "non-finite coordinate");

  for (Index t = 0; t < count; ++t) {
    if (!std::isfinite(weights(t)) || weights(t) <= 0.0)
      throw Error(ErrorCode::InvalidArgument,
                  "weight " + std::to_string(t) + " is not strictly positive",
                  static_cast<std::size_t>(t));
  }

  for (Index t = 0; t < count; ++t) {
    auto row = densities.row(t);
    if (!row.allFinite() || row.minCoeff() < 0.0)
      throw Error(ErrorCode::NonSimplexRow,
                  "density row " + std::to_string(t) + " has a negative entry",
                  static_cast<std::size_t>(t));
    const double sum = row.sum();
    if (std::abs(sum - 1.0) > kSimplexAcceptTolerance)
      throw Error(ErrorCode::NonSimplexRow,
                  "density row " + std::to_string(t) + " sums to " +
                      std::to_string(sum),
                  static_cast<std::size_t>(t));
    if (std::abs(sum - 1.0) > kSimplexTolerance) row /= sum;
  }

  // Lexicographic sort of coordinate rows finds exact duplicates.
  std::vector<Index> order(static_cast<std::size_t>(count));
  for (Index t = 0; t < count; ++t) order[static_cast<std::size_t>(t)] = t;
  auto less = [&](Index a, Index b) {
    for (Index k = 0; k < points.cols(); ++k) {
      if (points(a, k) != points(b, k)) return points(a, k) < points(b, k);
    }
    return false;
  };
  std::sort(order.begin(), order.end(), less);
  for (std::size_t r = 1; r < order.size(); ++r) {
    if (points.row(order[r]) == points.row(order[r - 1]))
      throw Error(ErrorCode::DuplicatePoint,
                  "points " + std::to_string(order[r - 1]) + " and " +
                      std::to_string(order[r]) + " coincide",
                  static_cast<std::size_t>(std::max(order[r], order[r - 1])));
  }

  LayeredMeasure m;
  m.points_ = std::move(points);
  m.weights_ = std::move(weights);
  m.densities_ = std::move(densities);
  return m;
}

Vector total_mass(const LayeredMeasure& m) {
  return m.densities().transpose() * m.weights();
}

CostField::CostField(Matrix costs) : costs_(std::move(costs)) {
  if (costs_.rows() < 1)
    throw Error(ErrorCode::InvalidArgument, "cost field needs an agent");
  if (!costs_.allFinite())
    throw Error(ErrorCode::InvalidArgument, "cost field has non-finite entries");
}

CostField CostField::zero(Index agents, Index points) {
  return CostField(Matrix::Zero(agents, points));
}

void check_compatible(const LayeredMeasure& m, const CostField& c) {
  if (c.points() != m.size())
    throw Error(ErrorCode::SizeMismatch,
                "cost field covers " + std::to_string(c.points()) +
                    " points, measure has " + std::to_string(m.size()));
}

namespace {

constexpr double kAlignTolerance = 1e-9;

std::vector<std::vector<Index>> duplicate_density_rows(const LayeredMeasure& m) {
  std::map<std::vector<double>, std::vector<Index>> groups;
  for (Index t = 0; t < m.size(); ++t) {
    const auto row = m.density(t);
    groups[std::vector<double>(row.begin(), row.end())].push_back(t);
  }
  std::vector<std::vector<Index>> out;
  for (auto& [row, members] : groups) {
    if (members.size() > 1) out.push_back(std::move(members));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

GenericityReport genericity_report(const LayeredMeasure& m, const CostField& c,
                                   const std::vector<Vector>& directions) {
  check_compatible(m, c);
  GenericityReport report;
  report.duplicate_rows = duplicate_density_rows(m);

  const Matrix& z = m.densities();
  const Matrix& costs = c.values();
  for (const Vector& lambda : directions) {
    if (lambda.size() != m.layers())
      throw Error(ErrorCode::SizeMismatch, "probe direction has wrong length");
    const Vector proj = z * lambda;
    double orth = 0.0;
    for (Index t = 0; t < m.size(); ++t) {
      if (std::abs(proj(t)) < kAlignTolerance) orth += m.weight(t);
    }
    report.orthogonal_weight.push_back(orth);
    report.max_orthogonal_weight = std::max(report.max_orthogonal_weight, orth);

    for (Index i = 0; i < c.agents(); ++i) {
      for (Index k = i + 1; k < c.agents(); ++k) {
        double aligned = 0.0;
        for (Index t = 0; t < m.size(); ++t) {
          if (std::abs(proj(t) - (costs(i, t) - costs(k, t))) < kAlignTolerance)
            aligned += m.weight(t);
        }
        report.cost_aligned_weight.push_back(aligned);
        report.max_cost_aligned_weight =
            std::max(report.max_cost_aligned_weight, aligned);
      }
    }
  }
  return report;
}

GenericityReport genericity_report(const LayeredMeasure& m, const CostField& c,
                                   std::size_t probes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector> directions;
  directions.reserve(probes);
  for (std::size_t p = 0; p < probes; ++p) {
    Vector v(m.layers());
    for (Index j = 0; j < v.size(); ++j) v(j) = normal(rng);
    const double norm = v.norm();
    directions.push_back(norm > 0.0 ? Vector(v / norm) : v);
  }
  return genericity_report(m, c, directions);
}

}  // namespace vecot
