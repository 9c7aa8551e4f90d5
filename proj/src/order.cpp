#include "vecot/order.hpp"

#include "vecot/error.hpp"
#include "vecot/pricing.hpp"

#include <cmath>
#include <random>
#include <set>

namespace vecot {

double ConvexFunction::operator()(const Eigen::Ref<const RowVector>& z) const {
  switch (kind) {
    case Kind::Coordinate: return z(coordinate);
    case Kind::MaxCoordinate: return z.maxCoeff();
    case Kind::L1: return z.cwiseAbs().sum();
    case Kind::L2: return z.norm();
    case Kind::LInf: return z.cwiseAbs().maxCoeff();
    case Kind::MaxAffine: {
      double best = 0.0;
      for (Index k = 0; k < slopes.rows(); ++k)
        best = std::max(best, slopes.row(k).dot(z) + intercepts(k));
      return best;
    }
  }
  return 0.0;
}

ConvexTestFamily ConvexTestFamily::builtin(Index layers, Index random_pieces,
                                           std::uint64_t seed) {
  using Kind = ConvexFunction::Kind;
  ConvexTestFamily fam;
  for (Index j = 0; j < layers; ++j) {
    ConvexFunction f;
    f.kind = Kind::Coordinate;
    f.coordinate = j;
    f.name = "z" + std::to_string(j);
    fam.members.push_back(f);
  }
  const std::pair<Kind, const char*> named[] = {{Kind::MaxCoordinate, "max"},
                                                {Kind::L1, "l1"},
                                                {Kind::L2, "l2"},
                                                {Kind::LInf, "linf"}};
  for (const auto& [kind, name] : named) {
    ConvexFunction f;
    f.kind = kind;
    f.name = name;
    fam.members.push_back(f);
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index r = 0; r < random_pieces; ++r) {
    ConvexFunction f;
    f.kind = Kind::MaxAffine;
    f.slopes = Matrix(3, layers);
    f.intercepts = Vector(3);
    for (Index k = 0; k < 3; ++k) {
      for (Index j = 0; j < layers; ++j) f.slopes(k, j) = normal(rng);
      f.intercepts(k) = 0.5 * normal(rng);
    }
    f.name = "maxaffine" + std::to_string(r);
    fam.members.push_back(f);
  }
  return fam;
}

double convex_functional(const LayeredMeasure& m, const ConvexFunction& f) {
  double total = 0.0;
  for (Index t = 0; t < m.size(); ++t) total += m.weight(t) * f(m.density(t));
  return total;
}

namespace {

void check_layers(const LayeredMeasure& mx, const LayeredMeasure& my) {
  if (mx.layers() != my.layers())
    throw Error(ErrorCode::SizeMismatch, "measures have different layer counts");
}

}  // namespace

DemandMatrix pad_demand(const DemandMatrix& d, Index agents) {
  if (agents < d.rows())
    throw Error(ErrorCode::InvalidArgument, "cannot pad to fewer agents");
  DemandMatrix out = DemandMatrix::Zero(agents, d.cols());
  out.topRows(d.rows()) = d;
  return out;
}

DominanceResult dominates_n(const LayeredMeasure& mx, const LayeredMeasure& my,
                            Index agents, std::size_t trials, std::uint64_t seed) {
  check_layers(mx, my);
  if (agents < 1) throw Error(ErrorCode::InvalidArgument, "need at least one agent");
  DominanceResult out;
  std::set<Assignment> seen;

  auto test = [&](const Assignment& labels) {
    if (!seen.insert(labels).second) return false;
    const DemandMatrix d = demand_of(my, labels, agents);
    ++out.demands_tested;
    if (achievable_relaxed(d, mx).achievable) return false;
    out.verdict = DominanceVerdict::FailsWithWitness;
    out.witness = d;
    out.y_labels = labels;
    return true;
  };

  const std::size_t ty = static_cast<std::size_t>(my.size());
  // Whole space to one agent: fails whenever a layer of Y outweighs X.
  if (test(Assignment(ty, 1))) return out;

  if (enumeration_size(agents, my.size()) <= kExhaustiveDominanceLimit) {
    out.exhaustive = true;
    Assignment labels(ty, 0);
    while (true) {
      if (test(labels)) return out;
      std::size_t k = 0;
      for (; k < ty; ++k) {
        if (++labels[k] <= agents) break;
        labels[k] = 0;
      }
      if (k == ty) break;
    }
    return out;
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> label(0, static_cast<int>(agents));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Assignment labels(ty);
    for (auto& l : labels) l = label(rng);
    if (test(labels)) return out;
    // Zero-cost partitions induced by prices are the extreme points of the
    // relaxed demand set of Y.
    PriceMatrix p(agents, my.layers());
    for (Index i = 0; i < p.rows(); ++i)
      for (Index j = 0; j < p.cols(); ++j) p(i, j) = normal(rng);
    if (test(zero_cost_assign(my, p))) return out;
  }
  return out;
}

lp::LinearProgram kernel_program(const LayeredMeasure& mx, const LayeredMeasure& my) {
  check_layers(mx, my);
  const Index tx = mx.size();
  const Index ty = my.size();
  const Index q = mx.layers();
  lp::LinearProgram p(tx * ty);
  p.constraints = Matrix::Zero(tx + ty * q, tx * ty);
  p.rhs = Vector::Zero(tx + ty * q);
  p.senses.assign(static_cast<std::size_t>(tx + ty * q), lp::Sense::Equal);
  for (Index t = 0; t < tx; ++t) {
    p.constraints.block(t, t * ty, 1, ty).setOnes();
    p.rhs(t) = 1.0;
  }
  for (Index s = 0; s < ty; ++s) {
    for (Index j = 0; j < q; ++j) {
      const Index row = tx + s * q + j;
      for (Index t = 0; t < tx; ++t)
        p.constraints(row, t * ty + s) = mx.weight(t) * mx.density(t)(j);
      p.rhs(row) = my.weight(s) * my.density(s)(j);
    }
  }
  return p;
}

KernelResult kernel_exists(const LayeredMeasure& mx, const LayeredMeasure& my) {
  KernelResult out;
  out.program = kernel_program(mx, my);
  const lp::Feasibility f = lp::feasibility(out.program);
  out.exists = f.feasible;
  if (!f.feasible) {
    out.certificate = f.certificate;
    return out;
  }
  const Index ty = my.size();
  KernelMatrix k(mx.size(), ty);
  for (Index t = 0; t < mx.size(); ++t)
    for (Index s = 0; s < ty; ++s) k(t, s) = std::max(0.0, f.point(t * ty + s));
  out.kernel = std::move(k);
  return out;
}

ConvexCriterionResult convex_criterion(const LayeredMeasure& mx,
                                       const LayeredMeasure& my,
                                       const ConvexTestFamily& family) {
  check_layers(mx, my);
  ConvexCriterionResult out;
  out.worst_gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < family.members.size(); ++k) {
    const double gap = convex_functional(mx, family.members[k]) -
                       convex_functional(my, family.members[k]);
    out.worst_gap = std::min(out.worst_gap, gap);
    if (gap < -1e-9 && out.holds) {
      out.holds = false;
      out.failing = k;
    }
  }
  if (family.members.empty()) out.worst_gap = 0.0;
  return out;
}

Pushforward kernel_pushforward(const LayeredMeasure& mx, const KernelMatrix& k,
                               const Matrix& target_points) {
  if (k.rows() != mx.size() || k.cols() != target_points.rows())
    throw Error(ErrorCode::SizeMismatch, "kernel shape does not match the measures");
  if ((k.array() < 0.0).any())
    throw Error(ErrorCode::InvalidArgument, "kernel has negative entries");
  for (Index t = 0; t < k.rows(); ++t)
    if (std::abs(k.row(t).sum() - 1.0) > 1e-9)
      throw Error(ErrorCode::InvalidArgument,
                  "kernel row " + std::to_string(t) + " is not stochastic",
                  static_cast<std::size_t>(t));

  const Matrix mass = k.transpose() * (mx.weights().asDiagonal() * mx.densities());
  std::vector<Index> kept;
  std::vector<Index> dropped;
  for (Index s = 0; s < mass.rows(); ++s) {
    if (mass.row(s).sum() > 0.0) kept.push_back(s);
    else dropped.push_back(s);
  }
  if (kept.empty()) throw Error(ErrorCode::EmptyMeasure, "every target point is empty");
  const Index ty = static_cast<Index>(kept.size());
  Matrix points(ty, target_points.cols());
  Vector weights(ty);
  Matrix densities(ty, mx.layers());
  for (Index r = 0; r < ty; ++r) {
    const Index s = kept[static_cast<std::size_t>(r)];
    points.row(r) = target_points.row(s);
    weights(r) = mass.row(s).sum();
    densities.row(r) = mass.row(s) / weights(r);
  }
  return {build_measure(points, weights, densities), dropped};
}

double kantorovich_dual_value(const LayeredMeasure& mx, const LayeredMeasure& my,
                              const Vector& phi, const Matrix& psi) {
  const Matrix nu = my.weights().asDiagonal() * my.densities();
  return mx.weights().dot(phi) + (nu.array() * psi.array()).sum();
}

double kantorovich_dual_violation(const LayeredMeasure& mx,
                                  const LayeredMeasure& my,
                                  const Matrix& pair_cost, const Vector& phi,
                                  const Matrix& psi) {
  const Matrix lhs = phi.replicate(1, my.size()) + mx.densities() * psi.transpose();
  return std::max(0.0, (lhs - pair_cost).maxCoeff());
}

KantorovichResult kantorovich_q(const LayeredMeasure& mx, const LayeredMeasure& my,
                                const Matrix& pair_cost) {
  check_layers(mx, my);
  const Index tx = mx.size();
  const Index ty = my.size();
  const Index q = mx.layers();
  if (pair_cost.rows() != tx || pair_cost.cols() != ty)
    throw Error(ErrorCode::SizeMismatch, "pair cost must be T_X x T_Y");
  if (!pair_cost.allFinite())
    throw Error(ErrorCode::InvalidArgument, "pair cost has non-finite entries");

  lp::LinearProgram p(tx * ty);
  p.constraints = Matrix::Zero(tx + ty * q, tx * ty);
  p.rhs = Vector::Zero(tx + ty * q);
  p.senses.assign(static_cast<std::size_t>(tx + ty * q), lp::Sense::Equal);
  for (Index t = 0; t < tx; ++t) {
    p.constraints.block(t, t * ty, 1, ty).setOnes();
    p.rhs(t) = mx.weight(t);
    for (Index s = 0; s < ty; ++s) p.cost(t * ty + s) = pair_cost(t, s);
  }
  for (Index s = 0; s < ty; ++s) {
    for (Index j = 0; j < q; ++j) {
      const Index row = tx + s * q + j;
      for (Index t = 0; t < tx; ++t) p.constraints(row, t * ty + s) = mx.density(t)(j);
      p.rhs(row) = my.weight(s) * my.density(s)(j);
    }
  }
  const lp::Solution sol = lp::solve(p);
  if (sol.status == lp::Status::Infeasible)
    throw Error(ErrorCode::InfeasiblePlan, "no plan has the required layer marginals");
  if (sol.status != lp::Status::Optimal)
    throw Error(ErrorCode::NumericalBreakdown, "Kantorovich LP did not solve");

  KantorovichResult out;
  out.value = sol.objective;
  out.plan = Matrix(tx, ty);
  for (Index t = 0; t < tx; ++t)
    for (Index s = 0; s < ty; ++s) out.plan(t, s) = std::max(0.0, sol.primal(t * ty + s));
  out.phi = sol.duals.head(tx);
  out.psi = Matrix(ty, q);
  for (Index s = 0; s < ty; ++s)
    for (Index j = 0; j < q; ++j) out.psi(s, j) = sol.duals(tx + s * q + j);
  out.dual_value = kantorovich_dual_value(mx, my, out.phi, out.psi);
  out.dual_violation = kantorovich_dual_violation(mx, my, pair_cost, out.phi, out.psi);
  return out;
}

}  // namespace vecot
