#include "vecot/partition.hpp"

#include "vecot/error.hpp"

#include <cmath>
#include <random>
#include <string>

namespace vecot {

namespace {

constexpr double kNecessaryTolerance = 1e-9;

/// Row t = w_t * zeta(x_t).
Matrix layer_masses(const LayeredMeasure& m) {
  return m.weights().asDiagonal() * m.densities();
}

}  // namespace

void check_assignment(const LayeredMeasure& m, const Assignment& a,
                      Index agents) {
  if (static_cast<Index>(a.size()) != m.size())
    throw Error(ErrorCode::SizeMismatch,
                "assignment has " + std::to_string(a.size()) +
                    " labels for " + std::to_string(m.size()) + " points");
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a[t] < 0 || a[t] > agents)
      throw Error(ErrorCode::IndexOutOfRange,
                  "label " + std::to_string(a[t]) + " at point " +
                      std::to_string(t) + " is outside 0.." +
                      std::to_string(agents),
                  t);
  }
}

DemandMatrix demand_of(const LayeredMeasure& m, const Assignment& a,
                       Index agents) {
  check_assignment(m, a, agents);
  DemandMatrix d = DemandMatrix::Zero(agents, m.layers());
  for (Index t = 0; t < m.size(); ++t) {
    const int label = a[static_cast<std::size_t>(t)];
    if (label > 0) d.row(label - 1) += m.weight(t) * m.density(t);
  }
  return d;
}

DemandMatrix demand_of(const LayeredMeasure& m, const FractionalAssignment& a) {
  if (a.rows() != m.size() || a.cols() < 1)
    throw Error(ErrorCode::SizeMismatch, "fractional assignment shape");
  return a.rightCols(a.cols() - 1).transpose() * layer_masses(m);
}

double monge_cost(const LayeredMeasure& m, const CostField& c,
                  const Assignment& a) {
  check_compatible(m, c);
  check_assignment(m, a, c.agents());
  double total = 0.0;
  for (Index t = 0; t < m.size(); ++t) {
    const int label = a[static_cast<std::size_t>(t)];
    if (label > 0) total += m.weight(t) * c(label - 1, t);
  }
  return total;
}

Vector layer_excess(const DemandMatrix& d, const LayeredMeasure& m) {
  if (d.cols() != m.layers())
    throw Error(ErrorCode::SizeMismatch, "demand has wrong number of layers");
  return d.colwise().sum().transpose() - total_mass(m);
}

bool feasible_necessary(const DemandMatrix& d, const LayeredMeasure& m) {
  return (layer_excess(d, m).array() <= kNecessaryTolerance).all();
}

double enumeration_size(Index agents, Index points) {
  double size = 1.0;
  for (Index t = 0; t < points; ++t) {
    size *= static_cast<double>(agents + 1);
    if (size > 1e300) break;
  }
  return size;
}

namespace {

/// Depth-first enumeration in lexicographic label order. Partial sums only
/// grow, so a branch whose partial demand already overshoots is cut.
class ExactSearch {
 public:
  ExactSearch(const DemandMatrix& target, const LayeredMeasure& m, double tol)
      : target_(target),
        mass_(layer_masses(m)),
        tol_(tol),
        agents_(target.rows()),
        labels_(static_cast<std::size_t>(m.size()), 0) {
    // suffix_(t) = mass of points t..T-1, per layer.
    suffix_ = Matrix::Zero(m.size() + 1, m.layers());
    for (Index t = m.size() - 1; t >= 0; --t)
      suffix_.row(t) = suffix_.row(t + 1) + mass_.row(t);
  }

  ExactAchievability run() {
    DemandMatrix partial = DemandMatrix::Zero(agents_, target_.cols());
    descend(0, partial);
    return result_;
  }

 private:
  void descend(Index t, DemandMatrix& partial) {
    const Matrix gap = target_ - partial;
    if (gap.minCoeff() < -tol_) return;
    // Every agent still short must be fillable from the remaining points.
    for (Index j = 0; j < gap.cols(); ++j) {
      double needed = 0.0;
      for (Index i = 0; i < agents_; ++i) needed += std::max(0.0, gap(i, j) - tol_);
      if (needed > suffix_(t, j) + tol_) return;
    }
    if (t == static_cast<Index>(labels_.size())) {
      if (gap.cwiseAbs().maxCoeff() <= tol_) {
        if (result_.witness_count == 0) result_.witness = labels_;
        ++result_.witness_count;
        result_.achievable = true;
      }
      return;
    }
    for (int label = 0; label <= agents_; ++label) {
      labels_[static_cast<std::size_t>(t)] = label;
      if (label > 0) partial.row(label - 1) += mass_.row(t);
      descend(t + 1, partial);
      if (label > 0) partial.row(label - 1) -= mass_.row(t);
    }
    labels_[static_cast<std::size_t>(t)] = 0;
  }

  const DemandMatrix& target_;
  Matrix mass_;
  Matrix suffix_;
  double tol_;
  Index agents_;
  Assignment labels_;
  ExactAchievability result_;
};

}  // namespace

ExactAchievability achievable_exact(const DemandMatrix& d, const LayeredMeasure& m,
                                    double tol) {
  if (d.cols() != m.layers())
    throw Error(ErrorCode::SizeMismatch, "demand has wrong number of layers");
  if (d.rows() < 1) throw Error(ErrorCode::InvalidArgument, "no agents");
  if (enumeration_size(d.rows(), m.size()) > kEnumerationLimit)
    throw Error(ErrorCode::TooLarge,
                "exact enumeration needs (n+1)^T = " +
                    std::to_string(enumeration_size(d.rows(), m.size())) +
                    " labellings; use the relaxed oracle");
  ExactSearch search(d, m, tol);
  return search.run();
}

lp::LinearProgram achievability_program(const DemandMatrix& d,
                                        const LayeredMeasure& m) {
  if (d.cols() != m.layers())
    throw Error(ErrorCode::SizeMismatch, "demand has wrong number of layers");
  const Index n = d.rows();
  const Index size = m.size();
  const Index q = m.layers();
  const Matrix mass = layer_masses(m);

  lp::LinearProgram p(size * n);
  p.constraints = Matrix::Zero(size + n * q, size * n);
  p.rhs = Vector::Zero(size + n * q);
  p.senses.assign(static_cast<std::size_t>(size + n * q), lp::Sense::Equal);
  for (Index t = 0; t < size; ++t) {
    p.constraints.block(t, t * n, 1, n).setOnes();
    p.rhs(t) = 1.0;
    p.senses[static_cast<std::size_t>(t)] = lp::Sense::LessEqual;
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < q; ++j) {
      const Index row = size + i * q + j;
      for (Index t = 0; t < size; ++t) p.constraints(row, t * n + i) = mass(t, j);
      p.rhs(row) = d(i, j);
    }
  }
  return p;
}

RelaxedAchievability achievable_relaxed(const DemandMatrix& d,
                                        const LayeredMeasure& m) {
  const lp::LinearProgram p = achievability_program(d, m);
  const lp::Feasibility f = lp::feasibility(p);
  RelaxedAchievability out;
  out.achievable = f.feasible;
  if (!f.feasible) {
    out.certificate = f.certificate;
    return out;
  }
  const Index n = d.rows();
  FractionalAssignment pi = FractionalAssignment::Zero(m.size(), n + 1);
  for (Index t = 0; t < m.size(); ++t) {
    double sold = 0.0;
    for (Index i = 0; i < n; ++i) {
      pi(t, i + 1) = std::max(0.0, f.point(t * n + i));
      sold += pi(t, i + 1);
    }
    pi(t, 0) = std::max(0.0, 1.0 - sold);
  }
  out.witness = std::move(pi);
  return out;
}

bool row_achievable(const Eigen::Ref<const RowVector>& row,
                    const LayeredMeasure& m) {
  if (row.size() != m.layers())
    throw Error(ErrorCode::SizeMismatch, "demand row has wrong number of layers");
  const Matrix mass = layer_masses(m);
  lp::LinearProgram p(m.size());
  p.upper.setOnes();
  p.constraints = mass.transpose();
  p.rhs = row.transpose();
  p.senses.assign(static_cast<std::size_t>(m.layers()), lp::Sense::Equal);
  return lp::feasibility(p).feasible;
}

SampledDemand sample_achievable(const LayeredMeasure& m, Index agents,
                                std::uint64_t seed) {
  if (agents < 1) throw Error(ErrorCode::InvalidArgument, "need at least one agent");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> label(0, static_cast<int>(agents));
  SampledDemand out;
  out.labels.resize(static_cast<std::size_t>(m.size()));
  for (auto& l : out.labels) l = label(rng);
  out.demand = demand_of(m, out.labels, agents);
  return out;
}

}  // namespace vecot
