#include "vecot/pricing.hpp"

#include "vecot/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vecot {

namespace {

void check_prices(const LayeredMeasure& m, const CostField& c,
                  const PriceMatrix& p) {
  check_compatible(m, c);
  if (p.rows() != c.agents() || p.cols() != m.layers())
    throw Error(ErrorCode::SizeMismatch,
                "price matrix must be " + std::to_string(c.agents()) + " x " +
                    std::to_string(m.layers()));
  if (!p.allFinite())
    throw Error(ErrorCode::InvalidArgument, "price matrix has non-finite entries");
}

void check_target(const LayeredMeasure& m, const CostField& c,
                  const DemandMatrix& d) {
  if (d.rows() != c.agents() || d.cols() != m.layers())
    throw Error(ErrorCode::SizeMismatch,
                "target must be " + std::to_string(c.agents()) + " x " +
                    std::to_string(m.layers()));
}

}  // namespace

Matrix net_income(const LayeredMeasure& m, const CostField& c,
                  const PriceMatrix& p) {
  check_prices(m, c, p);
  return m.densities() * p.transpose() - c.values().transpose();
}

double phi_at(const LayeredMeasure& m, const CostField& c, const PriceMatrix& p,
              Index t) {
  check_prices(m, c, p);
  if (t < 0 || t >= m.size())
    throw Error(ErrorCode::IndexOutOfRange,
                "point " + std::to_string(t) + " out of range",
                static_cast<std::size_t>(std::max<Index>(t, 0)));
  const RowVector income =
      m.density(t) * p.transpose() - c.values().col(t).transpose();
  return std::max(0.0, income.maxCoeff());
}

Vector phi(const LayeredMeasure& m, const CostField& c, const PriceMatrix& p) {
  const Matrix income = net_income(m, c, p);
  return income.rowwise().maxCoeff().cwiseMax(0.0);
}

std::vector<std::vector<int>> candidate_labels(const LayeredMeasure& m,
                                               const CostField& c,
                                               const PriceMatrix& p,
                                               double tolerance) {
  const Matrix income = net_income(m, c, p);
  std::vector<std::vector<int>> out(static_cast<std::size_t>(m.size()));
  for (Index t = 0; t < m.size(); ++t) {
    const double best = std::max(0.0, income.row(t).maxCoeff());
    const double cut = best - tolerance * (1.0 + std::abs(best));
    auto& labels = out[static_cast<std::size_t>(t)];
    if (0.0 >= cut) labels.push_back(0);
    for (Index i = 0; i < income.cols(); ++i)
      if (income(t, i) >= cut) labels.push_back(static_cast<int>(i + 1));
  }
  return out;
}

Assignment assign_by_price(const LayeredMeasure& m, const CostField& c,
                           const PriceMatrix& p, const TieRule& rule) {
  const auto candidates = candidate_labels(m, c, p);
  Assignment a(candidates.size(), 0);
  for (std::size_t t = 0; t < candidates.size(); ++t) {
    const auto& labels = candidates[t];
    a[t] = labels.front();
    const auto it = rule.overrides.find(static_cast<Index>(t));
    if (it != rule.overrides.end() &&
        std::find(labels.begin(), labels.end(), it->second) != labels.end())
      a[t] = it->second;
  }
  return a;
}

Assignment zero_cost_assign(const LayeredMeasure& m, const PriceMatrix& p,
                            const TieRule& rule) {
  return assign_by_price(m, CostField::zero(p.rows(), m.size()), p, rule);
}

DemandMatrix induced_demand(const LayeredMeasure& m, const CostField& c,
                            const PriceMatrix& p, const TieRule& rule) {
  return demand_of(m, assign_by_price(m, c, p, rule), c.agents());
}

double dual_objective(const LayeredMeasure& m, const CostField& c,
                      const PriceMatrix& p, const DemandMatrix& target) {
  check_target(m, c, target);
  const Vector f = phi(m, c, p);
  double outflow = 0.0;
  for (Index t = 0; t < m.size(); ++t) outflow += m.weight(t) * f(t);
  return (p.array() * target.array()).sum() - outflow;
}

Matrix dual_supergradient(const LayeredMeasure& m, const CostField& c,
                          const PriceMatrix& p, const DemandMatrix& target,
                          const TieRule& rule) {
  check_target(m, c, target);
  return target - induced_demand(m, c, p, rule);
}

namespace {

std::optional<Assignment> integral_completion(
    const LayeredMeasure& m, Index agents,
    const std::vector<std::vector<int>>& candidates, const DemandMatrix& target,
    double tol) {
  DemandMatrix base = DemandMatrix::Zero(agents, m.layers());
  std::vector<Index> tied;
  double completions = 1.0;
  for (Index t = 0; t < m.size(); ++t) {
    const auto& labels = candidates[static_cast<std::size_t>(t)];
    if (labels.size() == 1) {
      if (labels.front() > 0) base.row(labels.front() - 1) += m.weight(t) * m.density(t);
    } else {
      tied.push_back(t);
      completions *= static_cast<double>(labels.size());
    }
  }
  if (completions > kTieCompletionLimit)
    throw Error(ErrorCode::TooManyTies,
                std::to_string(tied.size()) + " tied points give " +
                    std::to_string(completions) +
                    " completions, above the 2^20 limit");

  // Odometer over the tied points.
  std::vector<std::size_t> digit(tied.size(), 0);
  DemandMatrix current = base;
  for (std::size_t k = 0; k < tied.size(); ++k) {
    const Index t = tied[k];
    const int l = candidates[static_cast<std::size_t>(t)][0];
    if (l > 0) current.row(l - 1) += m.weight(t) * m.density(t);
  }
  while (true) {
    if ((current - target).cwiseAbs().maxCoeff() <= tol) {
      Assignment a(candidates.size(), 0);
      for (std::size_t t = 0; t < candidates.size(); ++t) a[t] = candidates[t].front();
      for (std::size_t k = 0; k < tied.size(); ++k)
        a[static_cast<std::size_t>(tied[k])] =
            candidates[static_cast<std::size_t>(tied[k])][digit[k]];
      return a;
    }
    std::size_t k = 0;
    for (; k < tied.size(); ++k) {
      const Index t = tied[k];
      const auto& labels = candidates[static_cast<std::size_t>(t)];
      const RowVector mass = m.weight(t) * m.density(t);
      if (labels[digit[k]] > 0) current.row(labels[digit[k]] - 1) -= mass;
      digit[k] = (digit[k] + 1) % labels.size();
      if (labels[digit[k]] > 0) current.row(labels[digit[k]] - 1) += mass;
      if (digit[k] != 0) break;
    }
    if (k == tied.size()) return std::nullopt;
  }
}

}  // namespace

TieCompletionResult best_fractional_completion(const LayeredMeasure& m,
                                               const CostField& c,
                                               const PriceMatrix& p,
                                               const DemandMatrix& target,
                                               double tie_tolerance) {
  check_target(m, c, target);
  const auto candidates = candidate_labels(m, c, p, tie_tolerance);
  const Index n = c.agents();
  const Index q = m.layers();

  DemandMatrix base = DemandMatrix::Zero(n, q);
  FractionalAssignment plan = FractionalAssignment::Zero(m.size(), n + 1);
  struct Var {
    Index point;
    int label;
  };
  std::vector<Var> vars;
  std::vector<Index> tied;
  for (Index t = 0; t < m.size(); ++t) {
    const auto& labels = candidates[static_cast<std::size_t>(t)];
    if (labels.size() == 1) {
      plan(t, labels.front()) = 1.0;
      if (labels.front() > 0) base.row(labels.front() - 1) += m.weight(t) * m.density(t);
      continue;
    }
    tied.push_back(t);
    for (int l : labels)
      if (l > 0) vars.push_back({t, l});
  }

  TieCompletionResult out;
  const Index nv = static_cast<Index>(vars.size());
  if (nv == 0) {
    for (std::size_t k = 0; k < tied.size(); ++k) plan(tied[k], 0) = 1.0;
    out.residual = (base - target).cwiseAbs().maxCoeff();
    out.plan = std::move(plan);
    return out;
  }

  // Variables: split shares, then r. Minimize r.
  lp::LinearProgram prog(nv + 1);
  prog.cost(nv) = 1.0;
  for (Index t : tied) {
    RowVector row = RowVector::Zero(nv + 1);
    for (Index v = 0; v < nv; ++v)
      if (vars[static_cast<std::size_t>(v)].point == t) row(v) = 1.0;
    const auto& labels = candidates[static_cast<std::size_t>(t)];
    prog.add_row(row, labels.front() == 0 ? lp::Sense::LessEqual : lp::Sense::Equal,
                 1.0);
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < q; ++j) {
      RowVector row = RowVector::Zero(nv + 1);
      for (Index v = 0; v < nv; ++v) {
        const Var& var = vars[static_cast<std::size_t>(v)];
        if (var.label == i + 1) row(v) = m.weight(var.point) * m.density(var.point)(j);
      }
      const double gap = target(i, j) - base(i, j);
      row(nv) = -1.0;
      prog.add_row(row, lp::Sense::LessEqual, gap);
      row(nv) = 1.0;
      prog.add_row(row, lp::Sense::GreaterEqual, gap);
    }
  }
  const lp::Solution sol = lp::solve(prog);
  if (sol.status != lp::Status::Optimal)
    throw Error(ErrorCode::NumericalBreakdown, "tie completion LP failed");

  for (Index v = 0; v < nv; ++v) {
    const Var& var = vars[static_cast<std::size_t>(v)];
    plan(var.point, var.label) = sol.primal(v);
  }
  for (Index t : tied) {
    const double sold = plan.row(t).tail(n).sum();
    plan(t, 0) = std::max(0.0, 1.0 - sold);
  }
  out.plan = std::move(plan);
  out.residual = (demand_of(m, out.plan) - target).cwiseAbs().maxCoeff();
  return out;
}

bool is_equilibrium(const LayeredMeasure& m, const CostField& c,
                    const PriceMatrix& p, const DemandMatrix& target, double tol,
                    bool allow_tie_search, TieCompletion completion,
                    double tie_tolerance) {
  check_target(m, c, target);
  if (!allow_tie_search)
    return (induced_demand(m, c, p) - target).cwiseAbs().maxCoeff() <= tol;
  if (completion == TieCompletion::Fractional)
    return best_fractional_completion(m, c, p, target, tie_tolerance).residual <= tol;
  return integral_tie_completion(m, c, p, target, tol, tie_tolerance).has_value();
}

std::optional<Assignment> integral_tie_completion(const LayeredMeasure& m,
                                                  const CostField& c,
                                                  const PriceMatrix& p,
                                                  const DemandMatrix& target,
                                                  double tol,
                                                  double tie_tolerance) {
  check_target(m, c, target);
  return integral_completion(m, c.agents(),
                             candidate_labels(m, c, p, tie_tolerance), target,
                             tol);
}

RelaxedTransport relaxed_transport(const LayeredMeasure& m, const CostField& c,
                                   const DemandMatrix& target) {
  check_compatible(m, c);
  check_target(m, c, target);
  const Index n = c.agents();
  const Index q = m.layers();
  lp::LinearProgram prog = achievability_program(target, m);
  for (Index t = 0; t < m.size(); ++t)
    for (Index i = 0; i < n; ++i) prog.cost(t * n + i) = m.weight(t) * c(i, t);

  const lp::Solution sol = lp::solve(prog);
  if (sol.status == lp::Status::Infeasible)
    throw Error(ErrorCode::InfeasibleDemand,
                "target is not achievable even fractionally");
  if (sol.status != lp::Status::Optimal)
    throw Error(ErrorCode::NumericalBreakdown, "relaxed transport LP unbounded");

  RelaxedTransport out;
  out.value = sol.objective;
  out.plan = FractionalAssignment::Zero(m.size(), n + 1);
  for (Index t = 0; t < m.size(); ++t) {
    double sold = 0.0;
    for (Index i = 0; i < n; ++i) {
      out.plan(t, i + 1) = std::max(0.0, sol.primal(t * n + i));
      sold += out.plan(t, i + 1);
    }
    out.plan(t, 0) = std::max(0.0, 1.0 - sold);
  }
  out.prices = PriceMatrix(n, q);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < q; ++j) out.prices(i, j) = sol.duals(m.size() + i * q + j);
  return out;
}

std::optional<FractionalAssignment> cheapest_completion(const LayeredMeasure& m,
                                                        const CostField& c,
                                                        const PriceMatrix& p,
                                                        const DemandMatrix& target,
                                                        double tie_tolerance) {
  check_compatible(m, c);
  check_target(m, c, target);
  const Index n = c.agents();
  const auto candidates = candidate_labels(m, c, p, tie_tolerance);
  lp::LinearProgram prog = achievability_program(target, m);
  for (Index t = 0; t < m.size(); ++t) {
    const auto& labels = candidates[static_cast<std::size_t>(t)];
    for (Index i = 0; i < n; ++i) {
      prog.cost(t * n + i) = m.weight(t) * c(i, t);
      if (std::find(labels.begin(), labels.end(), static_cast<int>(i + 1)) == labels.end())
        prog.upper(t * n + i) = 0.0;
    }
  }
  const lp::Solution sol = lp::solve(prog);
  if (sol.status != lp::Status::Optimal) return std::nullopt;
  FractionalAssignment plan = FractionalAssignment::Zero(m.size(), n + 1);
  for (Index t = 0; t < m.size(); ++t) {
    double sold = 0.0;
    for (Index i = 0; i < n; ++i) {
      plan(t, i + 1) = std::max(0.0, sol.primal(t * n + i));
      sold += plan(t, i + 1);
    }
    plan(t, 0) = std::max(0.0, 1.0 - sold);
  }
  return plan;
}

}  // namespace vecot
