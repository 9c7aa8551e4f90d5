#include "vecot/dual_solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <string>

namespace vecot {

std::string_view to_string(SolveStatus status) noexcept {
  switch (status) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::Diverged: return "Diverged";
    case SolveStatus::IterationCap: return "IterationCap";
  }
  return "Unknown";
}

std::string_view to_string(StepRule rule) noexcept {
  switch (rule) {
    case StepRule::Diminishing: return "diminishing";
    case StepRule::Polyak: return "polyak";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  if (max_iterations < 1)
    throw Error(ErrorCode::InvalidArgument, "max_iterations must be >= 1");
  if (!(tolerance > 0.0))
    throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  if (!(divergence_threshold > 0.0))
    throw Error(ErrorCode::InvalidArgument, "divergence threshold must be positive");
  if (!(step_scale > 0.0))
    throw Error(ErrorCode::InvalidArgument, "step scale must be positive");
  if (averaging_window < 0 || certify_every < 1 || tie_window < 1 ||
      stall_window < 1)
    throw Error(ErrorCode::InvalidArgument, "solver windows must be positive");
}

namespace {

constexpr double kWideTieFactor = 64.0;  // widest retry, relative to the spread window
// Certification windows never exceed this fraction of the price scale, so a
// certificate always describes prices near the current iterate.
constexpr double kMaxTieFraction = 1e-2;

struct Certificate {
  PriceMatrix prices;
  FractionalAssignment plan;
  double residual;
};

/// Prices near `p` at which the support of `plan` is exactly income-maximal:
/// labels carrying mass share the best income and every other label is at
/// least `margin` below it. Maximizes the margin inside a box around `p`.
/// Inside the box an income difference moves by at most 2 * radius, so pairs
/// already separated by more than that at `p` need no row.
std::optional<PriceMatrix> polish(const LayeredMeasure& m, const CostField& c,
                                  const PriceMatrix& p,
                                  const FractionalAssignment& plan,
                                  double radius) {
  const Index n = c.agents();
  const Index q = m.layers();
  const Index nv = n * q + 1;  // prices row-major, then the margin
  const Index mu = n * q;

  lp::LinearProgram prog(nv);
  prog.direction = lp::Direction::Maximize;
  prog.cost(mu) = 1.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < q; ++j) {
      prog.lower(i * q + j) = p(i, j) - radius;
      prog.upper(i * q + j) = p(i, j) + radius;
    }
  }
  prog.lower(mu) = -lp::kInfinity;
  prog.upper(mu) = radius;
  const Matrix income = net_income(m, c, p);
  auto income_of = [&](Index t, int l) { return l == 0 ? 0.0 : income(t, l - 1); };

  constexpr double kSupport = 1e-12;
  // income_a - income_b as a row over the price variables plus a constant.
  auto difference = [&](Index t, int a, int b, RowVector& row) {
    row.setZero();
    double constant = 0.0;
    if (a > 0) {
      row.segment((a - 1) * q, q) += m.density(t);
      constant -= c(a - 1, t);
    }
    if (b > 0) {
      row.segment((b - 1) * q, q) -= m.density(t);
      constant += c(b - 1, t);
    }
    return constant;
  };

  RowVector row(nv);
  for (Index t = 0; t < m.size(); ++t) {
    std::vector<int> support;
    for (int l = 0; l <= n; ++l)
      if (plan(t, l) > kSupport) support.push_back(l);
    if (support.empty()) support.push_back(0);
    const int ref = support.front();
    for (int l = 0; l <= n; ++l) {
      if (l == ref) continue;
      const double constant = difference(t, ref, l, row);
      const bool supported =
          std::find(support.begin(), support.end(), l) != support.end();
      if (!supported && income_of(t, ref) - income_of(t, l) > 2.0 * radius * (1.0 + 1e-9) + 1e-12)
        continue;
      if (supported) {
        prog.add_row(row, lp::Sense::Equal, -constant);
      } else {
        row(mu) = -1.0;
        prog.add_row(row, lp::Sense::GreaterEqual, -constant);
      }
    }
  }
  const lp::Solution sol = lp::solve(prog);
  if (sol.status != lp::Status::Optimal || sol.primal(mu) < -1e-12)
    return std::nullopt;
  PriceMatrix out(n, q);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < q; ++j) out(i, j) = sol.primal(i * q + j);
  return out;
}

std::optional<Certificate> certify(const LayeredMeasure& m, const CostField& c,
                                   const PriceMatrix& p,
                                   const DemandMatrix& target, double tie,
                                   double tol) {
  const TieCompletionResult completion =
      best_fractional_completion(m, c, p, target, tie);
  if (completion.residual > tol) return std::nullopt;
  const double radius = std::max(tie, 1e-9);
  auto polished = polish(m, c, p, completion.plan, radius);
  // A residual-minimizing split can mix labels no single price supports;
  // the cost-minimizing one cannot.
  if (!polished) {
    if (const auto cheap = cheapest_completion(m, c, p, target, tie))
      polished = polish(m, c, p, *cheap, radius);
  }
  if (!polished) return std::nullopt;
  // Re-check at the polished prices with the standard tie tolerance.
  TieCompletionResult check =
      best_fractional_completion(m, c, *polished, target, kTieTolerance);
  if (check.residual > tol) return std::nullopt;
  return Certificate{*polished, std::move(check.plan), check.residual};
}

PriceMatrix initial_prices(const CostField& c, Index layers,
                           const SolverConfig& cfg) {
  if (cfg.initial_prices) {
    if (cfg.initial_prices->rows() != c.agents() ||
        cfg.initial_prices->cols() != layers)
      throw Error(ErrorCode::SizeMismatch, "initial prices have the wrong shape");
    return *cfg.initial_prices;
  }
  PriceMatrix p = PriceMatrix::Zero(c.agents(), layers);
  if (cfg.seed) {
    std::mt19937_64 rng(*cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double scale = std::max(1.0, c.values().cwiseAbs().maxCoeff());
    for (Index i = 0; i < p.rows(); ++i)
      for (Index j = 0; j < p.cols(); ++j) p(i, j) = scale * normal(rng);
  }
  return p;
}

void finish(DualReport& r, const LayeredMeasure& m, const CostField& c,
            const DemandMatrix& target) {
  r.objective = dual_objective(m, c, r.prices, target);
  r.best_objective = std::max(r.best_objective, r.objective);
  r.integral_residual =
      (target - induced_demand(m, c, r.prices)).cwiseAbs().maxCoeff();
  if (r.completion.size() == 0) {
    TieCompletionResult tc =
        best_fractional_completion(m, c, r.prices, target, kTieTolerance);
    r.completion = std::move(tc.plan);
  }
  r.residual_matrix = target - demand_of(m, r.completion);
  r.residual = r.residual_matrix.cwiseAbs().maxCoeff();
  r.price_norm = r.prices.norm();
}

}  // namespace

DualReport solve_dual(const LayeredMeasure& m, const CostField& c,
                      const DemandMatrix& target, const SolverConfig& cfg) {
  cfg.validate();
  check_compatible(m, c);
  if (target.rows() != c.agents() || target.cols() != m.layers())
    throw Error(ErrorCode::SizeMismatch, "target shape does not match n x q");
  if ((target.array() < 0.0).any())
    throw Error(ErrorCode::InvalidArgument, "target has negative entries");
  if (!feasible_necessary(target, m))
    throw Error(ErrorCode::InfeasibleDemand,
                "target exceeds the available mass in some layer");

  DualReport report;
  PriceMatrix p = initial_prices(c, m.layers(), cfg);
  PriceMatrix best_p = p;
  double best = -std::numeric_limits<double>::infinity();
  std::deque<PriceMatrix> recent;      // tie window
  std::deque<PriceMatrix> averaged;    // averaging window
  std::deque<double> residuals;        // stall window
  double polyak_margin = 0.0;
  long since_improvement = 0;

  auto select_prices = [&]() -> PriceMatrix {
    if (cfg.averaging_window == 0 || averaged.empty()) return best_p;
    PriceMatrix sum = PriceMatrix::Zero(p.rows(), p.cols());
    for (const auto& a : averaged) sum += a;
    return sum / static_cast<double>(averaged.size());
  };

  for (long k = 0; k < cfg.max_iterations; ++k) {
    const DemandMatrix induced = induced_demand(m, c, p);
    const Matrix g = target - induced;
    const double objective = dual_objective(m, c, p, target);
    const double residual = g.cwiseAbs().maxCoeff();

    if (objective > best) {
      best = objective;
      best_p = p;
      since_improvement = 0;
    } else {
      ++since_improvement;
    }
    report.best_objective = best;

    if (residual <= cfg.tolerance) {
      report.status = SolveStatus::Converged;
      report.prices = p;
      report.iterations = k;
      finish(report, m, c, target);
      return report;
    }

    recent.push_back(p);
    if (static_cast<long>(recent.size()) > cfg.tie_window) recent.pop_front();
    if (cfg.certify && k % cfg.certify_every == 0) {
      double spread = 0.0;
      for (const auto& r : recent)
        spread = std::max(spread, (r - p).cwiseAbs().maxCoeff());
      const double cap = kMaxTieFraction * std::max(1.0, p.cwiseAbs().maxCoeff());
      const double tie = std::min(std::max(2.0 * spread, 1e-9), cap);
      std::optional<Certificate> cert = certify(m, c, p, target, tie, cfg.tolerance);
      // Small steps can leave the iterate well outside the window above;
      // now and then retry around the best iterate with wider windows.
      if (!cert && k > 0 && k % (20 * cfg.certify_every) == 0) {
        for (double wide = 4.0 * tie; !cert && wide <= std::min(kWideTieFactor * tie, cap); wide *= 4.0)
          cert = certify(m, c, best_p, target, wide, cfg.tolerance);
      }
      if (cert) {
        report.status = SolveStatus::Converged;
        report.prices = cert->prices;
        report.completion = std::move(cert->plan);
        report.iterations = k;
        finish(report, m, c, target);
        return report;
      }
    }

    const double norm = p.norm();
    report.history.push_back({objective, residual, norm});
    residuals.push_back(residual);
    if (static_cast<long>(residuals.size()) > cfg.stall_window) residuals.pop_front();
    averaged.push_back(p);
    if (static_cast<long>(averaged.size()) > cfg.averaging_window) averaged.pop_front();

    const double floor = *std::min_element(residuals.begin(), residuals.end());
    if (norm > cfg.divergence_threshold && floor >= 10.0 * cfg.tolerance) {
      report.status = SolveStatus::Diverged;
      report.iterations = k + 1;
      report.residual_floor = floor;
      report.prices = p;
      finish(report, m, c, target);
      return report;
    }

    const double g2 = g.squaredNorm();
    double alpha = cfg.step_scale / static_cast<double>(k + 1);
    if (cfg.step_rule == StepRule::Polyak && g2 > 0.0) {
      double level;
      if (cfg.polyak_estimate) {
        level = *cfg.polyak_estimate;
      } else {
        if (k == 0) polyak_margin = cfg.step_scale * std::max(1.0, std::abs(best));
        if (since_improvement > 50) {
          polyak_margin *= 0.5;
          since_improvement = 0;
        }
        level = best + polyak_margin;
      }
      if (level > objective) alpha = (level - objective) / g2;
    }
    p += alpha * g;
  }

  report.status = SolveStatus::IterationCap;
  report.iterations = cfg.max_iterations;
  report.residual_floor =
      residuals.empty() ? 0.0 : *std::min_element(residuals.begin(), residuals.end());
  report.prices = select_prices();
  finish(report, m, c, target);
  return report;
}

DualReport solve_scalar(const LayeredMeasure& m, const CostField& c,
                        const Vector& target, const SolverConfig& cfg) {
  if (m.layers() != 1)
    throw Error(ErrorCode::InvalidArgument,
                "scalar solver needs a single-layer measure");
  return solve_dual(m, c, DemandMatrix(target), cfg);
}

FractionalOnlyError::FractionalOnlyError(double value, FractionalAssignment plan)
    : Error(ErrorCode::FractionalOnly,
            "optimal plan is fractional; LP optimum " + std::to_string(value)),
      value_(value),
      plan_(std::move(plan)) {}

StablePartition stable_partition(const LayeredMeasure& m, const CostField& c,
                                 const DemandMatrix& target,
                                 const SolverConfig& cfg) {
  cfg.validate();
  check_compatible(m, c);
  if (target.rows() != c.agents() || target.cols() != m.layers())
    throw Error(ErrorCode::SizeMismatch, "target shape does not match n x q");
  if (!feasible_necessary(target, m))
    throw Error(ErrorCode::InfeasibleDemand,
                "target exceeds the available mass in some layer");
  const RelaxedTransport lp = relaxed_transport(m, c, target);

  StablePartition out;
  constexpr double kIntegral = 1e-9;
  bool integral = true;
  Assignment labels(static_cast<std::size_t>(m.size()), 0);
  for (Index t = 0; t < m.size() && integral; ++t) {
    Index arg;
    const double top = lp.plan.row(t).maxCoeff(&arg);
    if (std::abs(top - 1.0) > kIntegral) integral = false;
    labels[static_cast<std::size_t>(t)] = static_cast<int>(arg);
  }
  if (integral) {
    out.labels = std::move(labels);
    out.lp_integral = true;
    out.cost = monge_cost(m, c, out.labels);
    return out;
  }
  // Integral completions at the LP prices attain the same cost.
  try {
    if (auto a = integral_tie_completion(m, c, lp.prices, target,
                                         std::max(cfg.tolerance * 1e-3, 1e-9))) {
      out.labels = std::move(*a);
      out.cost = monge_cost(m, c, out.labels);
      return out;
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TooManyTies) throw;
  }
  throw FractionalOnlyError(lp.value, lp.plan);
}

}  // namespace vecot
