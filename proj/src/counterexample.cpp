#include "vecot/counterexample.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <thread>

namespace vecot {

namespace {

constexpr double kSpanTolerance = 1e-6;

/// Voronoi sites on the simplex: vertices first, then seeded interior points.
std::vector<RowVector> sites(Index q, Index n, std::mt19937_64& rng) {
  std::vector<RowVector> out;
  for (Index i = 0; i < std::min(q, n); ++i) out.push_back(RowVector::Unit(q, i));
  std::gamma_distribution<double> gamma(1.0, 1.0);
  while (static_cast<Index>(out.size()) < n) {
    RowVector z(q);
    for (Index j = 0; j < q; ++j) z(j) = gamma(rng);
    z /= z.sum();
    out.push_back(z);
  }
  return out;
}

/// Prices whose zero-cost partition is the Voronoi partition of the sites:
/// p_i . zeta = (|zeta|^2 + 1 - |zeta - z_i|^2) / 2 on the simplex.
PriceMatrix voronoi_prices(const std::vector<RowVector>& z) {
  const Index q = z.front().size();
  PriceMatrix p(static_cast<Index>(z.size()), q);
  for (std::size_t i = 0; i < z.size(); ++i)
    p.row(static_cast<Index>(i)) =
        z[i].array() + 0.5 * (1.0 - z[i].squaredNorm());
  return p;
}

/// Gaps log-spaced from `largest` down to `smallest`.
std::vector<double> log_spaced(double largest, double smallest, Index count) {
  std::vector<double> out;
  if (count == 1) return {smallest};
  const double ratio = std::pow(smallest / largest, 1.0 / static_cast<double>(count - 1));
  double v = largest;
  for (Index k = 0; k < count; ++k, v *= ratio) out.push_back(k + 1 == count ? smallest : v);
  return out;
}

}  // namespace

WitnessInstance build_witness(const WitnessConfig& cfg) {
  const Index q = cfg.layers;
  const Index n = cfg.agents;
  if (q < 2 || n < 2)
    throw Error(ErrorCode::InvalidArgument, "witness needs q >= 2 and n >= 2");
  if (cfg.interior_per_agent < 1 || !(cfg.boundary_scale > 0.0) ||
      !(cfg.interior_gap > 0.0) || cfg.interior_gap >= 0.8)
    throw Error(ErrorCode::InvalidArgument, "bad witness sampling parameters");
  if (cfg.pair_i < 1 || cfg.pair_k < 1 || cfg.pair_i > n || cfg.pair_k > n ||
      cfg.pair_i == cfg.pair_k)
    throw Error(ErrorCode::InvalidArgument, "designated pair out of range");

  std::mt19937_64 rng(cfg.seed);
  const auto z = sites(q, n, rng);
  const PriceMatrix p0 = voronoi_prices(z);
  const Index ia = cfg.pair_i - 1;
  const Index ka = cfg.pair_k - 1;
  const RowVector mid = 0.5 * (z[static_cast<std::size_t>(ia)] + z[static_cast<std::size_t>(ka)]);

  // The shared row must be closer to the pair than to any other site.
  {
    const double d = (mid - z[static_cast<std::size_t>(ia)]).squaredNorm();
    for (Index a = 0; a < n; ++a) {
      if (a == ia || a == ka) continue;
      if ((mid - z[static_cast<std::size_t>(a)]).squaredNorm() <= d + 1e-12)
        throw Error(ErrorCode::InvalidArgument,
                    "designated pair does not share a boundary face");
    }
  }

  std::uniform_real_distribution<double> weight(0.5, 1.5);
  std::vector<RowVector> rows;
  std::vector<double> weights;
  Assignment designated;
  for (Index a = 0; a < n; ++a) {
    const RowVector& site = z[static_cast<std::size_t>(a)];
    std::vector<double> gaps;
    RowVector anchor;
    if (a == ia || a == ka) {
      gaps = log_spaced(0.8, cfg.interior_gap, cfg.interior_per_agent);
      anchor = mid;
    } else {
      // Pull toward the site from the barycentre.
      for (Index k = 0; k < cfg.interior_per_agent; ++k)
        gaps.push_back(0.9 - 0.5 * static_cast<double>(k) /
                                 static_cast<double>(cfg.interior_per_agent));
      anchor = RowVector::Constant(q, 1.0 / static_cast<double>(q));
    }
    for (double g : gaps) {
      RowVector r = anchor + g * (site - anchor);
      r = r.cwiseMax(0.0);
      r /= r.sum();
      // Strictly inside the cell of agent a at p0.
      const RowVector income = r * p0.transpose();
      for (Index b = 0; b < n; ++b)
        if (b != a && !(income(a) > income(b)))
          throw Error(ErrorCode::InvalidArgument,
                      "interior sample fell outside its cell; widen the gap");
      rows.push_back(r);
      weights.push_back(weight(rng));
      designated.push_back(static_cast<int>(a + 1));
    }
  }

  std::vector<Index> boundary;
  Vector w(q + 1);
  std::vector<int> split;
  if (cfg.boundary_split) {
    split = *cfg.boundary_split;
    if (static_cast<Index>(split.size()) != q + 1)
      throw Error(ErrorCode::SizeMismatch, "boundary split needs q+1 labels");
    for (int l : split)
      if (l != cfg.pair_i && l != cfg.pair_k)
        throw Error(ErrorCode::InvalidArgument,
                    "boundary atoms may only go to the designated pair");
  } else {
    for (Index l = 0; l <= q; ++l) split.push_back(l % 2 == 0 ? cfg.pair_i : cfg.pair_k);
  }
  for (Index l = 0; l <= q; ++l) w(l) = static_cast<double>(l);
  if (cfg.include_boundary) {
    for (Index l = 0; l <= q; ++l) {
      boundary.push_back(static_cast<Index>(rows.size()));
      rows.push_back(mid);
      weights.push_back(cfg.equal_boundary_weights
                            ? cfg.boundary_scale
                            : cfg.boundary_scale * std::ldexp(1.0, static_cast<int>(l)));
      designated.push_back(split[static_cast<std::size_t>(l)]);
    }
  }

  const Index size = static_cast<Index>(rows.size());
  Matrix points(size, 2);
  Matrix densities(size, q);
  Vector wts(size);
  for (Index t = 0; t < size; ++t) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(t) /
                         static_cast<double>(size);
    points(t, 0) = std::cos(angle);
    points(t, 1) = std::sin(angle);
    densities.row(t) = rows[static_cast<std::size_t>(t)];
    wts(t) = weights[static_cast<std::size_t>(t)];
  }
  Matrix costs = Matrix::Zero(n, size);
  for (std::size_t l = 0; l < boundary.size(); ++l) {
    const Index t = boundary[l];
    costs(ia, t) = std::max(w(static_cast<Index>(l)), 0.0);
    costs(ka, t) = std::max(-w(static_cast<Index>(l)), 0.0);
  }

  LayeredMeasure m = build_measure(points, wts, densities);
  DemandMatrix target = demand_of(m, designated, n);
  WitnessInstance wit{std::move(m), CostField(costs), p0, std::move(target),
                      std::move(designated), std::move(boundary), w, mid, cfg};
  if (cfg.include_boundary && span_residual(wit) <= kSpanTolerance * w.norm())
    throw Error(ErrorCode::DegenerateSpan, "adversarial vector lies in V");
  return wit;
}

WitnessInstance build_witness(Index layers, Index agents,
                              Index interior_per_agent, double boundary_scale,
                              std::uint64_t seed) {
  WitnessConfig cfg;
  cfg.layers = layers;
  cfg.agents = agents;
  cfg.interior_per_agent = interior_per_agent;
  cfg.boundary_scale = boundary_scale;
  cfg.seed = seed;
  return build_witness(cfg);
}

double span_residual(const WitnessInstance& wit) {
  const Index atoms = static_cast<Index>(wit.boundary.size());
  if (atoms == 0) return 0.0;
  Matrix basis(atoms, wit.measure.layers());
  for (Index l = 0; l < atoms; ++l)
    basis.row(l) = wit.measure.density(wit.boundary[static_cast<std::size_t>(l)]);
  const Vector w = wit.adversarial.head(atoms);
  const Vector coef = basis.completeOrthogonalDecomposition().solve(w);
  return (w - basis * coef).norm();
}

WitnessInstance without_costs(const WitnessInstance& wit) {
  WitnessInstance out = wit;
  out.cost = CostField::zero(wit.cost.agents(), wit.cost.points());
  return out;
}

UniquenessReport verify_uniqueness(const WitnessInstance& wit) {
  const ExactAchievability r = achievable_exact(wit.target, wit.measure);
  return {r.witness_count == 1, r.witness_count, r.witness};
}

unsigned worker_count(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("VECOT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::pair<double, double> threshold_interval(const WitnessInstance& wit) {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < wit.boundary.size(); ++l) {
    const int label = wit.designated[static_cast<std::size_t>(wit.boundary[l])];
    const double w = wit.adversarial(static_cast<Index>(l));
    if (label == wit.config.pair_i) lower = std::max(lower, w);
    if (label == wit.config.pair_k) upper = std::min(upper, w);
  }
  return {lower, upper};
}

std::pair<std::uint64_t, std::optional<PriceMatrix>> grid_search(
    const LayeredMeasure& m, const CostField& c, const DemandMatrix& target,
    const GridSpec& grid) {
  const Index n = c.agents();
  const Index q = m.layers();
  const Index dims = n * q;
  if (grid.per_axis < 1)
    throw Error(ErrorCode::InvalidArgument, "grid needs at least one point per axis");
  const double total = std::pow(static_cast<double>(grid.per_axis), static_cast<double>(dims));
  if (total > 5e8)
    throw Error(ErrorCode::TooLarge, "price grid has too many points");
  const std::uint64_t count = static_cast<std::uint64_t>(total);
  const double step = grid.per_axis == 1
                          ? 0.0
                          : (grid.high - grid.low) / static_cast<double>(grid.per_axis - 1);

  auto price_at = [&](std::uint64_t index) {
    PriceMatrix p(n, q);
    // Last entry varies fastest.
    for (Index e = dims - 1; e >= 0; --e) {
      p(e / q, e % q) = grid.low + step * static_cast<double>(index % grid.per_axis);
      index /= static_cast<std::uint64_t>(grid.per_axis);
    }
    return p;
  };

  const unsigned workers =
      static_cast<unsigned>(std::min<std::uint64_t>(worker_count(grid.threads), count));
  std::vector<std::uint64_t> found(workers, 0);
  std::vector<std::uint64_t> first(workers, count);
  auto work = [&](unsigned w) {
    const std::uint64_t begin = count * w / workers;
    const std::uint64_t end = count * (w + 1) / workers;
    for (std::uint64_t idx = begin; idx < end; ++idx) {
      if (is_equilibrium(m, c, price_at(idx), target, grid.tolerance, true)) {
        if (found[w] == 0) first[w] = idx;
        ++found[w];
      }
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  std::uint64_t hits = 0;
  std::uint64_t earliest = count;
  for (unsigned w = 0; w < workers; ++w) {
    hits += found[w];
    earliest = std::min(earliest, first[w]);
  }
  std::optional<PriceMatrix> example;
  if (earliest < count) example = price_at(earliest);
  return {hits, example};
}

NoEquilibriumEvidence verify_no_equilibrium(const WitnessInstance& wit,
                                            const GridSpec& grid,
                                            const SolverConfig& solver) {
  NoEquilibriumEvidence ev;
  const auto [lower, upper] = threshold_interval(wit);
  ev.threshold_lower = lower;
  ev.threshold_upper = upper;
  ev.threshold_infeasible = lower > upper;
  ev.no_equilibrium = ev.threshold_infeasible;

  const auto [hits, example] = grid_search(wit.measure, wit.cost, wit.target, grid);
  const double total = std::pow(static_cast<double>(grid.per_axis),
                                static_cast<double>(wit.target.size()));
  ev.grid_points = static_cast<std::uint64_t>(total);
  ev.grid_equilibria = hits;
  ev.first_grid_equilibrium = example;

  ev.smallest_atom_mass = std::numeric_limits<double>::infinity();
  for (Index t : wit.boundary)
    ev.smallest_atom_mass = std::min(ev.smallest_atom_mass, wit.measure.weight(t));
  if (wit.boundary.empty()) ev.smallest_atom_mass = 0.0;

  ev.solver = solve_dual(wit.measure, wit.cost, wit.target, solver);
  ev.solver_diverged = ev.solver.status == SolveStatus::Diverged;
  ev.residual_floor_ok = ev.solver.residual_floor >= 0.5 * ev.smallest_atom_mass;
  return ev;
}

double attainment_norm(const LayeredMeasure& m, const CostField& c,
                       const DemandMatrix& target) {
  // Every dual maximizer is complementary to the optimal fractional plan: the
  // labels carrying plan mass at a point are exactly income-maximal there.
  const FractionalAssignment plan = relaxed_transport(m, c, target).plan;
  const Index n = c.agents();
  const Index q = m.layers();
  const Index nv = n * q + 1;  // prices, then the max-norm bound b
  const Index b = nv - 1;
  lp::LinearProgram prog(nv);
  prog.cost(b) = 1.0;
  for (Index v = 0; v < n * q; ++v) prog.lower(v) = -lp::kInfinity;

  constexpr double kSupport = 1e-9;
  RowVector row(nv);
  for (Index t = 0; t < m.size(); ++t) {
    Index ref;
    plan.row(t).maxCoeff(&ref);
    for (Index l = 0; l <= n; ++l) {
      if (l == ref) continue;
      // income_ref - income_l over the price variables, plus a constant.
      row.setZero();
      double constant = 0.0;
      if (ref > 0) {
        row.segment((ref - 1) * q, q) += m.density(t);
        constant -= c(ref - 1, t);
      }
      if (l > 0) {
        row.segment((l - 1) * q, q) -= m.density(t);
        constant += c(l - 1, t);
      }
      prog.add_row(row, plan(t, l) > kSupport ? lp::Sense::Equal
                                              : lp::Sense::GreaterEqual,
                   -constant);
    }
  }
  for (Index v = 0; v < n * q; ++v) {
    row.setZero();
    row(v) = 1.0;
    row(b) = -1.0;
    prog.add_row(row, lp::Sense::LessEqual, 0.0);
    row(v) = -1.0;
    prog.add_row(row, lp::Sense::LessEqual, 0.0);
  }
  const lp::Solution sol = lp::solve(prog);
  if (sol.status != lp::Status::Optimal)
    throw Error(ErrorCode::NumericalBreakdown, "attainment LP failed");
  return sol.objective;
}

std::vector<RefinementRow> refinement_study(const WitnessConfig& base,
                                            Index levels,
                                            const SolverConfig& solver) {
  std::vector<RefinementRow> table;
  auto run = [&](const WitnessConfig& cfg, Index level) {
    const WitnessInstance wit = build_witness(cfg);
    RefinementRow row;
    row.level = level;
    row.boundary_scale = cfg.include_boundary ? cfg.boundary_scale : 0.0;
    row.interior_gap = cfg.interior_gap;
    row.has_boundary = cfg.include_boundary;
    row.attainment_norm = attainment_norm(wit.measure, wit.cost, wit.target);
    const DualReport r = solve_dual(wit.measure, wit.cost, wit.target, solver);
    row.status = r.status;
    row.best_residual = r.residual;
    for (const auto& h : r.history) row.best_residual = std::min(row.best_residual, h.residual);
    row.final_price_norm = r.price_norm;
    table.push_back(row);
  };
  for (Index level = 0; level < levels; ++level) {
    WitnessConfig cfg = base;
    const double shrink = std::pow(4.0, static_cast<double>(level));
    cfg.boundary_scale = base.boundary_scale / shrink;
    cfg.interior_gap = base.interior_gap / shrink;
    cfg.interior_per_agent = base.interior_per_agent + level;
    run(cfg, level);
  }
  WitnessConfig free = base;
  free.include_boundary = false;
  run(free, levels);
  return table;
}

}  // namespace vecot
