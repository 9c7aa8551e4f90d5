// One line per acceptance criterion; exits non-zero if any criterion fails.

#include "oracles.hpp"
#include "vecot/cli/instance_io.hpp"
#include "vecot/counterexample.hpp"
#include "vecot/dual_solver.hpp"
#include "vecot/order.hpp"
#include "vecot/partition.hpp"
#include "vecot/pricing.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace vecot;
using namespace vecot::testing;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Smallest gap between the two best label incomes at any point.
double min_income_gap(const LayeredMeasure& m, const CostField& c, const Matrix& p) {
  const Matrix inc = net_income(m, c, p);
  double gap = 1e300;
  for (Index t = 0; t < m.size(); ++t) {
    double first = 0.0, second = -1e300;
    for (Index i = 0; i < inc.cols(); ++i) {
      const double v = inc(t, i);
      if (v > first) {
        second = first;
        first = v;
      } else if (v > second) {
        second = v;
      }
    }
    gap = std::min(gap, first - second);
  }
  return gap;
}

// ---------------------------------------------------------------------------

Outcome scalar_duality() {
  const auto t0 = Clock::now();
  Rng rng(20240101);
  int converged = 0;
  double worst_gap = 0.0;
  for (int k = 0; k < 25; ++k) {
    const LayeredMeasure m = random_measure(100, 1, 1, rng, 0.0, 1.0);
    const CostField c = random_costs(4, 100, rng);
    const DemandMatrix target = sample_achievable(m, 4, 1000 + k).demand;
    const DualReport r = solve_dual(m, c, target);
    const std::optional<double> lp = transport_optimum(m, c, target);
    if (r.status == SolveStatus::Converged) ++converged;
    if (!lp) return {false, fmt("instance %d: transport LP not optimal", k)};
    worst_gap = std::max(worst_gap, std::abs(r.best_objective - *lp));
  }
  const double secs = seconds_since(t0);
  return {converged == 25 && worst_gap <= 1e-6 && secs < 60.0,
          fmt("25 instances, %d converged, max |D - LP| = %.3g, %.1f s (< 60 s)", converged,
              worst_gap, secs)};
}

Outcome supergradient_fd() {
  Rng rng(2);
  int tested = 0;
  double worst = 0.0;
  while (tested < 50) {
    const Index T = 10 + tested % 20, q = 1 + tested % 3, n = 1 + tested % 4;
    const LayeredMeasure m = random_measure(T, q, 2, rng);
    const CostField c = random_costs(n, T, rng);
    const DemandMatrix target = sample_achievable(m, n, 50 + tested).demand;
    Matrix p(n, q);
    for (Index e = 0; e < p.size(); ++e) p(e) = uniform(rng, -1.0, 3.0);
    if (min_income_gap(m, c, p) < 1e-3) continue;
    const double h = 1e-6;
    Matrix fd(n, q);
    for (Index e = 0; e < p.size(); ++e) {
      Matrix up = p, down = p;
      up(e) += h;
      down(e) -= h;
      fd(e) = (dual_objective(m, c, up, target) - dual_objective(m, c, down, target)) / (2 * h);
    }
    worst = std::max(worst, (fd - dual_supergradient(m, c, p, target)).cwiseAbs().maxCoeff());
    ++tested;
  }
  return {worst <= 1e-4, fmt("50 non-tied pairs, max |FD - (M - M(P))| = %.3g (<= 1e-4)", worst)};
}

Outcome convexity() {
  Rng rng(3);
  int failures = 0, checks = 0;
  for (int k = 0; k < 100; ++k) {
    const Index T = 6 + k % 10, q = 1 + k % 3, n = 1 + k % 4;
    const LayeredMeasure m = random_measure(T, q, 2, rng);
    const DemandMatrix a = sample_achievable(m, n, 2 * k).demand;
    const DemandMatrix b = sample_achievable(m, n, 2 * k + 1).demand;
    for (double lambda : {0.25, 0.5, 0.75}) {
      ++checks;
      if (!achievable_relaxed(lambda * a + (1 - lambda) * b, m).achievable) ++failures;
    }
  }
  return {failures == 0, fmt("%d combinations, %d failures", checks, failures)};
}

Outcome row_projection() {
  Rng rng(4);
  int failures = 0, checks = 0;
  for (int k = 0; k < 100; ++k) {
    const Index T = 6 + k % 10, q = 1 + k % 3, n = 1 + k % 4;
    const LayeredMeasure m = random_measure(T, q, 2, rng);
    const DemandMatrix a = sample_achievable(m, n, 3 * k).demand;
    const DemandMatrix b = sample_achievable(m, n, 3 * k + 1).demand;
    const Index i = k % n;
    for (double lambda : {0.25, 0.5, 0.75}) {
      ++checks;
      const RowVector row = lambda * a.row(i) + (1 - lambda) * b.row(i);
      if (!row_achievable(row, m)) ++failures;
    }
  }
  return {failures == 0, fmt("%d row combinations, %d failures", checks, failures)};
}

Outcome witness_end_to_end() {
  const auto t0 = Clock::now();
  const WitnessInstance wit = build_witness();
  const UniquenessReport u = verify_uniqueness(wit);
  const NoEquilibriumEvidence ev = verify_no_equilibrium(wit);
  const WitnessInstance free = without_costs(wit);
  const bool mutation =
      is_equilibrium(free.measure, free.cost, free.base_prices, free.target, 1e-9);
  const double secs = seconds_since(t0);
  const bool interval = ev.threshold_lower == 2.0 && ev.threshold_upper == 1.0;
  const bool floor_ok = ev.solver.residual_floor >= 0.5 * ev.smallest_atom_mass;
  const bool diverged = ev.solver.status == SolveStatus::Diverged;
  const bool pass = u.witness_count == 1 && interval && ev.grid_points == 2825761 &&
                    ev.grid_equilibria == 0 && diverged && floor_ok && mutation && secs < 120.0;
  return {pass,
          fmt("count=%llu, interval=[%g,%g], grid %llu/%llu equilibria, solver=%s "
              "(norm %.3g, floor %.3g vs half atom %.3g), c=0 mutation %s, %.1f s",
              static_cast<unsigned long long>(u.witness_count), ev.threshold_lower,
              ev.threshold_upper, static_cast<unsigned long long>(ev.grid_equilibria),
              static_cast<unsigned long long>(ev.grid_points),
              std::string(to_string(ev.solver.status)).c_str(), ev.solver.price_norm,
              ev.solver.residual_floor, 0.5 * ev.smallest_atom_mass,
              mutation ? "equilibrium" : "NOT equilibrium", secs)};
}

Outcome interior_attainment() {
  Rng rng(6);
  int converged = 0, identical = 0;
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Index n = 2 + k % 2, q = 2, T = 24;
    const LayeredMeasure m = random_measure(T, q, 2, rng);
    const CostField c = random_costs(n, T, rng);
    const DemandMatrix sample = sample_achievable(m, n, 70 + k).demand;
    DemandMatrix center(n, q);
    for (Index i = 0; i < n; ++i)
      center.row(i) = total_mass(m).transpose() / static_cast<double>(n + 1);
    const DemandMatrix target = 0.9 * sample + 0.1 * center;
    SolverConfig a, b;
    a.seed = 1000 + k;
    b.seed = 2000 + k;
    const DualReport ra = solve_dual(m, c, target, a);
    const DualReport rb = solve_dual(m, c, target, b);
    if (ra.status == SolveStatus::Converged && rb.status == SolveStatus::Converged) {
      ++converged;
      const double diff = (ra.completion - rb.completion).cwiseAbs().maxCoeff();
      worst = std::max(worst, diff);
      if (diff <= 1e-6) ++identical;
    }
  }
  return {converged == 20 && identical == 20,
          fmt("20 targets, %d converged from both seeds, %d identical assignments "
              "(max plan difference %.3g)",
              converged, identical, worst)};
}

Outcome order_equivalence() {
  Rng rng(7);
  int inconsistencies = 0, push_ok = 0, pert_ok = 0;
  auto random_points = [&](Index count) {
    Matrix pts(count, 2);
    for (Index s = 0; s < count; ++s) pts.row(s) << uniform(rng), uniform(rng);
    return pts;
  };
  for (int k = 0; k < 30; ++k) {
    const LayeredMeasure mx = random_measure(6, 2 + k % 2, 2, rng);
    const Matrix kern = random_kernel(6, 4, rng);
    const LayeredMeasure my = kernel_pushforward(mx, kern, random_points(4)).measure;
    const ConvexTestFamily fam = ConvexTestFamily::builtin(mx.layers(), 6, k);

    const KernelResult kr = kernel_exists(mx, my);
    const bool convex = convex_criterion(mx, my, fam).holds;
    const bool sampled = dominates_n(mx, my, 2, 50, k).verdict == DominanceVerdict::Holds;
    if (kr.exists && convex && sampled) ++push_ok;
    if (!(kr.exists == convex && convex == sampled)) ++inconsistencies;

    // one Y point gains 5-20% weight
    const Index s = k % my.size();
    Vector w = my.weights();
    w(s) *= 1.0 + uniform(rng, 0.05, 0.20);
    const LayeredMeasure heavy = build_measure(my.points(), w, my.densities());
    const KernelResult kh = kernel_exists(mx, heavy);
    const bool cert = kh.certificate && lp::verify_farkas(kh.program, *kh.certificate);
    const bool convex_h = convex_criterion(mx, heavy, fam).holds;
    const DominanceResult dh = dominates_n(mx, heavy, 2, 50, k);
    const bool fails = dh.verdict == DominanceVerdict::FailsWithWitness && dh.witness &&
                       !achievable_relaxed(*dh.witness, mx).achievable;
    if (!kh.exists && cert && fails) ++pert_ok;
    if (!(kh.exists == convex_h && convex_h == !fails)) ++inconsistencies;
  }
  return {push_ok == 30 && pert_ok == 30 && inconsistencies == 0,
          fmt("pushforward pairs %d/30 all-hold, perturbed pairs %d/30 refuted with "
              "certificate and witness, %d inconsistencies",
              push_ok, pert_ok, inconsistencies)};
}

Outcome kantorovich_duality() {
  Rng rng(8);
  double worst_rel = 0.0;
  int violations = 0;
  for (int k = 0; k < 10; ++k) {
    const LayeredMeasure mx = random_measure(6, 2, 2, rng);
    Matrix pts(4, 2);
    for (Index s = 0; s < 4; ++s) pts.row(s) << uniform(rng), uniform(rng);
    const LayeredMeasure my = kernel_pushforward(mx, random_kernel(6, 4, rng), pts).measure;
    Matrix cost(mx.size(), my.size());
    for (Index e = 0; e < cost.size(); ++e) cost(e) = uniform(rng);
    const KantorovichResult r = kantorovich_q(mx, my, cost);
    // recompute the dual side from the returned potentials
    const double dual = kantorovich_dual_value(mx, my, r.phi, r.psi);
    const double feas = kantorovich_dual_violation(mx, my, cost, r.phi, r.psi);
    worst_rel = std::max(worst_rel, std::abs(r.value - dual) / std::max(1.0, std::abs(r.value)));
    if (feas > 1e-9) ++violations;
    for (int d = 0; d < 100; ++d) {
      const auto [phi, psi] = feasible_dual_pair(mx, my, cost, rng);
      if (kantorovich_dual_value(mx, my, phi, psi) > r.value + 1e-9) ++violations;
    }
  }
  return {worst_rel <= 1e-8 && violations == 0,
          fmt("10 pairs, max relative primal-dual gap %.3g (<= 1e-8), %d weak-duality "
              "violations in 1000 dual pairs",
              worst_rel, violations)};
}

Outcome refinement_trend() {
  const std::vector<RefinementRow> rows = refinement_study(WitnessConfig{}, 3);
  bool increasing = true;
  std::string table;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const RefinementRow& r = rows[k];
    table += fmt(" [s=%.3g %s norm=%.4g %s]", r.boundary_scale, r.has_boundary ? "atoms" : "free",
                 r.attainment_norm, std::string(to_string(r.status)).c_str());
    if (k > 0 && k < 3 && !(r.attainment_norm > rows[k - 1].attainment_norm)) increasing = false;
  }
  const bool free_ok = rows.size() == 4 && !rows[3].has_boundary &&
                       rows[3].status == SolveStatus::Converged;
  return {increasing && free_ok, "price norms:" + table};
}

// ---- CLI ------------------------------------------------------------------

const std::string kTool = VECOT_TOOL;
const std::string kFixtures = VECOT_FIXTURE_DIR;

int shell(const std::string& args, const std::string& out_path) {
  const std::string cmd = kTool + " " + args + " > " + out_path + " 2>/dev/null";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Minimal well-formedness check: balanced tags; returns element count or -1.
int xml_elements(const std::string& text) {
  std::vector<std::string> stack;
  int elements = 0;
  std::size_t pos = 0;
  while ((pos = text.find('<', pos)) != std::string::npos) {
    const std::size_t end = text.find('>', pos);
    if (end == std::string::npos) return -1;
    const std::string tag = text.substr(pos + 1, end - pos - 1);
    pos = end + 1;
    if (tag.empty()) return -1;
    if (tag[0] == '?' || tag[0] == '!') continue;
    if (tag[0] == '/') {
      if (stack.empty() || stack.back() != tag.substr(1)) return -1;
      stack.pop_back();
      continue;
    }
    const std::string name = tag.substr(0, tag.find_first_of(" \t\n/"));
    ++elements;
    if (tag.back() != '/') stack.push_back(name);
  }
  return stack.empty() ? elements : -1;
}

Outcome cli_formats() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("vecot_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  auto tmp = [&](const std::string& name) { return (dir / name).string(); };
  std::vector<std::string> failed;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  };

  // exit codes
  expect(shell("solve " + kFixtures + "/trivial.json", tmp("t1.json")) == 0, "trivial exit 0");
  const auto trivial = cli::Json::parse(slurp(tmp("t1.json")));
  expect(trivial["outcome"]["iterations"] == 0, "trivial zero iterations");
  expect(shell("solve " + kFixtures + "/malformed.json", tmp("bad.json")) == 1, "malformed exit 1");
  const auto bad = cli::Json::parse(slurp(tmp("bad.json")));
  expect(bad["error"]["code"] == "NonSimplexRow" && bad["error"]["index"] == 1,
         "malformed error object");
  expect(shell("solve --witness --divergence-threshold 2", tmp("div.json")) == 2, "diverged exit 2");
  expect(shell("solve --witness", tmp("cap.json")) == 3, "iteration cap exit 3");

  // determinism
  shell("solve " + kFixtures + "/trivial.json", tmp("t2.json"));
  expect(slurp(tmp("t1.json")) == slurp(tmp("t2.json")), "solve byte-identical");
  shell("solve --witness --seed 5 --max-iter 400", tmp("s1.json"));
  shell("solve --witness --seed 5 --max-iter 400", tmp("s2.json"));
  expect(slurp(tmp("s1.json")) == slurp(tmp("s2.json")), "seeded solve byte-identical");
  expect(shell("witness 2 2", tmp("w1.json")) == 0, "witness exit 0");
  shell("witness 2 2", tmp("w2.json"));
  expect(slurp(tmp("w1.json")) == slurp(tmp("w2.json")), "witness byte-identical");
  shell("order " + kFixtures + "/pair.json --seed 3", tmp("o1.json"));
  shell("order " + kFixtures + "/pair.json --seed 3", tmp("o2.json"));
  expect(slurp(tmp("o1.json")) == slurp(tmp("o2.json")), "order byte-identical");

  // witness content and the check round trip
  const auto w = cli::Json::parse(slurp(tmp("w1.json")));
  expect(w["outcome"]["instance"]["witness"]["w"] == cli::Json({0.0, 1.0, 2.0}), "w = [0,1,2]");
  expect(w["outcome"]["evidence"]["threshold_interval"] == cli::Json({2.0, 1.0}),
         "threshold interval [2,1]");
  {
    cli::Json inst = w["outcome"]["instance"];
    std::ofstream(tmp("winst.json")) << inst.dump();
    std::ofstream(tmp("wtarget.json")) << inst["target"].dump();
    shell("check " + tmp("winst.json") + " " + tmp("wtarget.json"), tmp("wcheck.json"));
    const auto chk = cli::Json::parse(slurp(tmp("wcheck.json")));
    expect(chk["outcome"]["achievable"] == true && chk["outcome"]["witness_count"] == 1,
           "check witness count 1");
  }
  const auto ord = cli::Json::parse(slurp(tmp("o1.json")));
  expect(ord["outcome"]["consistent"] == true && ord["outcome"]["kernel"]["exists"] == true,
         "order consistent holds");

  // SVG
  expect(shell("render " + kFixtures + "/render3.json " + kFixtures + "/labels3.json " +
                   tmp("r.svg"),
               tmp("render.json")) == 0,
         "render exit 0");
  const std::string svg = slurp(tmp("r.svg"));
  expect(xml_elements(svg) == 5, "svg well-formed with root + background + 3 circles");
  expect(shell("render " + kFixtures + "/render3.json " + kFixtures + "/target3.json " +
                   tmp("x.svg"),
               tmp("render_bad.json")) == 1,
         "render parse error exit 1");

  fs::remove_all(dir);
  std::string detail = "exit codes 0/1/2/3 by fixture, repeated reports byte-identical, SVG 1+3 "
                       "elements";
  if (!failed.empty()) {
    detail = "failed:";
    for (const auto& f : failed) detail += " [" + f + "]";
  }
  return {failed.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"scalar duality regression", scalar_duality},
      {"supergradient correctness", supergradient_fd},
      {"convexity of achievable demands", convexity},
      {"row projection convexity", row_projection},
      {"non-existence witness end to end", witness_end_to_end},
      {"interior attainment", interior_attainment},
      {"order equivalence", order_equivalence},
      {"q-layer Kantorovich duality", kantorovich_duality},
      {"refinement trend", refinement_trend},
      {"CLI determinism and formats", cli_formats},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << "criterion " << (k + 1) << " " << (o.pass ? "PASS" : "FAIL") << " "
              << criteria[k].first << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria pass"
            << std::endl;
  return failures == 0 ? 0 : 1;
}
