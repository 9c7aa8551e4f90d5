#include "vecot/cli/commands.hpp"

#include "vecot/cli/instance_io.hpp"
#include "vecot/cli/svg.hpp"
#include "vecot/counterexample.hpp"
#include "vecot/dual_solver.hpp"
#include "vecot/error.hpp"
#include "vecot/order.hpp"
#include "vecot/partition.hpp"
#include "vecot/pricing.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace vecot::cli {

namespace {

using Clock = std::chrono::steady_clock;

struct CommonFlags {
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<long> max_iter;
  std::string out;
  bool timings = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--seed", f.seed, "Random seed");
  cmd->add_option("--tol", f.tol, "Tolerance");
  cmd->add_option("--max-iter", f.max_iter, "Iteration cap");
  cmd->add_option("--out", f.out, "Write the report here instead of stdout");
  cmd->add_flag("--timings", f.timings, "Include wall-clock timings (breaks byte identity)");
}

Json labels_json(const Assignment& a) { return Json(a); }

Json report(const std::string& command, const std::string& digest, Json outcome) {
  Json r;
  r["command"] = command;
  r["instance_digest"] = "sha256:" + digest;
  r["outcome"] = std::move(outcome);
  r["tool_version"] = kToolVersion;
  return r;
}

void emit(Json r, const CommonFlags& f, Clock::time_point start, std::ostream& out) {
  if (f.timings) {
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    r["timings"] = {{"total_seconds", secs}};
  }
  const std::string text = r.dump(2) + "\n";
  if (f.out.empty())
    out << text;
  else
    write_atomic(f.out, text);
}

CostField cost_or_zero(const Instance& inst, Index agents) {
  if (inst.cost) return *inst.cost;
  return CostField::zero(agents, inst.measure.size());
}

Json certificate_json(const lp::FarkasCertificate& cert) {
  return {{"rows", to_json(cert.rows)}, {"upper", to_json(cert.upper)}};
}

// ---- solve -----------------------------------------------------------------

struct SolveArgs {
  CommonFlags common;
  std::string instance;
  std::string target;
  bool witness = false;
  std::string history;
  std::string step = "diminishing";
  std::optional<double> step_scale;
  std::optional<double> polyak_estimate;
  std::optional<double> divergence_threshold;
};

std::string history_csv(const std::vector<HistoryRow>& rows) {
  std::string s = "iteration,objective,residual_inf,price_frobenius\n";
  char buf[128];
  for (std::size_t k = 0; k < rows.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", k, rows[k].objective,
                  rows[k].residual, rows[k].price_norm);
    s += buf;
  }
  return s;
}

int cmd_solve(const SolveArgs& a, std::ostream& out) {
  const auto start = Clock::now();
  std::optional<LayeredMeasure> measure;
  std::optional<CostField> cost;
  DemandMatrix target;
  std::string digest;

  if (a.witness) {
    if (!a.instance.empty())
      throw Error(ErrorCode::InvalidArgument, "--witness takes no instance file");
    const WitnessInstance wit = build_witness();
    digest = sha256_hex(witness_to_json(wit).dump());
    measure = wit.measure;
    cost = wit.cost;
    target = wit.target;
  } else {
    if (a.instance.empty()) throw Error(ErrorCode::InvalidArgument, "an instance file is required");
    const Document doc = read_document(a.instance);
    Instance inst = parse_instance(doc.json);
    std::string bytes = doc.bytes;
    if (!a.target.empty()) {
      const Document tdoc = read_document(a.target);
      target = parse_target(tdoc.json);
      bytes += tdoc.bytes;
    } else if (inst.target) {
      target = *inst.target;
    } else {
      throw Error(ErrorCode::InvalidArgument, "no target file and no \"target\" block in the instance");
    }
    digest = sha256_hex(bytes);
    cost = cost_or_zero(inst, target.rows());
    measure = std::move(inst.measure);
  }

  SolverConfig cfg;
  if (a.common.max_iter) cfg.max_iterations = *a.common.max_iter;
  if (a.common.tol) cfg.tolerance = *a.common.tol;
  if (a.common.seed) cfg.seed = *a.common.seed;
  if (a.step == "polyak")
    cfg.step_rule = StepRule::Polyak;
  else if (a.step != "diminishing")
    throw Error(ErrorCode::InvalidArgument, "--step must be diminishing or polyak");
  if (a.step_scale) cfg.step_scale = *a.step_scale;
  cfg.polyak_estimate = a.polyak_estimate;
  if (a.divergence_threshold) cfg.divergence_threshold = *a.divergence_threshold;

  const DualReport rep = solve_dual(*measure, *cost, target, cfg);

  Json o;
  o["status"] = std::string(to_string(rep.status));
  o["iterations"] = rep.iterations;
  o["prices"] = to_json(rep.prices);
  o["objective"] = rep.objective;
  o["best_objective"] = rep.best_objective;
  o["residual"] = rep.residual;
  o["integral_residual"] = rep.integral_residual;
  o["residual_floor"] = rep.residual_floor;
  o["price_norm"] = rep.price_norm;
  o["labels"] = labels_json(assign_by_price(*measure, *cost, rep.prices));
  o["step_rule"] = std::string(to_string(cfg.step_rule));

  std::string history_path = a.history;
  if (history_path.empty() && !a.common.out.empty()) history_path = a.common.out + ".history.csv";
  if (!history_path.empty()) {
    write_atomic(history_path, history_csv(rep.history));
    o["history"] = history_path;
  }

  emit(report("solve", digest, std::move(o)), a.common, start, out);
  switch (rep.status) {
    case SolveStatus::Converged: return kExitOk;
    case SolveStatus::Diverged: return kExitDiverged;
    case SolveStatus::IterationCap: return kExitIterationCap;
  }
  return kExitOk;
}

// ---- check -----------------------------------------------------------------

struct CheckArgs {
  CommonFlags common;
  std::string instance;
  std::string target;
  bool relaxed = false;
};

int cmd_check(const CheckArgs& a, std::ostream& out, std::ostream& err) {
  const auto start = Clock::now();
  const Document doc = read_document(a.instance);
  const Document tdoc = read_document(a.target);
  const Instance inst = parse_instance(doc.json);
  const DemandMatrix target = parse_target(tdoc.json);
  const LayeredMeasure& m = inst.measure;
  if (target.cols() != m.layers())
    throw Error(ErrorCode::SizeMismatch, "target has " + std::to_string(target.cols()) +
                                             " layers, the instance " + std::to_string(m.layers()));
  const double tol = a.common.tol.value_or(1e-9);

  Json o;
  o["mode"] = a.relaxed ? "relaxed" : "exact";
  const Vector excess = layer_excess(target, m);
  Json violations = Json::array();
  for (Index j = 0; j < excess.size(); ++j)
    if (excess(j) > tol) violations.push_back({{"layer", j}, {"excess", excess(j)}});
  o["mass_condition"] = {{"holds", violations.empty()}, {"violations", violations}};

  if (!violations.empty()) {
    o["achievable"] = false;
    o["reason"] = "demand exceeds the available layer mass";
  } else {
    bool relaxed = a.relaxed;
    if (!relaxed) {
      try {
        const ExactAchievability ex = achievable_exact(target, m, tol);
        o["achievable"] = ex.achievable;
        o["witness_count"] = ex.witness_count;
        o["unique"] = ex.witness_count == 1;
        if (ex.witness) o["labels"] = labels_json(*ex.witness);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::TooLarge) throw;
        const std::string note = "TooLarge: exact enumeration exceeds the guard, using the relaxed check";
        err << "warning: " << note << "\n";
        o["warning"] = note;
        o["mode"] = "relaxed";
        relaxed = true;
      }
    }
    if (relaxed) {
      const RelaxedAchievability rx = achievable_relaxed(target, m);
      o["achievable"] = rx.achievable;
      if (rx.witness) o["fractional"] = to_json(Matrix(*rx.witness));
      if (rx.certificate) o["certificate"] = certificate_json(*rx.certificate);
    }
  }
  emit(report("check", sha256_hex(doc.bytes + tdoc.bytes), std::move(o)), a.common, start, out);
  return kExitOk;
}

// ---- witness ---------------------------------------------------------------

struct WitnessArgs {
  CommonFlags common;
  long layers = 2;
  long agents = 2;
  std::optional<long> interior;
  std::optional<double> scale;
  std::optional<double> gap;
  long grid_per_axis = 41;
  std::optional<double> divergence_threshold;
};

int cmd_witness(const WitnessArgs& a, std::ostream& out, std::ostream& err) {
  const auto start = Clock::now();
  WitnessConfig wc;
  wc.layers = a.layers;
  wc.agents = a.agents;
  if (a.interior) wc.interior_per_agent = *a.interior;
  if (a.scale) wc.boundary_scale = *a.scale;
  if (a.gap) wc.interior_gap = *a.gap;
  if (a.common.seed) wc.seed = *a.common.seed;
  const WitnessInstance wit = build_witness(wc);
  const Json inst = witness_to_json(wit);

  Json o;
  o["instance"] = inst;
  o["span_residual"] = span_residual(wit);
  try {
    const UniquenessReport u = verify_uniqueness(wit);
    o["uniqueness"] = {{"unique", u.unique}, {"witness_count", u.witness_count}};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TooLarge) throw;
    o["uniqueness"] = {{"skipped", std::string(e.what())}};
  }

  SolverConfig sc;
  if (a.common.max_iter) sc.max_iterations = *a.common.max_iter;
  if (a.common.tol) sc.tolerance = *a.common.tol;
  if (a.divergence_threshold) sc.divergence_threshold = *a.divergence_threshold;
  GridSpec grid;
  grid.per_axis = a.grid_per_axis;

  NoEquilibriumEvidence ev;
  bool grid_ran = true;
  try {
    ev = verify_no_equilibrium(wit, grid, sc);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TooLarge) throw;
    err << "warning: grid search skipped: " << e.what() << "\n";
    grid.per_axis = 0;
    grid_ran = false;
    ev = verify_no_equilibrium(wit, grid, sc);
  }
  Json evidence;
  evidence["threshold_interval"] = {ev.threshold_lower, ev.threshold_upper};
  evidence["threshold_infeasible"] = ev.threshold_infeasible;
  if (grid_ran) {
    evidence["grid"] = {{"per_axis", grid.per_axis},
                        {"points", ev.grid_points},
                        {"equilibria", ev.grid_equilibria}};
  } else {
    evidence["grid"] = {{"skipped", "TooLarge"}};
  }
  evidence["solver"] = {{"status", std::string(to_string(ev.solver.status))},
                        {"iterations", ev.solver.iterations},
                        {"residual_floor", ev.solver.residual_floor},
                        {"price_norm", ev.solver.price_norm},
                        {"best_objective", ev.solver.best_objective}};
  evidence["smallest_atom_mass"] = ev.smallest_atom_mass;
  evidence["solver_diverged"] = ev.solver_diverged;
  evidence["residual_floor_ok"] = ev.residual_floor_ok;
  evidence["no_equilibrium"] = ev.no_equilibrium;
  const WitnessInstance free = without_costs(wit);
  evidence["zero_cost_equilibrium"] =
      is_equilibrium(free.measure, free.cost, free.base_prices, free.target, 1e-9);
  o["evidence"] = evidence;

  emit(report("witness", sha256_hex(inst.dump()), std::move(o)), a.common, start, out);
  return kExitOk;
}

// ---- order -----------------------------------------------------------------

struct OrderArgs {
  CommonFlags common;
  std::string pair;
  long agents = 2;
  long trials = 200;
  long family_random = 4;
};

int cmd_order(const OrderArgs& a, std::ostream& out) {
  const auto start = Clock::now();
  const Document doc = read_document(a.pair);
  const PairInstance p = parse_pair(doc.json);
  if (p.x.layers() != p.y.layers())
    throw Error(ErrorCode::SizeMismatch, "the two measures have different layer counts");
  const std::uint64_t seed = a.common.seed.value_or(1);

  Json o;
  const KernelResult kr = kernel_exists(p.x, p.y);
  Json kernel = {{"exists", kr.exists}};
  if (kr.kernel) kernel["kernel"] = to_json(Matrix(*kr.kernel));
  if (kr.certificate) {
    kernel["certificate"] = certificate_json(*kr.certificate);
    kernel["certificate_margin"] = lp::farkas_margin(kr.program, *kr.certificate);
  }
  o["kernel"] = kernel;

  const ConvexTestFamily family = ConvexTestFamily::builtin(p.x.layers(), a.family_random, seed);
  const ConvexCriterionResult cc = convex_criterion(p.x, p.y, family);
  Json convex = {{"holds", cc.holds}, {"worst_gap", cc.worst_gap},
                 {"family_size", family.members.size()}};
  if (cc.failing) convex["failing"] = family.members[*cc.failing].name;
  o["convex"] = convex;

  const DominanceResult dr =
      dominates_n(p.x, p.y, a.agents, static_cast<std::size_t>(a.trials), seed);
  const bool sampling_holds = dr.verdict == DominanceVerdict::Holds;
  Json sampling = {{"holds", sampling_holds}, {"agents", a.agents},
                   {"demands_tested", dr.demands_tested}, {"exhaustive", dr.exhaustive}};
  if (dr.witness) sampling["witness"] = to_json(Matrix(*dr.witness));
  if (dr.y_labels) sampling["y_labels"] = labels_json(*dr.y_labels);
  o["sampling"] = sampling;
  o["consistent"] = kr.exists == cc.holds && cc.holds == sampling_holds;

  if (p.pair_cost) {
    try {
      const KantorovichResult k = kantorovich_q(p.x, p.y, *p.pair_cost);
      o["kantorovich"] = {{"feasible", true},
                          {"value", k.value},
                          {"dual_value", k.dual_value},
                          {"dual_violation", k.dual_violation},
                          {"plan", to_json(k.plan)},
                          {"phi", to_json(k.phi)},
                          {"psi", to_json(k.psi)}};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InfeasiblePlan) throw;
      o["kantorovich"] = {{"feasible", false}};
    }
  }
  emit(report("order", sha256_hex(doc.bytes), std::move(o)), a.common, start, out);
  return kExitOk;
}

// ---- render ----------------------------------------------------------------

struct RenderArgs {
  CommonFlags common;
  std::string instance;
  std::string labels;
  std::string svg;
};

int cmd_render(const RenderArgs& a, std::ostream& out) {
  const auto start = Clock::now();
  const Document doc = read_document(a.instance);
  const Document ldoc = read_document(a.labels);
  const Instance inst = parse_instance(doc.json);
  const Assignment labels = parse_labels(ldoc.json);
  const std::string svg = render_svg(inst.measure, labels);
  write_atomic(a.svg, svg);
  const auto hollow = std::count(labels.begin(), labels.end(), 0);
  Json o = {{"svg", a.svg},
            {"circles", labels.size()},
            {"hollow", hollow},
            {"elements", labels.size() + 1}};
  emit(report("render", sha256_hex(doc.bytes + ldoc.bytes), std::move(o)), a.common, start, out);
  return kExitOk;
}

void emit_error(std::ostream& out, std::string_view code, const std::string& message,
                std::optional<std::size_t> index) {
  Json e = {{"code", std::string(code)}, {"message", message}};
  e["index"] = index ? Json(*index) : Json(nullptr);
  out << Json{{"error", e}}.dump(2) << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Vector-valued semi-discrete transport toolkit", "vecot"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Dual ascent for equilibrium prices");
  add_common(solve, sa.common);
  solve->add_option("instance", sa.instance, "Instance JSON");
  solve->add_option("target", sa.target, "Target JSON ({\"demand\": ...})");
  solve->add_flag("--witness", sa.witness, "Solve the default witness instance");
  solve->add_option("--history", sa.history, "Iteration CSV path");
  solve->add_option("--step", sa.step, "diminishing or polyak");
  solve->add_option("--step-scale", sa.step_scale, "Step scale");
  solve->add_option("--polyak-estimate", sa.polyak_estimate, "Polyak target level");
  solve->add_option("--divergence-threshold", sa.divergence_threshold, "Price norm threshold");

  CheckArgs ca;
  auto* check = app.add_subcommand("check", "Achievability of a demand matrix");
  add_common(check, ca.common);
  check->add_option("instance", ca.instance, "Instance JSON")->required();
  check->add_option("target", ca.target, "Target JSON")->required();
  auto* exact = check->add_flag("--exact", "Brute force over labellings (default)");
  check->add_flag("--relaxed", ca.relaxed, "Fractional LP check")->excludes(exact);

  WitnessArgs wa;
  auto* witness = app.add_subcommand("witness", "Build a non-existence witness and its evidence");
  add_common(witness, wa.common);
  witness->add_option("q", wa.layers, "Layers")->required()->check(CLI::Range(1L, 64L));
  witness->add_option("n", wa.agents, "Agents")->required()->check(CLI::Range(2L, 64L));
  witness->add_option("--interior", wa.interior, "Interior points per agent");
  witness->add_option("--scale", wa.scale, "Boundary atom scale");
  witness->add_option("--gap", wa.gap, "Smallest interior gap");
  witness->add_option("--grid-per-axis", wa.grid_per_axis, "Grid points per price axis");
  witness->add_option("--divergence-threshold", wa.divergence_threshold, "Price norm threshold");

  OrderArgs oa;
  auto* order = app.add_subcommand("order", "Compare two measures under the partition order");
  add_common(order, oa.common);
  order->add_option("pair", oa.pair, "Pair JSON ({\"x\", \"y\", optional \"pair_cost\"})")->required();
  order->add_option("--agents", oa.agents, "Agents for the sampling test")->check(CLI::PositiveNumber);
  order->add_option("--trials", oa.trials, "Sampled labellings")->check(CLI::NonNegativeNumber);
  order->add_option("--family-random", oa.family_random, "Random max-affine test functions");

  RenderArgs ra;
  auto* render = app.add_subcommand("render", "Draw a 2-D labelled instance as SVG");
  add_common(render, ra.common);
  render->add_option("instance", ra.instance, "Instance JSON")->required();
  render->add_option("labels", ra.labels, "Labels JSON ({\"labels\": [...]})")->required();
  render->add_option("out_svg", ra.svg, "SVG path")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    emit_error(out, to_string(ErrorCode::ParseError), e.what(), std::nullopt);
    return kExitInputError;
  }

  try {
    if (solve->parsed()) return cmd_solve(sa, out);
    if (check->parsed()) return cmd_check(ca, out, err);
    if (witness->parsed()) return cmd_witness(wa, out, err);
    if (order->parsed()) return cmd_order(oa, out);
    if (render->parsed()) return cmd_render(ra, out);
  } catch (const Error& e) {
    emit_error(out, to_string(e.code()), e.what(), e.index());
    return kExitInputError;
  } catch (const std::exception& e) {
    emit_error(out, "InternalError", e.what(), std::nullopt);
    return kExitInputError;
  }
  return kExitInputError;
}

int run_main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
  return run(args, std::cout, std::cerr);
}

}  // namespace vecot::cli
