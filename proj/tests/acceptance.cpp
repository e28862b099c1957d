#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fixtures.hpp"
#include "mhmp/engine.hpp"
#include "mhmp/schedulers.hpp"
#include "mhmp/solver.hpp"

using namespace mhmp;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances.
constexpr double kOracleGap = 0.01;
constexpr double kOracleResolution = 1e-3;
constexpr double kC1Minutes = 5.0;
constexpr std::size_t kConvexitySamples = 10000;
constexpr double kConvexityTol = 1e-8;
constexpr double kMinSpeedup = 2.0;
constexpr double kC3Minutes = 10.0;
constexpr double kSpPowerRel = 5e-3;
constexpr double kBudgetRel = 1e-3;
constexpr double kBindRel = 1e-3;
constexpr double kTrendNoise = 0.02;
constexpr std::size_t kSweepBlocks = 100;
constexpr double kC7Minutes = 20.0;
constexpr std::size_t kInvocations = 10000;
constexpr double kDecisionTol = 1e-9;
constexpr double kObjectiveTol = 1e-9;  // absolute, in s or W

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double minutes_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count() / 60.0;
}

const SchemeSummary& find(const std::vector<SchemeSummary>& res, SchedulerKind k) {
  return *std::find_if(res.begin(), res.end(), [&](const SchemeSummary& s) { return s.kind == k; });
}

std::vector<double> service_samples(const SchemeSummary& s, std::size_t q) { return s.latency_s[q].samples; }

// a < b with 95% confidence on the replica-paired difference.
bool below(std::span<const double> a, std::span<const double> b, bool strict = true) {
  const Estimate d = paired_difference(a, b);
  return strict ? d.upper() < 0.0 : d.upper() <= 0.0;
}

Outcome criterion1() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240101);
  double worst = 0.0;
  int n = 0;
  for (int hops = 1; hops <= 2; ++hops)
    for (std::size_t services = 1; services <= 2; ++services)
      for (int i = 0; i < (hops == 1 ? 13 : 12); ++i) {
        const auto inst = fixtures::random_instance(hops, services, rng);
        const auto r = solve_min_latency(inst);
        const auto o = grid_oracle(inst, {.resolution = kOracleResolution, .reduced_sweeps = true});
        worst = std::max(worst, std::abs(r.objective - o.objective) / o.objective);
        ++n;
      }
  const double min = minutes_since(t0);
  return {worst <= kOracleGap && min < kC1Minutes,
          fmt("%d instances, max relative gap %.3e (tol %.0e), %.2f min (limit %.0f)", n, worst, kOracleGap, min,
              kC1Minutes)};
}

Outcome criterion2() {
  std::mt19937_64 rng(20240102);
  double path = 0.0, objective = 0.0;
  for (std::size_t services = 1; services <= 2; ++services) {
    const auto inst = fixtures::random_instance(2, services, rng);
    const auto rep = convexity_probe(inst, {.samples = kConvexitySamples, .theta = std::nullopt}, rng);
    path = std::max(path, rep.max_path_violation);
    objective = std::max(objective, rep.max_objective_violation);
  }
  return {path <= kConvexityTol && objective <= kConvexityTol,
          fmt("max violation u_{q,b} %.3e, objective %.3e (tol %.0e)", path, objective, kConvexityTol)};
}

Outcome criterion3() {
  const auto t0 = Clock::now();
  const Scenario sc = default_scenario();
  const SchedulerKind kinds[] = {SchedulerKind::kSpLl, SchedulerKind::kPs1Ll, SchedulerKind::kPs2Ll,
                                 SchedulerKind::kTwoPathLl, SchedulerKind::kMhmpLl};
  const auto res = run_schemes(sc, kinds);
  const auto& sp = find(res, SchedulerKind::kSpLl);
  const auto& ps1 = find(res, SchedulerKind::kPs1Ll);
  const auto& ps2 = find(res, SchedulerKind::kPs2Ll);
  const auto& ps = estimate(ps1.total_latency_s).mean <= estimate(ps2.total_latency_s).mean ? ps1 : ps2;
  const auto& two = find(res, SchedulerKind::kTwoPathLl);
  const auto& mh = find(res, SchedulerKind::kMhmpLl);
  bool ok = true;
  std::string detail = "best PS " + to_string(ps.kind) + ";";
  for (std::size_t q = 0; q < sc.services.size(); ++q) {
    const auto a = service_samples(mh, q), b = service_samples(two, q), c = service_samples(ps, q),
               d = service_samples(sp, q);
    const bool order = below(a, b) && below(b, c) && below(c, d);
    const double speedup = sp.latency_s[q].mean / mh.latency_s[q].mean;
    ok = ok && order && speedup >= kMinSpeedup;
    detail += fmt(" s%d %.3f<%.3f<%.3f<%.3f ms %s, SP/MHMP %.2fx;", sc.services[q].id, mh.latency_s[q].mean * 1e3,
                  two.latency_s[q].mean * 1e3, ps.latency_s[q].mean * 1e3, sp.latency_s[q].mean * 1e3,
                  order ? "ordered" : "NOT ordered", speedup);
  }
  const double min = minutes_since(t0);
  return {ok && min < kC3Minutes, detail + fmt(" %.2f min (limit %.0f)", min, kC3Minutes)};
}

Outcome criterion4() {
  const Scenario sc = default_scenario();
  const SchedulerKind kinds[] = {SchedulerKind::kSpLl, SchedulerKind::kPs1Lp, SchedulerKind::kPs2Lp,
                                 SchedulerKind::kMhmpLp};
  const auto res = run_schemes(sc, kinds);
  const auto& sp = find(res, SchedulerKind::kSpLl);
  const double expected = 3.0 * dbm_to_watts(23.0);
  const double sp_err = std::abs(sp.power_w.mean - expected) / expected;
  const auto& ps1 = find(res, SchedulerKind::kPs1Lp);
  const auto& ps2 = find(res, SchedulerKind::kPs2Lp);
  const auto& ps = ps1.power_w.mean <= ps2.power_w.mean ? ps1 : ps2;
  const auto& mh = find(res, SchedulerKind::kMhmpLp);
  const bool order = mh.power_w.mean < ps.power_w.mean && ps.power_w.mean < sp.power_w.mean;
  double worst = 0.0;
  for (const auto* s : {&ps1, &ps2, &mh})
    for (const auto& run : s->runs)
      for (const auto& b : run.blocks)
        for (std::size_t q = 0; q < sc.services.size(); ++q)
          worst = std::max(worst, b.metrics.worst_latency_s[q] / sc.services[q].latency_budget_s - 1.0);
  return {sp_err <= kSpPowerRel && order && worst <= kBudgetRel,
          fmt("SP_LL %.3f mW vs %.3f (rel err %.2e, tol %.0e); MHMP_LP %.3f < %s %.3f < SP %.3f mW %s; "
              "max LP budget excess %.2e (tol %.0e)",
              sp.power_w.mean * 1e3, expected * 1e3, sp_err, kSpPowerRel, mh.power_w.mean * 1e3,
              to_string(ps.kind).c_str(), ps.power_w.mean * 1e3, sp.power_w.mean * 1e3,
              order ? "ordered" : "NOT ordered", worst, kBudgetRel)};
}

Outcome criterion5() {
  const Scenario sc = default_scenario();
  const SchedulerKind kinds[] = {SchedulerKind::kMhmpLp};
  const auto res = run_schemes(sc, kinds);
  std::vector<std::size_t> missed(sc.services.size(), 0);
  std::size_t feasible = 0;
  for (const auto& run : res[0].runs)
    for (const auto& b : run.blocks) {
      if (b.flagged) continue;
      ++feasible;
      for (std::size_t q = 0; q < sc.services.size(); ++q) {
        const double budget = sc.services[q].latency_budget_s;
        bool bound = false;
        for (std::size_t p = 0; p < b.metrics.paths; ++p)
          bound = bound || std::abs(b.metrics.u(q, p) - budget) <= kBindRel * budget;
        if (!bound) ++missed[q];
      }
    }
  std::string detail = fmt("%zu feasible blocks;", feasible);
  bool ok = true;
  for (std::size_t q = 0; q < missed.size(); ++q) {
    ok = ok && missed[q] == 0;
    detail += fmt(" s%d unbound in %zu;", sc.services[q].id, missed[q]);
  }
  return {ok, detail + fmt(" tol %.0e", kBindRel)};
}

Outcome criterion6() {
  const Scenario sc = default_scenario();
  const SchedulerKind kinds[] = {SchedulerKind::kMhmpLl, SchedulerKind::kAllp, SchedulerKind::kMhmpLp};
  const auto res = run_schemes(sc, kinds);
  const auto &ll = res[0], &allp = res[1], &lp = res[2];
  bool ok = true;
  std::string detail;
  for (std::size_t q = 0; q < sc.services.size(); ++q) {
    const bool s = below(service_samples(ll, q), service_samples(allp, q), false) &&
                   below(service_samples(allp, q), service_samples(lp, q), false);
    ok = ok && s;
    detail += fmt("L s%d %.3f<=%.3f<=%.3f ms %s; ", sc.services[q].id, ll.latency_s[q].mean * 1e3,
                  allp.latency_s[q].mean * 1e3, lp.latency_s[q].mean * 1e3, s ? "ok" : "violated");
  }
  const bool p = below(lp.power_w.samples, allp.power_w.samples, false) &&
                 below(allp.power_w.samples, ll.power_w.samples, false);
  ok = ok && p;
  detail += fmt("P %.3f<=%.3f<=%.3f mW %s; ALLP LL blocks %zu of %zu", lp.power_w.mean * 1e3,
                allp.power_w.mean * 1e3, ll.power_w.mean * 1e3, p ? "ok" : "violated", allp.ll_blocks, allp.blocks);
  return {ok, detail};
}

// Steps that go the wrong way by more than the noise allowance.
int trend_violations(const std::vector<SweepRow>& rows, const std::function<bool(int)>& rising) {
  int bad = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double step = rows[i].savings.mean - rows[i - 1].savings.mean;
    if (rising(rows[i].hops) ? step < -kTrendNoise : step > kTrendNoise) ++bad;
  }
  return bad;
}

std::string savings_list(const std::vector<SweepRow>& rows) {
  std::string s;
  for (const auto& r : rows) s += fmt("%s%.3f", s.empty() ? "" : ",", r.savings.mean);
  return s;
}

Outcome criterion7() {
  const auto t0 = Clock::now();
  Scenario sc = default_scenario();
  sc.blocks = kSweepBlocks;
  const auto lat = hop_sweep(sc, 1, 5, SweepMetric::kLatency);
  const auto pow = hop_sweep(sc, 1, 5, SweepMetric::kPower);
  const int lat_bad = trend_violations(lat, [](int) { return true; });
  const int pow_bad = trend_violations(pow, [](int h) { return h <= 2; });
  const double min = minutes_since(t0);
  return {lat_bad == 0 && pow_bad == 0 && min < kC7Minutes,
          fmt("latency savings [%s] %d violations; power savings [%s] %d violations (rise to H=2 then fall); "
              "noise allowance %.2f; %zu blocks x %zu replicas; %.2f min (limit %.0f)",
              savings_list(lat).c_str(), lat_bad, savings_list(pow).c_str(), pow_bad, kTrendNoise, sc.blocks,
              sc.replicas, min, kC7Minutes)};
}

Outcome criterion8() {
  std::mt19937_64 rng(20240108);
  std::uniform_int_distribution<int> svc_dist(1, 2);
  const auto kinds = all_scheduler_kinds();
  std::size_t calls = 0, trials = 0, bad_constraints = 0, bad_objective = 0, flagged = 0;
  double worst_constraint = 0.0, worst_objective = 0.0, worst_relative = 0.0;
  while (calls < kInvocations) {
    // Mostly H=1 and H=2; every fifth draw is H=3.
    const int hops = trials % 5 == 4 ? 3 : 1 + static_cast<int>(trials % 2);
    ++trials;
    const auto inst = fixtures::random_instance(hops, static_cast<std::size_t>(svc_dist(rng)), rng, 90.0, 115.0);
    double mhmp_ll = 0.0, mhmp_lp = 0.0;
    bool mhmp_lp_ok = false;
    std::vector<std::pair<SchedulerKind, ScheduleResult>> results;
    for (const auto kind : kinds) {
      Scheduler s(kind);
      if (kind == SchedulerKind::kSpLl || kind == SchedulerKind::kSpLp) s.warm_up({&inst, 1});
      auto r = s.step(inst);
      ++calls;
      if (kind == SchedulerKind::kMhmpLl) mhmp_ll = r.objective;
      if (kind == SchedulerKind::kMhmpLp) {
        mhmp_lp = r.objective;
        mhmp_lp_ok = !r.flagged;
      }
      results.emplace_back(kind, std::move(r));
    }
    for (const auto& [kind, r] : results) {
      double v = check_decision(*inst.topo, r.decision, r.power_cap_w, r.rule).worst();
      if (r.flagged) {
        ++flagged;
      } else if (r.rule == PowerRule::kAtMostTotal) {
        const auto lat = evaluate_latency(inst, r.decision);
        for (std::size_t q = 0; q < inst.services(); ++q)
          v = std::max(v, lat.worst_latency_s[q] / inst.budgets_s[q] - 1.0);
      }
      worst_constraint = std::max(worst_constraint, v);
      if (v > kDecisionTol) ++bad_constraints;
      if (kind == SchedulerKind::kAllp || kind == SchedulerKind::kMhmpLl || kind == SchedulerKind::kMhmpLp ||
          r.flagged)
        continue;
      const bool lp = is_min_power(kind);
      if (lp && !mhmp_lp_ok) continue;
      const double ref = lp ? mhmp_lp : mhmp_ll;
      const double deficit = ref - r.objective;
      worst_objective = std::max(worst_objective, deficit);
      worst_relative = std::max(worst_relative, deficit / std::max(ref, 1e-300));
      if (deficit > kObjectiveTol) ++bad_objective;
    }
  }
  return {bad_constraints == 0 && bad_objective == 0,
          fmt("%zu invocations (%zu flagged); constraint violations %zu (worst %.2e, tol %.0e); "
              "restricted schemes beating MHMP %zu (worst %.2e in s or W, tol %.0e; worst relative %.2e)",
              calls, flagged, bad_constraints, worst_constraint, kDecisionTol, bad_objective, worst_objective,
              kObjectiveTol, worst_relative)};
}

Outcome criterion9() {
  Scenario sc = default_scenario();
  sc.blocks = 20;
  sc.replicas = 4;
  sc.seed = 42;
  const auto kinds = all_scheduler_kinds();
  const auto a = summary_json(sc, run_schemes(sc, kinds, Execution::kParallel));
  const auto b = summary_json(sc, run_schemes(sc, kinds, Execution::kParallel));
  const auto c = summary_json(sc, run_schemes(sc, kinds, Execution::kSerial));
  sc.seed = 43;
  const auto d = summary_json(sc, run_schemes(sc, kinds, Execution::kParallel));
  const bool same = a == b && a == c;
  return {same && a != d, fmt("repeat %s, serial %s, other seed %s", a == b ? "identical" : "DIFFERENT",
                              a == c ? "identical" : "DIFFERENT", a != d ? "differs" : "IDENTICAL")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks, one line per criterion"};
  std::vector<int> which;
  app.add_option("--criterion", which, "Criteria to run (default all)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);
  if (which.empty()) which = {1, 2, 3, 4, 5, 6, 7, 8, 9};

  const std::function<Outcome()> checks[] = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                             criterion6, criterion7, criterion8, criterion9};
  bool all = true;
  for (const int c : which) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = checks[c - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    all = all && o.pass;
    std::printf("criterion %d: %s  %s  [%.1f s]\n", c, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                minutes_since(t0) * 60.0);
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
