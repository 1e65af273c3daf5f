// Benchmark acceptance run: one PASS/FAIL line per criterion, exit status 1 on any failure.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "lmpc/harness.hpp"
#include "suites.hpp"

using namespace lmpc;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void verdict(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s  %d  %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v);
  return buf;
}

std::string num(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Outcome {
  std::vector<IterationReport> reports;
  std::string error;
};

Outcome run_campaign(const CampaignConfig& cfg, const fs::path& out) {
  Outcome o;
  try {
    Campaign c(cfg);
    fs::remove_all(out);
    c.set_output(out, false);
    const int first = cfg.mode == Mode::CostStudy ? 0 : 1;
    for (int j = first; j <= cfg.iterations; ++j) {
      o.reports.push_back(c.run_iteration(j));
      const auto& r = o.reports.back();
      std::fprintf(stderr, "  [%s seed %llu] iteration %d: x0 = (%.4f, %.4f), worst-case cost %.5f, %.1fs\n",
                   to_string(cfg.mode), static_cast<unsigned long long>(cfg.master_seed), r.iteration, r.x0[0],
                   r.x0[1], r.worst_case_cost, r.seconds);
    }
  } catch (const std::exception& e) {
    o.error = e.what();
  }
  return o;
}

// Table I shape on one explore campaign.
bool frontier_shape(const std::vector<IterationReport>& reps, const Vec& a, std::string& why) {
  const double an = a.norm();
  std::vector<double> s;
  for (const auto& r : reps) s.push_back(a.dot(r.x0) / an);
  std::ostringstream os;
  for (const auto& r : reps) os << num(r.x0[0], 2) << " ";
  why = "x0 first components " + os.str();
  if (reps.size() < 10) return false;
  if (std::abs(reps[0].x0[0] + 2.0) > 0.5) return false;
  for (std::size_t j = 1; j < s.size(); ++j)
    if (s[j] < s[j - 1] - 2e-3) return false;
  if (reps[5].x0[0] > -9.7) return false;
  for (std::size_t j = 5; j < reps.size(); ++j)
    if (std::abs(reps[j].x0[0] + 9.90) > 0.2) return false;
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
  fs::create_directories(out);

  // 1 + 2: full explore campaign with evaluation roll-outs.
  CampaignConfig explore = benchmark_config(Mode::Explore);
  explore.rollouts = 1000;
  explore.iterations = 10;
  explore.evaluation_rollouts = 1000;
  const Outcome ex = run_campaign(explore, out / "explore");
  {
    bool ok = ex.error.empty() && ex.reports.size() == 10;
    long total = 0, reached = 0;
    double worst_violation = 0.0;
    int max_t = 0;
    for (const auto& r : ex.reports) {
      total += r.rollouts + r.evaluation_rollouts;
      reached += r.reached_goal + r.evaluation_reached_goal;
      worst_violation = std::max({worst_violation, r.max_violation, r.evaluation_max_violation});
      max_t = std::max({max_t, r.max_time_to_goal, r.evaluation_max_time_to_goal});
    }
    ok = ok && reached == total && worst_violation == 0.0 && max_t <= 100;
    verdict(1, "robust safety and convergence", ok,
            ex.error.empty() ? std::to_string(reached) + "/" + std::to_string(total) +
                                   " roll-outs reached O, max violation " + num(worst_violation, 12) +
                                   ", longest " + std::to_string(max_t) + " steps"
                             : "aborted: " + ex.error);
  }
  {
    std::string why;
    bool ok = ex.error.empty() && frontier_shape(ex.reports, explore.direction, why);
    std::string detail = "seed 0: " + why;
    for (std::uint64_t seed : {1ULL, 2ULL}) {
      CampaignConfig c = explore;
      c.master_seed = seed;
      c.evaluation_rollouts = 0;
      const Outcome o = run_campaign(c, out / ("explore_seed" + std::to_string(seed)));
      std::string w;
      const bool s_ok = o.error.empty() && frontier_shape(o.reports, c.direction, w);
      ok = ok && s_ok;
      detail += "; seed " + std::to_string(seed) + ": " + (o.error.empty() ? w : "aborted: " + o.error);
    }
    verdict(2, "frontier exploration", ok, detail);
  }

  // 3 + 4: safe-set and Q-function estimates at iteration 1.
  {
    CampaignConfig eg = benchmark_config(Mode::EpsilonGamma);
    EpsilonGammaReport rep;
    std::string err;
    try {
      Campaign c(eg);
      fs::remove_all(out / "epsilon_gamma");
      c.set_output(out / "epsilon_gamma", false);
      rep = c.run_epsilon_gamma();
    } catch (const std::exception& e) {
      err = e.what();
    }
    auto line = [&](const char* sym, const Proportion& p100, const Proportion& p1000) {
      return std::string(sym) + "(100) = " + pct(p100.estimate) + " [" + pct(p100.lower) + ", " + pct(p100.upper) +
             "], " + sym + "(1000) = " + pct(p1000.estimate) + " [" + pct(p1000.lower) + ", " + pct(p1000.upper) + "]";
    };
    if (!err.empty() || rep.entries.size() != 2) {
      verdict(3, "safe-set invariance estimate", false, "aborted: " + err);
      verdict(4, "Q-function decrease estimate", false, "aborted: " + err);
    } else {
      const Proportion& e1 = rep.entries[0].epsilon;
      const Proportion& e2 = rep.entries[1].epsilon;
      const Proportion& g1 = rep.entries[0].gamma;
      const Proportion& g2 = rep.entries[1].gamma;
      const bool ok3 = e1.estimate >= 0.01 && e1.estimate <= 0.08 && e2.estimate >= 0.0005 && e2.estimate <= 0.015 &&
                       e2.estimate < e1.estimate;
      verdict(3, "safe-set invariance estimate", ok3,
              line("eps", e1, e2) + (rep.nested ? ", CS(100) inside CS(1000)" : ", CS(100) not inside CS(1000)"));
      const bool ok4 = g1.estimate >= 0.05 && g1.estimate <= 0.18 && g2.estimate >= 0.015 && g2.estimate <= 0.09 &&
                       g2.estimate < g1.estimate;
      verdict(4, "Q-function decrease estimate", ok4, line("gamma", g1, g2));
    }
  }

  // 5: fixed initial condition, iterations 0..9.
  {
    CampaignConfig cs = benchmark_config(Mode::CostStudy);
    cs.rollouts = 1000;
    cs.iterations = 9;
    const Outcome o = run_campaign(cs, out / "cost_study");
    std::vector<double> w;
    for (const auto& r : o.reports) w.push_back(r.worst_case_cost);
    bool ok = o.error.empty() && w.size() == 10 && w[1] < w[0];
    for (std::size_t j = 1; ok && j < w.size(); ++j)
      if (w[j] > w[j - 1] * 1.007) ok = false;
    for (std::size_t a = w.size() >= 3 ? w.size() - 3 : 0; ok && a < w.size(); ++a)
      for (std::size_t b = a + 1; b < w.size(); ++b)
        if (std::abs(w[a] - w[b]) > 0.007 * std::min(w[a], w[b])) ok = false;
    std::ostringstream os;
    for (double v : w) os << num(v, 4) << " ";
    verdict(5, "iteration cost improvement", ok,
            o.error.empty() ? "worst-case cost by iteration " + os.str() : "aborted: " + o.error);
  }

  // 6: property suites and determinism.
  {
    bool ok = true;
    std::string detail;
    for (const char* suite : {LMPC_SUITES}) {
      const int rc = std::system((std::string(suite) + " > /dev/null 2>&1").c_str());
      const bool s_ok = rc == 0;
      ok = ok && s_ok;
      if (!s_ok) detail += std::string(fs::path(suite).filename()) + " failed; ";
    }
    CampaignConfig c = benchmark_config(Mode::Explore);
    c.rollouts = 100;
    c.iterations = 3;
    c.master_seed = 42;
    run_campaign(c, out / "determinism_a");
    c.threads = 2;
    run_campaign(c, out / "determinism_b");
    bool same = true;
    for (int j = 1; j <= 3; ++j) {
      const std::string f = "iter_0" + std::to_string(j) + "/report.json";
      const std::string a = slurp(out / "determinism_a" / f);
      same = same && !a.empty() && a == slurp(out / "determinism_b" / f);
    }
    same = same && slurp(out / "determinism_a" / "summary.csv") == slurp(out / "determinism_b" / "summary.csv");
    ok = ok && same;
    detail += same ? "reports byte-identical across repeated seeded runs" : "reports differ across repeated runs";
    verdict(6, "property suites and determinism", ok, detail);
  }

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
