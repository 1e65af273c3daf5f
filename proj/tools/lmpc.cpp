#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "lmpc/harness.hpp"

using namespace lmpc;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitAssumption = 3;
constexpr int kExitInfeasible = 4;

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ConfigInvalid, path + ": " + e.what());
  }
}

int exit_code(const Error& e) {
  switch (e.code()) {
    case ErrorCode::ConfigInvalid:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::UnsupportedDimension:
    case ErrorCode::TreeTooLarge:
      return kExitConfig;
    case ErrorCode::NotContracting:
      return kExitAssumption;
    default:
      return kExitInfeasible;
  }
}

void print_report(const IterationReport& r) {
  std::printf("iteration %2d  %-5s N=%-3d x0=(%.4f, %.4f)  worst-case cost %.6g  reached %d/%d  max T %d", r.iteration,
              r.controller.c_str(), r.horizon, r.x0[0], r.x0.size() > 1 ? r.x0[1] : 0.0, r.worst_case_cost,
              r.reached_goal, r.rollouts, r.max_time_to_goal);
  if (r.evaluation_rollouts > 0) std::printf("  eval %d/%d", r.evaluation_reached_goal, r.evaluation_rollouts);
  std::printf("  |CS| %d  (%.1fs)\n", r.safe_set_vertices, r.seconds);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust learning MPC campaigns on sampled safe sets"};
  app.require_subcommand(1);

  std::string config_path, mode_name, out_dir;
  std::uint64_t seed = 0;
  bool trace = false;
  auto* run = app.add_subcommand("run", "run a campaign");
  run->add_option("--config", config_path, "campaign config (JSON)")->required();
  run->add_option("--mode", mode_name, "explore | cost-study | epsilon-gamma")
      ->required()
      ->check(CLI::IsMember({"explore", "cost-study", "epsilon-gamma"}));
  auto* seed_opt = run->add_option("--seed", seed, "master seed (overrides the config)");
  run->add_option("--out", out_dir, "output directory (overrides the config)");
  run->add_flag("--trace", trace, "write trace.jsonl");

  std::string td_path, grid;
  auto* evalq = app.add_subcommand("eval-q", "evaluate the convexified cost-to-go on a grid");
  evalq->add_option("--terminal-data", td_path, "terminal_data.json")->required();
  evalq->add_option("--grid", grid, "xmin:xmax:nx,ymin:ymax:ny")->required();

  std::string check_path;
  auto* check = app.add_subcommand("check", "check the standing assumptions for a config");
  check->add_option("--config", check_path, "campaign config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) {
      Json j = read_json(config_path);
      j["mode"] = mode_name;
      if (*seed_opt) j["master_seed"] = seed;
      if (!out_dir.empty()) j["output_dir"] = out_dir;
      Campaign campaign(config_from_json(j));
      const CampaignConfig& c = campaign.config();
      if (!c.output_dir.empty()) campaign.set_output(c.output_dir, trace);
      if (c.mode == Mode::EpsilonGamma) {
        const EpsilonGammaReport rep = campaign.run_epsilon_gamma();
        std::printf("x0 = (%.4f, %.4f), %d Monte-Carlo roll-outs\n", rep.x0[0], rep.x0[1], rep.monte_carlo);
        for (const auto& e : rep.entries)
          std::printf("R=%-5d epsilon %.4f [%.4f, %.4f]  gamma %.4f [%.4f, %.4f]\n", e.rollouts, e.epsilon.estimate,
                      e.epsilon.lower, e.epsilon.upper, e.gamma.estimate, e.gamma.lower, e.gamma.upper);
        std::printf("nested safe sets: %s\n", rep.nested ? "yes" : "no");
      } else {
        const int first = c.mode == Mode::CostStudy ? 0 : 1;
        for (int it = first; it <= c.iterations; ++it) print_report(campaign.run_iteration(it));
      }
      return 0;
    }
    if (*evalq) {
      const QFunction q(terminal_data_from_json(read_json(td_path)));
      std::cout << q_surface_csv(q, grid);
      return 0;
    }
    if (*check) {
      const AssumptionReport r = check_assumptions(config_from_json(read_json(check_path)));
      std::cout << to_json(r).dump(2) << "\n";
      return r.ok() ? 0 : kExitAssumption;
    }
  } catch (const PolicyInfeasibleError& e) {
    std::cerr << "lmpc: " << e.what() << " at x = [" << e.state().transpose() << "]\n";
    return kExitInfeasible;
  } catch (const Error& e) {
    std::cerr << "lmpc: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "lmpc: " << e.what() << "\n";
    return kExitInfeasible;
  }
  return 0;
}
