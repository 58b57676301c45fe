#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "fairtax/baselines.hpp"
#include "fairtax/config.hpp"
#include "fairtax/train.hpp"

// Reproduction harness: analytical baselines, policy training for the three
// planner formulations, and checkpoint evaluation with table/trajectory/
// schedule exports.

namespace {

using namespace fairtax;

struct CliOptions {
  RunConfig cfg;
  std::string formulation = "rl";
  std::string variant = "net";
  std::string buffer = "fair";
  std::string seeds;
  std::string run_dir_override;
};

void add_common_options(CLI::App* cmd, CliOptions& opt) {
  RunConfig& cfg = opt.cfg;
  cmd->set_config("--config", "", "read options from an ini config file");
  cmd->add_option("--p-max", cfg.p_max, "maximum admissible price");
  cmd->add_option("--grid-resolution", cfg.grid_resolution,
                  "price grid points over (0, p-max]");
  cmd->add_option("--population", cfg.population, "consumers per group");
  cmd->add_option("--consumers", cfg.consumers_file,
                  "consumer parameter file (firm group w b population)");
  cmd->add_option("--brackets", cfg.n_brackets, "fairness tax brackets");
  cmd->add_option("--horizon", cfg.horizon, "periods per episode");
  cmd->add_flag("--noiseless", cfg.noiseless, "disable all stochasticity");
  cmd->add_option("--prob-sigma", cfg.prob_sigma,
                  "purchase probability noise std-dev");
  cmd->add_option("--drift-major", cfg.drift_sigma_major,
                  "parameter drift std-dev at period boundaries");
  cmd->add_option("--drift-minor", cfg.drift_sigma_minor,
                  "parameter drift std-dev between boundaries");
  cmd->add_option("--drift-period", cfg.drift_period,
                  "steps between major parameter resamples");
  cmd->add_option("--formulation", opt.formulation, "mab | cmab | rl")
      ->check(CLI::IsMember({"mab", "cmab", "rl"}));
  cmd->add_option("--reward-variant", opt.variant,
                  "net | gross | net-nosubsidy")
      ->check(CLI::IsMember({"net", "gross", "net-nosubsidy"}));
  cmd->add_option("--buffer", opt.buffer, "replay buffer: fair | fifo")
      ->check(CLI::IsMember({"fair", "fifo"}));
  cmd->add_option("--capacity", cfg.buffer_capacity, "replay buffer capacity");
  cmd->add_option("--hidden-layers", cfg.hidden_layers, "MLP hidden layers");
  cmd->add_option("--hidden-width", cfg.hidden_width, "MLP hidden width");
  cmd->add_option("--lr", cfg.learning_rate, "learning rate (all nets)");
  cmd->add_option("--batch", cfg.batch_size, "SAC batch size");
  cmd->add_option("--smoothing", cfg.target_smoothing,
                  "target network smoothing coefficient");
  cmd->add_option("--gamma", cfg.gamma, "discount (full RL formulation)");
  cmd->add_option("--alpha", cfg.entropy_temperature,
                  "entropy temperature (initial, or fixed with "
                  "--no-auto-entropy)");
  cmd->add_flag("!--no-auto-entropy", cfg.auto_entropy,
                "keep the entropy temperature fixed");
  cmd->add_option("--target-entropy", cfg.target_entropy,
                  "entropy target for temperature tuning (0 = -action dim)");
  cmd->add_option("--episodes", cfg.train_episodes,
                  "training episodes per seed (0 = formulation default)");
  cmd->add_option("--warmup", cfg.warmup_transitions,
                  "random-action transitions before updates "
                  "(0 = formulation default)");
  cmd->add_option("--update-every", cfg.update_every,
                  "transitions between update events");
  cmd->add_option("--gradient-steps", cfg.gradient_steps,
                  "gradient steps per update event");
  cmd->add_option("--eval-episodes", cfg.eval_episodes,
                  "evaluation episodes per seed");
  cmd->add_option("--seeds", opt.seeds,
                  "comma-separated seed list (default 1..20)");
  cmd->add_option("--out", cfg.out_dir, "output root directory")
      ->envname("FAIRTAX_OUT");
  cmd->add_option("--jobs", cfg.jobs, "parallel seed workers (0 = hardware)");
  cmd->add_flag("--trace", cfg.trace_csv, "write per-step trace CSVs on eval");
}

void finalize(CliOptions& opt) {
  opt.cfg.formulation = parse_formulation(opt.formulation);
  opt.cfg.reward_variant = parse_reward_variant(opt.variant);
  opt.cfg.buffer = parse_buffer_kind(opt.buffer);
  if (!opt.seeds.empty()) {
    std::vector<uint64_t> seeds;
    std::stringstream ss(opt.seeds);
    std::string item;
    while (std::getline(ss, item, ',')) {
      seeds.push_back(std::stoull(item));
    }
    if (seeds.empty()) throw std::invalid_argument("empty seed list");
    opt.cfg.seeds = seeds;
  }
}

void print_table_row(const char* name, const std::vector<double>& vals,
                     double avg) {
  std::printf("%-5s", name);
  for (double v : vals) std::printf("%7.2f", v);
  std::printf("%8.2f\n", avg);
}

int cmd_baselines(CliOptions& opt) {
  finalize(opt);
  const RunConfig& cfg = opt.cfg;
  const auto firms = cfg.firms();
  const PriceGrid grid{cfg.p_max, cfg.grid_resolution};
  const std::string hash = hash_hex(cfg.config_hash());

  for (const bool aware : {false, true}) {
    const BaselineTable table = compute_baselines(firms, grid, aware);
    const std::string mode = aware ? "aware" : "agnostic";
    std::vector<std::string> ids;
    std::vector<double> f, phi;
    for (const BaselineRow& row : table.rows) {
      ids.push_back(row.id);
      f.push_back(row.fairness);
      phi.push_back(row.phi);
    }
    print_welfare_table(std::cout,
                        "fairness-" + mode + " optimal price assignments",
                        ids, f, phi);
    std::printf("\n");
    write_baselines_csv(cfg.out_dir + "/baselines_" + mode + ".csv", table,
                        mode, hash);
  }
  std::printf("baseline tables written to %s\n", cfg.out_dir.c_str());
  return 0;
}

void print_eval_report(const RunConfig& cfg, const EvalReport& report) {
  std::printf("%s / %s / %s buffer (%zu seeds, S=%.2f)\n",
              to_string(cfg.formulation).c_str(),
              to_string(cfg.reward_variant).c_str(),
              to_string(cfg.buffer).c_str(), report.per_seed.size(),
              report.split_mean);
  std::printf("firm ");
  for (const FirmEvalStats& s : report.firm_mean) {
    std::printf("%7s", s.id.c_str());
  }
  std::printf("     Avg\n");
  std::vector<double> f, phi, swf;
  for (const FirmEvalStats& s : report.firm_mean) {
    f.push_back(s.f);
    phi.push_back(s.phi);
    swf.push_back(s.swf);
  }
  print_table_row("f", f, report.avg_f_mean);
  print_table_row("phi", phi, report.avg_phi_mean);
  print_table_row("swf", swf, report.avg_swf_mean);
  std::printf("avg swf %.3f +- %.3f (stderr over seeds)\n",
              report.avg_swf_mean, report.avg_swf_stderr);
  std::printf("learned tax rate by fairness bracket:");
  for (double r : report.schedule_mean) std::printf(" %.2f", r);
  std::printf("\nmean applied rate components:      ");
  for (double r : report.visited_rate_mean) std::printf(" %.2f", r);
  std::printf("\n");
}

int cmd_train(CliOptions& opt) {
  finalize(opt);
  const RunConfig& cfg = opt.cfg;
  std::printf("training %s (%zu seeds, %ld episodes/seed, hash %s)\n",
              cfg.run_name().c_str(), cfg.seeds.size(),
              cfg.effective_train_episodes(),
              hash_hex(cfg.config_hash()).c_str());
  const TrainRunResult result =
      train_run(cfg, [](const TrainSeedResult& sr) {
        if (sr.faulted) {
          std::printf("  seed %llu FAULTED: %s\n",
                      static_cast<unsigned long long>(sr.seed),
                      sr.fault_message.c_str());
        } else {
          std::printf("  seed %llu done: avg_swf=%.3f split=%.2f\n",
                      static_cast<unsigned long long>(sr.seed),
                      sr.eval.avg_swf, sr.eval.mean_split);
        }
        std::fflush(stdout);
      });
  if (!result.report.per_seed.empty()) {
    print_eval_report(cfg, result.report);
  }
  std::printf("artifacts in %s\n", run_dir(cfg).c_str());
  if (result.any_fault()) {
    std::fprintf(stderr, "one or more seeds aborted on a training fault\n");
    return 2;
  }
  return 0;
}

int cmd_eval(CliOptions& opt) {
  finalize(opt);
  const RunConfig& cfg = opt.cfg;
  const std::string dir =
      opt.run_dir_override.empty() ? run_dir(cfg) : opt.run_dir_override;
  const EvalReport report = eval_run(cfg, dir);
  print_eval_report(cfg, report);
  write_eval_artifacts(cfg, report, dir + "/reeval");
  std::printf("evaluation artifacts in %s/reeval\n", dir.c_str());
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairness-aware dynamic pricing: simulator, baselines and "
               "social-planner training"};
  app.require_subcommand(1);

  CliOptions base_opt, train_opt, eval_opt;
  CLI::App* baselines =
      app.add_subcommand("baselines", "analytical per-firm optima (reference "
                                      "tables) as CSV + stdout");
  add_common_options(baselines, base_opt);
  CLI::App* train = app.add_subcommand(
      "train", "train the social planner for one formulation/variant/buffer");
  add_common_options(train, train_opt);
  CLI::App* eval = app.add_subcommand(
      "eval", "evaluate saved checkpoints and export report tables");
  add_common_options(eval, eval_opt);
  eval->add_option("--run-dir", eval_opt.run_dir_override,
                   "directory holding checkpoint_seed*.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (baselines->parsed()) return cmd_baselines(base_opt);
    if (train->parsed()) return cmd_train(train_opt);
    if (eval->parsed()) return cmd_eval(eval_opt);
  } catch (const fairtax::training_fault& e) {
    std::fprintf(stderr, "training fault: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
