// Command-line front end: demo generation, threshold calibration, training,
// evaluation and plotting for the haptic shared-control simulator.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "hsc/harness.hpp"

namespace fs = std::filesystem;
using namespace hsc;

namespace {

ExperimentConfig config_or_default(const std::string& path) {
  if (path.empty()) {
    std::stringstream ss;
    write_default_config(ss);
    return parse_config(ss, "<defaults>");
  }
  return load_config(path);
}

int run_train(const std::string& config_path, std::uint64_t seed, int seeds_flag,
              const std::string& out_dir) {
  ExperimentConfig cfg = config_or_default(config_path);
  const int n_seeds = seeds_flag > 0 ? seeds_flag : cfg.n_seeds;
  fs::create_directories(out_dir);
  const DemoDataset demos = demos_for(cfg);

  std::vector<RunResult> results(static_cast<std::size_t>(n_seeds));
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_seeds));
  for (int k = 0; k < n_seeds; ++k) {
    workers.emplace_back([&, k] {
      try {
        results[static_cast<std::size_t>(k)] =
            run_experiment(cfg, seed + static_cast<std::uint64_t>(k), demos);
      } catch (...) {
        errors[static_cast<std::size_t>(k)] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<std::vector<EpochMetrics>> series;
  for (int k = 0; k < n_seeds; ++k) {
    const auto& r = results[static_cast<std::size_t>(k)];
    const std::string tag = std::to_string(seed + static_cast<std::uint64_t>(k));
    write_metrics(r.series, out_dir + "/metrics_seed" + tag + ".csv",
                  r.x_threshold, r.c_bound);
    std::ofstream ck(out_dir + "/checkpoint_seed" + tag + ".txt");
    if (!ck) throw IoError("cannot write checkpoint for seed " + tag);
    r.agent->save_checkpoint(ck);
    series.push_back(r.series);
    std::printf("seed %s: x = %.6g, final row reward = %.6g\n", tag.c_str(),
                r.x_threshold, r.series.empty() ? 0.0 : r.series.back().mean_reward);
  }
  if (!series.front().empty()) {
    const auto agg = aggregate_runs(series);
    std::ofstream os(out_dir + "/aggregate.csv");
    if (!os) throw IoError("cannot write aggregate.csv");
    os << "epoch,phase,mean_reward,ci95_reward,mean_time_s_per_epoch,ci95_time\n";
    for (const auto& row : agg) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%d,%s,%.17g,%.17g,%.17g,%.17g\n", row.epoch,
                    row.test ? "test" : "train", row.mean, row.half_width,
                    row.time_mean, row.time_half_width);
      os << buf;
    }
    emit_plot(agg, out_dir + "/reward_curve.svg", "Mean reward");
    std::vector<AggregateRow> time_rows = agg;
    for (auto& r : time_rows) {
      r.mean = r.time_mean;
      r.half_width = r.time_half_width;
    }
    emit_plot(time_rows, out_dir + "/time_curve.svg", "Mean time [s]");
  }
  return 0;
}

int run_eval(const std::string& config_path, const std::string& checkpoint,
             std::uint64_t seed, int epochs, const std::string& trace_path) {
  ExperimentConfig cfg = config_or_default(config_path);
  const DemoDataset demos = demos_for(cfg);
  Rng rng(seed);

  EpisodeSettings settings = cfg.episode;
  settings.gains = cfg.gains;
  settings.reward.c = settings.limits.max_norm();
  settings.reward.x = cfg.x_override > 0.0 ? cfg.x_override : 1.0;

  DdpgConfig ddpg = cfg.ddpg;
  ddpg.limits = settings.limits;
  DdpgAgent agent(ddpg, rng);
  std::ifstream ck(checkpoint);
  if (!ck) throw IoError("cannot open checkpoint: " + checkpoint);
  agent.load_checkpoint(ck);

  for (int e = 1; e <= epochs; ++e) {
    double reward = 0.0, time = 0.0;
    int successes = 0;
    for (const TaskDirection dir :
         {TaskDirection::forward(), TaskDirection::reverse()}) {
      const EpisodeRecord rec =
          run_episode(&agent, nullptr, demos, dir, cfg.sim, settings, false, rng);
      reward += rec.reward_sum + terminal_adjustment(rec.outcome);
      time += rec.duration;
      successes += rec.outcome == EpisodeOutcome::Success ? 1 : 0;
      if (!trace_path.empty() && e == 1 && dir == TaskDirection::forward())
        save_trace(rec, cfg.sim.dt, trace_path);
    }
    std::printf("epoch %d: mean_reward %.6g, time %.6g s, successes %d/2\n", e,
                reward / 2.0, time, successes);
  }
  return 0;
}

int run_plot(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<std::vector<EpochMetrics>> series;
  for (const auto& p : inputs) series.push_back(read_metrics(p));
  emit_plot(aggregate_runs(series), out, "Mean reward");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Haptic shared-control learning simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", out_file, checkpoint, trace_path;
  std::uint64_t seed = 1;
  int seeds_flag = 0, episodes = 10, eval_epochs = 5;
  std::vector<std::string> inputs;

  auto* demo_gen = app.add_subcommand("demo-gen", "Write a synthetic demonstration dataset");
  demo_gen->add_option("--config", config_path, "Config file");
  demo_gen->add_option("--seed", seed, "RNG seed");
  demo_gen->add_option("--out", out_file, "Output file")->required();

  auto* calibrate = app.add_subcommand("calibrate", "Compute the reward velocity threshold x");
  calibrate->add_option("--config", config_path, "Config file");
  calibrate->add_option("--seed", seed, "RNG seed");
  calibrate->add_option("--episodes", episodes, "Calibration episodes");

  auto* train = app.add_subcommand("train", "Run seeded experiments, write metrics and checkpoints");
  train->add_option("--config", config_path, "Config file");
  train->add_option("--seed", seed, "Base RNG seed");
  train->add_option("--seeds", seeds_flag, "Number of seeded runs (default from config)");
  train->add_option("--out", out_dir, "Output directory");

  auto* eval = app.add_subcommand("eval", "Run noise-free test epochs from a checkpoint");
  eval->add_option("--config", config_path, "Config file");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--seed", seed, "RNG seed");
  eval->add_option("--epochs", eval_epochs, "Test epochs to run");
  eval->add_option("--trace", trace_path, "Write the first episode's master trace here");

  auto* plot = app.add_subcommand("plot", "Render metrics CSVs to an SVG learning curve");
  plot->add_option("--in", inputs, "Metrics CSV file(s)")->required();
  plot->add_option("--out", out_file, "Output SVG")->required();

  auto* config_cmd = app.add_subcommand("default-config", "Print the canonical config");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*demo_gen) {
      ExperimentConfig cfg = config_or_default(config_path);
      Rng rng(seed);
      save_demos(generate_demos(cfg.demo, rng), out_file);
      std::printf("wrote %d trajectories to %s\n", cfg.demo.n_trajectories,
                  out_file.c_str());
      return 0;
    }
    if (*calibrate) {
      ExperimentConfig cfg = config_or_default(config_path);
      const DemoDataset demos = demos_for(cfg);
      Rng rng(seed);
      EpisodeSettings settings = cfg.episode;
      settings.gains = cfg.gains;
      ArpNoise noise(cfg.arp_order, cfg.arp_alpha, cfg.sigma);
      const double x = calibrate_velocity_threshold(demos, cfg.sim, settings,
                                                    noise, episodes, rng);
      std::printf("x = %.17g\n", x);
      return 0;
    }
    if (*train) return run_train(config_path, seed, seeds_flag, out_dir);
    if (*eval) return run_eval(config_path, checkpoint, seed, eval_epochs, trace_path);
    if (*plot) return run_plot(inputs, out_file);
    if (*config_cmd) {
      write_default_config(std::cout);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const ContractError& e) {
    std::fprintf(stderr, "contract error: %s\n", e.what());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
