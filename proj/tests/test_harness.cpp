#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hsc/harness.hpp"

using namespace hsc;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

ExperimentConfig config_from(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is, "inline");
}

// Small everything: the schedule logic is what is under test, not learning.
ExperimentConfig tiny_config() {
  return config_from(
      "hidden1 = 8\n"
      "hidden2 = 8\n"
      "batch_size = 8\n"
      "epochs = 4\n"
      "test_every = 2\n"
      "max_steps = 40\n"
      "calib_episodes = 2\n"
      "demo_points = 50\n"
      "n_seeds = 2\n");
}

}  // namespace

TEST_CASE("the default config text parses back to the built-in defaults") {
  std::stringstream ss;
  write_default_config(ss);
  const ExperimentConfig cfg = parse_config(ss, "default");
  CHECK(cfg.sim.step == 12);
  CHECK(cfg.sim.k_u == 5.0);
  CHECK(cfg.ddpg.batch_size == 64);
  CHECK(cfg.ddpg.gamma == 0.99);
  CHECK(cfg.ddpg.hidden1 == 400);
  CHECK(cfg.epochs == 25);
  CHECK(cfg.arp_order == 3);
  CHECK(cfg.sigma == 0.21);
  CHECK(cfg.test_every == 5);
  CHECK(cfg.n_seeds == 5);
  CHECK(cfg.demo.n_trajectories == 10);
  // symmetric workspaces: the derived teleoperation offset is zero
  CHECK(cfg.gains.p_offset.norm() == 0.0);
}

TEST_CASE("config parsing rejects unknown keys and malformed lines") {
  CHECK_THROWS_MESSAGE(config_from("no_such_key = 3\n"),
                       doctest::Contains("unknown key 'no_such_key'"));
  CHECK_THROWS_MESSAGE(config_from("gamma 0.99\n"),
                       doctest::Contains("inline:1"));
  CHECK_THROWS_MESSAGE(config_from("gamma = fast\n"),
                       doctest::Contains("gamma"));
  CHECK_THROWS_MESSAGE(config_from("batch_size = 2.5\n"),
                       doctest::Contains("batch_size"));
  CHECK_THROWS_MESSAGE(config_from("demo_start = 1 2\n"),
                       doctest::Contains("demo_start"));
  // comments and blank lines are fine
  const ExperimentConfig cfg = config_from("# comment\n\n  tau = 0.05 # inline\n");
  CHECK(cfg.ddpg.tau == 0.05);
}

TEST_CASE("validation names the offending field") {
  CHECK_THROWS_MESSAGE(config_from("epochs = -1\n"), doctest::Contains("epochs"));
  CHECK_THROWS_MESSAGE(config_from("tau = 0\n"), doctest::Contains("tau"));
  CHECK_THROWS_MESSAGE(config_from("arp_alpha = 1\n"),
                       doctest::Contains("arp_alpha"));
  CHECK_THROWS_MESSAGE(config_from("test_every = 0\n"),
                       doctest::Contains("test_every"));
  CHECK_THROWS_MESSAGE(config_from("buffer_capacity = 8\nbatch_size = 64\n"),
                       doctest::Contains("buffer_capacity"));
}

TEST_CASE("an explicit teleoperation offset suppresses the derived one") {
  const ExperimentConfig cfg = config_from("p_offset = 0.1 0 0\n");
  CHECK((cfg.gains.p_offset - Vec3{0.1, 0, 0}).norm() == 0.0);
  // asymmetric slave workspace shifts the derived offset
  const ExperimentConfig shifted =
      config_from("ws_slave_lower = -0.1 -0.3 -0.3\nws_slave_upper = 0.5 0.3 0.3\n");
  CHECK((shifted.gains.p_offset - Vec3{0.2, 0, 0}).norm() ==
        doctest::Approx(0.0));
}

TEST_CASE("demos_for prefers the named file over the generator") {
  ExperimentConfig cfg = tiny_config();
  const DemoDataset generated = demos_for(cfg);
  CHECK(generated.trajectories.size() ==
        static_cast<std::size_t>(cfg.demo.n_trajectories));
  // same seed, same demos
  const DemoDataset again = demos_for(cfg);
  CHECK((generated.trajectories[0].points[10] -
         again.trajectories[0].points[10]).norm() == 0.0);

  DemoGenParams small;
  small.n_trajectories = 2;
  small.points_per_traj = 30;
  Rng rng(5);
  const DemoDataset custom = generate_demos(small, rng);
  const std::string path = temp_path("hsc_harness_demos.csv");
  save_demos(custom, path);
  cfg.demo_file = path;
  const DemoDataset loaded = demos_for(cfg);
  CHECK(loaded.trajectories.size() == 2);
  std::filesystem::remove(path);
}

TEST_CASE("the schedule emits the right rows in the right order") {
  const ExperimentConfig cfg = tiny_config();
  const DemoDataset demos = demos_for(cfg);
  const RunResult res = run_experiment(cfg, 7, demos);

  // 4 training epochs plus test epochs after 2 and 4
  REQUIRE(res.series.size() == 6);
  int train_rows = 0, test_rows = 0;
  for (const auto& m : res.series) (m.test ? test_rows : train_rows)++;
  CHECK(train_rows == 4);
  CHECK(test_rows == 2);
  CHECK(res.series[2].test);
  CHECK(res.series[2].epoch == 2);
  CHECK(res.series[5].test);
  CHECK(res.series[5].epoch == 4);
  for (const auto& m : res.series) {
    CHECK(m.mean_time_per_epoch ==
          doctest::Approx(2.0 * m.mean_time_per_episode));
    CHECK(m.successes >= 0);
    CHECK(m.successes <= 2);
    if (m.test) CHECK(m.updates == 0);
  }
  // training kicked in once the buffer was full
  int total_updates = 0;
  for (const auto& m : res.series) total_updates += m.updates;
  CHECK(total_updates > 0);
  CHECK(res.x_threshold > 0.0);
  // c is pinned to the force-limit norm, ||(1.2, 0.4, 1.2)||
  CHECK(res.c_bound == doctest::Approx(std::sqrt(1.2 * 1.2 * 2 + 0.4 * 0.4)));
}

TEST_CASE("zero epochs produce an empty series") {
  const ExperimentConfig cfg = config_from("epochs = 0\nhidden1 = 8\nhidden2 = 8\n");
  const DemoDataset demos = demos_for(cfg);
  const RunResult res = run_experiment(cfg, 1, demos);
  CHECK(res.series.empty());
  CHECK(res.agent != nullptr);
}

TEST_CASE("a fixed threshold skips calibration") {
  ExperimentConfig cfg = tiny_config();
  cfg.x_override = 3.5;
  const DemoDataset demos = demos_for(cfg);
  const RunResult res = run_experiment(cfg, 7, demos);
  CHECK(res.x_threshold == 3.5);
}

TEST_CASE("experiments are bit-identical for equal seeds") {
  const ExperimentConfig cfg = tiny_config();
  const DemoDataset demos = demos_for(cfg);
  const RunResult a = run_experiment(cfg, 42, demos);
  const RunResult b = run_experiment(cfg, 42, demos);
  REQUIRE(a.series.size() == b.series.size());
  for (std::size_t i = 0; i < a.series.size(); ++i) {
    CHECK(a.series[i].mean_reward == b.series[i].mean_reward);
    CHECK(a.series[i].mean_time_per_epoch == b.series[i].mean_time_per_epoch);
    CHECK(a.series[i].updates == b.series[i].updates);
  }
  CHECK(a.x_threshold == b.x_threshold);

  const RunResult c = run_experiment(cfg, 43, demos);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.series.size(); ++i)
    any_diff = any_diff || a.series[i].mean_reward != c.series[i].mean_reward;
  CHECK(any_diff);
}

TEST_CASE("aggregation matches an independent recomputation") {
  auto row = [](int epoch, bool test, double reward, double time) {
    EpochMetrics m;
    m.epoch = epoch;
    m.test = test;
    m.mean_reward = reward;
    m.mean_time_per_epoch = time;
    return m;
  };
  const std::vector<std::vector<EpochMetrics>> runs = {
      {row(1, false, -10.0, 4.0), row(2, false, -6.0, 3.0)},
      {row(1, false, -14.0, 6.0), row(2, false, -2.0, 1.0)},
      {row(1, false, -12.0, 5.0), row(2, false, -4.0, 2.0)},
  };
  const auto rows = aggregate_runs(runs);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].mean == doctest::Approx(-12.0));
  CHECK(rows[1].mean == doctest::Approx(-4.0));
  CHECK(rows[0].time_mean == doctest::Approx(5.0));
  // sample sd of {-10,-14,-12} is 2; half width 1.96 * 2 / sqrt(3)
  CHECK(rows[0].half_width == doctest::Approx(1.96 * 2.0 / std::sqrt(3.0)));
  CHECK(rows[0].time_half_width == doctest::Approx(1.96 * 1.0 / std::sqrt(3.0)));

  // permuting the seeds changes nothing
  const std::vector<std::vector<EpochMetrics>> permuted = {runs[2], runs[0],
                                                           runs[1]};
  const auto rows2 = aggregate_runs(permuted);
  CHECK(rows2[0].mean == rows[0].mean);
  CHECK(rows2[0].half_width == doctest::Approx(rows[0].half_width));

  // a single run has no spread
  const auto solo = aggregate_runs({runs[0]});
  CHECK(solo[0].half_width == 0.0);

  CHECK_THROWS_AS(aggregate_runs({}), ContractError);
  CHECK_THROWS_AS(aggregate_runs({runs[0], {runs[1][0]}}), ContractError);
  const std::vector<std::vector<EpochMetrics>> misaligned = {
      {row(1, false, 0, 0)}, {row(1, true, 0, 0)}};
  CHECK_THROWS_AS(aggregate_runs(misaligned), ContractError);
}

TEST_CASE("metrics round-trip through the pinned CSV format") {
  std::vector<EpochMetrics> series;
  EpochMetrics m;
  m.epoch = 1;
  m.mean_reward = -327.125;
  m.mean_time_per_episode = 5.17;
  m.mean_time_per_epoch = 10.34;
  m.successes = 1;
  m.updates = 1234;
  series.push_back(m);
  m.epoch = 5;
  m.test = true;
  m.mean_reward = -73.0625;
  m.updates = 0;
  series.push_back(m);

  const std::string path = temp_path("hsc_metrics.csv");
  write_metrics(series, path, 7.25, 3.5);

  std::ifstream is(path);
  std::string header;
  std::getline(is, header);
  CHECK(header == kMetricsHeader);

  const auto loaded = read_metrics(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].epoch == 1);
  CHECK_FALSE(loaded[0].test);
  CHECK(loaded[0].mean_reward == -327.125);
  CHECK(loaded[0].mean_time_per_episode == 5.17);
  CHECK(loaded[0].updates == 1234);
  CHECK(loaded[1].test);
  CHECK(loaded[1].mean_reward == -73.0625);
  std::filesystem::remove(path);
}

TEST_CASE("metrics io rejects bad inputs") {
  const std::string path = temp_path("hsc_metrics_bad.csv");
  CHECK_THROWS_AS(write_metrics({}, path), ContractError);
  {
    std::ofstream os(path);
    os << "wrong,header\n1,train,0,0,0,0,0\n";
  }
  CHECK_THROWS_AS(read_metrics(path), IoError);
  {
    std::ofstream os(path);
    os << kMetricsHeader << "\n1,nap,0,0,0,0,0\n";
  }
  CHECK_THROWS_AS(read_metrics(path), IoError);
  {
    std::ofstream os(path);
    os << kMetricsHeader << "\n";
  }
  CHECK_THROWS_AS(read_metrics(path), IoError);
  std::filesystem::remove(path);
}

TEST_CASE("plots are standalone SVG documents") {
  std::vector<AggregateRow> rows;
  for (int e = 1; e <= 5; ++e) {
    AggregateRow r;
    r.epoch = e;
    r.mean = -300.0 + 50.0 * e;
    r.half_width = 20.0;
    rows.push_back(r);
    if (e % 2 == 0) {
      r.test = true;
      r.mean += 30.0;
      rows.push_back(r);
    }
  }
  const std::string path = temp_path("hsc_plot.svg");
  emit_plot(rows, path, "Mean reward");
  std::ifstream is(path);
  std::stringstream ss;
  ss << is.rdbuf();
  const std::string svg = ss.str();
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
  CHECK(svg.find("Mean reward") != std::string::npos);
  CHECK_THROWS_AS(emit_plot({}, path, "y"), ContractError);
  std::filesystem::remove(path);
}
