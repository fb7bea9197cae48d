#include "hsc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace hsc {

void ExperimentConfig::validate() const {
  sim.validate();
  ddpg.validate();
  if (epochs < 0) throw ConfigError("epochs: must be >= 0");
  if (arp_order < 1) throw ConfigError("arp_order: must be >= 1");
  if (!(arp_alpha >= 0.0 && arp_alpha < 1.0))
    throw ConfigError("arp_alpha: must be in [0, 1)");
  if (!(sigma >= 0.0)) throw ConfigError("sigma: must be >= 0");
  if (buffer_capacity < static_cast<std::size_t>(ddpg.batch_size))
    throw ConfigError("buffer_capacity: smaller than batch_size");
  gains.validate();
  episode.ws_master.validate("ws_master");
  episode.ws_slave.validate("ws_slave");
  episode.limits.validate();
  if (!(episode.eps_goal > 0.0)) throw ConfigError("eps_goal: must be > 0");
  if (episode.max_steps < 1) throw ConfigError("max_steps: must be >= 1");
  if (x_override < 0.0) throw ConfigError("x_threshold: must be >= 0");
  if (calib_episodes < 1) throw ConfigError("calib_episodes: must be >= 1");
  if (test_every < 1) throw ConfigError("test_every: must be >= 1");
  if (n_seeds < 1) throw ConfigError("n_seeds: must be >= 1");
}

namespace {

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    while (pos < v.size() && std::isspace(static_cast<unsigned char>(v[pos]))) ++pos;
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": not a number: '" + v + "'");
  }
}

long parse_int(const std::string& key, const std::string& v) {
  const double d = parse_double(key, v);
  if (d != std::floor(d)) throw ConfigError(key + ": not an integer: '" + v + "'");
  return static_cast<long>(d);
}

Vec3 parse_vec3(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  Vec3 out;
  if (!(is >> out.x >> out.y >> out.z))
    throw ConfigError(key + ": expected three numbers: '" + v + "'");
  std::string rest;
  if (is >> rest) throw ConfigError(key + ": trailing input: '" + v + "'");
  if (!out.finite()) throw ConfigError(key + ": non-finite value");
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void fmt(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace

ExperimentConfig parse_config(std::istream& is, const std::string& origin) {
  ExperimentConfig cfg;
  bool offset_set = false;
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "step") cfg.sim.step = static_cast<int>(parse_int(key, value));
    else if (key == "k_u") cfg.sim.k_u = parse_double(key, value);
    else if (key == "k_s") cfg.sim.k_s = parse_double(key, value);
    else if (key == "dt") cfg.sim.dt = parse_double(key, value);
    else if (key == "batch_size") cfg.ddpg.batch_size = static_cast<int>(parse_int(key, value));
    else if (key == "gamma") cfg.ddpg.gamma = parse_double(key, value);
    else if (key == "tau") cfg.ddpg.tau = parse_double(key, value);
    else if (key == "actor_lr") cfg.ddpg.actor_lr = parse_double(key, value);
    else if (key == "critic_lr") cfg.ddpg.critic_lr = parse_double(key, value);
    else if (key == "hidden1") cfg.ddpg.hidden1 = static_cast<int>(parse_int(key, value));
    else if (key == "hidden2") cfg.ddpg.hidden2 = static_cast<int>(parse_int(key, value));
    else if (key == "epochs") cfg.epochs = static_cast<int>(parse_int(key, value));
    else if (key == "arp_order") cfg.arp_order = static_cast<int>(parse_int(key, value));
    else if (key == "arp_alpha") cfg.arp_alpha = parse_double(key, value);
    else if (key == "sigma") cfg.sigma = parse_double(key, value);
    else if (key == "buffer_capacity") cfg.buffer_capacity = static_cast<std::size_t>(parse_int(key, value));
    else if (key == "k_m") cfg.gains.k_m = parse_double(key, value);
    else if (key == "xi") cfg.gains.xi = parse_double(key, value);
    else if (key == "p_offset") { cfg.gains.p_offset = parse_vec3(key, value); offset_set = true; }
    else if (key == "ws_master_lower") cfg.episode.ws_master.lower = parse_vec3(key, value);
    else if (key == "ws_master_upper") cfg.episode.ws_master.upper = parse_vec3(key, value);
    else if (key == "ws_slave_lower") cfg.episode.ws_slave.lower = parse_vec3(key, value);
    else if (key == "ws_slave_upper") cfg.episode.ws_slave.upper = parse_vec3(key, value);
    else if (key == "force_max") {
      cfg.episode.limits.f_max = parse_vec3(key, value);
      cfg.episode.limits.f_min = -cfg.episode.limits.f_max;
    } else if (key == "force_min") cfg.episode.limits.f_min = parse_vec3(key, value);
    else if (key == "eps_goal") cfg.episode.eps_goal = parse_double(key, value);
    else if (key == "max_steps") cfg.episode.max_steps = static_cast<int>(parse_int(key, value));
    else if (key == "x_threshold") cfg.x_override = parse_double(key, value);
    else if (key == "calib_episodes") cfg.calib_episodes = static_cast<int>(parse_int(key, value));
    else if (key == "test_every") cfg.test_every = static_cast<int>(parse_int(key, value));
    else if (key == "n_seeds") cfg.n_seeds = static_cast<int>(parse_int(key, value));
    else if (key == "demo_file") cfg.demo_file = value;
    else if (key == "demo_n") cfg.demo.n_trajectories = static_cast<int>(parse_int(key, value));
    else if (key == "demo_start") cfg.demo.start = parse_vec3(key, value);
    else if (key == "demo_goal") cfg.demo.goal = parse_vec3(key, value);
    else if (key == "demo_apex") cfg.demo.apex_height = parse_double(key, value);
    else if (key == "demo_points") cfg.demo.points_per_traj = static_cast<int>(parse_int(key, value));
    else if (key == "demo_jitter") cfg.demo.jitter_std = parse_double(key, value);
    else if (key == "demo_seed") cfg.demo_seed = static_cast<std::uint64_t>(parse_int(key, value));
    else
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": unknown key '" + key + "'");
  }
  cfg.demo.sample_period = cfg.sim.dt;
  cfg.ddpg.limits = cfg.episode.limits;
  if (!offset_set)
    cfg.gains.p_offset =
        cfg.episode.ws_slave.center() - cfg.gains.xi * cfg.episode.ws_master.center();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config: " + path);
  return parse_config(is, path);
}

void write_default_config(std::ostream& os) {
  os << "# Master-side simulator\n"
        "step = 12\n"
        "k_u = 5\n"
        "k_s = 5\n"
        "dt = 0.01\n"
        "\n"
        "# Agent\n"
        "batch_size = 64\n"
        "gamma = 0.99\n"
        "tau = 0.01\n"
        "actor_lr = 0.0002\n"
        "critic_lr = 0.001\n"
        "hidden1 = 400\n"
        "hidden2 = 300\n"
        "epochs = 25\n"
        "arp_order = 3\n"
        "arp_alpha = 0.8\n"
        "sigma = 0.21\n"
        "\n"
        "# Teleoperation and geometry\n"
        "k_m = 5\n"
        "xi = 1\n"
        "ws_master_lower = -20 -20 -20\n"
        "ws_master_upper = 20 20 20\n"
        "ws_slave_lower = -30 -30 -30\n"
        "ws_slave_upper = 30 30 30\n"
        "force_max = 1.2 0.4 1.2\n"
        "eps_goal = 1\n"
        "max_steps = 1000\n"
        "\n"
        "# Reward threshold: 0 means calibrate at run start\n"
        "x_threshold = 0\n"
        "calib_episodes = 10\n"
        "\n"
        "# Schedule\n"
        "test_every = 5\n"
        "n_seeds = 5\n"
        "\n"
        "# Demonstrations (demo_file overrides the generator)\n"
        "demo_n = 10\n"
        "demo_start = -8 0 0\n"
        "demo_goal = 8 0 0\n"
        "demo_apex = 4\n"
        "demo_points = 650\n"
        "demo_jitter = 0.2\n"
        "demo_seed = 1234\n";
}

DemoDataset demos_for(const ExperimentConfig& config) {
  if (!config.demo_file.empty()) return load_demos(config.demo_file);
  Rng rng(config.demo_seed);
  return generate_demos(config.demo, rng);
}

namespace {

struct EpisodeStats {
  double reward = 0.0;
  double time = 0.0;
  bool success = false;
};

EpisodeStats episode_total(const EpisodeRecord& rec) {
  return {rec.reward_sum + terminal_adjustment(rec.outcome), rec.duration,
          rec.outcome == EpisodeOutcome::Success};
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config, std::uint64_t seed,
                         const DemoDataset& demos) {
  config.validate();
  Rng rng(seed);

  EpisodeSettings settings = config.episode;
  settings.reward.c = settings.limits.max_norm();
  if (config.x_override > 0.0) {
    settings.reward.x = config.x_override;
  } else {
    ArpNoise calib_noise(config.arp_order, config.arp_alpha, config.sigma);
    settings.reward.x = calibrate_velocity_threshold(
        demos, config.sim, settings, calib_noise, config.calib_episodes, rng);
  }
  settings.gains = config.gains;

  DdpgConfig ddpg = config.ddpg;
  ddpg.limits = settings.limits;

  RunResult result;
  result.x_threshold = settings.reward.x;
  result.c_bound = settings.reward.c;
  result.agent = std::make_shared<DdpgAgent>(ddpg, rng);
  ArpNoise noise(config.arp_order, config.arp_alpha, config.sigma);
  ReplayBuffer buffer(config.buffer_capacity);

  const TaskDirection dirs[2] = {TaskDirection::forward(), TaskDirection::reverse()};

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochMetrics train{};
    train.epoch = epoch;
    for (const TaskDirection dir : dirs) {
      EpisodeRecord rec = run_episode(result.agent.get(), &noise, demos, dir,
                                      config.sim, settings, true, rng);
      const EpisodeStats st = episode_total(rec);
      train.mean_reward += st.reward;
      train.mean_time_per_epoch += st.time;
      train.successes += st.success ? 1 : 0;
      const std::size_t n_steps = rec.transitions.size();
      DdpgAgent::finalize_episode(buffer, std::move(rec.transitions), rec.outcome);
      for (std::size_t t = 0; t < n_steps; ++t)
        if (result.agent->train_minibatch(buffer, rng)) ++train.updates;
    }
    train.mean_reward /= 2.0;
    train.mean_time_per_episode = train.mean_time_per_epoch / 2.0;
    result.series.push_back(train);

    if (epoch % config.test_every == 0) {
      EpochMetrics test{};
      test.epoch = epoch;
      test.test = true;
      for (const TaskDirection dir : dirs) {
        const EpisodeRecord rec = run_episode(result.agent.get(), nullptr, demos,
                                              dir, config.sim, settings, false, rng);
        const EpisodeStats st = episode_total(rec);
        test.mean_reward += st.reward;
        test.mean_time_per_epoch += st.time;
        test.successes += st.success ? 1 : 0;
      }
      test.mean_reward /= 2.0;
      test.mean_time_per_episode = test.mean_time_per_epoch / 2.0;
      result.series.push_back(test);
    }
  }
  return result;
}

std::vector<AggregateRow> aggregate_runs(
    const std::vector<std::vector<EpochMetrics>>& runs) {
  if (runs.empty()) throw ContractError("aggregate_runs: no series");
  const std::size_t len = runs.front().size();
  for (const auto& r : runs)
    if (r.size() != len) throw ContractError("aggregate_runs: length mismatch");

  const double n = static_cast<double>(runs.size());
  std::vector<AggregateRow> rows(len);
  for (std::size_t i = 0; i < len; ++i) {
    AggregateRow& row = rows[i];
    row.epoch = runs.front()[i].epoch;
    row.test = runs.front()[i].test;
    double sum = 0.0, tsum = 0.0;
    for (const auto& r : runs) {
      if (r[i].epoch != row.epoch || r[i].test != row.test)
        throw ContractError("aggregate_runs: misaligned series");
      sum += r[i].mean_reward;
      tsum += r[i].mean_time_per_epoch;
    }
    row.mean = sum / n;
    row.time_mean = tsum / n;
    if (runs.size() > 1) {
      double ss = 0.0, tss = 0.0;
      for (const auto& r : runs) {
        ss += (r[i].mean_reward - row.mean) * (r[i].mean_reward - row.mean);
        tss += (r[i].mean_time_per_epoch - row.time_mean) *
               (r[i].mean_time_per_epoch - row.time_mean);
      }
      const double sd = std::sqrt(ss / (n - 1.0));
      const double tsd = std::sqrt(tss / (n - 1.0));
      row.half_width = 1.96 * sd / std::sqrt(n);
      row.time_half_width = 1.96 * tsd / std::sqrt(n);
    }
  }
  return rows;
}

void write_metrics(const std::vector<EpochMetrics>& series, const std::string& path,
                   double x_threshold, double c_bound) {
  if (series.empty()) throw ContractError("write_metrics: empty series");
  std::string out(kMetricsHeader);
  out += "\n";
  for (const auto& m : series) {
    out += std::to_string(m.epoch);
    out += m.test ? ",test," : ",train,";
    fmt(out, m.mean_reward);
    out += ",";
    fmt(out, m.mean_time_per_episode);
    out += ",";
    fmt(out, m.mean_time_per_epoch);
    out += "," + std::to_string(m.successes) + "," + std::to_string(m.updates) + "\n";
  }
  if (x_threshold > 0.0) {
    out += "# x_threshold = ";
    fmt(out, x_threshold);
    out += "\n# c_bound = ";
    fmt(out, c_bound);
    out += "\n";
  }
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << out;
  if (!os) throw IoError("write failed: " + path);
}

std::vector<EpochMetrics> read_metrics(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(is, line) || line != kMetricsHeader)
    throw IoError(path + ": bad metrics header");
  std::vector<EpochMetrics> series;
  long line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    EpochMetrics m;
    char phase[16];
    const int n = std::sscanf(line.c_str(), "%d,%15[^,],%lf,%lf,%lf,%d,%d",
                              &m.epoch, phase, &m.mean_reward,
                              &m.mean_time_per_episode, &m.mean_time_per_epoch,
                              &m.successes, &m.updates);
    if (n != 7 || (std::string(phase) != "train" && std::string(phase) != "test"))
      throw IoError(path + ":" + std::to_string(line_no) + ": bad metrics row");
    m.test = std::string(phase) == "test";
    series.push_back(m);
  }
  if (series.empty()) throw IoError(path + ": no rows");
  return series;
}

namespace {

struct PlotScale {
  double x0, x1, y0, y1;
  double px(double x) const { return 70.0 + (x - x0) / (x1 - x0) * 480.0; }
  double py(double y) const { return 20.0 + (y1 - y) / (y1 - y0) * 330.0; }
};

void append_path(std::string& svg, const std::vector<std::pair<double, double>>& pts,
                 const PlotScale& s, const char* style, bool close) {
  if (pts.empty()) return;
  svg += close ? "<polygon points=\"" : "<polyline points=\"";
  char buf[64];
  for (const auto& [x, y] : pts) {
    std::snprintf(buf, sizeof buf, "%.2f,%.2f ", s.px(x), s.py(y));
    svg += buf;
  }
  svg += "\" style=\"";
  svg += style;
  svg += "\"/>\n";
}

}  // namespace

void emit_plot(const std::vector<AggregateRow>& rows, const std::string& path,
               const std::string& y_label) {
  if (rows.empty()) throw ContractError("emit_plot: empty series");
  double ymin = 1e300, ymax = -1e300;
  int xmax = 1;
  for (const auto& r : rows) {
    ymin = std::min(ymin, r.mean - r.half_width);
    ymax = std::max(ymax, r.mean + r.half_width);
    xmax = std::max(xmax, r.epoch);
  }
  const double pad = std::max(1e-9, 0.05 * (ymax - ymin));
  PlotScale s{0.0, static_cast<double>(xmax) + 1.0, ymin - pad, ymax + pad};

  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"400\" "
      "viewBox=\"0 0 600 400\">\n"
      "<rect width=\"600\" height=\"400\" fill=\"white\"/>\n";

  for (bool test : {false, true}) {
    std::vector<std::pair<double, double>> mean, band;
    for (const auto& r : rows)
      if (r.test == test) {
        mean.emplace_back(r.epoch, r.mean);
        band.emplace_back(r.epoch, r.mean - r.half_width);
      }
    for (auto it = rows.rbegin(); it != rows.rend(); ++it)
      if (it->test == test) band.emplace_back(it->epoch, it->mean + it->half_width);
    const char* fill = test ? "fill:blue;fill-opacity:0.15;stroke:none"
                            : "fill:red;fill-opacity:0.15;stroke:none";
    const char* stroke = test ? "fill:none;stroke:blue;stroke-width:1.5"
                              : "fill:none;stroke:red;stroke-width:1.5";
    if (mean.size() > 1) append_path(svg, band, s, fill, true);
    append_path(svg, mean, s, stroke, false);
  }

  char buf[1024];
  std::snprintf(buf, sizeof buf,
                "<line x1=\"70\" y1=\"350\" x2=\"550\" y2=\"350\" stroke=\"black\"/>\n"
                "<line x1=\"70\" y1=\"20\" x2=\"70\" y2=\"350\" stroke=\"black\"/>\n"
                "<text x=\"300\" y=\"385\" text-anchor=\"middle\" "
                "font-size=\"14\">Epochs</text>\n"
                "<text x=\"18\" y=\"185\" text-anchor=\"middle\" font-size=\"14\" "
                "transform=\"rotate(-90 18 185)\">%s</text>\n"
                "<text x=\"66\" y=\"364\" text-anchor=\"end\" font-size=\"11\">0</text>\n"
                "<text x=\"550\" y=\"364\" text-anchor=\"middle\" font-size=\"11\">%d</text>\n"
                "<text x=\"66\" y=\"350\" text-anchor=\"end\" font-size=\"11\">%.4g</text>\n"
                "<text x=\"66\" y=\"28\" text-anchor=\"end\" font-size=\"11\">%.4g</text>\n"
                "<text x=\"470\" y=\"40\" font-size=\"12\" fill=\"red\">Training</text>\n"
                "<text x=\"470\" y=\"56\" font-size=\"12\" fill=\"blue\">Testing</text>\n",
                y_label.c_str(), xmax, s.y0, s.y1);
  svg += buf;
  svg += "</svg>\n";

  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << svg;
  if (!os) throw IoError("write failed: " + path);
}

}  // namespace hsc
