#include "h2st/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include "h2st/config.hpp"
#include "h2st/errors.hpp"
#include "h2st/rng.hpp"

namespace h2st::cli {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_outputs(const fs::path& dir, const ExperimentConfig& config, const ExperimentResult& result) {
  fs::create_directories(dir);
  {
    std::ofstream log(dir / "roundlog.csv", std::ios::binary);
    if (!log) throw std::runtime_error("cannot write " + (dir / "roundlog.csv").string());
    write_round_log_csv(log, result.logs);
  }
  write_text(dir / "metrics.json", result.report.to_json());
  write_text(dir / "config_resolved.json", config.to_json());
}

std::string format(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

// Runs `body`, mapping config problems to exit 2 and everything else to 1.
template <class F>
int guarded(const char* command, std::ostream& log, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    log << "h2st " << command << ": config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    log << "h2st " << command << ": error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

std::vector<std::string> split_values(const std::string& text) {
  std::vector<std::string> out;
  std::string current;
  int depth = 0;
  for (char ch : text) {
    if (ch == '[') ++depth;
    if (ch == ']') --depth;
    if (ch == ',' && depth == 0) {
      out.push_back(current);
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  out.push_back(current);
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd summarize(const std::vector<double>& xs) {
  MeanStd r;
  if (xs.empty()) return r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return r;
}

std::size_t workers_from_env() {
  const char* env = std::getenv("H2ST_WORKERS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) throw ConfigError("H2ST_WORKERS must be a positive integer");
  return static_cast<std::size_t>(v);
}

}  // namespace

int run(const RunOptions& options, std::ostream& log) {
  return guarded("run", log, [&] {
    ExperimentConfig config = ExperimentConfig::load(options.config_path);
    if (options.seed) config.seed = *options.seed;
    if (options.out_dir) config.output_dir = *options.out_dir;
    const ExperimentResult result = execute_experiment(config);
    write_outputs(config.output_dir, config, result);
    log << config.strategy.token() << ": f1_mean=" << format(result.report.f1_mean)
        << " ta_mean=" << format(result.report.ta_mean) << " acc=" << format(result.report.acc)
        << " ft=" << format(result.report.ft) << " -> " << config.output_dir << "\n";
    return kExitOk;
  });
}

std::vector<GridAxis> parse_grid(const std::string& spec) {
  std::vector<GridAxis> axes;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ';')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("grid: expected key=values in '" + item + "'");
    GridAxis axis{trim(item.substr(0, eq)), {}};
    for (auto& v : split_values(item.substr(eq + 1))) {
      v = trim(v);
      if (v.empty()) throw ConfigError("grid: empty value for '" + axis.first + "'");
      axis.second.push_back(v);
    }
    axes.push_back(std::move(axis));
  }
  return axes;
}

int sweep(const SweepOptions& options, std::ostream& log) {
  return guarded("sweep", log, [&] {
    if (options.reps == 0) throw ConfigError("--reps must be at least 1");
    const ExperimentConfig base = ExperimentConfig::load(options.config_path);
    const auto axes = parse_grid(options.grid);
    const fs::path out_dir = options.out_dir.value_or(base.output_dir);
    const std::size_t workers = options.workers == 0 ? workers_from_env() : options.workers;

    // Cross product of axis values; each cell validated up front so a bad
    // grid fails before any work starts.
    std::vector<std::vector<std::string>> cells{{}};
    for (const auto& [key, values] : axes) {
      std::vector<std::vector<std::string>> next;
      for (const auto& cell : cells) {
        for (const auto& v : values) {
          next.push_back(cell);
          next.back().push_back(v);
        }
      }
      cells = std::move(next);
    }
    std::vector<ExperimentConfig> cell_configs;
    for (const auto& cell : cells) {
      ExperimentConfig c = base;
      for (std::size_t a = 0; a < axes.size(); ++a) c.set(axes[a].first, cell[a]);
      cell_configs.push_back(c);
    }

    fs::create_directories(out_dir);
    std::ofstream table(out_dir / "sweep.csv", std::ios::binary | std::ios::trunc);
    if (!table) throw std::runtime_error("cannot write " + (out_dir / "sweep.csv").string());
    table << "cell";
    for (const auto& axis : axes) table << "," << axis.first;
    table << ",reps";
    for (const char* m : {"f1_mean", "ta_mean", "acc", "ft", "mean_layer_visits"}) {
      table << "," << m << "_mean," << m << "_std";
    }
    table << "\n" << std::flush;

    const std::size_t jobs = cells.size() * options.reps;
    std::vector<MetricsReport> reports(jobs);
    std::vector<std::size_t> finished(cells.size(), 0);
    std::mutex mutex;
    std::string failure;

#pragma omp parallel for schedule(dynamic) num_threads(static_cast<int>(workers))
    for (std::size_t job = 0; job < jobs; ++job) {
      const std::size_t cell = job / options.reps;
      const std::size_t rep = job % options.reps;
      try {
        ExperimentConfig c = cell_configs[cell];
        c.seed = derive_seed(base.seed, "rep", rep);
        std::ostringstream sub;
        sub << "cell_" << std::setw(3) << std::setfill('0') << cell << "/rep_" << std::setw(2)
            << std::setfill('0') << rep;
        c.output_dir = (out_dir / sub.str()).string();
        const ExperimentResult result = execute_experiment(c, rep);
        write_outputs(c.output_dir, c, result);
        reports[job] = result.report;
      } catch (const std::exception& e) {
        std::lock_guard lock(mutex);
        if (failure.empty()) failure = e.what();
        continue;
      }

      std::lock_guard lock(mutex);
      if (++finished[cell] < options.reps) continue;
      std::vector<double> f1, ta, acc, ft, visits;
      for (std::size_t r = 0; r < options.reps; ++r) {
        const auto& m = reports[cell * options.reps + r];
        f1.push_back(m.f1_mean);
        ta.push_back(m.ta_mean);
        acc.push_back(m.acc);
        ft.push_back(m.ft);
        visits.push_back(m.mean_layer_visits);
      }
      table << cell;
      for (const auto& v : cells[cell]) table << ",\"" << v << "\"";
      table << "," << options.reps;
      for (const auto* xs : {&f1, &ta, &acc, &ft, &visits}) {
        const auto s = summarize(*xs);
        table << "," << format(s.mean) << "," << format(s.std);
      }
      table << "\n" << std::flush;
      log << "cell " << cell << " done (f1_mean=" << format(summarize(f1).mean) << ")\n";
    }

    if (!failure.empty()) throw std::runtime_error(failure);
    return kExitOk;
  });
}

int report(const std::string& dir, std::ostream& out) {
  return guarded("report", out, [&] {
    if (!fs::is_directory(dir)) throw std::runtime_error("no such directory: " + dir);
    std::vector<fs::path> found;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().filename() == "metrics.json") found.push_back(entry.path());
    }
    if (found.empty()) throw std::runtime_error("no metrics.json found under " + dir);
    std::sort(found.begin(), found.end());

    std::ofstream comparison(fs::path(dir) / "comparison.csv", std::ios::binary);
    std::ofstream curves(fs::path(dir) / "curves.csv", std::ios::binary);
    if (!comparison || !curves) throw std::runtime_error("cannot write report files in " + dir);
    comparison << "strategy,f1_mean,ta_mean,acc,ft,mean_layer_visits\n";
    curves << "run,strategy,round,role,phase,tp,fp,tn,fn,ta\n";

    out << std::left << std::setw(22) << "strategy" << std::right << std::setw(10) << "F1" << std::setw(10)
        << "TA" << std::setw(10) << "ACC" << std::setw(10) << "FT" << std::setw(10) << "visits"
        << "  run\n";
    for (const auto& path : found) {
      std::ifstream in(path);
      std::stringstream text;
      text << in.rdbuf();
      const MetricsReport m = MetricsReport::from_json(text.str());

      std::string strategy = "unknown";
      const auto config_path = path.parent_path() / "config_resolved.json";
      if (fs::exists(config_path)) {
        std::ifstream cin(config_path);
        const auto cfg = nlohmann::json::parse(cin, nullptr, false);
        if (!cfg.is_discarded() && cfg.contains("strategy")) strategy = cfg["strategy"].get<std::string>();
      }
      const std::string run = fs::relative(path.parent_path(), dir).generic_string();

      comparison << strategy << "," << format(m.f1_mean) << "," << format(m.ta_mean) << ","
                 << format(m.acc) << "," << format(m.ft) << "," << format(m.mean_layer_visits) << "\n";
      for (const auto& r : m.rounds) {
        const double ta = r.samples == 0 ? 0.0 : 100.0 * static_cast<double>(r.task_correct) / r.samples;
        curves << run << "," << strategy << "," << r.round << "," << r.role << "," << r.phase << ","
               << r.counts.tp << "," << r.counts.fp << "," << r.counts.tn << "," << r.counts.fn << ","
               << format(ta) << "\n";
      }
      out << std::left << std::setw(22) << strategy << std::right << std::fixed << std::setprecision(2)
          << std::setw(10) << m.f1_mean << std::setw(10) << m.ta_mean << std::setw(10) << m.acc
          << std::setw(10) << m.ft << std::setw(10) << m.mean_layer_visits << "  " << run << "\n"
          << std::defaultfloat;
    }
    return kExitOk;
  });
}

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical two-sample tests for continual OOD detection"};
  app.require_subcommand(1);

  RunOptions run_opts;
  std::uint64_t seed = 0;
  std::string run_out;
  auto* run_cmd = app.add_subcommand("run", "Run one experiment");
  run_cmd->add_option("--config", run_opts.config_path, "Experiment config (JSON)")->required();
  auto* seed_opt = run_cmd->add_option("--seed", seed, "Override the root seed");
  auto* run_out_opt = run_cmd->add_option("--out", run_out, "Output directory");

  SweepOptions sweep_opts;
  std::string sweep_out;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter grid");
  sweep_cmd->add_option("--config", sweep_opts.config_path, "Base config (JSON)")->required();
  sweep_cmd->add_option("--grid", sweep_opts.grid, "key=v1,v2;key2=v3 (empty: single cell)");
  sweep_cmd->add_option("--reps", sweep_opts.reps, "Repetitions per cell")->check(CLI::PositiveNumber);
  auto* sweep_out_opt = sweep_cmd->add_option("--out", sweep_out, "Output directory");

  std::string report_dir;
  auto* report_cmd = app.add_subcommand("report", "Summarize finished runs");
  report_cmd->add_option("--in", report_dir, "Directory holding run outputs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (run_cmd->parsed()) {
    if (*seed_opt) run_opts.seed = seed;
    if (*run_out_opt) run_opts.out_dir = run_out;
    return run(run_opts, std::cerr);
  }
  if (sweep_cmd->parsed()) {
    if (*sweep_out_opt) sweep_opts.out_dir = sweep_out;
    return sweep(sweep_opts, std::cerr);
  }
  return report(report_dir, std::cout);
}

}  // namespace h2st::cli
