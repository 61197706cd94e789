// altgrad: experiment runner. See README.md for the config schema.

#include <fnmatch.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "altgrad/sampling_tree.hpp"
#include "config.hpp"

#ifndef ALTGRAD_VERSION
#define ALTGRAD_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using namespace altgrad;
using namespace altgrad::cli;

namespace {

struct Options {
  std::string config;
  std::string out = "out";
  int jobs = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string subset;
  bool timing = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream o;
  o << std::hex << std::setw(16) << std::setfill('0') << h;
  return o.str();
}

YAML::Node load_yaml(const std::string& text, const std::string& path) {
  try {
    return YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

fs::path out_root(const Options& o) {
  if (const char* env = std::getenv("ALTGRAD_OUT"); env && *env) return env;
  return o.out;
}

std::string num(double x) {
  std::ostringstream o;
  o << std::setprecision(17) << x;
  return o.str();
}

class Manifest {
 public:
  void add(const std::string& k, const std::string& v) { lines_ << k << '=' << v << '\n'; }
  void write(const fs::path& dir) { write_file_atomic(dir / "manifest.txt", lines_.str()); }

 private:
  std::ostringstream lines_;
};

void common_manifest(Manifest& m, const std::string& sub, const std::string& exp,
                     const std::string& config_path, const std::string& config_text) {
  m.add("subcommand", sub);
  m.add("experiment", exp);
  m.add("config", fs::path(config_path).filename().string());
  m.add("config_hash", config_text.empty() ? "" : "fnv1a64:" + fnv1a_hex(config_text));
  m.add("code_version", ALTGRAD_VERSION);
}

// ---- sweeps

struct SweepInfo {
  const char* metric;
  std::string window;
  const char* window_unit;
};

template <class Cell, class RunFn>
int run_sweep(const Options& opt, const std::string& sub, const SweepConfig& cfg,
              const std::string& config_text, std::vector<Cell> cells, const SweepInfo& info,
              RunFn run_one) {
  if (!opt.subset.empty()) {
    std::vector<Cell> kept;
    for (auto& c : cells)
      if (fnmatch(opt.subset.c_str(), c.id.c_str(), 0) == 0) kept.push_back(std::move(c));
    cells = std::move(kept);
    if (cells.empty()) {
      std::cerr << "altgrad: --subset '" << opt.subset << "' matches no cell\n";
      return 2;
    }
  }
  const std::uint64_t base = opt.seed_set ? opt.seed : cfg.seed;
  const fs::path dir = out_root(opt) / cfg.experiment;
  fs::create_directories(dir);

  const int runs = cfg.runs;
  std::vector<std::vector<double>> finals(cells.size(), std::vector<double>(runs));
  std::vector<std::vector<double>> pres(cells.size(), std::vector<double>(runs));
  parallel_for(cells.size() * runs, opt.jobs, [&](std::size_t k) {
    std::size_t ci = k / runs;
    int run = static_cast<int>(k % runs);
    RunSeries s = run_one(cells[ci], run_seed(base, cells[ci].id, run));
    write_run_csv(dir / cells[ci].id / (std::to_string(run) + ".csv"), s, opt.timing);
    finals[ci][run] = s.final_metric;
    pres[ci][run] = s.pre_metric;
  });

  const bool has_pre = cfg.kind == SweepKind::Ac && cfg.switch_at >= 0;
  std::vector<CellSummary> sums;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    CellSummary s;
    s.id = cells[i].id;
    s.params = cells[i].params;
    s.alpha = cells[i].agent.alpha;
    s.window = info.window;
    s.final_metric = mean_se(finals[i]);
    s.has_pre = has_pre;
    if (has_pre) s.pre_metric = mean_se(pres[i]);
    sums.push_back(s);
  }

  // best alpha/beta per group of the remaining axes
  auto group_of = [](const CellSummary& s) {
    CellParams p = s.params;
    p.alpha.clear();
    p.beta.clear();
    return p.id();
  };
  std::map<std::string, bool> seen;
  std::vector<CellSummary> best, best_pre;
  for (const auto& s : sums) {
    std::string g = group_of(s);
    if (seen[g]) continue;
    seen[g] = true;
    auto in_group = [&](const CellSummary& c) { return group_of(c) == g; };
    // groups where every cell diverged have no selection
    if (std::size_t b = best_cell(sums, in_group); b < sums.size()) best.push_back(sums[b]);
    if (has_pre) {
      std::vector<CellSummary> by_pre = sums;
      for (auto& c : by_pre) c.final_metric = c.pre_metric;
      if (std::size_t b = best_cell(by_pre, in_group); b < sums.size()) best_pre.push_back(sums[b]);
    }
  }

  write_file_atomic(dir / "summary.csv", summary_csv(sums));
  write_file_atomic(dir / "best.csv", summary_csv(best));
  if (has_pre) write_file_atomic(dir / "best_pre.csv", summary_csv(best_pre));

  Manifest m;
  common_manifest(m, sub, cfg.experiment, opt.config, config_text);
  m.add("base_seed", std::to_string(base));
  m.add("seed_rule", "run_seed(base_seed, cell_id, run)");
  m.add("runs", std::to_string(runs));
  m.add(cfg.kind == SweepKind::Chain ? "episodes" : "steps", std::to_string(cfg.steps));
  m.add("cells", std::to_string(cells.size()));
  m.add("subset", opt.subset);
  m.add("metric", info.metric);
  m.add("window", info.window);
  m.add("window_unit", info.window_unit);
  m.add("tie_break", "smaller_alpha");
  m.add("best_selection", has_pre ? "final_mean (best.csv); pre_mean (best_pre.csv)" : "final_mean");
  m.add("timing", opt.timing ? "1" : "0");
  m.add("run_csv", "step_or_episode,return_or_J,entropy,baseline_value,wall_ms");
  m.write(dir);
  std::cout << "wrote " << cells.size() << " cells x " << runs << " runs to " << dir.string()
            << "\n";
  return 0;
}

int bandit_sweep(const Options& opt, const std::string& text) {
  SweepConfig cfg = parse_sweep(load_yaml(text, opt.config), SweepKind::Bandit);
  const int steps = static_cast<int>(cfg.steps);
  return run_sweep(opt, "bandit-sweep", cfg, text, bandit_cells(cfg),
                   {"exact_J", std::to_string(kBanditWindow), "steps"},
                   [&](const BanditCell& c, std::uint64_t seed) {
                     return run_bandit(cfg.task, c, steps, seed);
                   });
}

int chain_sweep(const Options& opt, const std::string& text) {
  SweepConfig cfg = parse_sweep(load_yaml(text, opt.config), SweepKind::Chain);
  const int episodes = static_cast<int>(cfg.steps);
  return run_sweep(opt, "chain-sweep", cfg, text, chain_cells(cfg),
                   {cfg.exact_metric ? "exact_J" : "return", std::to_string(kChainWindow),
                    "episodes"},
                   [&](const ChainCell& c, std::uint64_t seed) {
                     return run_chain(c, episodes, seed);
                   });
}

int ac_sweep(const Options& opt, const std::string& text) {
  SweepConfig cfg = parse_sweep(load_yaml(text, opt.config), SweepKind::Ac);
  return run_sweep(opt, "ac-sweep", cfg, text, ac_cells(cfg),
                   {"return_step_weighted", std::to_string(kAcWindow), "steps"},
                   [&](const AcCell& c, std::uint64_t seed) {
                     return run_ac(c, cfg.steps, seed);
                   });
}

// ---- analysis subcommands

// KL is treated as converged below this level; the step-size bound is undefined at pi*.
constexpr double kKlFloor = 1e-12;

int fixed_point_verify(const Options& opt, const std::string& text) {
  FixedPointConfig cfg = parse_fixed_point(load_yaml(text, opt.config));
  const fs::path dir = out_root(opt) / cfg.experiment;
  std::ostringstream kl;
  kl << "case,b,t,kl,alpha,bound\n";
  for (const auto& fc : cfg.cases) {
    auto fp = biased_fixed_point(cfg.task, fc.b);
    auto* interior = std::get_if<InteriorFixedPoint>(&fp);
    if (!interior)
      throw ConfigError("cases: '" + fc.name + "' has no interior fixed point for b=" + num(fc.b));
    PreferenceVector th = cfg.theta0;
    double prev = kl_divergence_to_softmax(interior->pi, th);
    bool up = true, down = true;
    int t = 0;
    for (;; ++t) {
      PolicyVector pi = softmax(th);
      // the attractor bound only exists for baselines above every reward
      const bool has_bound = fc.b > cfg.task.rewards.maxCoeff();
      double bound = has_bound ? max_attractor_stepsize(pi, cfg.task, fc.b) : NAN;
      double kl_t = kl_divergence_to_softmax(interior->pi, th);
      bool stop = t == cfg.steps || (fc.half_bound && kl_t <= kKlFloor);
      double alpha = fc.half_bound ? bound / 2 : fc.alpha;
      kl << fc.name << ',' << num(fc.b) << ',' << t << ',' << num(kl_t) << ',';
      if (!stop) kl << num(alpha);
      kl << ',';
      if (has_bound) kl << num(bound);
      kl << '\n';
      if (t > 0) {
        up = up && kl_t > prev;
        down = down && kl_t < prev;
      }
      prev = kl_t;
      if (stop) break;
      th = biased_update_step(th, cfg.task, fc.b, alpha);
    }
    const char* trend = up ? "increasing" : down ? "decreasing" : "mixed";
    std::cout << fc.name << ": KL strictly " << trend << " over " << t << " steps\n";
  }
  write_file_atomic(dir / "kl.csv", kl.str());
  if (cfg.has_inequality) {
    std::ostringstream q;
    q << "b,alpha,lhs_log_term,lower_bound,upper_bound,rhs_inverse_sum\n";
    PolicyVector pi(cfg.ineq_pi);
    for (double b : cfg.ineq_b.values)
      for (double a : cfg.ineq_alpha.values) {
        InequalityTerms t = figure_b3_quantities(pi, cfg.task, b, a);
        q << num(b) << ',' << num(a) << ',' << num(t.lhs_log_term) << ',' << num(t.lower_bound)
          << ',' << num(t.upper_bound) << ',' << num(t.rhs_inverse_sum) << '\n';
      }
    write_file_atomic(dir / "inequality.csv", q.str());
  }
  Manifest m;
  common_manifest(m, "fixed-point-verify", cfg.experiment, opt.config, text);
  m.add("steps", std::to_string(cfg.steps));
  m.add("kl_floor", num(kKlFloor));
  m.write(dir);
  return 0;
}

int simplex_field_cmd(const Options& opt, const std::string& text) {
  SimplexConfig cfg = parse_simplex(load_yaml(text, opt.config));
  const fs::path dir = out_root(opt) / cfg.experiment;
  std::ostringstream o;
  write_simplex_field_csv(o, simplex_field(cfg.task, cfg.field));
  write_file_atomic(dir / "field.csv", o.str());
  Manifest m;
  common_manifest(m, "simplex-field", cfg.experiment, opt.config, text);
  m.add("resolution", std::to_string(cfg.field.resolution));
  m.write(dir);
  return 0;
}

int tree_bench_cmd(const Options& opt, const std::string& text) {
  TreeBenchConfig cfg =
      parse_tree_bench(text.empty() ? YAML::Node() : load_yaml(text, opt.config));
  if (opt.seed_set) cfg.seed = opt.seed;
  const fs::path dir = out_root(opt) / cfg.experiment;
  std::ostringstream o;
  o << "n,op,sampler,max_visits,visit_bound,ns_per_op\n";
  for (const auto& r : tree_bench(cfg.ns, cfg.ops, cfg.seed)) {
    int depth_bound = 1;
    while ((1L << (depth_bound - 1)) < r.n) ++depth_bound;  // ceil(log2 n) + 1
    o << r.n << ',' << r.op << ',' << r.sampler << ',';
    if (r.max_visits >= 0) o << r.max_visits;
    o << ',' << depth_bound << ',' << num(r.ns_per_op) << '\n';
  }
  write_file_atomic(dir / "tree_bench.csv", o.str());
  Manifest m;
  common_manifest(m, "tree-bench", cfg.experiment, opt.config, text);
  m.add("ops", std::to_string(cfg.ops));
  m.add("seed", std::to_string(cfg.seed));
  m.write(dir);
  std::cout << o.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"altgrad: gradient-bandit and actor-critic experiment runner"};
  app.require_subcommand(1);
  Options opt;
  struct Sub {
    const char* name;
    const char* help;
    int (*fn)(const Options&, const std::string&);
    bool needs_config;
  };
  const std::vector<Sub> subs = {
      {"bandit-sweep", "gradient bandit sweep", bandit_sweep, true},
      {"chain-sweep", "chain REINFORCE / expected-gradient sweep", chain_sweep, true},
      {"ac-sweep", "online actor-critic sweep", ac_sweep, true},
      {"fixed-point-verify", "KL-to-fixed-point series and step-size bound", fixed_point_verify,
       true},
      {"simplex-field", "3-armed simplex update field", simplex_field_cmd, true},
      {"tree-bench", "sampling tree cost table", tree_bench_cmd, false},
  };
  std::vector<CLI::App*> handles;
  for (const auto& s : subs) {
    CLI::App* sc = app.add_subcommand(s.name, s.help);
    auto* c = sc->add_option("--config", opt.config, "YAML config file");
    if (s.needs_config) c->required()->check(CLI::ExistingFile);
    else c->check(CLI::ExistingFile);
    sc->add_option("--out", opt.out, "output root (ALTGRAD_OUT overrides)");
    sc->add_option("--jobs", opt.jobs, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
    sc->add_option("--seed", opt.seed, "base seed, overrides the config");
    sc->add_option("--subset", opt.subset, "only run cells whose id matches this glob");
    sc->add_flag("--timing", opt.timing, "fill the wall_ms column");
    handles.push_back(sc);
  }
  if (argc > 1 && argv[1][0] != '-' &&
      std::none_of(subs.begin(), subs.end(), [&](const Sub& s) { return s.name == std::string(argv[1]); })) {
    std::cerr << "altgrad: unknown subcommand '" << argv[1] << "'\n" << app.help();
    return 2;
  }
  CLI11_PARSE(app, argc, argv);

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!handles[i]->parsed()) continue;
    opt.seed_set = handles[i]->count("--seed") > 0;
    try {
      std::string text = opt.config.empty() ? std::string() : read_file(opt.config);
      return subs[i].fn(opt, text);
    } catch (const ConfigError& e) {
      std::cerr << "altgrad: config error: " << e.what() << "\n";
      return 2;
    } catch (const fs::filesystem_error& e) {
      std::cerr << "altgrad: I/O error: " << e.what() << "\n";
      return 1;
    } catch (const std::exception& e) {
      std::cerr << "altgrad: " << e.what() << "\n";
      return 1;
    }
  }
  return 2;
}
