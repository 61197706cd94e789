#include "altgrad/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "altgrad/sampling_tree.hpp"

namespace altgrad {

namespace fs = std::filesystem;

std::uint64_t run_seed(std::uint64_t base, const std::string& cell_id, int run) {
  return hash_combine(hash_combine(base, hash_string(cell_id)), static_cast<std::uint64_t>(run));
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  jobs = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

std::vector<double> pow2_grid(int lo, int hi, int step) {
  if (step <= 0) throw DomainError("pow2_grid: step must be positive");
  std::vector<double> out;
  for (int e = lo; e <= hi; e += step) out.push_back(std::ldexp(1.0, e));
  return out;
}

std::string format_number(double x) {
  if (x > 0.0) {
    int e;
    double m = std::frexp(x, &e);
    if (m == 0.5 && e - 1 >= -60 && e - 1 <= 60 && std::abs(e - 1) >= 2)
      return "2^" + std::to_string(e - 1);
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  out.n = static_cast<int>(xs.size());
  if (xs.empty()) return out;
  double s = 0.0;
  for (double x : xs) s += x;
  out.mean = s / out.n;
  if (out.n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / (out.n - 1) / out.n);
  }
  return out;
}

double tail_mean(const std::vector<double>& xs, std::size_t window) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t w = std::min(window, xs.size());
  double s = 0.0;
  for (std::size_t i = xs.size() - w; i < xs.size(); ++i) s += xs[i];
  return s / double(w);
}

double step_window_mean(const std::vector<double>& returns, const std::vector<long>& end_step,
                        long from, long to, bool last_truncated) {
  double num = 0.0, den = 0.0;
  long start = 0;
  std::size_t n = returns.size() - (last_truncated && !returns.empty() ? 1 : 0);
  for (std::size_t i = 0; i < n; ++i) {
    long lo = std::max(start, from), hi = std::min(end_step[i], to);
    if (hi > lo) {
      num += returns[i] * double(hi - lo);
      den += double(hi - lo);
    }
    start = end_step[i];
  }
  return den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
}

namespace {

void put(std::ostream& o, double v) {
  if (std::isnan(v)) return;
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  o.write(buf, res.ptr - buf);
}

double parse_cell(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc()) throw ConfigError("run csv: bad number '" + s + "'");
  return v;
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_run_csv(const fs::path& path, const RunSeries& s, bool timing) {
  std::ostringstream o;
  o << "step_or_episode,return_or_J,entropy,baseline_value,wall_ms\n";
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    put(o, s.x[i]);
    o << ',';
    put(o, s.y[i]);
    o << ',';
    if (i < s.entropy.size()) put(o, s.entropy[i]);
    o << ',';
    if (i < s.baseline.size()) put(o, s.baseline[i]);
    o << ',';
    if (timing && i < s.wall_ms.size()) put(o, s.wall_ms[i]);
    o << '\n';
  }
  write_file_atomic(path, o.str());
}

RunSeries read_run_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "step_or_episode,return_or_J,entropy,baseline_value,wall_ms")
    throw ConfigError("run csv: unexpected header in " + path.string());
  RunSeries s;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        f.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    f.push_back(cur);
    if (f.size() != 5) throw ConfigError("run csv: expected 5 fields in " + path.string());
    s.x.push_back(parse_cell(f[0]));
    s.y.push_back(parse_cell(f[1]));
    s.entropy.push_back(parse_cell(f[2]));
    s.baseline.push_back(parse_cell(f[3]));
    s.wall_ms.push_back(parse_cell(f[4]));
  }
  return s;
}

std::string CellParams::id() const {
  std::string out;
  auto add = [&](const char* k, const std::string& v) {
    if (v.empty()) return;
    if (!out.empty()) out += '_';
    out += k;
    out += '=';
    out += v;
  };
  add("init", init);
  add("est", estimator);
  add("bl", baseline);
  add("b0", b0);
  add("tau", tau);
  add("p", p);
  add("noise", grad_noise);
  add("a", alpha);
  add("b", beta);
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void stamp_wall(RunSeries& s, Clock::time_point t0) {
  s.wall_ms.assign(s.x.size(), std::numeric_limits<double>::quiet_NaN());
  if (!s.wall_ms.empty()) s.wall_ms.back() = elapsed_ms(t0);
}

}  // namespace

RunSeries run_bandit(const BanditTask& task, const BanditCell& cell, int steps, std::uint64_t seed) {
  auto t0 = Clock::now();
  RngStream rng(seed, 0);
  BanditRunLog log = gradient_bandit_run(task, cell.agent, cell.init, steps, rng);
  RunSeries s;
  for (int t = 0; t < steps; ++t) s.x.push_back(t + 1);
  s.y = std::move(log.J);
  s.entropy = std::move(log.entropy);
  s.baseline = std::move(log.b);
  s.final_metric = tail_mean(s.y, kBanditWindow);
  stamp_wall(s, t0);
  return s;
}

RunSeries run_chain(const ChainCell& cell, int episodes, std::uint64_t seed) {
  auto t0 = Clock::now();
  RngStream rng(seed, 0);
  int k = cell.env == "hard_chain" ? 4 : 2;
  if (cell.env != "chain" && cell.env != "hard_chain")
    throw UnsupportedError("chain sweep supports chain and hard_chain, not " + cell.env);
  if (cell.init.size() != k) throw DimensionError("chain init must have one entry per action");
  ChainEnv env(cell.noise_std, k);
  TabularMdpModel model = chain_model(k);
  TabularSoftmaxPolicy policy(ChainEnv::kStates, k);
  for (int st = 0; st < ChainEnv::kStates; ++st) policy.set_row(st, cell.init);
  EpisodeLog log;
  if (cell.agent.estimator == EstimatorKind::Expected) {
    log = chain_expected_pg_run(model, policy, cell.agent, episodes, rng);
  } else {
    CriticState critic(ChainEnv::kStates, cell.agent.baseline.beta, cell.agent.baseline.init);
    log = reinforce_run(env, policy, FeatureMap::one_hot(ChainEnv::kStates), critic, cell.agent,
                        episodes, rng, &model);
  }
  RunSeries s;
  for (int e = 0; e < episodes; ++e) s.x.push_back(e + 1);
  s.y = cell.exact_metric ? log.exact_J : log.returns;
  s.entropy = std::move(log.entropy);
  s.baseline = std::move(log.baseline);
  s.final_metric = tail_mean(s.y, kChainWindow);
  stamp_wall(s, t0);
  return s;
}

RunSeries run_ac(const AcCell& cell, long total_steps, std::uint64_t seed) {
  auto t0 = Clock::now();
  RngStream rng(seed, 0);
  std::unique_ptr<Environment> env;
  if (cell.env == "dotreacher") {
    if (cell.switch_at >= 0) {
      env = std::make_unique<NonStationaryEnv>(
          std::make_unique<DotReacherEnv>(Eigen::Vector2d(-1, -1)),
          GoalMove{cell.switch_at, Eigen::Vector2d(1, 1)});
    } else {
      env = std::make_unique<DotReacherEnv>();
    }
  } else if (cell.env == "mountaincar" || cell.env == "acrobot") {
    env = make_environment(cell.env);
    if (cell.switch_at >= 0)
      env = std::make_unique<NonStationaryEnv>(std::move(env), ActionSwap{cell.switch_at, 0, 2});
  } else {
    throw UnsupportedError("actor-critic sweep supports mountaincar, acrobot and dotreacher, not " +
                           cell.env);
  }
  RngStream coder_rng = rng.split(77);
  TileCoder coder = make_coder(env->spec().bounds, cell.tiles, cell.tilings, coder_rng);
  FeatureMap phi = FeatureMap::tiles(coder);
  std::unique_ptr<Policy> policy;
  if (cell.policy == "escort") {
    auto esc = std::make_unique<EscortPolicy>(coder.dim(), env->spec().num_actions, cell.escort_p);
    esc->init_uniform(coder.bias_index(), 1.0 / coder.normalizer());
    policy = std::move(esc);
  } else if (cell.policy == "softmax") {
    policy = std::make_unique<LinearSoftmaxPolicy>(coder.dim(), env->spec().num_actions);
  } else {
    throw UnsupportedError("unknown policy kind " + cell.policy);
  }
  CriticState critic(coder.dim(), cell.agent.baseline.beta, cell.agent.baseline.init);
  EpisodeLog log = online_ac_run(*env, *policy, phi, critic, cell.agent, total_steps, rng);
  RunSeries s;
  for (long e : log.end_step) s.x.push_back(double(e));
  s.y = log.returns;
  s.entropy = log.entropy;
  s.baseline = log.baseline;
  s.last_truncated = log.last_truncated;
  s.final_metric = step_window_mean(log.returns, log.end_step, total_steps - kAcWindow,
                                    total_steps, log.last_truncated);
  if (cell.switch_at > 0)
    s.pre_metric = step_window_mean(log.returns, log.end_step, cell.switch_at - kAcWindow,
                                    cell.switch_at, false);
  stamp_wall(s, t0);
  return s;
}

EntropyTrace entropy_after_switch(const RunSeries& s, long switch_at, std::size_t count) {
  EntropyTrace tr;
  std::vector<double> pre;
  double start = 0.0;
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    if (s.x[i] <= switch_at) pre.push_back(s.entropy[i]);
    if (start >= switch_at && tr.post.size() < count) tr.post.push_back(s.entropy[i]);
    start = s.x[i];
  }
  tr.pre = tail_mean(pre, 10);
  return tr;
}

std::size_t best_cell(const std::vector<CellSummary>& cells,
                      const std::function<bool(const CellSummary&)>& include) {
  std::size_t best = cells.size();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    if (include && !include(c)) continue;
    if (std::isnan(c.final_metric.mean)) continue;
    if (best == cells.size()) {
      best = i;
      continue;
    }
    const auto& b = cells[best];
    if (c.final_metric.mean > b.final_metric.mean ||
        (c.final_metric.mean == b.final_metric.mean && c.alpha < b.alpha))
      best = i;
  }
  return best;
}

std::string summary_csv(const std::vector<CellSummary>& cells) {
  std::ostringstream o;
  o << "cell,estimator,baseline,b0,init,alpha,beta,tau,p,grad_noise,n_runs,window,final_mean,"
       "final_se,pre_mean,pre_se\n";
  for (const auto& c : cells) {
    const auto& p = c.params;
    o << c.id << ',' << p.estimator << ',' << p.baseline << ',' << p.b0 << ',' << p.init << ','
      << p.alpha << ',' << p.beta << ',' << p.tau << ',' << p.p << ',' << p.grad_noise << ','
      << c.final_metric.n << ',' << c.window << ',';
    put(o, c.final_metric.mean);
    o << ',';
    put(o, c.final_metric.se);
    o << ',';
    if (c.has_pre) put(o, c.pre_metric.mean);
    o << ',';
    if (c.has_pre) put(o, c.pre_metric.se);
    o << '\n';
  }
  return o.str();
}

std::vector<double> kl_series(const BanditTask& task, const PreferenceVector& theta0, double b,
                              double alpha, int steps) {
  auto fp = biased_fixed_point(task, b);
  auto* interior = std::get_if<InteriorFixedPoint>(&fp);
  if (!interior) throw DomainError("kl_series: baseline has no interior fixed point");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  PreferenceVector th = theta0;
  out.push_back(kl_divergence_to_softmax(interior->pi, th));
  for (int t = 0; t < steps; ++t) {
    th = biased_update_step(th, task, b, alpha);
    out.push_back(kl_divergence_to_softmax(interior->pi, th));
  }
  return out;
}

std::vector<TreeBenchRow> tree_bench(const std::vector<int>& ns, int ops, std::uint64_t seed) {
  std::vector<TreeBenchRow> rows;
  for (int n : ns) {
    RngStream rng(seed, static_cast<std::uint64_t>(n));
    Vec prefs(n);
    for (int i = 0; i < n; ++i) prefs[i] = rng.normal();
    std::vector<int> ids(n);
    for (int i = 0; i < n; ++i) ids[i] = i;
    SamplingTree tree = SamplingTree::build(ids, prefs, rng);
    LinearScanSampler lin(prefs);

    std::vector<std::pair<int, double>> updates(ops);
    for (auto& u : updates) u = {static_cast<int>(rng() % n), rng.normal()};

    int max_up = 0, max_sample = 0;
    auto t0 = Clock::now();
    for (auto [a, th] : updates) {
      tree.update_preference(a, th);
      max_up = std::max(max_up, tree.last_update_visits());
    }
    double up_ns = elapsed_ms(t0) * 1e6 / ops;
    RngStream srng = rng.split(1);
    long sink = 0;
    t0 = Clock::now();
    for (int i = 0; i < ops; ++i) {
      sink += tree.sample(srng);
      max_sample = std::max(max_sample, tree.last_sample_visits());
    }
    double sa_ns = elapsed_ms(t0) * 1e6 / ops;
    rows.push_back({n, "update", "tree", max_up, up_ns});
    rows.push_back({n, "sample", "tree", max_sample, sa_ns});

    // the linear baseline is O(n) per op; cap its work on large n
    int lin_ops = std::max(1, std::min(ops, 20'000'000 / std::max(n, 1)));
    t0 = Clock::now();
    for (int i = 0; i < lin_ops; ++i) lin.update_preference(updates[i].first, updates[i].second);
    double lup_ns = elapsed_ms(t0) * 1e6 / lin_ops;
    t0 = Clock::now();
    for (int i = 0; i < lin_ops; ++i) sink += lin.sample(srng);
    double lsa_ns = elapsed_ms(t0) * 1e6 / lin_ops;
    rows.push_back({n, "update", "linear-scan-rebuild", -1, lup_ns});
    rows.push_back({n, "sample", "linear-scan-rebuild", -1, lsa_ns});
    if (sink == -1) rows.clear();  // keeps the sampling loops observable
  }
  return rows;
}

}  // namespace altgrad
