#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace altgrad::cli {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

void check_keys(const YAML::Node& n, const std::string& path, std::set<std::string> allowed) {
  if (!n.IsMap()) fail(path.empty() ? "<root>" : path, "expected a mapping");
  for (const auto& kv : n) {
    auto k = kv.first.as<std::string>();
    if (!allowed.count(k)) fail(join(path, k), "unknown field");
  }
}

double as_double(const YAML::Node& n, const std::string& path) {
  if (!n.IsScalar()) fail(path, "expected a number");
  const std::string s = n.Scalar();
  if (s.rfind("2^", 0) == 0) {
    try {
      std::size_t used = 0;
      int e = std::stoi(s.substr(2), &used);
      if (used == s.size() - 2) return std::ldexp(1.0, e);
    } catch (const std::exception&) {
    }
    fail(path, "bad power of two '" + s + "'");
  }
  try {
    return n.as<double>();
  } catch (const YAML::Exception&) {
    fail(path, "expected a number, got '" + s + "'");
  }
}

long as_long(const YAML::Node& n, const std::string& path, long lo) {
  double x = as_double(n, path);
  if (x != std::floor(x) || x < double(lo) || x > 9e15)
    fail(path, "expected an integer >= " + std::to_string(lo));
  return static_cast<long>(x);
}

std::uint64_t as_u64(const YAML::Node& n, const std::string& path) {
  try {
    return n.as<std::uint64_t>();
  } catch (const YAML::Exception&) {
    fail(path, "expected an unsigned 64-bit integer");
  }
}

std::string as_string(const YAML::Node& n, const std::string& path) {
  if (!n.IsScalar()) fail(path, "expected a string");
  return n.Scalar();
}

bool as_bool(const YAML::Node& n, const std::string& path) {
  try {
    return n.as<bool>();
  } catch (const YAML::Exception&) {
    fail(path, "expected true or false");
  }
}

Vec as_vec(const YAML::Node& n, const std::string& path) {
  if (!n.IsSequence() || n.size() == 0) fail(path, "expected a non-empty list of numbers");
  Vec v(n.size());
  for (std::size_t i = 0; i < n.size(); ++i) v[i] = as_double(n[i], index(path, i));
  return v;
}

YAML::Node required(const YAML::Node& root, const std::string& path, const std::string& key) {
  YAML::Node n = root[key];
  if (!n) fail(join(path, key), "missing required field");
  return n;
}

// scalar, list, or {pow2: [lo, hi]} / {pow2: [lo, hi, step]}
Axis as_axis(const YAML::Node& n, const std::string& path) {
  Axis a;
  if (n.IsScalar()) {
    a.values.push_back(as_double(n, path));
  } else if (n.IsSequence()) {
    if (n.size() == 0) fail(path, "empty grid");
    for (std::size_t i = 0; i < n.size(); ++i) a.values.push_back(as_double(n[i], index(path, i)));
  } else if (n.IsMap()) {
    check_keys(n, path, {"pow2"});
    const std::string pp = join(path, "pow2");
    YAML::Node r = required(n, path, "pow2");
    if (!r.IsSequence() || (r.size() != 2 && r.size() != 3))
      fail(pp, "expected [lo, hi] or [lo, hi, step]");
    int lo = static_cast<int>(as_long(r[0], index(pp, 0), -1000));
    int hi = static_cast<int>(as_long(r[1], index(pp, 1), -1000));
    int step = r.size() == 3 ? static_cast<int>(as_long(r[2], index(pp, 2), 1)) : 1;
    if (hi < lo) fail(pp, "hi < lo");
    a.values = pow2_grid(lo, hi, step);
  } else {
    fail(path, "expected a number, a list, or {pow2: [lo, hi]}");
  }
  for (double v : a.values) a.labels.push_back(format_number(v));
  std::set<std::string> seen(a.labels.begin(), a.labels.end());
  if (seen.size() != a.labels.size()) fail(path, "duplicate grid values");
  return a;
}

Axis axis_or(const YAML::Node& root, const std::string& key, double dflt) {
  if (root[key]) return as_axis(root[key], key);
  return Axis{{dflt}, {format_number(dflt)}};
}

std::string experiment_name(const YAML::Node& root) {
  std::string e = as_string(required(root, "", "experiment"), "experiment");
  bool ok = !e.empty() && e != "." && e != ".." &&
            std::all_of(e.begin(), e.end(), [](unsigned char c) {
              return std::isalnum(c) || c == '_' || c == '-' || c == '.';
            });
  if (!ok) fail("experiment", "use letters, digits, '_', '-' or '.'");
  return e;
}

BanditTask parse_task(const YAML::Node& n, const std::string& path) {
  check_keys(n, path, {"rewards", "noise"});
  Vec r = as_vec(required(n, path, "rewards"), join(path, "rewards"));
  YAML::Node noise = n["noise"];
  if (noise && noise.IsSequence()) {
    Vec s = as_vec(noise, join(path, "noise"));
    if (s.size() != r.size()) fail(join(path, "noise"), "one sigma per action expected");
    if ((s.array() < 0).any()) fail(join(path, "noise"), "sigma must be >= 0");
    return BanditTask(r, s);
  }
  double sigma = noise ? as_double(noise, join(path, "noise")) : 0.0;
  if (sigma < 0) fail(join(path, "noise"), "sigma must be >= 0");
  return BanditTask(r, sigma);
}

std::vector<AgentSpec> parse_agents(const YAML::Node& n, bool allow_expected) {
  if (!n.IsSequence() || n.size() == 0) fail("agents", "expected a non-empty list");
  std::vector<AgentSpec> out;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const std::string path = index("agents", i);
    check_keys(n[i], path, {"estimator", "baseline"});
    std::string est = as_string(required(n[i], path, "estimator"), join(path, "estimator"));
    std::transform(est.begin(), est.end(), est.begin(), ::toupper);
    AgentSpec a{};
    try {
      a.estimator = estimator_from_string(est);
    } catch (const ConfigError& e) {
      fail(join(path, "estimator"), e.what());
    }
    if (a.estimator == EstimatorKind::Expected && !allow_expected)
      fail(join(path, "estimator"), "EXPECTED is not available in this sweep");
    std::string bl = n[i]["baseline"]
                         ? as_string(n[i]["baseline"], join(path, "baseline"))
                         : (a.estimator == EstimatorKind::Expected ? "true" : "learned");
    if (bl == "true") a.baseline = BaselineMode::TrueValue;
    else if (bl == "learned") a.baseline = BaselineMode::Learned;
    else if (bl == "frozen") a.baseline = BaselineMode::Frozen;
    else fail(join(path, "baseline"), "expected true, learned or frozen");
    out.push_back(a);
  }
  return out;
}

std::vector<std::pair<std::string, Vec>> parse_inits(const YAML::Node& root, int k) {
  std::vector<std::pair<std::string, Vec>> out;
  YAML::Node n = root["inits"];
  if (!n) {
    out.emplace_back("uniform", Vec::Zero(k));
    return out;
  }
  if (!n.IsMap() || n.size() == 0) fail("inits", "expected a mapping of name to preference list");
  for (const auto& kv : n) {
    std::string name = kv.first.as<std::string>();
    const std::string path = join("inits", name);
    if (name.empty() || name.find_first_of("/_=,") != std::string::npos)
      fail(path, "init names may not contain '/', '_', '=' or ','");
    Vec v = as_vec(kv.second, path);
    if (v.size() != k) fail(path, "expected " + std::to_string(k) + " entries");
    out.emplace_back(name, v);
  }
  return out;
}

}  // namespace

SweepConfig parse_sweep(const YAML::Node& root, SweepKind kind) {
  std::set<std::string> keys = {"experiment", "runs", "seed", "agents", "alpha", "beta",
                                "b0",         "tau",  "grad_noise"};
  switch (kind) {
    case SweepKind::Bandit: keys.insert({"steps", "task", "inits"}); break;
    case SweepKind::Chain: keys.insert({"episodes", "env", "inits", "exact_metric"}); break;
    case SweepKind::Ac: keys.insert({"steps", "env", "policy", "p", "tiles", "tilings"}); break;
  }
  check_keys(root, "", keys);

  SweepConfig c;
  c.kind = kind;
  c.experiment = experiment_name(root);
  c.runs = static_cast<int>(as_long(required(root, "", "runs"), "runs", 1));
  c.seed = root["seed"] ? as_u64(root["seed"], "seed") : 0;
  const char* len_key = kind == SweepKind::Chain ? "episodes" : "steps";
  c.steps = as_long(required(root, "", len_key), len_key, 1);
  c.agents = parse_agents(required(root, "", "agents"), kind != SweepKind::Ac);
  c.alpha = as_axis(required(root, "", "alpha"), "alpha");
  bool any_learned = std::any_of(c.agents.begin(), c.agents.end(), [](const AgentSpec& a) {
    return a.baseline == BaselineMode::Learned;
  });
  if (any_learned) c.beta = as_axis(required(root, "", "beta"), "beta");
  c.b0 = axis_or(root, "b0", 0.0);
  c.tau = axis_or(root, "tau", 0.0);
  c.grad_noise = axis_or(root, "grad_noise", 0.0);
  for (double a : c.alpha.values)
    if (!(a > 0)) fail("alpha", "step sizes must be > 0");
  for (double b : c.beta.values)
    if (!(b > 0 && b <= 1)) fail("beta", "baseline step sizes must be in (0, 1]");
  for (double s : c.grad_noise.values)
    if (s < 0) fail("grad_noise", "must be >= 0");

  if (kind == SweepKind::Bandit) {
    c.task = parse_task(required(root, "", "task"), "task");
    c.inits = parse_inits(root, c.task.num_actions());
  } else {
    YAML::Node env = required(root, "", "env");
    check_keys(env, "env", kind == SweepKind::Chain ? std::set<std::string>{"name", "noise"}
                                                    : std::set<std::string>{"name", "switch_at"});
    c.env = as_string(required(env, "env", "name"), "env.name");
    if (kind == SweepKind::Chain) {
      if (c.env != "chain" && c.env != "hard_chain") fail("env.name", "expected chain or hard_chain");
      if (env["noise"]) c.env_noise = as_double(env["noise"], "env.noise");
      if (c.env_noise < 0) fail("env.noise", "must be >= 0");
      if (root["exact_metric"]) c.exact_metric = as_bool(root["exact_metric"], "exact_metric");
      c.inits = parse_inits(root, c.env == "hard_chain" ? 4 : 2);
    } else {
      if (c.env != "mountaincar" && c.env != "acrobot" && c.env != "dotreacher")
        fail("env.name", "expected mountaincar, acrobot or dotreacher");
      if (env["switch_at"]) c.switch_at = as_long(env["switch_at"], "env.switch_at", 0);
      if (root["policy"]) c.policy = as_string(root["policy"], "policy");
      if (c.policy != "softmax" && c.policy != "escort") fail("policy", "expected softmax or escort");
      if (c.policy == "escort") {
        c.p = axis_or(root, "p", 2.0);
        for (double p : c.p.values)
          if (!(p > 0)) fail("p", "escort exponent must be > 0");
      } else if (root["p"]) {
        fail("p", "only used with policy: escort");
      }
      if (root["tiles"]) c.tiles = static_cast<int>(as_long(root["tiles"], "tiles", 1));
      if (root["tilings"]) c.tilings = static_cast<int>(as_long(root["tilings"], "tilings", 1));
      for (const auto& a : c.agents)
        if (a.baseline == BaselineMode::TrueValue)
          fail("agents", "actor-critic agents need a learned or frozen baseline");
    }
  }
  return c;
}

namespace {

// Calls fn(params, agent_config, init) for every grid point in a fixed order.
template <class Fn>
void for_each_cell(const SweepConfig& c, Fn fn) {
  std::vector<std::pair<std::string, Vec>> inits = c.inits;
  if (inits.empty()) inits.emplace_back("", Vec());
  const Axis none{{0.0}, {""}};
  const Axis& p_axis = c.p.values.empty() ? none : c.p;
  for (const auto& [init_name, init] : inits) {
    for (const auto& ag : c.agents) {
      const bool learned = ag.baseline == BaselineMode::Learned;
      const Axis& beta = learned ? c.beta : none;
      for (std::size_t ib = 0; ib < c.b0.values.size(); ++ib)
        for (std::size_t it = 0; it < c.tau.values.size(); ++it)
          for (std::size_t ip = 0; ip < p_axis.values.size(); ++ip)
            for (std::size_t in = 0; in < c.grad_noise.values.size(); ++in)
              for (std::size_t ie = 0; ie < beta.values.size(); ++ie)
                for (std::size_t ia = 0; ia < c.alpha.values.size(); ++ia) {
                  CellParams prm;
                  prm.init = init_name;
                  prm.estimator = to_string(ag.estimator);
                  prm.baseline = to_string(ag.baseline);
                  prm.b0 = c.b0.labels[ib];
                  prm.tau = c.tau.labels[it];
                  prm.p = p_axis.labels[ip];
                  prm.grad_noise = c.grad_noise.labels[in];
                  prm.beta = beta.labels[ie];
                  prm.alpha = c.alpha.labels[ia];
                  AgentConfig cfg;
                  cfg.estimator = ag.estimator;
                  cfg.alpha = c.alpha.values[ia];
                  cfg.tau = c.tau.values[it];
                  cfg.grad_noise_std = c.grad_noise.values[in];
                  cfg.baseline = {ag.baseline, c.b0.values[ib], learned ? beta.values[ie] : 0.1};
                  fn(prm, cfg, init, p_axis.values[ip]);
                }
    }
  }
}

}  // namespace

std::vector<BanditCell> bandit_cells(const SweepConfig& c) {
  std::vector<BanditCell> out;
  for_each_cell(c, [&](const CellParams& prm, const AgentConfig& cfg, const Vec& init, double) {
    BanditCell cell;
    cell.params = prm;
    cell.id = prm.id();
    cell.init = init;
    cell.agent = cfg;
    out.push_back(cell);
  });
  return out;
}

std::vector<ChainCell> chain_cells(const SweepConfig& c) {
  std::vector<ChainCell> out;
  for_each_cell(c, [&](const CellParams& prm, const AgentConfig& cfg, const Vec& init, double) {
    ChainCell cell;
    cell.params = prm;
    cell.id = prm.id();
    cell.env = c.env;
    cell.noise_std = c.env_noise;
    cell.init = init;
    cell.agent = cfg;
    cell.exact_metric = c.exact_metric;
    out.push_back(cell);
  });
  return out;
}

std::vector<AcCell> ac_cells(const SweepConfig& c) {
  std::vector<AcCell> out;
  for_each_cell(c, [&](const CellParams& prm, const AgentConfig& cfg, const Vec&, double p) {
    AcCell cell;
    cell.params = prm;
    cell.id = prm.id();
    cell.env = c.env;
    cell.switch_at = c.switch_at;
    cell.policy = c.policy;
    if (c.policy == "escort") cell.escort_p = p;
    cell.tiles = c.tiles;
    cell.tilings = c.tilings;
    cell.agent = cfg;
    out.push_back(cell);
  });
  return out;
}

FixedPointConfig parse_fixed_point(const YAML::Node& root) {
  check_keys(root, "", {"experiment", "task", "theta0", "steps", "cases", "inequality"});
  FixedPointConfig c;
  c.experiment = experiment_name(root);
  c.task = parse_task(required(root, "", "task"), "task");
  const int k = c.task.num_actions();
  c.theta0 = root["theta0"] ? as_vec(root["theta0"], "theta0") : Vec(Vec::Zero(k));
  if (c.theta0.size() != k) fail("theta0", "expected " + std::to_string(k) + " entries");
  if (root["steps"]) c.steps = static_cast<int>(as_long(root["steps"], "steps", 1));
  YAML::Node cases = required(root, "", "cases");
  if (!cases.IsSequence() || cases.size() == 0) fail("cases", "expected a non-empty list");
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const std::string path = index("cases", i);
    check_keys(cases[i], path, {"name", "b", "alpha"});
    FixedPointCase fc;
    fc.name = as_string(required(cases[i], path, "name"), join(path, "name"));
    fc.b = as_double(required(cases[i], path, "b"), join(path, "b"));
    YAML::Node a = required(cases[i], path, "alpha");
    if (a.IsScalar() && a.Scalar() == "half_bound") {
      fc.half_bound = true;
      if (fc.b <= c.task.rewards.maxCoeff())
        fail(join(path, "alpha"), "half_bound needs b above every reward");
    } else {
      fc.alpha = as_double(a, join(path, "alpha"));
      if (!(fc.alpha > 0)) fail(join(path, "alpha"), "must be > 0 or half_bound");
    }
    c.cases.push_back(fc);
  }
  if (YAML::Node q = root["inequality"]) {
    check_keys(q, "inequality", {"pi", "b", "alpha"});
    c.has_inequality = true;
    c.ineq_pi = as_vec(required(q, "inequality", "pi"), "inequality.pi");
    if (c.ineq_pi.size() != k) fail("inequality.pi", "expected " + std::to_string(k) + " entries");
    if ((c.ineq_pi.array() <= 0).any() || std::abs(c.ineq_pi.sum() - 1) > 1e-9)
      fail("inequality.pi", "expected a strictly positive distribution");
    c.ineq_b = as_axis(required(q, "inequality", "b"), "inequality.b");
    c.ineq_alpha = as_axis(required(q, "inequality", "alpha"), "inequality.alpha");
  }
  return c;
}

SimplexConfig parse_simplex(const YAML::Node& root) {
  check_keys(root, "", {"experiment", "task", "estimator", "baseline", "alpha", "noise",
                        "resolution"});
  SimplexConfig c;
  c.experiment = experiment_name(root);
  c.task = parse_task(required(root, "", "task"), "task");
  if (c.task.num_actions() != 3) fail("task.rewards", "simplex fields need 3 actions");
  std::string est = as_string(required(root, "", "estimator"), "estimator");
  std::transform(est.begin(), est.end(), est.begin(), ::toupper);
  try {
    c.field.estimator = estimator_from_string(est);
  } catch (const ConfigError& e) {
    fail("estimator", e.what());
  }
  YAML::Node bl = required(root, "", "baseline");
  if (bl.IsScalar() && bl.Scalar() == "true") {
    c.field.baseline = FieldBaseline::TrueValue;
  } else if (bl.IsMap()) {
    check_keys(bl, "baseline", {"fixed"});
    c.field.baseline = FieldBaseline::Fixed;
    c.field.fixed_b = as_double(required(bl, "baseline", "fixed"), "baseline.fixed");
  } else {
    fail("baseline", "expected true or {fixed: b}");
  }
  if (root["alpha"]) c.field.alpha = as_double(root["alpha"], "alpha");
  if (root["noise"]) c.field.noise = as_double(root["noise"], "noise");
  if (root["resolution"])
    c.field.resolution = static_cast<int>(as_long(root["resolution"], "resolution", 1));
  if (!(c.field.alpha > 0)) fail("alpha", "must be > 0");
  return c;
}

TreeBenchConfig parse_tree_bench(const YAML::Node& root) {
  TreeBenchConfig c;
  if (!root || root.IsNull()) {
    for (int d = 4; d <= 16; ++d) c.ns.push_back(1 << d);
    return c;
  }
  check_keys(root, "", {"experiment", "sizes", "ops", "seed"});
  if (root["experiment"]) c.experiment = experiment_name(root);
  if (root["sizes"]) {
    Axis a = as_axis(root["sizes"], "sizes");
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      double v = a.values[i];
      if (v != std::floor(v) || v < 1 || v > 1e8)
        fail(index("sizes", i), "expected an integer in [1, 1e8]");
      c.ns.push_back(static_cast<int>(v));
    }
  } else {
    for (int d = 4; d <= 16; ++d) c.ns.push_back(1 << d);
  }
  if (root["ops"]) c.ops = static_cast<int>(as_long(root["ops"], "ops", 1));
  if (root["seed"]) c.seed = as_u64(root["seed"], "seed");
  return c;
}

}  // namespace altgrad::cli
