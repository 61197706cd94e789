#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "altgrad/agents.hpp"
#include "altgrad/bandit.hpp"

namespace altgrad {

// ---- plumbing

std::uint64_t run_seed(std::uint64_t base, const std::string& cell_id, int run);

// Runs fn(0..n-1) on `jobs` threads (0 = hardware concurrency). Rethrows the first failure.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

// {2^lo, 2^(lo+step), ..., 2^hi}
std::vector<double> pow2_grid(int lo, int hi, int step = 1);
std::string format_number(double x);  // "2^-3" for powers of two, shortest round-trip otherwise

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  int n = 0;
};
MeanSe mean_se(const std::vector<double>& xs);

double tail_mean(const std::vector<double>& xs, std::size_t window);

// Step-weighted mean return over [from, to): every step of a completed episode carries that
// episode's return. Episodes cut by the step budget are skipped.
double step_window_mean(const std::vector<double>& returns, const std::vector<long>& end_step,
                        long from, long to, bool last_truncated);

// ---- per-run series (one CSV per run)

struct RunSeries {
  std::vector<double> x;  // step, episode, or global end step
  std::vector<double> y;  // exact J or return
  std::vector<double> entropy;
  std::vector<double> baseline;
  std::vector<double> wall_ms;
  bool last_truncated = false;
  double final_metric = 0.0;
  double pre_metric = std::numeric_limits<double>::quiet_NaN();
};

void write_run_csv(const std::filesystem::path& path, const RunSeries& s, bool timing);
RunSeries read_run_csv(const std::filesystem::path& path);

// write to a sibling temporary, then rename over the target
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

// ---- cells

struct CellParams {
  std::string estimator;
  std::string baseline;
  std::string b0;
  std::string init;
  std::string alpha;
  std::string beta;
  std::string tau;
  std::string p;
  std::string grad_noise;
  std::string id() const;
};

struct BanditCell {
  std::string id;
  CellParams params;
  Vec init;
  AgentConfig agent;
};

static constexpr std::size_t kBanditWindow = 50;
RunSeries run_bandit(const BanditTask& task, const BanditCell& cell, int steps, std::uint64_t seed);

struct ChainCell {
  std::string id;
  CellParams params;
  std::string env = "chain";  // chain | hard_chain
  double noise_std = 1.0;
  Vec init;  // per-action preference applied in every state
  AgentConfig agent;
  bool exact_metric = false;  // log exact J instead of the sampled return
};

static constexpr std::size_t kChainWindow = 10;
RunSeries run_chain(const ChainCell& cell, int episodes, std::uint64_t seed);

struct AcCell {
  std::string id;
  CellParams params;
  std::string env = "mountaincar";  // mountaincar | acrobot | dotreacher
  long switch_at = -1;              // action swap / goal move step; -1 keeps it stationary
  std::string policy = "softmax";   // softmax | escort
  double escort_p = 2.0;
  int tiles = 4;
  int tilings = 8;
  AgentConfig agent;
};

static constexpr long kAcWindow = 5000;
RunSeries run_ac(const AcCell& cell, long total_steps, std::uint64_t seed);

// Per-run summary of the post-switch entropy transient; see acceptance tests.
struct EntropyTrace {
  double pre = 0.0;              // mean over the last 10 episodes before the switch
  std::vector<double> post;      // first episodes starting at or after the switch
};
EntropyTrace entropy_after_switch(const RunSeries& s, long switch_at, std::size_t count);

struct CellSummary {
  std::string id;
  CellParams params;
  double alpha = 0.0;
  std::string window;
  MeanSe final_metric;
  MeanSe pre_metric;
  bool has_pre = false;
};

// best cell by final mean; ties toward smaller alpha
std::size_t best_cell(const std::vector<CellSummary>& cells,
                      const std::function<bool(const CellSummary&)>& include = nullptr);

std::string summary_csv(const std::vector<CellSummary>& cells);

// ---- analysis sweeps

// KL(pi* || pi_t) for t = 0..steps under the expected biased update with baseline b
std::vector<double> kl_series(const BanditTask& task, const PreferenceVector& theta0, double b,
                              double alpha, int steps);

struct TreeBenchRow {
  int n;
  std::string op;       // sample | update
  std::string sampler;  // tree | linear-scan-rebuild
  int max_visits;       // -1 for the linear baseline
  double ns_per_op;
};
std::vector<TreeBenchRow> tree_bench(const std::vector<int>& ns, int ops, std::uint64_t seed);

}  // namespace altgrad
