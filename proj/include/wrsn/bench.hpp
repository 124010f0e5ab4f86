#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "wrsn/baselines.hpp"
#include "wrsn/generator.hpp"
#include "wrsn/network.hpp"
#include "wrsn/sim.hpp"

namespace wrsn {

inline constexpr int kReportSchemaVersion = 1;

/// One entry per decision: a charging action or an idle wait (action -1).
struct ActionRecord {
  int action = 0;
  double start = 0.0;          // s
  double end = 0.0;            // s
  double travel_distance = 0.0;
  double charge_time = 0.0;
  double energy_delivered = 0.0;
  double mc_energy_used = 0.0;
  double mc_energy_after = 0.0;
  double dissipated = 0.0;     // sensor energy spent during this entry, J
  std::vector<int> depleted;   // sensors that hit 0 J for the first time
  std::string cause;           // termination cause after this entry, "none" while running
};

struct EpisodeResult {
  int instance = 0;
  int num_sensors = 0;
  double lifetime = 0.0;        // s
  int actions = 0;              // charging actions (waits excluded)
  bool reached_cap = false;
  int node_failures = 0;        // distinct sensors that ever hit 0 J
  double aggregated_ecr = 0.0;  // total sensor dissipation / lifetime, W
  bool stranded = false;        // MC ran dry away from the depot
  Termination cause = Termination::kNone;
  std::vector<ActionRecord> log;  // filled only when requested
};

/// Plays one episode to termination. `env_seed` drives the traffic draws and
/// `policy_seed` the policy's own randomness.
EpisodeResult run_episode(const NetworkInstance& instance, const McParams& mc,
                          const SimConfig& sim, ChargingPolicy& policy,
                          std::uint64_t env_seed, std::uint64_t policy_seed,
                          bool keep_log = false);

/// Totals recomputed from an action log; the report must agree with them.
EpisodeResult summarize_log(const std::vector<ActionRecord>& log, int num_sensors);

using PolicyFactory = std::function<std::unique_ptr<ChargingPolicy>()>;

struct EvalOptions {
  std::uint64_t seed = 1;  // master seed; per-instance seeds derive from it
  int threads = 1;
  bool keep_logs = false;
};

/// Seeds used for instance `index`: identical for every policy so that
/// comparisons are paired.
std::uint64_t episode_env_seed(std::uint64_t master, std::size_t index);
std::uint64_t episode_policy_seed(std::uint64_t master, std::size_t index);

/// Runs every instance (concurrently when threads > 1). Results are ordered by
/// instance index whatever the scheduling.
std::vector<EpisodeResult> evaluate(const std::vector<NetworkInstance>& instances,
                                    const McParams& mc, const SimConfig& sim,
                                    const PolicyFactory& factory, const EvalOptions& options);

struct EvalSummary {
  int instances = 0;
  double mean_lifetime = 0.0;
  double std_lifetime = 0.0;  // sample standard deviation
  double mean_actions = 0.0;
  double mean_node_failures = 0.0;
  double mean_aggregated_ecr = 0.0;
  int cap_survivors = 0;
  int stranded = 0;
};

EvalSummary summarize(const std::vector<EpisodeResult>& results);

/// Per-instance CSV; the first line is "# wrsn-eval-csv v<schema>".
extern const char* const kEvalCsvHeader;
void write_eval_csv(const std::filesystem::path& path, const std::vector<EpisodeResult>& results);
nlohmann::json eval_report_json(const std::string& policy, const std::vector<EpisodeResult>& results,
                                const nlohmann::json& meta);
void write_action_log(const std::filesystem::path& path, const std::vector<EpisodeResult>& results);

struct CompareRow {
  std::string policy;
  std::string param;  // "n", "m", "kappa" or "none"
  double value = 0.0;
  EvalSummary summary;
  std::vector<double> lifetimes;  // per instance, for trend statistics
};

extern const char* const kCompareCsvHeader;
void write_compare_csv(const std::filesystem::path& path, const std::vector<CompareRow>& rows);

struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0;  // two-sided, t approximation
  int samples = 0;
};

/// Rank correlation with average ranks for ties.
SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Spearman test of lifetime against the swept value over every per-instance
/// result of one policy.
SpearmanResult trend(const std::vector<CompareRow>& rows, const std::string& policy);

struct SweepSpec {
  std::string param = "none";  // "n", "m", "kappa" or "none"
  std::vector<double> values;
};

struct CompareSetup {
  int n = 20;
  int m = 10;
  int count = 100;
  std::uint64_t instance_seed = 1;  // generator master seed
  NetworkInstance prototype;        // device constants for generated instances
  McParams mc;
  SimConfig sim;
  EvalOptions eval;
};

/// Instance `index` of a generated set, seeded by derive_seed(seed, index).
std::vector<NetworkInstance> generate_set(int n, int m, int count, std::uint64_t seed,
                                          const NetworkInstance& prototype = {});

/// For n and m sweeps a fresh instance set is generated per value (from the
/// same seed); for kappa the `fixed` set is reused, or generated once when
/// empty.
std::vector<CompareRow> compare(const std::vector<std::pair<std::string, PolicyFactory>>& policies,
                                const SweepSpec& sweep, const CompareSetup& setup,
                                const std::vector<NetworkInstance>& fixed = {});

}  // namespace wrsn
