#include "wrsn/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "wrsn/trainer.hpp"

namespace wrsn {

using nlohmann::json;

const char* const kEvalCsvHeader =
    "instance,num_sensors,lifetime_s,actions,reached_action_cap,node_failures,"
    "aggregated_ecr_w,stranded,termination";
const char* const kCompareCsvHeader =
    "policy,param,value,instances,mean_lifetime_s,std_lifetime_s,mean_node_failures,"
    "mean_aggregated_ecr_w,cap_survivors";

namespace {

void finalize(EpisodeResult& r) {
  r.aggregated_ecr = r.lifetime > 0.0 ? r.aggregated_ecr / r.lifetime : 0.0;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  return out;
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

EpisodeResult run_episode(const NetworkInstance& instance, const McParams& mc,
                          const SimConfig& sim, ChargingPolicy& policy,
                          std::uint64_t env_seed, std::uint64_t policy_seed, bool keep_log) {
  Environment env(instance, mc, sim);
  env.reset(env_seed);
  std::mt19937_64 rng(policy_seed);
  policy.begin_episode(env);

  const int n = static_cast<int>(instance.num_sensors());
  std::vector<bool> seen_depleted(static_cast<std::size_t>(n), false);
  EpisodeResult res;
  res.num_sensors = n;
  while (!env.state().terminal()) {
    const int action = policy.decide(env, rng);
    const double start = env.state().time;
    const double consumed_before = env.state().energy_consumed;
    const StepResult step = action == kIdle ? env.wait(sim.dt) : env.step(action);
    if (!keep_log) continue;
    const SimState& st = env.state();
    ActionRecord rec;
    rec.action = action;
    rec.start = start;
    rec.end = st.time;
    rec.travel_distance = step.info.travel_distance;
    rec.charge_time = step.info.charge_time;
    rec.energy_delivered = step.info.energy_delivered;
    rec.mc_energy_used = step.info.mc_energy_used;
    rec.mc_energy_after = st.mc_energy;
    rec.dissipated = st.energy_consumed - consumed_before;
    for (int i = 0; i < n; ++i) {
      if (st.ever_depleted[i] && !seen_depleted[i]) {
        seen_depleted[i] = true;
        rec.depleted.push_back(i);
      }
    }
    rec.cause = to_string(st.termination);
    res.log.push_back(std::move(rec));
  }
  const SimState& st = env.state();
  res.lifetime = st.time;
  res.actions = st.actions_taken;
  res.cause = st.termination;
  res.reached_cap = st.termination == Termination::kActionCap;
  res.stranded = st.mc_stranded;
  res.node_failures = static_cast<int>(std::count(st.ever_depleted.begin(), st.ever_depleted.end(), true));
  res.aggregated_ecr = st.energy_consumed;
  finalize(res);
  return res;
}

EpisodeResult summarize_log(const std::vector<ActionRecord>& log, int num_sensors) {
  EpisodeResult r;
  r.num_sensors = num_sensors;
  for (const auto& rec : log) {
    if (rec.action != kIdle) ++r.actions;
    r.node_failures += static_cast<int>(rec.depleted.size());
    r.aggregated_ecr += rec.dissipated;
    r.lifetime = rec.end;
  }
  if (!log.empty()) {
    r.cause = Termination::kNone;
    for (auto c : {Termination::kConstraint, Termination::kStranded, Termination::kActionCap,
                   Termination::kTimeLimit}) {
      if (log.back().cause == to_string(c)) r.cause = c;
    }
    r.reached_cap = r.cause == Termination::kActionCap;
  }
  finalize(r);
  return r;
}

std::uint64_t episode_env_seed(std::uint64_t master, std::size_t index) {
  return derive_seed(master, index, 0);
}

std::uint64_t episode_policy_seed(std::uint64_t master, std::size_t index) {
  return derive_seed(master, index, 1);
}

std::vector<EpisodeResult> evaluate(const std::vector<NetworkInstance>& instances,
                                    const McParams& mc, const SimConfig& sim,
                                    const PolicyFactory& factory, const EvalOptions& options) {
  std::vector<EpisodeResult> results(instances.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    try {
      auto policy = factory();
      for (std::size_t i = next++; i < instances.size(); i = next++) {
        results[i] = run_episode(instances[i], mc, sim, *policy,
                                 episode_env_seed(options.seed, i),
                                 episode_policy_seed(options.seed, i), options.keep_logs);
        results[i].instance = static_cast<int>(i);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = instances.size();
    }
  };

  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(instances.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

EvalSummary summarize(const std::vector<EpisodeResult>& results) {
  EvalSummary s;
  s.instances = static_cast<int>(results.size());
  if (results.empty()) return s;
  const double count = static_cast<double>(results.size());
  for (const auto& r : results) {
    s.mean_lifetime += r.lifetime;
    s.mean_actions += r.actions;
    s.mean_node_failures += r.node_failures;
    s.mean_aggregated_ecr += r.aggregated_ecr;
    s.cap_survivors += r.reached_cap ? 1 : 0;
    s.stranded += r.stranded ? 1 : 0;
  }
  s.mean_lifetime /= count;
  s.mean_actions /= count;
  s.mean_node_failures /= count;
  s.mean_aggregated_ecr /= count;
  if (results.size() > 1) {
    double ss = 0.0;
    for (const auto& r : results) ss += (r.lifetime - s.mean_lifetime) * (r.lifetime - s.mean_lifetime);
    s.std_lifetime = std::sqrt(ss / (count - 1.0));
  }
  return s;
}

void write_eval_csv(const std::filesystem::path& path, const std::vector<EpisodeResult>& results) {
  auto out = open_out(path);
  out << "# wrsn-eval-csv v" << kReportSchemaVersion << '\n' << kEvalCsvHeader << '\n';
  for (const auto& r : results) {
    out << r.instance << ',' << r.num_sensors << ',' << r.lifetime << ',' << r.actions << ','
        << (r.reached_cap ? 1 : 0) << ',' << r.node_failures << ',' << r.aggregated_ecr << ','
        << (r.stranded ? 1 : 0) << ',' << to_string(r.cause) << '\n';
  }
}

json eval_report_json(const std::string& policy, const std::vector<EpisodeResult>& results,
                      const json& meta) {
  const EvalSummary s = summarize(results);
  json rows = json::array();
  for (const auto& r : results) {
    rows.push_back({{"instance", r.instance},
                    {"num_sensors", r.num_sensors},
                    {"lifetime_s", r.lifetime},
                    {"actions", r.actions},
                    {"reached_action_cap", r.reached_cap},
                    {"node_failures", r.node_failures},
                    {"aggregated_ecr_w", r.aggregated_ecr},
                    {"stranded", r.stranded},
                    {"termination", to_string(r.cause)}});
  }
  return {{"schema", "wrsn-eval"},
          {"version", kReportSchemaVersion},
          {"policy", policy},
          {"meta", meta},
          {"aggregate",
           {{"instances", s.instances},
            {"mean_lifetime_s", s.mean_lifetime},
            {"std_lifetime_s", s.std_lifetime},
            {"mean_actions", s.mean_actions},
            {"mean_node_failures", s.mean_node_failures},
            {"mean_aggregated_ecr_w", s.mean_aggregated_ecr},
            {"cap_survivors", s.cap_survivors},
            {"stranded", s.stranded}}},
          {"instances", std::move(rows)}};
}

void write_action_log(const std::filesystem::path& path, const std::vector<EpisodeResult>& results) {
  auto out = open_out(path);
  for (const auto& r : results) {
    for (std::size_t k = 0; k < r.log.size(); ++k) {
      const auto& a = r.log[k];
      json line{{"instance", r.instance},
                {"index", k},
                {"action", a.action},
                {"start_s", a.start},
                {"end_s", a.end},
                {"travel_m", a.travel_distance},
                {"charge_s", a.charge_time},
                {"delivered_j", a.energy_delivered},
                {"mc_used_j", a.mc_energy_used},
                {"mc_energy_j", a.mc_energy_after},
                {"dissipated_j", a.dissipated},
                {"depleted", a.depleted},
                {"termination", a.cause}};
      out << line.dump() << '\n';
    }
  }
}

void write_compare_csv(const std::filesystem::path& path, const std::vector<CompareRow>& rows) {
  auto out = open_out(path);
  out << "# wrsn-compare-csv v" << kReportSchemaVersion << '\n' << kCompareCsvHeader << '\n';
  for (const auto& r : rows) {
    const auto& s = r.summary;
    out << r.policy << ',' << r.param << ',' << r.value << ',' << s.instances << ','
        << s.mean_lifetime << ',' << s.std_lifetime << ',' << s.mean_node_failures << ','
        << s.mean_aggregated_ecr << ',' << s.cap_survivors << '\n';
  }
}

SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
  SpearmanResult out;
  out.samples = static_cast<int>(x.size());
  if (x.size() < 3) return out;
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return out;
  out.rho = sxy / std::sqrt(sxx * syy);
  const double denom = 1.0 - out.rho * out.rho;
  if (denom <= 0.0) {
    out.p_value = 0.0;
    return out;
  }
  const double t = out.rho * std::sqrt((n - 2.0) / denom);
  boost::math::students_t dist(n - 2.0);
  out.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
  return out;
}

SpearmanResult trend(const std::vector<CompareRow>& rows, const std::string& policy) {
  std::vector<double> x, y;
  for (const auto& r : rows) {
    if (r.policy != policy) continue;
    for (double l : r.lifetimes) {
      x.push_back(r.value);
      y.push_back(l);
    }
  }
  return spearman(x, y);
}

std::vector<NetworkInstance> generate_set(int n, int m, int count, std::uint64_t seed,
                                          const NetworkInstance& prototype) {
  GeneratorOptions opts;
  opts.prototype = prototype;
  std::vector<NetworkInstance> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) {
    out.push_back(generate_instance(n, m, prototype.area,
                                    derive_seed(seed, static_cast<std::uint64_t>(i)), opts));
  }
  return out;
}

std::vector<CompareRow> compare(const std::vector<std::pair<std::string, PolicyFactory>>& policies,
                                const SweepSpec& sweep, const CompareSetup& setup,
                                const std::vector<NetworkInstance>& fixed) {
  if (policies.empty()) throw std::invalid_argument("compare: no policies");
  const bool per_value = sweep.param == "n" || sweep.param == "m";
  if (!per_value && sweep.param != "kappa" && sweep.param != "none") {
    throw std::invalid_argument("compare: unknown sweep parameter '" + sweep.param + "'");
  }
  std::vector<double> values = sweep.values;
  if (values.empty()) {
    if (sweep.param == "n") values = {static_cast<double>(setup.n)};
    else if (sweep.param == "m") values = {static_cast<double>(setup.m)};
    else values = {setup.sim.kappa};
  }

  std::vector<NetworkInstance> shared = fixed;
  if (!per_value && shared.empty()) {
    shared = generate_set(setup.n, setup.m, setup.count, setup.instance_seed, setup.prototype);
  }

  std::vector<CompareRow> rows;
  for (double v : values) {
    SimConfig sim = setup.sim;
    std::vector<NetworkInstance> generated;
    const std::vector<NetworkInstance>* set = &shared;
    if (per_value) {
      const int n = sweep.param == "n" ? static_cast<int>(std::lround(v)) : setup.n;
      const int m = sweep.param == "m" ? static_cast<int>(std::lround(v)) : setup.m;
      generated = generate_set(n, m, setup.count, setup.instance_seed, setup.prototype);
      set = &generated;
    } else if (sweep.param == "kappa") {
      sim.kappa = v;
    }
    for (const auto& [name, factory] : policies) {
      const auto results = evaluate(*set, setup.mc, sim, factory, setup.eval);
      CompareRow row{name, sweep.param, v, summarize(results), {}};
      for (const auto& r : results) row.lifetimes.push_back(r.lifetime);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace wrsn
