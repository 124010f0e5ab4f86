#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "wrsn/bench.hpp"
#include "wrsn/checkpoint.hpp"
#include "wrsn/generator.hpp"
#include "wrsn/io.hpp"
#include "wrsn/train_run.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wrsn;

namespace {

// Command-line overrides layered on top of the config file.
struct Common {
  std::string config;
  std::optional<double> kappa;
  std::optional<int> action_cap;
  std::optional<std::string> mode;
  std::optional<double> threshold;
  std::optional<double> margin;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> random_guard;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run config (defaults when omitted)");
  cmd->add_option("--kappa", c.kappa, "per-target packet probability");
  cmd->add_option("--action-cap", c.action_cap, "maximum charging actions per episode");
  cmd->add_option("--mode", c.mode, "traffic mode")->check(CLI::IsMember({"stochastic", "expected"}));
  cmd->add_option("--threshold", c.threshold, "baseline request threshold (fraction of c_sn)");
  cmd->add_option("--margin", c.margin, "baseline energy margin, J");
  cmd->add_option("--seed", c.seed, "master seed");
  cmd->add_option("--random-guard", c.random_guard, "depot rule of the random baseline")
      ->check(CLI::IsMember({"return", "service"}));
}

RunConfig resolve(const Common& c) {
  RunConfig rc = c.config.empty() ? RunConfig{} : load_config(c.config);
  if (c.kappa) rc.sim.kappa = *c.kappa;
  if (c.action_cap) rc.sim.action_cap = *c.action_cap;
  if (c.mode) rc.sim.mode = traffic_mode_from_string(*c.mode);
  if (c.threshold) rc.baselines.threshold = *c.threshold;
  if (c.margin) rc.baselines.margin = *c.margin;
  if (c.seed) rc.seed = *c.seed;
  if (c.random_guard) rc.baselines.random_guard = random_guard_from_string(*c.random_guard);
  rc.sim.validate();
  return rc;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::shared_ptr<const ActorParams> load_actor(const std::string& path) {
  if (path.empty()) throw std::invalid_argument("policy 'drl' needs --checkpoint");
  return std::make_shared<const ActorParams>(load_checkpoint(path).state.actor);
}

PolicyFactory factory_for(const std::string& name, const BaselineOptions& opts,
                          std::shared_ptr<const ActorParams> actor) {
  make_policy(name, opts, actor);  // fail early on a bad name
  return [=] { return make_policy(name, opts, actor); };
}

json summary_json(const EvalSummary& s) {
  return {{"instances", s.instances},
          {"mean_lifetime_s", s.mean_lifetime},
          {"std_lifetime_s", s.std_lifetime},
          {"mean_node_failures", s.mean_node_failures},
          {"mean_aggregated_ecr_w", s.mean_aggregated_ecr},
          {"cap_survivors", s.cap_survivors},
          {"stranded", s.stranded}};
}

int cmd_gen(int n, int m, int count, std::uint64_t seed, const fs::path& out) {
  NetworkInstance proto;
  fs::create_directories(out);
  GeneratorOptions opts;
  opts.prototype = proto;
  json files = json::array();
  json errors = json::array();
  for (int i = 0; i < count; ++i) {
    const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(i));
    try {
      save_instance(out / instance_file_name(i), generate_instance(n, m, proto.area, s, opts));
      files.push_back({{"index", i}, {"file", instance_file_name(i)}, {"seed", s}});
    } catch (const GenerationError& e) {
      errors.push_back({{"index", i}, {"seed", s}, {"error", e.what()}});
    }
  }
  write_json_file(out / "manifest.json", {{"schema", "wrsn-instances"},
                                          {"version", kInstanceFormatVersion},
                                          {"n", n},
                                          {"m", m},
                                          {"count", count},
                                          {"seed", seed},
                                          {"instances", files},
                                          {"errors", errors}});
  std::cout << json{{"generated", files.size()}, {"failed", errors.size()}, {"out", out.string()}}.dump()
            << '\n';
  return errors.empty() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WRSN simulator, charging policies and DRL trainer"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate random network instances");
  int gen_n = 20, gen_m = 10, gen_count = 100;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  gen->add_option("--n", gen_n, "sensors")->check(CLI::PositiveNumber);
  gen->add_option("--m", gen_m, "targets")->check(CLI::PositiveNumber);
  gen->add_option("--count", gen_count, "number of instances")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", gen_seed, "master seed");
  gen->add_option("--out", gen_out, "output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "train the actor-critic policy");
  Common train_c;
  add_common(train, train_c);
  std::string train_instances, train_out, train_resume;
  std::optional<int> train_epochs;
  train->add_option("--instances", train_instances, "instance directory")->required();
  train->add_option("--out", train_out, "output directory")->required();
  train->add_option("--resume", train_resume, "checkpoint to continue from");
  train->add_option("--epochs", train_epochs, "total epochs");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate one policy on an instance set");
  Common eval_c;
  add_common(eval, eval_c);
  std::string eval_policy = "njnp", eval_instances, eval_checkpoint, eval_out;
  int eval_threads = 1;
  bool eval_log = false;
  bool eval_sample = false;
  eval->add_option("--policy", eval_policy, "policy")
      ->check(CLI::IsMember({"drl", "random", "njnp", "inma"}));
  eval->add_option("--instances", eval_instances, "instance directory")->required();
  eval->add_option("--checkpoint", eval_checkpoint, "model checkpoint for --policy drl");
  eval->add_option("--out", eval_out, "output directory")->required();
  eval->add_option("--threads", eval_threads, "worker threads")->check(CLI::PositiveNumber);
  eval->add_flag("--log-actions", eval_log, "write actions.jsonl");
  eval->add_flag("--sample", eval_sample, "sample from the DRL policy instead of greedy decoding");

  // compare
  auto* cmp = app.add_subcommand("compare", "compare policies, optionally sweeping n, m or kappa");
  Common cmp_c;
  add_common(cmp, cmp_c);
  std::string cmp_policies = "random,njnp,inma", cmp_instances, cmp_checkpoint, cmp_out;
  std::string cmp_sweep = "none", cmp_values;
  int cmp_n = 20, cmp_m = 10, cmp_count = 100, cmp_threads = 1;
  std::uint64_t cmp_instance_seed = 1;
  cmp->add_option("--policy", cmp_policies, "comma-separated policies");
  cmp->add_option("--instances", cmp_instances, "instance directory (kappa/none sweeps)");
  cmp->add_option("--checkpoint", cmp_checkpoint, "model checkpoint for drl");
  cmp->add_option("--sweep", cmp_sweep, "swept factor")->check(CLI::IsMember({"none", "n", "m", "kappa"}));
  cmp->add_option("--values", cmp_values, "comma-separated sweep values");
  cmp->add_option("--n", cmp_n, "sensors for generated sets")->check(CLI::PositiveNumber);
  cmp->add_option("--m", cmp_m, "targets for generated sets")->check(CLI::PositiveNumber);
  cmp->add_option("--count", cmp_count, "instances per point for generated sets");
  cmp->add_option("--instance-seed", cmp_instance_seed, "generator seed");
  cmp->add_option("--threads", cmp_threads, "worker threads")->check(CLI::PositiveNumber);
  cmp->add_option("--out", cmp_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", {{"type", "usage"}, {"message", e.what()}}}}.dump() << '\n';
    return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_n, gen_m, gen_count, gen_seed, gen_out);

    if (train->parsed()) {
      RunConfig rc = resolve(train_c);
      if (train_c.action_cap) rc.train.action_cap = *train_c.action_cap;
      if (train_c.mode) rc.train.traffic_mode = rc.sim.mode;
      if (train_c.seed) rc.train.seed = *train_c.seed;
      if (train_epochs) rc.train.epochs = *train_epochs;
      const auto instances = load_instance_dir(train_instances);
      TrainRunOptions opts;
      opts.out_dir = train_out;
      if (!train_resume.empty()) opts.resume = train_resume;
      opts.metadata = {{"instances", train_instances}};
      const auto res = run_training(instances, rc, opts, [](const EpochMetrics& m) {
        std::cerr << "epoch " << m.epoch << " lifetime " << m.mean_lifetime_s << " len "
                  << m.mean_len << " entropy " << m.mean_entropy << " ("
                  << m.wallclock_s << " s)\n";
      });
      std::cout << json{{"epochs", res.state.epoch}, {"checkpoint", res.final_checkpoint.string()}}.dump()
                << '\n';
      return 0;
    }

    if (eval->parsed()) {
      const RunConfig rc = resolve(eval_c);
      std::shared_ptr<const ActorParams> actor;
      if (eval_policy == "drl") actor = load_actor(eval_checkpoint);
      const auto instances = load_instance_dir(eval_instances);
      PolicyFactory factory;
      if (eval_policy == "drl") {
        factory = [actor, sample = eval_sample] {
          return std::unique_ptr<ChargingPolicy>(new DrlPolicy(actor, !sample));
        };
      } else {
        factory = factory_for(eval_policy, rc.baselines, nullptr);
      }
      EvalOptions eo{rc.seed, eval_threads, eval_log};
      const auto results = evaluate(instances, rc.mc, rc.sim, factory, eo);
      const fs::path out = eval_out;
      write_eval_csv(out / "report.csv", results);
      json meta{{"instances", eval_instances},
                {"checkpoint", eval_checkpoint},
                {"greedy", !eval_sample},
                {"config", config_to_json(rc)}};
      write_json_file(out / "report.json", eval_report_json(eval_policy, results, meta));
      if (eval_log) write_action_log(out / "actions.jsonl", results);
      std::cout << summary_json(summarize(results)).dump() << '\n';
      return 0;
    }

    if (cmp->parsed()) {
      const RunConfig rc = resolve(cmp_c);
      const auto names = split(cmp_policies);
      if (names.empty()) throw std::invalid_argument("no policies given");
      std::shared_ptr<const ActorParams> actor;
      std::vector<std::pair<std::string, PolicyFactory>> policies;
      for (const auto& name : names) {
        if (name == "drl" && !actor) actor = load_actor(cmp_checkpoint);
        policies.emplace_back(name, factory_for(name, rc.baselines, actor));
      }
      SweepSpec sweep{cmp_sweep, {}};
      for (const auto& v : split(cmp_values)) sweep.values.push_back(std::stod(v));
      CompareSetup setup;
      setup.n = cmp_n;
      setup.m = cmp_m;
      setup.count = cmp_count;
      setup.instance_seed = cmp_instance_seed;
      setup.mc = rc.mc;
      setup.sim = rc.sim;
      setup.eval = {rc.seed, cmp_threads, false};
      std::vector<NetworkInstance> fixed;
      if (!cmp_instances.empty()) {
        if (sweep.param == "n" || sweep.param == "m") {
          throw std::invalid_argument("--instances cannot be combined with an n or m sweep");
        }
        fixed = load_instance_dir(cmp_instances);
      }
      const auto rows = compare(policies, sweep, setup, fixed);
      const fs::path out = cmp_out;
      json jrows = json::array();
      for (const auto& r : rows) {
        jrows.push_back({{"policy", r.policy}, {"param", r.param}, {"value", r.value},
                         {"summary", summary_json(r.summary)}, {"lifetimes", r.lifetimes}});
      }
      json trends = json::object();
      if (sweep.param != "none") {
        for (const auto& name : names) {
          const auto t = trend(rows, name);
          trends[name] = {{"spearman_rho", t.rho}, {"p_value", t.p_value}, {"samples", t.samples}};
        }
      }
      write_json_file(out / "compare.json", {{"schema", "wrsn-compare"},
                                             {"version", kReportSchemaVersion},
                                             {"sweep", sweep.param},
                                             {"config", config_to_json(rc)},
                                             {"rows", jrows},
                                             {"trends", trends}});
      write_compare_csv(out / "compare.csv", rows);
      for (const auto& r : rows) {
        std::cout << r.policy << ' ' << r.param << '=' << r.value << " mean_lifetime "
                  << r.summary.mean_lifetime << " +- " << r.summary.std_lifetime << '\n';
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::string kind = "error";
    if (dynamic_cast<const CheckpointError*>(&e)) kind = "checkpoint_error";
    else if (dynamic_cast<const FormatError*>(&e)) kind = "format_error";
    else if (dynamic_cast<const std::invalid_argument*>(&e)) kind = "invalid_argument";
    std::cerr << json{{"error", {{"type", kind}, {"message", e.what()}}}}.dump() << '\n';
    return 1;
  }
  return 0;
}
