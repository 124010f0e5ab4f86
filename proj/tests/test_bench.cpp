#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <memory>

#include "support.hpp"
#include "wrsn/bench.hpp"
#include "wrsn/train_run.hpp"

using namespace wrsn;
namespace fs = std::filesystem;

namespace {

SimConfig quick_sim(int cap = 60) {
  SimConfig s;
  s.action_cap = cap;
  return s;
}

PolicyFactory named(const std::string& name, std::shared_ptr<const ActorParams> actor = nullptr) {
  return [name, actor] { return make_policy(name, {}, actor); };
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("report headers are pinned") {
  CHECK(std::string(kEvalCsvHeader) ==
        "instance,num_sensors,lifetime_s,actions,reached_action_cap,node_failures,"
        "aggregated_ecr_w,stranded,termination");
  CHECK(std::string(kCompareCsvHeader) ==
        "policy,param,value,instances,mean_lifetime_s,std_lifetime_s,mean_node_failures,"
        "mean_aggregated_ecr_w,cap_survivors");
  CHECK(std::string(kMetricsCsvHeader) ==
        "epoch,mean_lifetime_s,mean_len,mean_entropy,actor_loss,critic_loss,wallclock_s");

  const fs::path dir = fs::temp_directory_path() / "wrsn_unit_csv";
  fs::remove_all(dir);
  auto insts = generate_set(20, 10, 3, 5);
  auto res = evaluate(insts, McParams{}, quick_sim(), named("njnp"), {});
  write_eval_csv(dir / "r.csv", res);
  auto lines = read_lines(dir / "r.csv");
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] == "# wrsn-eval-csv v1");
  CHECK(lines[1] == kEvalCsvHeader);

  CompareRow row{"njnp", "none", 0.0, summarize(res), {}};
  write_compare_csv(dir / "c.csv", {row});
  lines = read_lines(dir / "c.csv");
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "# wrsn-compare-csv v1");
  CHECK(lines[1] == kCompareCsvHeader);
}

TEST_CASE("evaluation is paired, ordered and thread-count independent") {
  auto insts = generate_set(20, 10, 6, 8);
  EvalOptions one{3, 1, false};
  EvalOptions many{3, 4, false};
  for (const char* name : {"random", "njnp", "inma"}) {
    auto a = evaluate(insts, McParams{}, quick_sim(), named(name), one);
    auto b = evaluate(insts, McParams{}, quick_sim(), named(name), many);
    REQUIRE(a.size() == insts.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].instance == static_cast<int>(i));
      CHECK(a[i].lifetime == b[i].lifetime);
      CHECK(a[i].node_failures == b[i].node_failures);
    }
  }
  CHECK(episode_env_seed(3, 0) != episode_env_seed(3, 1));
  CHECK(episode_env_seed(3, 0) != episode_policy_seed(3, 0));
}

TEST_CASE("an action cap of one ends after the first action") {
  auto insts = generate_set(20, 10, 5, 9);
  EvalOptions opts;
  opts.keep_logs = true;
  for (const char* name : {"random", "njnp"}) {
    auto res = evaluate(insts, McParams{}, quick_sim(1), named(name), opts);
    for (const auto& r : res) {
      REQUIRE_FALSE(r.log.empty());
      CHECK(r.actions <= 1);
      double first = 0.0;
      for (const auto& rec : r.log) {
        first = rec.end;
        if (rec.action != kIdle) break;
      }
      CHECK(r.lifetime == first);
      if (r.cause == Termination::kActionCap) CHECK(r.reached_cap);
    }
  }
}

TEST_CASE("report totals are recomputable from the action log") {
  auto insts = generate_set(20, 10, 4, 10);
  EvalOptions opts;
  opts.keep_logs = true;
  for (const char* name : {"random", "njnp", "inma"}) {
    auto res = evaluate(insts, McParams{}, quick_sim(400), named(name), opts);
    for (const auto& r : res) {
      EpisodeResult s = summarize_log(r.log, r.num_sensors);
      CHECK(s.lifetime == r.lifetime);
      CHECK(s.actions == r.actions);
      CHECK(s.node_failures == r.node_failures);
      CHECK(s.aggregated_ecr == doctest::Approx(r.aggregated_ecr).epsilon(1e-9));
      CHECK(s.cause == r.cause);
      CHECK(s.reached_cap == r.reached_cap);
      for (std::size_t k = 1; k < r.log.size(); ++k) CHECK(r.log[k].start == r.log[k - 1].end);
    }
  }

  const fs::path dir = fs::temp_directory_path() / "wrsn_unit_log";
  fs::remove_all(dir);
  auto res = evaluate(insts, McParams{}, quick_sim(20), named("njnp"), opts);
  write_action_log(dir / "a.jsonl", res);
  std::size_t entries = 0;
  for (const auto& r : res) entries += r.log.size();
  auto lines = read_lines(dir / "a.jsonl");
  CHECK(lines.size() == entries);
  auto first = nlohmann::json::parse(lines.front());
  CHECK(first.contains("instance"));
  CHECK(first.contains("action"));

  nlohmann::json rep = eval_report_json("njnp", res, {{"seed", 1}});
  CHECK(rep.at("schema") == "wrsn-eval");
  CHECK(rep.at("instances").size() == res.size());
}

TEST_CASE("summary statistics") {
  std::vector<EpisodeResult> rs(3);
  rs[0].lifetime = 10;
  rs[1].lifetime = 20;
  rs[2].lifetime = 60;
  rs[2].reached_cap = true;
  rs[1].stranded = true;
  EvalSummary s = summarize(rs);
  CHECK(s.instances == 3);
  CHECK(s.mean_lifetime == doctest::Approx(30));
  CHECK(s.std_lifetime == doctest::Approx(std::sqrt(700.0)));
  CHECK(s.cap_survivors == 1);
  CHECK(s.stranded == 1);
}

TEST_CASE("Spearman correlation matches reference values") {
  auto r = spearman({1, 2, 3, 4, 5}, {5, 6, 7, 8, 7});
  CHECK(r.rho == doctest::Approx(0.8207826816681233).epsilon(1e-12));
  CHECK(r.p_value == doctest::Approx(0.08858700531354381).epsilon(1e-9));
  CHECK(r.samples == 5);
  r = spearman({1, 1, 2, 2, 3, 3, 4, 4}, {9, 8, 8, 7, 5, 6, 2, 1});
  CHECK(r.rho == doctest::Approx(-0.9572173526639411).epsilon(1e-12));
  CHECK(r.p_value == doctest::Approx(0.00018954069743337747).epsilon(1e-9));
  r = spearman({1, 2, 3}, {4, 4, 4});
  CHECK(r.p_value == 1.0);
}

TEST_CASE("trend pools per-instance lifetimes across the sweep") {
  std::vector<CompareRow> rows;
  rows.push_back({"p", "kappa", 0.4, {}, {30, 31, 29}});
  rows.push_back({"p", "kappa", 0.8, {}, {20, 21, 19}});
  rows.push_back({"p", "kappa", 1.0, {}, {10, 11, 9}});
  rows.push_back({"q", "kappa", 0.4, {}, {1, 2, 3}});
  auto t = trend(rows, "p");
  CHECK(t.samples == 9);
  CHECK(t.rho < -0.9);
  CHECK(t.p_value < 0.01);
}

TEST_CASE("a learned policy runs on larger networks than it was trained on") {
  auto [actor, critic] = init_params(8, 2);
  auto shared = std::make_shared<const ActorParams>(actor);
  for (int n : {20, 30}) {
    auto insts = generate_set(n, 10, 2, 11);
    auto res = evaluate(insts, McParams{}, quick_sim(30), named("drl", shared), {});
    for (const auto& r : res) {
      CHECK(r.num_sensors == n);
      CHECK(r.lifetime > 0.0);
    }
  }
}

TEST_CASE("every policy drives the same environment") {
  auto inst = test::default_instance(17);
  auto [actor, critic] = init_params(8, 2);
  auto shared = std::make_shared<const ActorParams>(actor);
  for (const char* name : {"random", "njnp", "inma", "drl"}) {
    auto policy = make_policy(name, {}, shared);
    EpisodeResult r = run_episode(inst, McParams{}, quick_sim(40), *policy, 1, 2);
    CHECK(r.lifetime > 0.0);
    CHECK(r.cause != Termination::kNone);
  }
}

TEST_CASE("comparison tables") {
  CompareSetup setup;
  setup.count = 3;
  setup.sim = quick_sim(40);
  auto rows = compare({{"njnp", named("njnp")}}, {"none", {}}, setup);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].summary.instances == 3);
  CHECK(rows[0].lifetimes.size() == 3);

  rows = compare({{"njnp", named("njnp")}, {"random", named("random")}}, {"n", {20, 24}}, setup);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) CHECK(r.param == "n");
  auto sets = generate_set(24, 10, 3, setup.instance_seed);
  CHECK(sets[0].num_sensors() == 24);
  CHECK(generate_set(24, 10, 3, setup.instance_seed)[2].sensors == sets[2].sensors);
}
