#include "wrsn/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace wrsn {

using nlohmann::json;

namespace {

json point(const Vec2& p) { return json::array({p.x, p.y}); }

Vec2 parse_point(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw FormatError(what + ": expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<Vec2> parse_points(const json& j, const std::string& what) {
  if (!j.is_array()) throw FormatError(what + ": expected an array of points");
  std::vector<Vec2> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(parse_point(j[i], what + "[" + std::to_string(i) + "]"));
  }
  return out;
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  if (!obj.is_object()) throw FormatError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) throw FormatError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read_opt(const json& obj, const char* key, T& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw FormatError(where + "." + key + ": wrong type");
  }
}

double number(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw FormatError(where + ": missing '" + key + "'");
  if (!it->is_number()) throw FormatError(where + "." + key + ": expected a number");
  return it->get<double>();
}

}  // namespace

json instance_to_json(const NetworkInstance& inst) {
  json sensors = json::array();
  for (const auto& p : inst.sensors) sensors.push_back(point(p));
  json targets = json::array();
  for (const auto& p : inst.targets) targets.push_back(point(p));
  return json{
      {"version", kInstanceFormatVersion},
      {"area", point(inst.area)},
      {"r_s", inst.sensing_range},
      {"r_c", inst.comm_range},
      {"c_sn", inst.sensor_capacity},
      {"packet_bits", inst.packet_bits},
      {"radio",
       {{"eps_elec", inst.radio.eps_elec},
        {"eps_fs", inst.radio.eps_fs},
        {"eps_mp", inst.radio.eps_mp}}},
      {"bs", point(inst.base_station)},
      {"depot", point(inst.depot)},
      {"sensors", std::move(sensors)},
      {"targets", std::move(targets)},
  };
}

NetworkInstance instance_from_json(const json& doc) {
  const std::string where = "instance";
  reject_unknown(doc, {"version", "area", "r_s", "r_c", "c_sn", "packet_bits", "radio", "bs",
                       "depot", "sensors", "targets"},
                 where);
  if (!doc.contains("version") || !doc["version"].is_number_integer()) {
    throw FormatError("instance: missing integer 'version'");
  }
  if (doc["version"].get<int>() != kInstanceFormatVersion) {
    throw FormatError("instance: unsupported version " + doc["version"].dump());
  }
  for (const char* key : {"area", "bs", "depot", "sensors", "targets"}) {
    if (!doc.contains(key)) throw FormatError(where + ": missing '" + key + "'");
  }
  NetworkInstance inst;
  inst.area = parse_point(doc["area"], "area");
  inst.base_station = parse_point(doc["bs"], "bs");
  inst.depot = parse_point(doc["depot"], "depot");
  inst.sensors = parse_points(doc["sensors"], "sensors");
  inst.targets = parse_points(doc["targets"], "targets");
  if (doc.contains("r_s")) inst.sensing_range = number(doc, "r_s", where);
  if (doc.contains("r_c")) inst.comm_range = number(doc, "r_c", where);
  if (doc.contains("c_sn")) inst.sensor_capacity = number(doc, "c_sn", where);
  if (doc.contains("packet_bits")) inst.packet_bits = number(doc, "packet_bits", where);
  if (doc.contains("radio")) {
    const json& r = doc["radio"];
    reject_unknown(r, {"eps_elec", "eps_fs", "eps_mp"}, "instance.radio");
    if (r.contains("eps_elec")) inst.radio.eps_elec = number(r, "eps_elec", "radio");
    if (r.contains("eps_fs")) inst.radio.eps_fs = number(r, "eps_fs", "radio");
    if (r.contains("eps_mp")) inst.radio.eps_mp = number(r, "eps_mp", "radio");
  }
  inst.validate();
  return inst;
}

void save_instance(const std::filesystem::path& path, const NetworkInstance& instance) {
  write_json_file(path, instance_to_json(instance));
}

NetworkInstance load_instance(const std::filesystem::path& path) {
  try {
    return instance_from_json(read_json_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

std::string instance_file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "instance_%04d.json", index);
  return buf;
}

std::vector<NetworkInstance> load_instance_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw std::runtime_error("instance directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.starts_with("instance_") && name.ends_with(".json")) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<NetworkInstance> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(load_instance(f));
  return out;
}

json train_config_to_json(const TrainConfig& t) {
  return json{
      {"gamma", t.gamma},
      {"lambda_gae", t.lambda_gae},
      {"beta", t.beta},
      {"lr_actor", t.lr_actor},
      {"lr_critic", t.lr_critic},
      {"reward_scale", t.reward_scale},
      {"epochs", t.epochs},
      {"instances_per_epoch", t.instances_per_epoch},
      {"action_cap", t.action_cap},
      {"seed", t.seed},
      {"normalize_advantages", t.normalize_advantages},
      {"latent", t.latent},
      {"checkpoint_every", t.checkpoint_every},
      {"mode", to_string(t.traffic_mode)},
  };
}

TrainConfig train_config_from_json(const json& t) {
  TrainConfig c;
  const std::string tw = "train";
  reject_unknown(t, {"gamma", "lambda_gae", "beta", "lr_actor", "lr_critic", "reward_scale",
                     "epochs", "instances_per_epoch", "action_cap", "seed",
                     "normalize_advantages", "latent", "checkpoint_every", "mode"},
                 tw);
  read_opt(t, "gamma", c.gamma, tw);
  read_opt(t, "lambda_gae", c.lambda_gae, tw);
  read_opt(t, "beta", c.beta, tw);
  read_opt(t, "lr_actor", c.lr_actor, tw);
  read_opt(t, "lr_critic", c.lr_critic, tw);
  read_opt(t, "reward_scale", c.reward_scale, tw);
  read_opt(t, "epochs", c.epochs, tw);
  read_opt(t, "instances_per_epoch", c.instances_per_epoch, tw);
  read_opt(t, "action_cap", c.action_cap, tw);
  read_opt(t, "seed", c.seed, tw);
  read_opt(t, "normalize_advantages", c.normalize_advantages, tw);
  read_opt(t, "latent", c.latent, tw);
  read_opt(t, "checkpoint_every", c.checkpoint_every, tw);
  std::string mode = to_string(c.traffic_mode);
  read_opt(t, "mode", mode, tw);
  try {
    c.traffic_mode = traffic_mode_from_string(mode);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("train.mode: ") + e.what());
  }
  return c;
}

json config_to_json(const RunConfig& c) {
  return json{
      {"mc",
       {{"capacity", c.mc.capacity},
        {"speed", c.mc.speed},
        {"charge_rate", c.mc.charge_rate},
        {"move_cost", c.mc.move_cost},
        {"initial_energy", c.mc.initial_energy}}},
      {"kappa", c.sim.kappa},
      {"dt", c.sim.dt},
      {"mode", to_string(c.sim.mode)},
      {"oracle_ecr", c.sim.oracle_ecr},
      {"action_cap", c.sim.action_cap},
      {"notify_period", c.sim.notify_period},
      {"ecr_window", c.sim.ecr_window},
      {"max_time", c.sim.max_time},
      {"seed", c.seed},
      {"train", train_config_to_json(c.train)},
      {"baselines",
       {{"threshold", c.baselines.threshold},
        {"margin", c.baselines.margin},
        {"random_guard", to_string(c.baselines.random_guard)}}},
  };
}

RunConfig config_from_json(const json& doc) {
  RunConfig c;
  const std::string where = "config";
  reject_unknown(doc, {"mc", "kappa", "dt", "mode", "oracle_ecr", "action_cap", "notify_period",
                       "ecr_window", "max_time", "seed", "train", "baselines"},
                 where);
  if (doc.contains("mc")) {
    const json& m = doc["mc"];
    reject_unknown(m, {"capacity", "speed", "charge_rate", "move_cost", "initial_energy"},
                   "config.mc");
    read_opt(m, "capacity", c.mc.capacity, "config.mc");
    read_opt(m, "speed", c.mc.speed, "config.mc");
    read_opt(m, "charge_rate", c.mc.charge_rate, "config.mc");
    read_opt(m, "move_cost", c.mc.move_cost, "config.mc");
    read_opt(m, "initial_energy", c.mc.initial_energy, "config.mc");
  }
  read_opt(doc, "kappa", c.sim.kappa, where);
  read_opt(doc, "dt", c.sim.dt, where);
  std::string mode = to_string(c.sim.mode);
  read_opt(doc, "mode", mode, where);
  try {
    c.sim.mode = traffic_mode_from_string(mode);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("config.mode: ") + e.what());
  }
  read_opt(doc, "oracle_ecr", c.sim.oracle_ecr, where);
  read_opt(doc, "action_cap", c.sim.action_cap, where);
  read_opt(doc, "notify_period", c.sim.notify_period, where);
  read_opt(doc, "ecr_window", c.sim.ecr_window, where);
  read_opt(doc, "max_time", c.sim.max_time, where);
  read_opt(doc, "seed", c.seed, where);
  if (doc.contains("train")) c.train = train_config_from_json(doc["train"]);
  if (doc.contains("baselines")) {
    const json& b = doc["baselines"];
    reject_unknown(b, {"threshold", "margin", "random_guard"}, "config.baselines");
    read_opt(b, "threshold", c.baselines.threshold, "config.baselines");
    read_opt(b, "margin", c.baselines.margin, "config.baselines");
    std::string guard = to_string(c.baselines.random_guard);
    read_opt(b, "random_guard", guard, "config.baselines");
    try {
      c.baselines.random_guard = random_guard_from_string(guard);
    } catch (const std::invalid_argument& e) {
      throw FormatError(std::string("config.baselines.random_guard: ") + e.what());
    }
  }
  c.mc.validate();
  c.sim.validate();
  c.train.validate();
  if (!(c.baselines.threshold >= 0.0 && c.baselines.threshold <= 1.0)) {
    throw std::invalid_argument("baseline threshold must lie in [0, 1]");
  }
  if (!(c.baselines.margin >= 0.0)) throw std::invalid_argument("baseline margin must be >= 0");
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  try {
    return config_from_json(read_json_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace wrsn
