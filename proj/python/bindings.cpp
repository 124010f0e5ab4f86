#include <pybind11/pybind11.h>
#include <pybind11/eigen.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>
#include <optional>
#include <thread>

#include "wrsn/baselines.hpp"
#include "wrsn/bench.hpp"
#include "wrsn/checkpoint.hpp"
#include "wrsn/generator.hpp"
#include "wrsn/io.hpp"
#include "wrsn/train_run.hpp"

namespace py = pybind11;
using namespace wrsn;

namespace {

// Documents cross the boundary as text; the json module does the rest.
nlohmann::json to_cpp(const py::handle& obj) {
  if (obj.is_none()) return nlohmann::json::object();
  auto dumps = py::module_::import("json").attr("dumps");
  return nlohmann::json::parse(dumps(obj).cast<std::string>());
}

py::object to_py(const nlohmann::json& doc) {
  return py::module_::import("json").attr("loads")(doc.dump());
}

std::vector<NetworkInstance> instances_from(const py::list& docs) {
  std::vector<NetworkInstance> out;
  for (const auto& d : docs) out.push_back(instance_from_json(to_cpp(d)));
  return out;
}

py::dict observation_dict(const Observation& obs) {
  py::dict d;
  d["mc"] = obs.mc;
  d["depot"] = obs.depot;
  d["sensors"] = obs.sensors;
  return d;
}

py::dict info_dict(const StepInfo& info) {
  py::dict d;
  d["action"] = info.action;
  d["travel_distance"] = info.travel_distance;
  d["travel_time"] = info.travel_time;
  d["charge_time"] = info.charge_time;
  d["energy_delivered"] = info.energy_delivered;
  d["mc_energy_used"] = info.mc_energy_used;
  d["cause"] = to_string(info.cause);
  return d;
}

py::tuple step_tuple(const StepResult& r) {
  return py::make_tuple(observation_dict(r.next_obs), r.reward, r.terminal, info_dict(r.info));
}

int default_threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "WRSN simulator, baselines and actor-critic trainer";

  py::register_exception<GenerationError>(m, "GenerationError", PyExc_RuntimeError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_RuntimeError);

  m.def("transmit_energy",
        [](double bits, double distance, double range) -> std::optional<double> {
          return transmit_energy(bits, distance, RadioConstants{}, range);
        },
        py::arg("bits"), py::arg("distance"), py::arg("range") = 80.0,
        "Energy in J to send `bits` over `distance`; None when out of range.");
  m.def("receive_energy", [](double bits) { return receive_energy(bits, RadioConstants{}); },
        py::arg("bits"));

  m.def("generate_instance",
        [](int n, int m_targets, double width, double height, std::uint64_t seed) {
          return to_py(instance_to_json(generate_instance(n, m_targets, {width, height}, seed)));
        },
        py::arg("n") = 20, py::arg("m") = 10, py::arg("width") = 200.0, py::arg("height") = 200.0,
        py::arg("seed") = 1);
  m.def("generate_set",
        [](int n, int m_targets, int count, std::uint64_t seed) {
          py::list out;
          for (const auto& inst : generate_set(n, m_targets, count, seed))
            out.append(to_py(instance_to_json(inst)));
          return out;
        },
        py::arg("n") = 20, py::arg("m") = 10, py::arg("count") = 10, py::arg("seed") = 1);

  py::class_<Environment>(m, "Environment")
      .def(py::init([](const py::object& instance, const py::object& config) {
             RunConfig cfg = config_from_json(to_cpp(config));
             return Environment(instance_from_json(to_cpp(instance)), cfg.mc, cfg.sim);
           }),
           py::arg("instance"), py::arg("config") = py::none())
      .def("reset", [](Environment& e, std::uint64_t seed) { return observation_dict(e.reset(seed)); },
           py::arg("seed") = 1)
      .def("step", [](Environment& e, int action) { return step_tuple(e.step(action)); },
           py::arg("action"), "0 is the depot, i >= 1 charges sensor i - 1.")
      .def("wait", [](Environment& e, double s) { return step_tuple(e.wait(s)); }, py::arg("seconds"))
      .def("observe", [](const Environment& e) { return observation_dict(e.observe()); })
      .def_property_readonly("num_actions", &Environment::num_actions)
      .def_property_readonly("time", [](const Environment& e) { return e.state().time; })
      .def_property_readonly("mc_energy", [](const Environment& e) { return e.state().mc_energy; })
      .def_property_readonly("mc_position",
                             [](const Environment& e) {
                               return py::make_tuple(e.state().mc_pos.x, e.state().mc_pos.y);
                             })
      .def_property_readonly("sensor_energy",
                             [](const Environment& e) { return e.state().sensor_energy; })
      .def_property_readonly("terminal", [](const Environment& e) { return e.state().terminal(); })
      .def_property_readonly("termination",
                             [](const Environment& e) { return to_string(e.state().termination); });

  m.def("evaluate",
        [](const std::string& policy, const py::list& instances, const py::object& config,
           const std::optional<std::filesystem::path>& checkpoint, std::uint64_t seed, int threads) {
          RunConfig cfg = config_from_json(to_cpp(config));
          std::shared_ptr<const ActorParams> actor;
          if (checkpoint)
            actor = std::make_shared<const ActorParams>(load_checkpoint(*checkpoint).state.actor);
          auto insts = instances_from(instances);
          make_policy(policy, cfg.baselines, actor);  // fail early on a bad name
          std::vector<EpisodeResult> res;
          {
            py::gil_scoped_release release;
            res = evaluate(insts, cfg.mc, cfg.sim,
                           [&] { return make_policy(policy, cfg.baselines, actor); },
                           {seed, threads > 0 ? threads : default_threads(), false});
          }
          return to_py(eval_report_json(policy, res, {{"seed", seed}}));
        },
        py::arg("policy"), py::arg("instances"), py::arg("config") = py::none(),
        py::arg("checkpoint") = py::none(), py::arg("seed") = 1, py::arg("threads") = 0,
        "Plays every instance to termination and returns the eval report document.");

  m.def("train",
        [](const py::list& instances, const py::object& config, const std::filesystem::path& out_dir,
           const std::optional<std::filesystem::path>& resume) {
          RunConfig cfg = config_from_json(to_cpp(config));
          auto insts = instances_from(instances);
          TrainRunResult r;
          {
            py::gil_scoped_release release;
            r = run_training(insts, cfg, {out_dir, resume, {}});
          }
          py::list rows;
          for (const auto& e : r.metrics) {
            py::dict d;
            d["epoch"] = e.epoch;
            d["mean_lifetime_s"] = e.mean_lifetime_s;
            d["mean_len"] = e.mean_len;
            d["mean_entropy"] = e.mean_entropy;
            d["actor_loss"] = e.actor_loss;
            d["critic_loss"] = e.critic_loss;
            rows.append(d);
          }
          return py::make_tuple(rows, r.final_checkpoint);
        },
        py::arg("instances"), py::arg("config") = py::none(), py::arg("out_dir"),
        py::arg("resume") = py::none(),
        "Runs training; returns (per-epoch metrics, path of final.ckpt).");

  m.def("load_checkpoint",
        [](const std::filesystem::path& path) {
          Checkpoint ck = load_checkpoint(path);
          py::dict d;
          d["epoch"] = ck.state.epoch;
          d["latent"] = ck.state.actor.shape().latent;
          d["actor_parameters"] = ck.state.actor.size();
          d["critic_parameters"] = ck.state.critic.size();
          d["config"] = to_py(train_config_to_json(ck.config));
          d["metadata"] = to_py(ck.metadata);
          return d;
        },
        py::arg("path"));

  m.def("spearman",
        [](const std::vector<double>& x, const std::vector<double>& y) {
          SpearmanResult r = spearman(x, y);
          return py::make_tuple(r.rho, r.p_value);
        },
        py::arg("x"), py::arg("y"), "Rank correlation with a two-sided p-value.");
}
