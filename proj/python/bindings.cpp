#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "edgewatch/command.hpp"
#include "edgewatch/config.hpp"
#include "edgewatch/errors.hpp"
#include "edgewatch/llm_client.hpp"
#include "edgewatch/prompt.hpp"
#include "edgewatch/scenario.hpp"
#include "edgewatch/slack.hpp"
#include "edgewatch/tracker.hpp"

namespace py = pybind11;
using namespace edgewatch;

namespace {

TimePoint from_ms(std::int64_t ms) { return TimePoint{Millis{ms}}; }

py::dict scenario_result(const ScenarioResult &r) {
  py::list assertions;
  for (const auto &a : r.assertions) {
    py::dict d;
    d["text"] = a.text;
    d["passed"] = a.passed;
    d["lhs"] = a.lhs;
    d["rhs"] = a.rhs;
    d["error"] = a.error;
    assertions.append(d);
  }
  py::dict out;
  out["name"] = r.name;
  out["passed"] = r.passed();
  out["metrics"] = r.metrics;
  out["summary"] = r.summary;
  out["assertions"] = assertions;
  return out;
}

}  // namespace

PYBIND11_MODULE(_edgewatch, m) {
  m.doc() = "edgewatch core: tracker, command grammar, prompts, configs and scenarios";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<ScenarioError>(m, "ScenarioError", base.ptr());

  py::class_<BBox>(m, "BBox")
      .def(py::init<>())
      .def(py::init([](double x1, double y1, double x2, double y2) { return BBox{x1, y1, x2, y2}; }),
           py::arg("x1"), py::arg("y1"), py::arg("x2"), py::arg("y2"))
      .def_readwrite("x1", &BBox::x1)
      .def_readwrite("y1", &BBox::y1)
      .def_readwrite("x2", &BBox::x2)
      .def_readwrite("y2", &BBox::y2)
      .def("area", &BBox::area)
      .def("__eq__", [](const BBox &a, const BBox &b) { return a == b; })
      .def("__repr__", [](const BBox &b) {
        return "BBox(" + std::to_string(b.x1) + ", " + std::to_string(b.y1) + ", " + std::to_string(b.x2) +
               ", " + std::to_string(b.y2) + ")";
      });

  py::class_<Detection>(m, "Detection")
      .def(py::init([](BBox box, std::string label, double confidence) {
             return Detection{box, std::move(label), confidence};
           }),
           py::arg("box"), py::arg("label"), py::arg("confidence"))
      .def_readwrite("box", &Detection::box)
      .def_readwrite("label", &Detection::label)
      .def_readwrite("confidence", &Detection::confidence);

  py::class_<Track>(m, "Track")
      .def_readonly("id", &Track::id)
      .def_readonly("box", &Track::box)
      .def_readonly("label", &Track::label)
      .def_readonly("lost_count", &Track::lost_count);

  py::class_<TrackerConfig>(m, "TrackerConfig")
      .def(py::init<>())
      .def_readwrite("theta", &TrackerConfig::theta)
      .def_readwrite("l_max", &TrackerConfig::l_max)
      .def_readwrite("dwell_seconds", &TrackerConfig::dwell_seconds)
      .def_readwrite("cooldown_seconds", &TrackerConfig::cooldown_seconds)
      .def_readwrite("target_labels", &TrackerConfig::target_labels)
      .def("validate", &TrackerConfig::validate);

  py::class_<TrackerState>(m, "TrackerState")
      .def(py::init<>())
      .def_readonly("tracks", &TrackerState::tracks)
      .def_readonly("next_id", &TrackerState::next_id);

  m.def("iou", &iou, py::arg("a"), py::arg("b"));
  m.def(
      "passive_tracker_update",
      [](TrackerState &state, const Detections &detections, const TrackerConfig &cfg, std::int64_t now_ms) {
        return passive_tracker_update(state, detections, cfg, from_ms(now_ms));
      },
      py::arg("state"), py::arg("detections"), py::arg("config"), py::arg("now_ms"),
      "Updates `state` in place; returns [(track_id, detection)] for matched tracks.");
  m.def(
      "evaluate_triggers",
      [](TrackerState &state, const TrackerConfig &cfg, std::int64_t now_ms) {
        return evaluate_triggers(state, cfg, from_ms(now_ms));
      },
      py::arg("state"), py::arg("config"), py::arg("now_ms"));

  m.def(
      "parse_command",
      [](const std::string &text) {
        auto cmd = parse_command(text);
        py::dict d;
        d["kind"] = std::string(command_name(cmd.kind));
        d["params"] = cmd.params;
        d["raw"] = cmd.raw;
        return d;
      },
      py::arg("text"));
  m.def(
      "format_args", [](const std::map<std::string, std::string> &args) { return format_args(ConfigArgs{args}); },
      py::arg("args"));
  m.def(
      "build_prompt",
      [](const std::string &path, const Detections &detections, std::int64_t ts_ms, const std::string &args,
         std::size_t max_chars) { return build_prompt(path, detections, from_ms(ts_ms), args, max_chars); },
      py::arg("path"), py::arg("detections"), py::arg("timestamp_ms"), py::arg("args"),
      py::arg("max_chars") = kDefaultPromptCap);
  m.def(
      "ollama_request_body",
      [](const std::string &model, const std::string &prompt) {
        return ollama_request_body(LlmRequest{model, prompt, false});
      },
      py::arg("model"), py::arg("prompt"));
  m.def("socket_mode_ack", &socket_mode_ack, py::arg("envelope_id"));

  m.def(
      "load_config",
      [](const std::filesystem::path &path) {
        auto config = load_config(path);
        py::dict d;
        for (const auto &line : split(describe_config(config), '\n')) {
          auto eq = line.find(" = ");
          if (eq != std::string::npos) d[py::str(line.substr(0, eq))] = line.substr(eq + 3);
        }
        return d;
      },
      py::arg("path"), "Loads and validates a run config; returns the effective settings.");
  m.def(
      "run_scenario",
      [](const std::filesystem::path &path, const std::string &metrics_out) {
        auto scenario = load_scenario(path);
        if (!metrics_out.empty()) scenario.config.metrics_out = metrics_out;
        ScenarioResult result;
        {
          py::gil_scoped_release release;
          result = run_scenario(scenario);
        }
        return scenario_result(result);
      },
      py::arg("path"), py::arg("metrics_out") = "");
}
