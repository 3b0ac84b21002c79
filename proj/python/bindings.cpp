#include <pybind11/pybind11.h>

#include <json.hpp>

#include "rme/explore/explorer.hpp"
#include "rme/harness/campaign.hpp"
#include "rme/reclaim/reclaimer.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

template <typename E>
E named(const std::string& text, const char* what) {
  if (auto v = rme::parse_enum<E>(text)) return *v;
  throw py::value_error(std::string{"unknown "} + what + " '" + text + "'");
}

/// Hands a JSON document to Python as plain dicts and lists.
py::object to_python(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

py::object run_stress(int n, std::uint64_t seed, double crash_prob, std::uint64_t events, const std::string& variant,
                      const std::string& mutation, std::uint64_t patience) {
  rme::RunSpec spec;
  spec.workload.n = n;
  spec.workload.variant = named<rme::Variant>(variant, "variant");
  spec.workload.mutation = named<rme::Mutation>(mutation, "mutation");
  spec.schedule.n = n;
  spec.schedule.seed = seed;
  spec.schedule.max_events = events;
  if (crash_prob > 0) {
    spec.schedule.crash.mode = rme::CrashMode::kRandom;
    spec.schedule.crash.probability = crash_prob;
  }
  spec.patience = patience;
  rme::validate(spec.schedule);
  rme::RunReport r;
  {
    py::gil_scoped_release release;
    r = rme::run_workload(spec);
  }
  return to_python({{"n", n},
                    {"seed", seed},
                    {"events", r.result.events},
                    {"crashes", r.result.crashes},
                    {"pool_swaps", r.pool_swap_checks},
                    {"stats", json::parse(r.stats.to_json())},
                    {"violations", json::parse(rme::to_json(r.violations))}});
}

py::object explore(int n, std::uint64_t passages, std::uint32_t crash_budget, std::uint64_t max_states,
                   const std::string& variant, const std::string& mutation) {
  if (n < 1 || passages < 1) throw py::value_error("n and passages must be at least 1");
  rme::WorkloadConfig w;
  w.n = n;
  w.variant = named<rme::Variant>(variant, "variant");
  w.mutation = named<rme::Mutation>(mutation, "mutation");
  w.max_passages = passages;
  w.deterministic = true;
  rme::ExploreBounds b;
  b.crash_budget = crash_budget;
  b.max_states = max_states;
  rme::ExplorationReport report;
  {
    py::gil_scoped_release release;
    report = rme::explore(rme::build_workload(w).system, b);
  }
  return to_python(json::parse(rme::to_json(report)));
}

py::object replay(const std::string& path, std::uint64_t patience) {
  const auto trace = rme::load_trace(path);
  const auto r = rme::replay_trace(trace, patience);
  return to_python({{"events", r.events},
                    {"stats", json::parse(r.stats.to_json())},
                    {"violations", json::parse(rme::to_json(r.violations))}});
}

}  // namespace

PYBIND11_MODULE(rme_reclaim, m) {
  m.doc() = "Recoverable memory reclamation simulator: stress runs, exhaustive exploration, trace replay.";
  py::register_exception<rme::ConfigError>(m, "ConfigError", PyExc_ValueError);
  m.def("run_stress", &run_stress, py::arg("n"), py::arg("seed") = 1, py::arg("crash_prob") = 0.01,
        py::arg("events") = 100000, py::arg("variant") = "dsm", py::arg("mutation") = "none",
        py::arg("patience") = 20000, "One seeded run of the process loop; returns stats and violations.");
  m.def("explore", &explore, py::arg("n") = 2, py::arg("passages") = 2, py::arg("crash_budget") = 1,
        py::arg("max_states") = 5000000, py::arg("variant") = "dsm", py::arg("mutation") = "none",
        "Exhaustive exploration of the deterministic process loop.");
  m.def("replay", &replay, py::arg("path"), py::arg("patience") = 20000, "Re-audits a stored trace.");
  m.def("pool_size", [](int n) { return rme::pool_size(n); }, py::arg("n"), "Nodes per pool for n processes.");
}
