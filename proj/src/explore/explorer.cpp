#include "rme/explore/explorer.hpp"

#include <limits>
#include <unordered_map>

#include <json.hpp>

namespace rme {
namespace {

struct Visit {
  std::uint64_t paths = 0;
  bool on_stack = true;
};

struct Node {
  Machine machine;
  StateDigest key;
  std::uint32_t crashes = 0;
  std::vector<Transition> succ;
  std::size_t next = 0;
  std::uint64_t paths = 0;
  bool progressed = false;   // some ordinary step changed the state
  bool expandable = true;
  Transition via;
};

StateDigest key_of(const Machine& m, std::uint32_t crashes) {
  const auto d = m.digest();
  StateHasher h;
  h.add(d.lo);
  h.add(d.hi);
  h.add(crashes);
  return h.digest();
}

void apply(Machine& m, const Transition& t) {
  if (t.crash) m.crash(t.pid);
  m.step(t.pid);
}

std::uint64_t add_sat(std::uint64_t a, std::uint64_t b, bool& saturated) {
  if (a > std::numeric_limits<std::uint64_t>::max() - b) {
    saturated = true;
    return std::numeric_limits<std::uint64_t>::max();
  }
  return a + b;
}

}  // namespace

std::uint64_t ExplorationReport::violation_count() const {
  std::uint64_t total = 0;
  for (const auto& [kind, count] : violations) total += count;
  return total;
}

Trace replay_path(std::shared_ptr<const System> system, const std::vector<Transition>& path) {
  Trace trace;
  Machine m(std::move(system));
  m.add_sink(&trace);
  m.start();
  for (const auto& t : path) apply(m, t);
  return trace;
}

ExplorationReport explore(std::shared_ptr<const System> system, const ExploreBounds& bounds) {
  ExplorationReport report;
  std::unordered_map<StateDigest, Visit, StateDigestHash> visited;
  std::vector<Node> stack;
  const auto n = static_cast<Pid>(system->n());

  auto path_to = [&](const Transition* last) {
    std::vector<Transition> path;
    for (std::size_t k = 1; k < stack.size(); ++k) path.push_back(stack[k].via);
    if (last != nullptr) path.push_back(*last);
    return path;
  };
  auto record = [&](const Violation& v, std::vector<Transition> path) {
    const std::string kind{name_of(v.kind)};
    if (report.violations[kind]++ == 0) {
      Counterexample cx;
      cx.violation = v;
      cx.path = std::move(path);
      cx.trace = replay_path(system, cx.path);
      report.counterexamples.push_back(std::move(cx));
    }
  };
  auto open = [&](Machine&& m, std::uint32_t crashes, StateDigest key, Transition via) {
    Node node{std::move(m), key, crashes, {}, 0, 0, false, true, via};
    const auto& audit = node.machine.audit();
    node.expandable = bounds.continue_after_violation || audit.clean();
    if (node.machine.all_done()) {
      ++report.terminal_states;
      if (bounds.on_terminal) bounds.on_terminal(node.machine);
      node.expandable = false;
    }
    if (node.expandable) {
      for (Pid p = 1; p <= n; ++p) {
        const auto st = node.machine.status(p);
        if (st == ProcStatus::kDone) continue;
        node.succ.push_back({p, false});
        if (st == ProcStatus::kRunning && crashes < bounds.crash_budget) node.succ.push_back({p, true});
      }
    }
    stack.push_back(std::move(node));
    report.max_depth = std::max<std::uint64_t>(report.max_depth, stack.size() - 1);
  };

  {
    Machine root(system);
    root.start();
    const auto key = key_of(root, 0);
    visited.emplace(key, Visit{});
    report.states = 1;
    open(std::move(root), 0, key, Transition{});
  }

  while (!stack.empty()) {
    Node& top = stack.back();
    if (top.next == top.succ.size()) {
      if (top.expandable && !top.progressed) {
        Violation v{ViolationKind::kLostWakeup, top.machine.events(), 0, "every unfinished process can only spin"};
        for (Pid p = 1; p <= n; ++p) {
          if (top.machine.status(p) != ProcStatus::kDone) v.detail += " p" + std::to_string(p) + "@" + top.machine.point(p);
        }
        record(v, path_to(nullptr));
      }
      const std::uint64_t paths = top.paths == 0 ? 1 : top.paths;
      auto& visit = visited[top.key];
      visit.paths = paths;
      visit.on_stack = false;
      stack.pop_back();
      if (!stack.empty()) stack.back().paths = add_sat(stack.back().paths, paths, report.paths_saturated);
      else report.paths = paths;
      continue;
    }

    const Transition t = top.succ[top.next++];
    Machine child = top.machine;
    const std::size_t before = child.audit().violations().size();
    if (t.crash) report.crash_points.insert(child.point(t.pid));
    apply(child, t);
    ++report.transitions;
    const auto& found = child.audit().violations();
    for (std::size_t k = before; k < found.size(); ++k) record(found[k], path_to(&t));

    const std::uint32_t crashes = top.crashes + (t.crash ? 1 : 0);
    const auto key = key_of(child, crashes);
    if (key == top.key) continue;   // stutter
    if (!t.crash) top.progressed = true;
    if (auto it = visited.find(key); it != visited.end()) {
      if (it->second.on_stack) {
        report.acyclic = false;
      } else {
        top.paths = add_sat(top.paths, it->second.paths, report.paths_saturated);
      }
      continue;
    }
    if (report.states >= bounds.max_states) {
      report.truncated = true;
      continue;
    }
    visited.emplace(key, Visit{});
    ++report.states;
    open(std::move(child), crashes, key, t);
  }
  if (report.paths_saturated) report.paths = std::numeric_limits<std::uint64_t>::max();
  return report;
}

std::string to_json(const ExplorationReport& report) {
  nlohmann::json v = nlohmann::json::object();
  for (const auto& [kind, count] : report.violations) v[kind] = count;
  nlohmann::json cx = nlohmann::json::array();
  for (const auto& c : report.counterexamples) {
    cx.push_back({{"kind", std::string{name_of(c.violation.kind)}},
                  {"pid", c.violation.pid},
                  {"detail", c.violation.detail},
                  {"length", c.path.size()}});
  }
  nlohmann::json j = {{"states", report.states},
                      {"transitions", report.transitions},
                      {"terminal_states", report.terminal_states},
                      {"paths", report.paths},
                      {"paths_saturated", report.paths_saturated},
                      {"acyclic", report.acyclic},
                      {"truncated", report.truncated},
                      {"max_depth", report.max_depth},
                      {"crash_points", report.crash_points.size()},
                      {"violations", v},
                      {"counterexamples", cx}};
  return j.dump();
}

}  // namespace rme
