// fmtool: command line front end for FM models.
//
// Exit codes: 0 success / valid / conforms, 1 validation or conformance
// failure, 2 usage or I/O error. Diagnostics go to stderr.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "fm/fm.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

struct IoError {
  std::string message;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError{"cannot read '" + path + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text, bool append = false) {
  std::ofstream out(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
  if (!out || !(out << text)) throw IoError{"cannot write '" + path + "'"};
}

void print_diags(const std::vector<fm::Diagnostic>& diags) {
  for (const auto& d : diags) std::cerr << fm::format_diagnostic(d) << "\n";
}

// Parses, canonicalizes and validates. Prints diagnostics; nullopt if the
// model has errors.
std::optional<fm::Model> load_model(const std::string& path, fm::ValidationReport* report = nullptr) {
  auto parsed = fm::dsl::parse(read_file(path), path);
  print_diags(parsed.diagnostics);
  if (!parsed.ok()) return std::nullopt;
  auto canon = fm::dsl::canonicalize(std::move(parsed.model));
  print_diags(canon.diagnostics);
  if (!canon.ok()) return std::nullopt;
  auto r = fm::validate(canon.model);
  print_diags(r.diagnostics);
  if (report) *report = r;
  if (!r.ok) return std::nullopt;
  return std::move(canon.model);
}

struct Program {
  std::vector<fm::EventDef> events;
  fm::Automaton automaton;
};

// The named behavior, or the only one if `name` is empty.
std::optional<Program> load_program(const fm::Model& model, const std::string& name) {
  const fm::BehaviorDecl* decl = nullptr;
  if (name.empty()) {
    if (model.behaviors.size() != 1) {
      std::cerr << "error: --behavior is required (model declares " << model.behaviors.size() << " behaviors)\n";
      return std::nullopt;
    }
    decl = &model.behaviors[0];
  } else if (!(decl = model.find_behavior(name))) {
    std::cerr << "error: no behavior named '" << name << "'\n";
    return std::nullopt;
  }
  auto events = fm::build_events(model);
  if (auto* err = std::get_if<fm::EventError>(&events)) {
    std::cerr << "error: " << err->message << "\n";
    return std::nullopt;
  }
  std::set<std::string> names;
  for (const auto& e : std::get<std::vector<fm::EventDef>>(events)) names.insert(e.name);
  auto a = fm::compile(decl->program, names);
  if (auto* err = std::get_if<fm::CompileError>(&a)) {
    std::cerr << "error: behavior '" << decl->name << "': " << err->message << "\n";
    return std::nullopt;
  }
  return Program{std::get<std::vector<fm::EventDef>>(std::move(events)), std::get<fm::Automaton>(std::move(a))};
}

int cmd_check(const std::string& file) {
  fm::ValidationReport report;
  bool ok = load_model(file, &report).has_value();
  std::cout << fm::to_json(report).dump(2) << "\n";
  return ok ? kOk : kFail;
}

struct SimArgs {
  std::string file, scenario, trace, behavior, mode = "observe";
  std::int64_t ticks = 1000;
  std::int64_t dwell = 1;
};

int cmd_sim(const SimArgs& a) {
  auto model = load_model(a.file);
  if (!model) return kFail;
  auto sc = fm::parse_scenario(read_file(a.scenario), *model, a.scenario);
  print_diags(sc.diagnostics);
  if (!sc.ok()) return kUsage;
  std::optional<Program> program;
  if (!a.behavior.empty() || a.mode == "enforce") {
    program = load_program(*model, a.behavior);
    if (!program) return kUsage;
  }
  fm::SimConfig cfg;
  cfg.max_ticks = a.ticks;
  cfg.stage_dwell = a.dwell;
  if (a.mode == "enforce") cfg.gate = std::make_shared<fm::EnforceGate>(program->events, program->automaton);
  fm::Simulator sim(*model, std::move(sc.scenario), cfg);
  fm::Trace trace = sim.run();
  std::string text = fm::write_trace(trace);
  if (a.trace.empty()) std::cout << text;
  else write_file(a.trace, text);
  if (!program) return kOk;
  fm::Verdict v = fm::check(trace, program->events, program->automaton);
  (a.trace.empty() ? std::cerr : std::cout) << fm::to_json(v).dump() << "\n";
  return v.conforms || a.mode == "enforce" ? kOk : kFail;
}

int cmd_dot(const std::string& file, const std::string& behavior, bool show_implicit) {
  auto model = load_model(file);
  if (!model) return kFail;
  if (!behavior.empty()) {
    auto program = load_program(*model, behavior);
    if (!program) return kUsage;
    std::cout << fm::behavior_to_dot(program->automaton);
    return kOk;
  }
  std::cout << fm::model_to_dot(*model, {show_implicit});
  return kOk;
}

int cmd_conform(const std::string& file, const std::string& behavior, const std::string& trace_path) {
  auto model = load_model(file);
  if (!model) return kFail;
  auto program = load_program(*model, behavior);
  if (!program) return kUsage;
  auto trace = fm::read_trace(read_file(trace_path));
  if (auto* err = std::get_if<fm::TraceParseError>(&trace)) {
    std::cerr << trace_path << ": " << err->what() << "\n";
    return kUsage;
  }
  fm::Verdict v = fm::check(std::get<fm::Trace>(trace), program->events, program->automaton);
  std::cout << fm::to_json(v).dump(2) << "\n";
  return v.conforms ? kOk : kFail;
}

struct HistoryArgs {
  std::string log, slot, at, add, unit, performer, contractor, note;
};

int cmd_history(const HistoryArgs& a) {
  std::string text;
  try {
    text = read_file(a.log);
  } catch (const IoError&) {
    if (a.add.empty()) throw;
  }
  auto loaded = fm::history::load(text);
  if (auto* err = std::get_if<fm::history::Error>(&loaded)) {
    std::cerr << a.log << ": " << err->code << ": " << err->message << "\n";
    return kFail;
  }
  auto& log = std::get<fm::history::Log>(loaded);
  std::optional<fm::history::Seconds> at;
  if (!a.at.empty()) {
    at = fm::history::parse_time(a.at);
    if (!at) {
      std::cerr << "error: bad timestamp '" << a.at << "' (expected YYYY-MM-DDTHH:MM:SSZ)\n";
      return kUsage;
    }
  }

  if (!a.add.empty()) {
    auto action = fm::history::parse_action(a.add);
    if (!action || !at || a.unit.empty()) {
      std::cerr << "error: --add needs receive|install|remove, --unit and --at\n";
      return kUsage;
    }
    fm::history::Record r{a.slot, a.unit, *action, *at, a.performer, a.contractor, std::nullopt};
    if (!a.note.empty()) r.note = a.note;
    if (auto err = log.append(r)) {
      std::cerr << err->code << ": " << err->message << "\n";
      return kFail;
    }
    write_file(a.log, fm::history::to_line(r) + "\n", true);
    return kOk;
  }

  if (at) {
    auto unit = log.installed_at(a.slot, *at);
    if (auto* err = std::get_if<fm::history::Error>(&unit)) {
      std::cerr << err->code << ": " << err->message << "\n";
      return kFail;
    }
    const auto& u = std::get<std::optional<std::string>>(unit);
    std::cout << (u ? *u : "none") << "\n";
    return kOk;
  }
  auto tl = log.timeline(a.slot);
  if (auto* err = std::get_if<fm::history::Error>(&tl)) {
    std::cerr << err->code << ": " << err->message << "\n";
    return kFail;
  }
  for (const auto& r : std::get<std::vector<fm::history::Record>>(tl)) std::cout << fm::history::to_line(r) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flowthing machine models: check, simulate, export, conform, history"};
  app.require_subcommand(1);

  std::string file;
  auto* check = app.add_subcommand("check", "parse, canonicalize and validate a model");
  check->add_option("file", file, "model (.fm)")->required();

  SimArgs sim;
  auto* simc = app.add_subcommand("sim", "simulate a scenario and write the trace");
  simc->add_option("file", sim.file, "model (.fm)")->required();
  simc->add_option("--scenario", sim.scenario, "scenario (.fms)")->required();
  simc->add_option("--ticks", sim.ticks, "tick limit")->check(CLI::NonNegativeNumber);
  simc->add_option("--dwell", sim.dwell, "ticks per stage")->check(CLI::PositiveNumber);
  simc->add_option("--trace", sim.trace, "trace output (default stdout)");
  simc->add_option("--behavior", sim.behavior, "behavior to check or enforce");
  simc->add_option("--mode", sim.mode, "observe or enforce")->check(CLI::IsMember({"observe", "enforce"}));

  std::string behavior;
  bool show_implicit = false;
  auto* dot = app.add_subcommand("dot", "emit DOT for the model or a behavior");
  dot->add_option("file", file, "model (.fm)")->required();
  dot->add_option("--behavior", behavior, "emit this behavior's automaton instead");
  dot->add_flag("--show-implicit", show_implicit, "draw implicit stages and expanded chains");

  std::string trace;
  auto* conform = app.add_subcommand("conform", "check a trace against a behavior");
  conform->add_option("file", file, "model (.fm)")->required();
  conform->add_option("--behavior", behavior, "behavior name");
  conform->add_option("--trace", trace, "trace (.jsonl)")->required();

  HistoryArgs hist;
  auto* history = app.add_subcommand("history", "query or append a replacement log");
  history->add_option("log", hist.log, "history log (.fmh)")->required();
  history->add_option("--slot", hist.slot, "slot id")->required();
  history->add_option("--at", hist.at, "UTC timestamp");
  history->add_option("--add", hist.add, "append a record: receive, install or remove");
  history->add_option("--unit", hist.unit, "unit serial");
  history->add_option("--performer", hist.performer, "who did the work");
  history->add_option("--contractor", hist.contractor, "maintenance contractor");
  history->add_option("--note", hist.note, "free text");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*check) return cmd_check(file);
    if (*simc) return cmd_sim(sim);
    if (*dot) return cmd_dot(file, behavior, show_implicit);
    if (*conform) return cmd_conform(file, behavior, trace);
    if (*history) return cmd_history(hist);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.message << "\n";
    return kUsage;
  }
  return kUsage;
}
