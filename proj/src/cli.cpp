#include "compadapt/cli.hpp"

#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "compadapt/encode.hpp"
#include "compadapt/equivalence.hpp"
#include "compadapt/fuzz.hpp"
#include "compadapt/textio.hpp"

namespace compadapt {

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitCounterexample = 1;
constexpr int kExitInconclusive = 2;
constexpr int kExitUsage = 3;

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot open file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Semantics parse_semantics(const std::string& s) {
  if (s == "D") return Semantics::Discarding;
  if (s == "P") return Semantics::Preserving;
  if (s == "A") return Semantics::Aborting;
  throw UsageError("semantics must be D, P or A");
}

json step_to_json(const StepReport& s) {
  json j;
  j["step"] = s.description;
  if (s.shape != TauShape::None) j["class"] = tau_shape_text(s.shape);
  j["verdict"] = verdict_text(s.verdict);
  if (s.goal) j["goal"] = print_adapt(s.goal);
  if (s.matched) j["matched"] = print_adapt(s.matched);
  if (!s.witness.empty()) {
    json w = json::array();
    for (const auto& t : s.witness) w.push_back(print_adapt(t));
    j["witness"] = w;
  }
  if (!s.note.empty()) j["note"] = s.note;
  return j;
}

json report_to_json(const CorrespondenceReport& r) {
  json j;
  j["direction"] = r.forward ? "forward" : "backward";
  j["verdict"] = verdict_text(r.overall);
  j["depth"] = r.depth;
  j["truncated"] = r.truncated;
  j["steps"] = json::array();
  for (const auto& s : r.steps) j["steps"].push_back(step_to_json(s));
  j["passed"] = r.passed();
  j["failed"] = r.failed();
  j["inconclusive"] = r.inconclusive();
  return j;
}

int verdict_exit(Verdict v) {
  switch (v) {
    case Verdict::Pass: return kExitOk;
    case Verdict::Fail: return kExitCounterexample;
    case Verdict::Inconclusive: return kExitInconclusive;
  }
  return kExitUsage;
}

void print_report(const CorrespondenceReport& r, std::ostream& out) {
  out << (r.forward ? "forward" : "backward") << " check: " << verdict_text(r.overall)
      << " (" << r.passed() << " pass, " << r.failed() << " fail, " << r.inconclusive()
      << " inconclusive; depth " << r.depth << ")\n";
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    const StepReport& s = r.steps[i];
    out << "  [" << i << "] " << verdict_text(s.verdict) << ": " << s.description << "\n";
    if (s.verdict == Verdict::Pass && !s.witness.empty())
      out << "      matched in " << (s.witness.size() - 1) << " reduction(s)\n";
    if (!s.note.empty()) out << "      " << s.note << "\n";
  }
}

}  // namespace

int run_cli(std::vector<std::string> args, std::istream& in, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"compensable-to-adaptable process toolkit"};
  app.require_subcommand(1);

  std::string calculus = "comp";
  std::string semantics = "D";
  std::string file;
  std::string direction = "both";
  std::string path_text;
  bool dynamic = false;
  bool as_json = false;
  int depth = 0;
  int count = 100;
  int size = 12;
  std::uint64_t seed = 1;

  CLI::App* cmd_parse = app.add_subcommand("parse", "parse a term and echo its normal form");
  cmd_parse->add_option("--calculus", calculus, "comp or adapt")
      ->check(CLI::IsMember({"comp", "adapt"}));
  cmd_parse->add_option("file", file, "input file")->required();

  CLI::App* cmd_steps = app.add_subcommand("steps", "list the labeled transitions of a term");
  cmd_steps->add_option("--semantics", semantics)->check(CLI::IsMember({"D", "P", "A"}));
  cmd_steps->add_option("file", file)->required();

  CLI::App* cmd_trace = app.add_subcommand("trace", "interactively follow transitions");
  cmd_trace->add_option("--semantics", semantics)->check(CLI::IsMember({"D", "P", "A"}));
  cmd_trace->add_option("file", file)->required();

  CLI::App* cmd_encode = app.add_subcommand("encode", "translate into adaptable processes");
  cmd_encode->add_option("--semantics", semantics)->check(CLI::IsMember({"D", "P", "A"}));
  cmd_encode->add_flag("--dynamic", dynamic, "allow compensation updates");
  cmd_encode->add_option("--path", path_text, "encoding path (default empty)");
  cmd_encode->add_option("file", file)->required();

  CLI::App* cmd_check = app.add_subcommand("check", "operational-correspondence check");
  cmd_check->add_option("--semantics", semantics)->check(CLI::IsMember({"D", "P", "A"}));
  cmd_check->add_flag("--dynamic", dynamic);
  cmd_check->add_option("--depth", depth, "search depth (default 8 + 5*size)");
  cmd_check->add_option("--direction", direction)->check(CLI::IsMember({"fwd", "bwd", "both"}));
  cmd_check->add_flag("--json", as_json, "machine-readable report");
  cmd_check->add_option("--path", path_text);
  cmd_check->add_option("file", file)->required();

  CLI::App* cmd_fuzz = app.add_subcommand("fuzz", "differential correspondence testing");
  cmd_fuzz->add_option("--semantics", semantics)->check(CLI::IsMember({"D", "P", "A"}));
  cmd_fuzz->add_flag("--dynamic", dynamic);
  cmd_fuzz->add_option("--count", count);
  cmd_fuzz->add_option("--size", size);
  cmd_fuzz->add_option("--seed", seed);
  cmd_fuzz->add_option("--depth", depth);
  cmd_fuzz->add_option("--direction", direction)->check(CLI::IsMember({"fwd", "bwd", "both"}));
  cmd_fuzz->add_flag("--json", as_json);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (cmd_parse->parsed()) {
      std::string text = read_file(file);
      if (calculus == "comp") {
        out << print_comp(normalize(parse_comp(text))) << "\n";
      } else {
        out << print_adapt(normalize(parse_adapt(text))) << "\n";
      }
      return kExitOk;
    }

    if (cmd_steps->parsed()) {
      CompPtr term = parse_comp(read_file(file));
      Semantics k = parse_semantics(semantics);
      auto steps = transitions(term, k);
      for (std::size_t i = 0; i < steps.size(); ++i)
        out << "[" << i << "] " << label_text(steps[i].label) << " -> "
            << print_comp(normalize(steps[i].target)) << "\n";
      if (steps.empty()) out << "(no transitions)\n";
      return kExitOk;
    }

    if (cmd_trace->parsed()) {
      CompPtr term = parse_comp(read_file(file));
      Semantics k = parse_semantics(semantics);
      while (true) {
        out << "state: " << print_comp(normalize(term)) << "\n";
        auto steps = transitions(term, k);
        if (steps.empty()) {
          out << "(no transitions)\n";
          return kExitOk;
        }
        for (std::size_t i = 0; i < steps.size(); ++i)
          out << "[" << i << "] " << label_text(steps[i].label) << " -> "
              << print_comp(normalize(steps[i].target)) << "\n";
        out << "> " << std::flush;
        std::string line;
        if (!std::getline(in, line)) return kExitOk;
        if (line == "q" || line == "quit") return kExitOk;
        try {
          std::size_t idx = static_cast<std::size_t>(std::stoul(line));
          if (idx >= steps.size()) {
            out << "index out of range\n";
            continue;
          }
          term = steps[idx].target;
        } catch (const std::exception&) {
          out << "enter a transition index or q\n";
        }
      }
    }

    if (cmd_encode->parsed()) {
      CompPtr term = parse_comp(read_file(file));
      EncodingConfig cfg;
      cfg.semantics = parse_semantics(semantics);
      cfg.dynamic = dynamic;
      cfg.path = parse_path(path_text);
      out << print_adapt(encode(term, cfg)) << "\n";
      return kExitOk;
    }

    if (cmd_check->parsed()) {
      CompPtr term = parse_comp(read_file(file));
      EncodingConfig cfg;
      cfg.semantics = parse_semantics(semantics);
      cfg.dynamic = dynamic;
      cfg.path = parse_path(path_text);
      int d = depth > 0 ? depth : default_depth(term);
      json doc;
      doc["command"] = "check";
      doc["file"] = file;
      doc["semantics"] = semantics;
      doc["dynamic"] = dynamic;
      doc["path"] = path_text.empty() ? std::string(kEpsilon) : path_text;
      doc["depth"] = d;
      Verdict overall = Verdict::Pass;
      auto merge = [&](Verdict v) {
        if (v == Verdict::Fail || overall == Verdict::Fail)
          overall = Verdict::Fail;
        else if (v == Verdict::Inconclusive)
          overall = Verdict::Inconclusive;
      };
      json reports = json::array();
      if (direction == "fwd" || direction == "both") {
        CorrespondenceReport r = check_forward(term, cfg, d);
        merge(r.overall);
        if (as_json)
          reports.push_back(report_to_json(r));
        else
          print_report(r, out);
      }
      if (direction == "bwd" || direction == "both") {
        CorrespondenceReport r = check_backward(term, cfg, d);
        merge(r.overall);
        if (as_json)
          reports.push_back(report_to_json(r));
        else
          print_report(r, out);
      }
      if (as_json) {
        doc["reports"] = reports;
        doc["verdict"] = verdict_text(overall);
        doc["exit"] = verdict_exit(overall);
        out << doc.dump(2) << "\n";
      } else {
        out << "overall: " << verdict_text(overall) << "\n";
      }
      return verdict_exit(overall);
    }

    if (cmd_fuzz->parsed()) {
      GenConfig gen_cfg;
      gen_cfg.seed = seed;
      gen_cfg.max_size = size;
      gen_cfg.allow_dynamic = dynamic;
      gen_cfg.semantics = parse_semantics(semantics);
      EncodingConfig enc_cfg;
      enc_cfg.semantics = gen_cfg.semantics;
      enc_cfg.dynamic = dynamic;
      bool fwd = direction == "fwd" || direction == "both";
      bool bwd = direction == "bwd" || direction == "both";
      FuzzSummary s = fuzz_correspondence(gen_cfg, count, enc_cfg, depth, fwd, bwd);
      Verdict overall = s.failed > 0 ? Verdict::Fail
                        : s.inconclusive > 0 ? Verdict::Inconclusive
                                             : Verdict::Pass;
      if (as_json) {
        json doc;
        doc["command"] = "fuzz";
        doc["seed"] = s.seed;
        doc["count"] = s.count;
        doc["passed"] = s.passed;
        doc["failed"] = s.failed;
        doc["inconclusive"] = s.inconclusive;
        doc["semantics"] = semantics;
        doc["dynamic"] = dynamic;
        json fails = json::array();
        for (const auto& f : s.failures) {
          json jf;
          jf["index"] = f.index;
          jf["term"] = print_comp(f.term);
          jf["shrunk"] = print_comp(f.shrunk);
          jf["detail"] = f.detail;
          fails.push_back(jf);
        }
        doc["failures"] = fails;
        doc["verdict"] = verdict_text(overall);
        out << doc.dump(2) << "\n";
      } else {
        out << "fuzz: " << s.passed << " pass, " << s.failed << " fail, " << s.inconclusive
            << " inconclusive (seed " << s.seed << ", count " << s.count << ")\n";
        for (const auto& f : s.failures)
          out << "  [" << f.index << "] " << f.detail << "\n    term:   " << print_comp(f.term)
              << "\n    shrunk: " << print_comp(f.shrunk) << "\n";
      }
      return verdict_exit(overall);
    }
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace compadapt
