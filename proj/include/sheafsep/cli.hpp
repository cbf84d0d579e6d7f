#pragma once

// The command-line surface: check-site, check-sheaf, laws, eval, sat, psl.
// Reports go to `out` (text, or JSON with --json); timings go to `err`.
// Exit codes: 0 when every check passes or the formula is satisfied, 1
// otherwise, 2 on a usage or input error.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sheafsep/laws.hpp"
#include "sheafsep/model.hpp"

namespace sheafsep {

namespace cli {

using ojson = nlohmann::ordered_json;

struct Options {
  std::string command;
  std::string model_path;
  std::string formula;
  std::string stage;
  std::string heap;
  std::string space;
  std::string mode = "unfolded";
  std::uint64_t seed = kDefaultSeed;
  bool json = false;
};

struct Outcome {
  ojson report;
  std::vector<SuiteResult> checks;
  bool ok = true;
};

inline ojson check_json(const SuiteResult& s) {
  ojson j;
  j["name"] = s.name;
  j["status"] = s.ok() ? "pass" : "fail";
  j["violations"] = ojson::array();
  for (const auto& v : s.report.violations)
    j["violations"].push_back({{"check", v.check}, {"witness", v.witness}});
  j["notes"] = s.report.notes;
  j["stats"] = ojson::object();
  for (const auto& [k, v] : s.stats) j["stats"][k] = v;
  return j;
}

inline SuiteResult as_check(std::string name, Report r) {
  return SuiteResult{std::move(name), std::move(r), {}, 0};
}

inline SepMode parse_mode(const std::string& m) {
  if (m == "pipeline") return SepMode::Pipeline;
  if (m == "unfolded") return SepMode::Unfolded;
  throw Error(ErrorKind::Usage, "--mode must be pipeline or unfolded, not '" + m + "'");
}

inline const std::string& require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(ErrorKind::Usage, std::string("missing required flag ") + flag);
  return value;
}

/// A named formula from the model, or the literal text.
inline FormulaPtr formula_arg(const LoadedModel& lm, const std::string& text, const Vocabulary& vocab) {
  auto it = lm.formulas.find(text);
  return parse_formula(it == lm.formulas.end() ? text : it->second, &vocab);
}

inline const PslModel& space_arg(const LoadedModel& lm, const std::string& name) {
  if (name.empty()) {
    if (lm.spaces.size() == 1) return lm.spaces.begin()->second;
    throw Error(ErrorKind::Usage, "--space is required when the model declares " +
                                      std::to_string(lm.spaces.size()) + " spaces");
  }
  auto it = lm.spaces.find(name);
  if (it == lm.spaces.end()) throw Error(ErrorKind::UnknownIdentifier, "unknown space '" + name + "'");
  return it->second;
}

inline bool is_memory(const LoadedModel& lm) {
  return lm.site.cat->kind == CatKind::Powerset && lm.resource_kind != "probability";
}

inline void run_check_site(const LoadedModel& lm, Outcome& o) {
  auto r = validate_coverage(*lm.coverage);
  for (const auto& n : lm.coverage_notes) r.notes.push_back(n);
  auto s = as_check("coverage", std::move(r));
  s.stat("kind", std::string(to_string(lm.coverage_kind)));
  s.stat("objects", static_cast<std::size_t>(lm.site.cat->num_objects()));
  s.stat("covering-sieves", lm.coverage->total());
  o.checks.push_back(std::move(s));
}

inline void run_check_sheaf(const LoadedModel& lm, Outcome& o) {
  detail::Stopwatch sw;
  auto s = as_check("sheaf:" + lm.resource->name(), check_sheaf(*lm.resource, *lm.coverage));
  s.report.append(validate_presheaf(*lm.resource));
  s.seconds = sw.seconds();
  o.checks.push_back(std::move(s));
}

/// Stages whose fibre is small enough for exhaustive predicate enumeration.
inline std::vector<ObjId> small_stages(const ResourceModel& m, int max_points) {
  std::vector<ObjId> out;
  for (ObjId a = 0; a < m.base().num_objects(); ++a) {
    const auto f = m.fibre(a);
    int total = 0;
    for (int p = 0; p < f->num_objects(); ++p) total += f->size(p);
    if (total <= max_points) out.push_back(a);
  }
  return out;
}

inline void run_laws(const LoadedModel& lm, const Options& opt, Outcome& o) {
  const auto& model = *lm.model;
  const ObjId top_stage = model.base().num_objects() - 1;
  FibreCache cache(model.coverage());
  o.checks.push_back(
      residuation_suite(cache, model.resource(), small_stages(model, 8), top_stage, 500, opt.seed));
  if (!is_memory(lm)) {
    o.checks.push_back(psl_agreement_suite(4, {0, 1, 2}, 3));
    o.checks.push_back(psl_laws_suite(5, 500, opt.seed));
    return;
  }
  if (model.monoid()) o.checks.push_back(monoid_suite(*model.monoid()));
  std::optional<ResourceMonoid> total;
  try {
    total = build_memory_monoid(model.resource(), model.monoidal().tensor, MonoidVariant::Total);
  } catch (const Error& e) {
    o.checks.push_back(
        as_check("adjunction", Report{{}, {std::string("no total multiplication: ") + e.what()}}));
  }
  if (total) {
    std::vector<const StageMap*> maps{&total->mult, &model.amalgamation().amalg};
    o.checks.push_back(adjunction_suite(model, maps, 200, opt.seed));
  }
  if (model.monoid()) {
    o.checks.push_back(pipeline_suite(model, 200, opt.seed));
    o.checks.push_back(sepconj_suite(model, 100, opt.seed));
  }
  o.checks.push_back(day_suite(model.monoidal(), model.coverage(), total ? &*total : nullptr,
                               {model.resource()}));
  o.checks.push_back(amalgamation_suite(model));
}

inline ojson table_json(const KripkePredicate& P) {
  ojson rows = ojson::array();
  for (const auto& [obj, pts] : describe_predicate(P)) rows.push_back({{"object", obj}, {"points", pts}});
  return rows;
}

inline void run_eval(const LoadedModel& lm, const Options& opt, Outcome& o) {
  const auto& model = *lm.model;
  const auto vocab = lm.vocabulary();
  const auto phi = formula_arg(lm, require(opt.formula, "--formula"), vocab);
  if (!is_memory(lm)) lm.model->atoms = distribution_atoms(space_arg(lm, opt.space).variables);
  const ObjId stage = parse_stage_literal(model.base(), require(opt.stage, "--stage"));
  const auto P = eval_formula(model, *phi, stage, parse_mode(opt.mode));
  o.report["formula"] = to_string(*phi);
  o.report["stage"] = model.base().object_name(stage);
  o.report["mode"] = opt.mode;
  o.report["table"] = table_json(P);
}

inline void run_sat(const LoadedModel& lm, const Options& opt, Outcome& o) {
  const auto& model = *lm.model;
  if (!is_memory(lm))
    throw Error(ErrorKind::KindMismatch, "sat needs a memory model; use psl for probability spaces");
  const auto vocab = lm.vocabulary();
  const auto phi = formula_arg(lm, require(opt.formula, "--formula"), vocab);
  const ObjId stage = parse_stage_literal(model.base(), require(opt.stage, "--stage"));
  Heap h = parse_heap_literal(model.base(), require(opt.heap, "--heap"));
  if (h.stage != static_cast<LocMask>(stage))
    throw Error(ErrorKind::TypeMismatch, "heap " + opt.heap + " does not cover exactly the stage " +
                                             model.base().object_name(stage));
  const auto r = sat(model, *phi, stage, Element(h), parse_mode(opt.mode));
  o.ok = r.result;
  o.report["formula"] = to_string(*phi);
  o.report["stage"] = model.base().object_name(stage);
  o.report["heap"] = model.resource()->describe_element(stage, Element(h));
  o.report["mode"] = opt.mode;
  o.report["result"] = r.result;
  if (r.witness) {
    const auto& w = *r.witness;
    const auto& F = *model.resource();
    o.report["witness"] = {{"left_stage", model.base().object_name(w.left)},
                           {"right_stage", model.base().object_name(w.right)},
                           {"left", F.describe(w.left, w.s)},
                           {"right", F.describe(w.right, w.t)}};
  } else {
    o.report["witness"] = nullptr;
  }
  o.report["explanation"] = r.explanation;
}

inline void run_psl(const LoadedModel& lm, const Options& opt, Outcome& o) {
  const auto vocab = lm.vocabulary();
  const auto phi = formula_arg(lm, require(opt.formula, "--formula"), vocab);
  const auto& sp = space_arg(lm, opt.space);
  const auto r = psl_sat(sp, *phi);
  o.ok = r.result;
  o.report["formula"] = to_string(*phi);
  o.report["space"] = opt.space.empty() ? lm.spaces.begin()->first : opt.space;
  o.report["result"] = r.result;
  if (r.witness) {
    ojson mu1 = ojson::array(), mu2 = ojson::array();
    for (const auto& x : r.witness->mu1) mu1.push_back(to_string(x));
    for (const auto& x : r.witness->mu2) mu2.push_back(to_string(x));
    o.report["witness"] = {{"q1", describe_quotient(r.witness->pair.q1)},
                           {"q2", describe_quotient(r.witness->pair.q2)},
                           {"mu1", mu1},
                           {"mu2", mu2}};
  } else {
    o.report["witness"] = nullptr;
  }
}

inline void print_text(std::ostream& out, const ojson& report) {
  for (const auto& [key, value] : report.items()) {
    if (key == "checks") {
      for (const auto& c : value) {
        out << "[" << c["status"].get<std::string>() << "] " << c["name"].get<std::string>();
        for (const auto& [k, v] : c["stats"].items()) out << "  " << k << "=" << v.get<std::string>();
        out << "\n";
        for (const auto& v : c["violations"])
          out << "  violation " << v["check"].get<std::string>() << ": "
              << v["witness"].get<std::string>() << "\n";
        for (const auto& n : c["notes"]) out << "  note: " << n.get<std::string>() << "\n";
      }
    } else if (key == "table") {
      out << "table:\n";
      for (const auto& row : value) {
        out << "  " << row["object"].get<std::string>() << ": {";
        bool first = true;
        for (const auto& p : row["points"]) {
          out << (first ? "" : ", ") << p.get<std::string>();
          first = false;
        }
        out << "}\n";
      }
    } else if (value.is_string()) {
      out << key << ": " << value.get<std::string>() << "\n";
    } else if (value.is_object()) {
      out << key << ":";
      for (const auto& [k, v] : value.items())
        out << " " << k << "=" << (v.is_string() ? v.get<std::string>() : v.dump());
      out << "\n";
    } else {
      out << key << ": " << value.dump() << "\n";
    }
  }
}

inline void print_error(std::ostream& out, ErrorKind kind, const std::string& message) {
  out << ojson{{"error", {{"kind", std::string(to_string(kind))}, {"message", message}}}}.dump() << "\n";
}

}  // namespace cli

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  cli::Options opt;
  CLI::App app{"Sheaf-theoretic separation logic checker"};
  app.require_subcommand(1);
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--model", opt.model_path, "model file (JSON)")->required();
    sub->add_option("--seed", opt.seed, "seed for randomized suites");
    sub->add_flag("--json", opt.json, "emit the report as JSON");
  };
  const auto add_formula = [&](CLI::App* sub) {
    sub->add_option("--formula", opt.formula, "formula text or the name of a model formula");
  };
  std::vector<CLI::App*> subs{
      app.add_subcommand("check-site", "validate the coverage"),
      app.add_subcommand("check-sheaf", "check the sheaf condition for the resource"),
      app.add_subcommand("laws", "run the law suites"),
      app.add_subcommand("eval", "evaluate a formula as a stage-indexed predicate"),
      app.add_subcommand("sat", "decide satisfaction of a heap at a stage"),
      app.add_subcommand("psl", "decide a probabilistic formula on a space"),
  };
  for (auto* s : subs) add_common(s);
  for (auto* s : {subs[3], subs[4], subs[5]}) add_formula(s);
  for (auto* s : {subs[3], subs[4]}) {
    s->add_option("--stage", opt.stage, "stage literal such as {x,y}");
    s->add_option("--mode", opt.mode, "pipeline or unfolded")->check(CLI::IsMember({"pipeline", "unfolded"}));
  }
  subs[4]->add_option("--heap", opt.heap, "heap literal such as {x:0, y:null}");
  subs[3]->add_option("--space", opt.space, "space whose variables interpret distribution atoms");
  subs[5]->add_option("--space", opt.space, "space name from the model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    cli::print_error(out, ErrorKind::Usage, e.what());
    return 2;
  }
  for (auto* s : subs)
    if (s->parsed()) opt.command = s->get_name();

  cli::Outcome o;
  cli::ojson& rep = o.report;
  rep["command"] = opt.command;
  rep["model"] = opt.model_path;
  detail::Stopwatch sw;
  try {
    const auto lm = load_model_file(opt.model_path);
    if (opt.command == "check-site")
      cli::run_check_site(lm, o);
    else if (opt.command == "check-sheaf")
      cli::run_check_sheaf(lm, o);
    else if (opt.command == "laws")
      cli::run_laws(lm, opt, o);
    else if (opt.command == "eval")
      cli::run_eval(lm, opt, o);
    else if (opt.command == "sat")
      cli::run_sat(lm, opt, o);
    else
      cli::run_psl(lm, opt, o);
  } catch (const Error& e) {
    cli::print_error(out, e.kind(), e.what());
    return 2;
  }
  if (!o.checks.empty()) {
    rep["checks"] = cli::ojson::array();
    for (const auto& c : o.checks) {
      rep["checks"].push_back(cli::check_json(c));
      o.ok = o.ok && c.ok();
      err << c.name << ": " << c.seconds << " s\n";
    }
  }
  rep["status"] = o.ok ? "pass" : "fail";
  if (rep.contains("result")) rep["status"] = o.ok ? "satisfied" : "not satisfied";
  err << "total: " << sw.seconds() << " s\n";
  if (opt.json)
    out << rep.dump(2) << "\n";
  else
    cli::print_text(out, rep);
  return o.ok ? 0 : 1;
}

}  // namespace sheafsep
