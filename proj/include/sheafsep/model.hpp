#pragma once

// JSON model files: a site, a resource sheaf, an optional resource monoid,
// named formulas, and named probability spaces with random variables.
//
//   {
//     "schema_version": 1,
//     "site": {"base": "powerset", "locations": ["x", "y"], "coverage": "downward-closed"},
//     "resource": {"kind": "partial-memory", "values": [0, 1]},
//     "monoid": "weak",
//     "formulas": {"dup": "x |->! 0 * x |->! 0"},
//     "spaces": {"bits": {"measure": ["1/4", "1/4", "1/4", "1/4"],
//                         "variables": {"X": [0, 0, 1, 1]}}}
//   }

#include <cctype>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sheafsep/psl.hpp"
#include "sheafsep/seplogic.hpp"

namespace sheafsep {

inline constexpr int kSchemaVersion = 1;

struct LoadedModel {
  std::string source;
  MonoidalCategory site;
  CoverageKind coverage_kind = CoverageKind::DownwardClosed;
  std::vector<std::string> coverage_notes;
  std::shared_ptr<const Coverage> coverage;
  PresheafPtr resource;
  ResourceSpec resource_spec;
  std::string resource_kind;
  std::unique_ptr<ResourceModel> model;
  std::map<std::string, std::string> formulas;
  std::map<std::string, PslModel> spaces;

  Vocabulary vocabulary() const {
    Vocabulary v;
    for (const auto& l : locations_of(*site.cat)) v.locations.insert(l);
    if (resource_spec.kind == ResourceKind::StrictMemory ||
        resource_spec.kind == ResourceKind::PartialMemory ||
        resource_spec.kind == ResourceKind::SupportBounded)
      v.values.insert(resource_spec.values.begin(), resource_spec.values.end());
    for (const auto& [name, sp] : spaces)
      for (const auto& [var, X] : sp.variables) v.variables.insert(var);
    return v;
  }
};

namespace detail {

using json = nlohmann::json;

[[noreturn]] inline void schema_error(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::Schema, path + ": " + what);
}

inline const json& field(const json& j, const std::string& path, const char* key) {
  if (!j.is_object()) schema_error(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) schema_error(path + "." + key, "missing field");
  return *it;
}

inline std::string string_field(const json& j, const std::string& path, const char* key,
                                std::optional<std::string> fallback = std::nullopt) {
  if (j.is_object() && !j.contains(key) && fallback) return *fallback;
  const auto& v = field(j, path, key);
  if (!v.is_string()) schema_error(path + "." + key, "expected a string");
  return v.get<std::string>();
}

inline Rational parse_rational(const json& v, const std::string& path) {
  if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
  if (!v.is_string()) schema_error(path, "expected a rational such as \"1/2\"");
  const auto s = v.get<std::string>();
  try {
    const auto slash = s.find('/');
    const std::int64_t n = std::stoll(s.substr(0, slash));
    const std::int64_t d = slash == std::string::npos ? 1 : std::stoll(s.substr(slash + 1));
    if (d <= 0) schema_error(path, "denominator must be positive");
    return Rational(n, d);
  } catch (const std::invalid_argument&) {
    schema_error(path, "'" + s + "' is not a rational");
  } catch (const std::out_of_range&) {
    schema_error(path, "'" + s + "' is out of range");
  }
}

inline CoverageKind coverage_kind_of(const std::string& s, const std::string& path) {
  if (s == "downward-closed") return CoverageKind::DownwardClosed;
  if (s == "finite-covers") return CoverageKind::FiniteCovers;
  if (s == "atomic") return CoverageKind::Atomic;
  if (s == "precovers") return CoverageKind::Saturated;
  schema_error(path, "unknown coverage '" + s +
                         "' (expected downward-closed, finite-covers, atomic or precovers)");
}

inline ResourceKind resource_kind_of(const std::string& s, const std::string& path) {
  for (auto k : {ResourceKind::StrictMemory, ResourceKind::PartialMemory, ResourceKind::SupportBounded,
                 ResourceKind::Constant, ResourceKind::Yoneda, ResourceKind::Terminal})
    if (s == to_string(k)) return k;
  schema_error(path, "unknown resource kind '" + s + "'");
}

inline ObjId object_by_name(const FinCat& c, const std::string& name, const std::string& path) {
  if (auto o = c.find_object(name)) return *o;
  // Accept stage literals with spaces, such as "{x, y}".
  std::string compact;
  for (char ch : name)
    if (!std::isspace(static_cast<unsigned char>(ch))) compact += ch;
  if (auto o = c.find_object(compact)) return *o;
  throw Error(ErrorKind::UnknownObject, path + ": unknown object '" + name + "'");
}

inline PslModel load_space(const json& j, const std::string& path) {
  PslModel m;
  const auto& measure = field(j, path, "measure");
  if (!measure.is_array() || measure.empty()) schema_error(path + ".measure", "expected a nonempty array");
  std::vector<Rational> masses;
  for (std::size_t i = 0; i < measure.size(); ++i)
    masses.push_back(parse_rational(measure[i], path + ".measure[" + std::to_string(i) + "]"));
  if (j.contains("blocks")) {
    // Measures are per block; blocks list 1-based points.
    const auto& blocks = j["blocks"];
    if (!blocks.is_array() || blocks.size() != masses.size())
      schema_error(path + ".blocks", "expected one block per measure entry");
    int n = 0;
    for (const auto& b : blocks)
      for (const auto& p : b) n = std::max(n, p.get<int>());
    m.space.block.assign(n, -1);
    for (std::size_t b = 0; b < blocks.size(); ++b)
      for (const auto& p : blocks[b]) {
        const int pt = p.get<int>();
        if (pt < 1 || m.space.block[pt - 1] != -1)
          schema_error(path + ".blocks", "point " + std::to_string(pt) + " is invalid or repeated");
        m.space.block[pt - 1] = static_cast<int>(b);
      }
    for (int b : m.space.block)
      if (b < 0) schema_error(path + ".blocks", "blocks do not cover {1.." + std::to_string(n) + "}");
    m.space.measure = masses;
    m.space.normalize();
  } else {
    m.space = discrete_space(masses);
  }
  const auto rep = validate_space(m.space);
  if (!rep.ok()) throw Error(ErrorKind::Validation, path + ": " + rep.violations.front().witness);
  if (j.contains("variables")) {
    for (const auto& [name, vals] : j["variables"].items()) {
      const auto vpath = path + ".variables." + name;
      if (!vals.is_array() || static_cast<int>(vals.size()) != m.space.points())
        schema_error(vpath, "expected " + std::to_string(m.space.points()) + " integers");
      RandomVariable X;
      for (const auto& v : vals) {
        if (!v.is_number_integer()) schema_error(vpath, "expected integers");
        X.push_back(v.get<Value>());
      }
      m.variables.emplace(name, std::move(X));
    }
  }
  return m;
}

}  // namespace detail

inline LoadedModel load_model(const nlohmann::json& j, const std::string& source = "<model>") {
  using detail::field;
  using detail::schema_error;
  using detail::string_field;
  LoadedModel out;
  out.source = source;
  if (!j.is_object()) schema_error("$", "model must be a JSON object");
  const auto& ver = field(j, "$", "schema_version");
  if (!ver.is_number_integer() || ver.get<int>() != kSchemaVersion)
    schema_error("$.schema_version", "expected " + std::to_string(kSchemaVersion));

  // Site.
  const auto& site = field(j, "$", "site");
  const auto base = string_field(site, "$.site", "base");
  if (base == "powerset") {
    const auto& locs = field(site, "$.site", "locations");
    if (!locs.is_array()) schema_error("$.site.locations", "expected an array of names");
    std::vector<std::string> names;
    for (const auto& l : locs) {
      if (!l.is_string()) schema_error("$.site.locations", "expected strings");
      names.push_back(l.get<std::string>());
    }
    out.site = build_powerset_category(names);
  } else if (base == "finsurj") {
    const auto& n = field(site, "$.site", "max_size");
    if (!n.is_number_integer()) schema_error("$.site.max_size", "expected an integer");
    out.site = build_finsurj_category(n.get<int>());
  } else {
    schema_error("$.site.base", "unknown base '" + base + "' (expected powerset or finsurj)");
  }
  out.coverage_kind = detail::coverage_kind_of(
      string_field(site, "$.site", "coverage", std::string("downward-closed")), "$.site.coverage");
  if (out.coverage_kind == CoverageKind::Saturated) {
    std::vector<PreCover> pre;
    const auto& pcs = field(site, "$.site", "precovers");
    if (!pcs.is_array()) schema_error("$.site.precovers", "expected an array");
    const auto& c = *out.site.cat;
    for (std::size_t i = 0; i < pcs.size(); ++i) {
      const auto path = "$.site.precovers[" + std::to_string(i) + "]";
      PreCover pc;
      pc.target = detail::object_by_name(c, string_field(pcs[i], path, "target"), path + ".target");
      for (const auto& m : field(pcs[i], path, "family")) {
        const ObjId src = detail::object_by_name(c, m.get<std::string>(), path + ".family");
        const auto& h = c.hom(src, pc.target);
        if (h.size() != 1)
          schema_error(path + ".family", m.get<std::string>() + " has no unique map into the target");
        pc.family.push_back(h.front());
      }
      pre.push_back(std::move(pc));
    }
    out.coverage = std::make_shared<const Coverage>(saturate_precoverage(out.site.cat, pre));
  } else {
    auto built = build_coverage(out.site.cat, out.coverage_kind);
    out.coverage_notes = built.notes;
    out.coverage = std::make_shared<const Coverage>(std::move(built.coverage));
  }

  // Resource.
  const auto& res = field(j, "$", "resource");
  out.resource_kind = string_field(res, "$.resource", "kind");
  if (out.resource_kind == "probability") {
    int denominator = 2;
    if (res.contains("denominator")) denominator = res["denominator"].get<int>();
    out.resource = probability_presheaf(out.site.cat, denominator);
  } else {
    auto& spec = out.resource_spec;
    spec.kind = detail::resource_kind_of(out.resource_kind, "$.resource.kind");
    if (res.contains("values")) {
      spec.values.clear();
      for (const auto& v : res["values"]) {
        if (!v.is_number_integer()) schema_error("$.resource.values", "expected integers");
        spec.values.push_back(v.get<Value>());
      }
    }
    if (res.contains("support_bound")) spec.support_bound = res["support_bound"].get<int>();
    if (res.contains("constant"))
      for (const auto& v : res["constant"]) spec.constant.emplace_back(v.get<Value>());
    if (res.contains("representing"))
      spec.representing = detail::object_by_name(*out.site.cat, res["representing"].get<std::string>(),
                                                 "$.resource.representing");
    out.resource = build_resource_sheaf(out.site.cat, spec);
  }

  // Monoid.
  std::optional<MonoidVariant> variant;
  if (j.contains("monoid") && !j["monoid"].is_null()) {
    const auto v = j["monoid"].get<std::string>();
    if (v == "total")
      variant = MonoidVariant::Total;
    else if (v == "weak")
      variant = MonoidVariant::Weak;
    else if (v == "strong")
      variant = MonoidVariant::Strong;
    else
      schema_error("$.monoid", "unknown monoid '" + v + "' (expected total, weak or strong)");
  }
  out.model = std::make_unique<ResourceModel>(out.site, out.coverage, out.resource, variant);

  if (j.contains("formulas"))
    for (const auto& [name, text] : j["formulas"].items()) {
      if (!text.is_string()) schema_error("$.formulas." + name, "expected a formula string");
      out.formulas.emplace(name, text.get<std::string>());
    }
  if (j.contains("spaces"))
    for (const auto& [name, sp] : j["spaces"].items())
      out.spaces.emplace(name, detail::load_space(sp, "$.spaces." + name));
  return out;
}

inline LoadedModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Usage, "cannot open model file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Schema, path + ": " + e.what());
  }
  try {
    return load_model(j, path);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Literals

/// "{x,y}" or "{}" to the powerset object with those locations; other
/// bases take an object name.
inline ObjId parse_stage_literal(const FinCat& c, const std::string& text) {
  if (c.kind != CatKind::Powerset) return detail::object_by_name(c, text, "stage");
  std::string s;
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
  if (s.size() < 2 || s.front() != '{' || s.back() != '}')
    throw Error(ErrorKind::Syntax, "stage literal must look like {x,y}: '" + text + "'");
  LocMask mask = 0;
  std::stringstream body(s.substr(1, s.size() - 2));
  std::string name;
  while (std::getline(body, name, ','))
    if (!name.empty()) mask |= LocMask{1} << location_index(c, name);
  return static_cast<ObjId>(mask);
}

/// "{x:0, y:null}" to a heap; null marks ⊥.
inline Heap parse_heap_literal(const FinCat& c, const std::string& text) {
  std::string s;
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
  if (s.size() < 2 || s.front() != '{' || s.back() != '}')
    throw Error(ErrorKind::Syntax, "heap literal must look like {x:0, y:null}: '" + text + "'");
  Heap h;
  std::stringstream body(s.substr(1, s.size() - 2));
  std::string cell;
  while (std::getline(body, cell, ',')) {
    if (cell.empty()) continue;
    const auto colon = cell.find(':');
    if (colon == std::string::npos)
      throw Error(ErrorKind::Syntax, "heap cell '" + cell + "' needs the form loc:value");
    const int x = location_index(c, cell.substr(0, colon));
    const auto v = cell.substr(colon + 1);
    if (v == "null") {
      h.set_bottom(x);
    } else {
      try {
        std::size_t used = 0;
        const Value val = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        h.set(x, val);
      } catch (const std::exception&) {
        throw Error(ErrorKind::Syntax, "heap cell '" + cell + "' has a malformed value");
      }
    }
  }
  return h;
}

}  // namespace sheafsep
