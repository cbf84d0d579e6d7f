#pragma once

// Finite presheaves with explicit restriction tables, the resource-model
// builders, functoriality and sheaf-condition checks, amalgamation, slice
// restriction, and matching objects.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sheafsep/element.hpp"
#include "sheafsep/error.hpp"
#include "sheafsep/fincat.hpp"
#include "sheafsep/site.hpp"

namespace sheafsep {

/// Location names of a powerset base, or of the base of a slice over one.
inline const std::vector<std::string>& locations_of(const FinCat& c) {
  if (c.kind == CatKind::Slice && c.slice) return c.slice->base->locations;
  return c.locations;
}

class Presheaf {
 public:
  Presheaf(CatPtr base, std::string name)
      : base_(std::move(base)),
        name_(std::move(name)),
        at_(base_->num_objects()),
        restrict_(base_->num_morphisms()) {}

  const FinCat& base() const { return *base_; }
  const CatPtr& base_ptr() const { return base_; }
  const std::string& name() const { return name_; }

  /// Stores the points of F(A) in canonical (sorted) order.
  void set_elements(ObjId a, std::vector<Element> elems) {
    base_->check_object(a);
    std::sort(elems.begin(), elems.end());
    elems.erase(std::unique(elems.begin(), elems.end()), elems.end());
    at_[a] = std::move(elems);
  }

  /// restrict(f) for f: A -> B maps indices of F(B) to indices of F(A).
  void set_restriction(MorId f, std::vector<int> table) { restrict_.at(f) = std::move(table); }

  /// Fills every restriction table from a rule on points.
  template <class Rule>
  void tabulate_restrictions(Rule rule) {
    const auto& c = *base_;
    for (MorId f = 0; f < c.num_morphisms(); ++f) {
      const auto& from = at_[c.dst(f)];
      std::vector<int> table(from.size());
      for (std::size_t i = 0; i < from.size(); ++i)
        table[i] = index_of(c.src(f), rule(f, from[i]));
      restrict_[f] = std::move(table);
    }
  }

  int size(ObjId a) const { return static_cast<int>(at_.at(a).size()); }
  const std::vector<Element>& elements(ObjId a) const { return at_.at(a); }
  const Element& at(ObjId a, int i) const { return at_.at(a).at(i); }

  std::optional<int> find(ObjId a, const Element& e) const {
    const auto& v = at_.at(a);
    auto it = std::lower_bound(v.begin(), v.end(), e);
    if (it == v.end() || !(*it == e)) return std::nullopt;
    return static_cast<int>(it - v.begin());
  }

  int index_of(ObjId a, const Element& e) const {
    auto i = find(a, e);
    if (!i)
      throw Error(ErrorKind::TypeMismatch,
                  describe_element(a, e) + " is not a point of " + name_ + "(" +
                      base_->object_name(a) + ")");
    return *i;
  }

  int restrict(MorId f, int i) const { return restrict_[f][i]; }
  const std::vector<int>& restriction(MorId f) const { return restrict_.at(f); }

  std::string describe(ObjId a, int i) const {
    if (describer) return describer(a, i);
    return describe_element(a, at(a, i));
  }

  std::string describe_element(ObjId, const Element& e) const {
    if (e.is<Heap>()) return format_heap(e.as<Heap>(), locations_of(*base_));
    if (e.is<Value>()) return std::to_string(e.as<Value>());
    if (e.is<std::string>()) return e.as<std::string>();
    if (e.is<StarPoint>()) return "*";
    if (e.is<ProbSpace>()) return format_space(e.as<ProbSpace>());
    if (e.is<MorWitness>()) return base_->morphism_name(e.as<MorWitness>().mor);
    if (e.is<ClassRef>()) return "#" + std::to_string(e.as<ClassRef>().id);
    if (e.is<Decomp>()) {
      const auto& d = e.as<Decomp>();
      std::string s = "(" + base_->object_name(d.left) + " | " + base_->object_name(d.right);
      if (components.size() == 2)
        s += ": " + components[0]->describe(d.left, d.s) + " ; " +
             components[1]->describe(d.right, d.t);
      return s + ")";
    }
    std::string s = "(";
    const auto& items = e.as<Tuple>().items;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) s += ", ";
      s += describe_element(kNone, items[i]);
    }
    return s + ")";
  }

  /// Optional custom rendering of points (class representatives and such).
  std::function<std::string(ObjId, int)> describer;
  /// Factor presheaves for decomposition points.
  std::vector<std::shared_ptr<const Presheaf>> components;

 private:
  CatPtr base_;
  std::string name_;
  std::vector<std::vector<Element>> at_;
  std::vector<std::vector<int>> restrict_;
};

using PresheafPtr = std::shared_ptr<const Presheaf>;

// ---------------------------------------------------------------------------
// Builders

enum class ResourceKind { StrictMemory, PartialMemory, SupportBounded, Constant, Yoneda, Terminal };

inline std::string_view to_string(ResourceKind k) {
  switch (k) {
    case ResourceKind::StrictMemory: return "strict-memory";
    case ResourceKind::PartialMemory: return "partial-memory";
    case ResourceKind::SupportBounded: return "support-bounded";
    case ResourceKind::Constant: return "constant";
    case ResourceKind::Yoneda: return "yoneda";
    case ResourceKind::Terminal: return "terminal";
  }
  return "?";
}

struct ResourceSpec {
  ResourceKind kind = ResourceKind::PartialMemory;
  std::vector<Value> values{0, 1};
  int support_bound = 1;
  std::vector<Element> constant;
  ObjId representing = kNone;
};

namespace detail {

/// Every heap on `stage`; cells range over `values`, plus ⊥ when partial.
inline std::vector<Heap> all_heaps(LocMask stage, const std::vector<Value>& values, bool partial,
                                   int max_support = std::numeric_limits<int>::max()) {
  std::vector<Heap> out{Heap{}};
  out.front().stage = 0;
  for (int loc = 0; loc < kMaxLocations; ++loc) {
    if (!((stage >> loc) & 1U)) continue;
    std::vector<Heap> next;
    for (const auto& h : out) {
      if (partial) {
        Heap b = h;
        b.set_bottom(loc);
        next.push_back(b);
      }
      if (h.support() >= max_support) continue;
      for (Value v : values) {
        Heap e = h;
        e.set(loc, v);
        next.push_back(e);
      }
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace detail

/// Builds one of the named resource presheaves over `base`.
inline PresheafPtr build_resource_sheaf(const CatPtr& base, const ResourceSpec& spec) {
  const auto& c = *base;
  const bool memory = spec.kind == ResourceKind::StrictMemory ||
                      spec.kind == ResourceKind::PartialMemory ||
                      spec.kind == ResourceKind::SupportBounded;
  if (memory && c.kind != CatKind::Powerset)
    throw Error(ErrorKind::KindMismatch,
                std::string(to_string(spec.kind)) + " needs a powerset base");
  if (memory && spec.values.empty())
    throw Error(ErrorKind::Validation, "memory presheaf needs at least one value");

  std::string name(to_string(spec.kind));
  if (spec.kind == ResourceKind::SupportBounded) name += "(" + std::to_string(spec.support_bound) + ")";
  auto F = std::make_shared<Presheaf>(base, name);
  switch (spec.kind) {
    case ResourceKind::StrictMemory:
    case ResourceKind::PartialMemory:
    case ResourceKind::SupportBounded: {
      const bool partial = spec.kind != ResourceKind::StrictMemory;
      const int bound = spec.kind == ResourceKind::SupportBounded
                            ? spec.support_bound
                            : std::numeric_limits<int>::max();
      for (ObjId a = 0; a < c.num_objects(); ++a) {
        auto heaps = detail::all_heaps(static_cast<LocMask>(a), spec.values, partial, bound);
        F->set_elements(a, {heaps.begin(), heaps.end()});
      }
      F->tabulate_restrictions([&](MorId f, const Element& e) -> Element {
        return e.as<Heap>().restrict_to(static_cast<LocMask>(c.src(f)));
      });
      break;
    }
    case ResourceKind::Constant: {
      if (spec.constant.empty())
        throw Error(ErrorKind::Validation, "constant presheaf needs a nonempty set");
      for (ObjId a = 0; a < c.num_objects(); ++a) F->set_elements(a, spec.constant);
      F->tabulate_restrictions([](MorId, const Element& e) { return e; });
      break;
    }
    case ResourceKind::Yoneda: {
      c.check_object(spec.representing);
      F = std::make_shared<Presheaf>(base, "yoneda(" + c.object_name(spec.representing) + ")");
      for (ObjId a = 0; a < c.num_objects(); ++a) {
        std::vector<Element> homs;
        for (MorId m : c.hom(a, spec.representing)) homs.emplace_back(MorWitness{m});
        F->set_elements(a, std::move(homs));
      }
      F->tabulate_restrictions([&](MorId f, const Element& e) -> Element {
        return MorWitness{c.then(f, e.as<MorWitness>().mor)};
      });
      break;
    }
    case ResourceKind::Terminal: {
      for (ObjId a = 0; a < c.num_objects(); ++a) F->set_elements(a, {StarPoint{}});
      F->tabulate_restrictions([](MorId, const Element& e) { return e; });
      break;
    }
  }
  return F;
}

inline PresheafPtr yoneda(const CatPtr& base, ObjId a) {
  ResourceSpec spec;
  spec.kind = ResourceKind::Yoneda;
  spec.representing = a;
  return build_resource_sheaf(base, spec);
}

// ---------------------------------------------------------------------------
// Functoriality

inline Report validate_presheaf(const Presheaf& F) {
  Report r;
  const auto& c = F.base();
  for (MorId f = 0; f < c.num_morphisms(); ++f) {
    const auto& t = F.restriction(f);
    bool typed = static_cast<int>(t.size()) == F.size(c.dst(f));
    for (int v : t) typed = typed && v >= 0 && v < F.size(c.src(f));
    if (!typed) r.add("typing", "restriction along " + c.morphism_name(f) + " is ill-typed");
  }
  if (!r.ok()) return r;
  for (ObjId a = 0; a < c.num_objects(); ++a) {
    const MorId id = c.identity(a);
    for (int i = 0; i < F.size(a); ++i)
      if (F.restrict(id, i) != i) {
        r.add("identity", "restriction along " + c.morphism_name(id) + " moves " + F.describe(a, i));
        break;
      }
  }
  for (MorId f = 0; f < c.num_morphisms(); ++f)
    for (MorId g : c.out_of(c.dst(f))) {
      const MorId gf = c.then(f, g);
      for (int i = 0; i < F.size(c.dst(g)); ++i)
        if (F.restrict(gf, i) != F.restrict(f, F.restrict(g, i))) {
          r.add("composition", "chain " + c.morphism_name(f) + " ; " + c.morphism_name(g) +
                                   " at " + F.describe(c.dst(g), i));
          break;
        }
    }
  return r;
}

/// A stage-wise map between presheaves on a common base; -1 marks points
/// where a partial map is undefined.
struct StageMap {
  PresheafPtr source;
  PresheafPtr target;
  std::vector<std::vector<int>> component;
  std::string name;

  int apply(ObjId a, int i) const { return component[a][i]; }
};

/// Naturality: wherever the map is defined at a point it is defined at every
/// restriction, and the square commutes.
inline Report check_naturality(const StageMap& m) {
  Report r;
  const auto& c = m.source->base();
  for (MorId h = 0; h < c.num_morphisms(); ++h) {
    const ObjId a = c.dst(h), b = c.src(h);
    for (int i = 0; i < m.source->size(a); ++i) {
      const int x = m.apply(a, i);
      if (x < 0) continue;
      const int y = m.apply(b, m.source->restrict(h, i));
      if (y != m.target->restrict(h, x)) {
        r.add("naturality", m.name + " along " + c.morphism_name(h) + " at " +
                                m.source->describe(a, i));
        if (r.violations.size() > 20) return r;
      }
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Compatible families

/// A family over a sieve, stored by position in `into(target)`; -1 marks
/// non-members.
struct MatchingFamily {
  ObjId target = kNone;
  SieveBits cover = 0;
  std::vector<int> values;

  auto operator<=>(const MatchingFamily&) const = default;
};

/// A family given on some members of a sieve (typically its generators).
struct CompatibleFamily {
  ObjId target = kNone;
  SieveBits cover = 0;
  std::vector<std::pair<MorId, int>> assignment;
};

inline std::string describe_family(const Presheaf& F, const SieveIndex& idx,
                                   const MatchingFamily& fam, bool generators_only = true) {
  const auto& c = idx.cat();
  std::vector<MorId> shown =
      generators_only ? idx.generators(fam.target, fam.cover) : idx.members(fam.target, fam.cover);
  std::string s = "{";
  for (std::size_t i = 0; i < shown.size(); ++i) {
    if (i) s += ", ";
    const MorId f = shown[i];
    s += c.morphism_name(f) + " -> " + F.describe(c.src(f), fam.values[idx.position(f)]);
  }
  return s + "}";
}

/// Enumerates the compatible families over one sieve by choosing values on
/// its generators and extending by restriction.
class FamilyEnumerator {
 public:
  FamilyEnumerator(const Presheaf& F, const SieveIndex& idx, ObjId a, SieveBits s)
      : F_(F), idx_(idx), a_(a), s_(s), gens_(idx.generators(a, s)) {
    const auto& c = idx.cat();
    for (MorId h : idx.members(a, s)) {
      bool found = false;
      for (std::size_t gi = 0; gi < gens_.size() && !found; ++gi)
        for (MorId k : c.hom(c.src(h), c.src(gens_[gi])))
          if (c.then(k, gens_[gi]) == h) {
            steps_.push_back({h, static_cast<int>(gi), k});
            found = true;
            break;
          }
    }
  }

  const std::vector<MorId>& generators() const { return gens_; }

  /// Number of generator assignments, saturating at max().
  std::uint64_t candidates() const {
    std::uint64_t n = 1;
    for (MorId g : gens_) {
      const auto k = static_cast<std::uint64_t>(F_.size(idx_.cat().src(g)));
      if (k == 0) return 0;
      if (n > std::numeric_limits<std::uint64_t>::max() / k)
        return std::numeric_limits<std::uint64_t>::max();
      n *= k;
    }
    return n;
  }

  /// Extends generator values to the whole sieve; nullopt when the result is
  /// not compatible (witness written if requested).
  std::optional<MatchingFamily> extend(const std::vector<int>& gen_values,
                                       std::string* witness = nullptr) const {
    const auto& c = idx_.cat();
    MatchingFamily fam{a_, s_, std::vector<int>(c.into(a_).size(), -1)};
    for (const auto& st : steps_)
      fam.values[idx_.position(st.member)] = F_.restrict(st.k, gen_values[st.gen]);
    if (auto w = incompatibility(fam)) {
      if (witness) *witness = *w;
      return std::nullopt;
    }
    return fam;
  }

  /// First commuting square on which the family disagrees.
  std::optional<std::string> incompatibility(const MatchingFamily& fam) const {
    const auto& c = idx_.cat();
    for (MorId f : idx_.members(a_, s_))
      for (MorId k : c.into(c.src(f))) {
        const MorId fk = c.then(k, f);
        const int lhs = F_.restrict(k, fam.values[idx_.position(f)]);
        const int rhs = fam.values[idx_.position(fk)];
        if (lhs != rhs)
          return "restricting the value at " + c.morphism_name(f) + " along " +
                 c.morphism_name(k) + " gives " + F_.describe(c.src(fk), lhs) +
                 " but the value at " + c.morphism_name(fk) + " is " +
                 F_.describe(c.src(fk), rhs);
      }
    return std::nullopt;
  }

  template <class Fn>
  void for_each(std::uint64_t budget, Fn&& fn) const {
    const auto total = candidates();
    if (total > budget)
      throw Error(ErrorKind::Budget, "cover " + idx_.describe(a_, s_) + " of " +
                                         idx_.cat().object_name(a_) + " has " +
                                         std::to_string(gens_.size()) + " generators and " +
                                         (total == std::numeric_limits<std::uint64_t>::max()
                                              ? std::string("too many")
                                              : std::to_string(total)) +
                                         " candidate families; budget is " +
                                         std::to_string(budget));
    if (total == 0) return;
    std::vector<int> vals(gens_.size(), 0);
    while (true) {
      if (auto fam = extend(vals)) fn(*fam);
      std::size_t i = 0;
      for (; i < gens_.size(); ++i) {
        if (++vals[i] < F_.size(idx_.cat().src(gens_[i]))) break;
        vals[i] = 0;
      }
      if (i == gens_.size()) break;
    }
  }

 private:
  struct Step {
    MorId member;
    int gen;
    MorId k;
  };
  const Presheaf& F_;
  const SieveIndex& idx_;
  ObjId a_;
  SieveBits s_;
  std::vector<MorId> gens_;
  std::vector<Step> steps_;
};

/// The family of restrictions of a point to every member of a sieve.
inline MatchingFamily family_of(const Presheaf& F, const SieveIndex& idx, ObjId a, SieveBits s,
                                int point) {
  MatchingFamily fam{a, s, std::vector<int>(idx.cat().into(a).size(), -1)};
  for (MorId f : idx.members(a, s)) fam.values[idx.position(f)] = F.restrict(f, point);
  return fam;
}

/// Completes a family given on some members by restriction.
inline MatchingFamily complete_family(const Presheaf& F, const SieveIndex& idx,
                                      const CompatibleFamily& given) {
  const auto& c = idx.cat();
  c.check_object(given.target);
  if (!idx.is_sieve(given.target, given.cover))
    throw Error(ErrorKind::TypeMismatch, "cover is not a sieve on " + c.object_name(given.target));
  MatchingFamily fam{given.target, given.cover, std::vector<int>(c.into(given.target).size(), -1)};
  for (const auto& [f, x] : given.assignment) {
    if (c.dst(f) != given.target || !(given.cover & idx.bit(f)))
      throw Error(ErrorKind::TypeMismatch, c.morphism_name(f) + " is not a member of the cover");
    if (x < 0 || x >= F.size(c.src(f)))
      throw Error(ErrorKind::TypeMismatch, "value index out of range at " + c.morphism_name(f));
    for (MorId k : c.into(c.src(f))) {
      const MorId fk = c.then(k, f);
      const int v = F.restrict(k, x);
      int& slot = fam.values[idx.position(fk)];
      if (slot >= 0 && slot != v)
        throw Error(ErrorKind::Incompatible,
                    "values clash at " + c.morphism_name(fk) + ": " +
                        F.describe(c.src(fk), slot) + " vs " + F.describe(c.src(fk), v));
      slot = v;
    }
  }
  for (MorId f : idx.members(given.target, given.cover))
    if (fam.values[idx.position(f)] < 0)
      throw Error(ErrorKind::TypeMismatch, "family gives no value at " + c.morphism_name(f));
  FamilyEnumerator check(F, idx, given.target, given.cover);
  if (auto w = check.incompatibility(fam)) throw Error(ErrorKind::Incompatible, *w);
  return fam;
}

/// Every point whose restrictions reproduce the family.
inline std::vector<int> amalgams(const Presheaf& F, const SieveIndex& idx,
                                 const MatchingFamily& fam) {
  std::vector<int> out;
  const auto members = idx.members(fam.target, fam.cover);
  for (int a = 0; a < F.size(fam.target); ++a) {
    bool ok = true;
    for (MorId f : members)
      if (F.restrict(f, a) != fam.values[idx.position(f)]) {
        ok = false;
        break;
      }
    if (ok) out.push_back(a);
  }
  return out;
}

/// The unique amalgamation of a compatible family.
inline int amalgamate(const Presheaf& F, const SieveIndex& idx, const CompatibleFamily& given) {
  const auto fam = complete_family(F, idx, given);
  const auto found = amalgams(F, idx, fam);
  if (found.empty())
    throw Error(ErrorKind::NoAmalgamation, "no amalgamation of " + describe_family(F, idx, fam));
  if (found.size() > 1)
    throw Error(ErrorKind::NonUnique, "amalgamations " + F.describe(fam.target, found[0]) +
                                          " and " + F.describe(fam.target, found[1]) + " of " +
                                          describe_family(F, idx, fam));
  return found.front();
}

inline int amalgamate(const Presheaf& F, const CompatibleFamily& given) {
  SieveIndex idx(F.base_ptr());
  return amalgamate(F, idx, given);
}

// ---------------------------------------------------------------------------
// Sheaf condition

struct SheafCheckOptions {
  std::uint64_t budget = 5'000'000;
  std::size_t max_witnesses = 25;
};

namespace detail {

inline void check_one_family(const Presheaf& F, const SieveIndex& idx, const MatchingFamily& fam,
                             int found, int first, int second, Report& r,
                             const SheafCheckOptions& opt) {
  if (r.violations.size() >= opt.max_witnesses) return;
  const auto& c = idx.cat();
  if (found == 0)
    r.add("existence", "cover " + idx.describe(fam.target, fam.cover) + " of " +
                           c.object_name(fam.target) + ": family " + describe_family(F, idx, fam) +
                           " has no amalgamation");
  else if (found > 1)
    r.add("uniqueness", "cover " + idx.describe(fam.target, fam.cover) + " of " +
                            c.object_name(fam.target) + ": family " +
                            describe_family(F, idx, fam) + " amalgamates to both " +
                            F.describe(fam.target, first) + " and " +
                            F.describe(fam.target, second));
}

}  // namespace detail

/// Exhaustive sheaf check: every compatible family over every cover has
/// exactly one amalgamation.
inline Report check_sheaf(const Presheaf& F, const Coverage& cov,
                          const SheafCheckOptions& opt = {}) {
  Report r;
  const auto& idx = cov.sieves();
  const auto& c = cov.cat();
  std::uint64_t families = 0;
  for (ObjId a = 0; a < c.num_objects(); ++a)
    for (SieveBits s : cov.covers(a)) {
      FamilyEnumerator en(F, idx, a, s);
      const auto& gens = en.generators();
      // Group points by their generator restrictions.
      std::map<std::vector<int>, std::vector<int>> by_key;
      for (int p = 0; p < F.size(a); ++p) {
        std::vector<int> key;
        key.reserve(gens.size());
        for (MorId g : gens) key.push_back(F.restrict(g, p));
        by_key[key].push_back(p);
      }
      en.for_each(opt.budget, [&](const MatchingFamily& fam) {
        ++families;
        std::vector<int> key;
        key.reserve(gens.size());
        for (MorId g : gens) key.push_back(fam.values[idx.position(g)]);
        auto it = by_key.find(key);
        const int n = it == by_key.end() ? 0 : static_cast<int>(it->second.size());
        if (n != 1)
          detail::check_one_family(F, idx, fam, n, n ? it->second[0] : -1,
                                   n > 1 ? it->second[1] : -1, r, opt);
      });
    }
  r.notes.push_back("checked " + std::to_string(families) + " compatible families over " +
                    std::to_string(cov.total()) + " covers");
  return r;
}

/// Sheaf check restricted to supplied families.
inline Report check_sheaf(const Presheaf& F, const Coverage& cov,
                          const std::vector<CompatibleFamily>& families,
                          const SheafCheckOptions& opt = {}) {
  Report r;
  const auto& idx = cov.sieves();
  for (const auto& given : families) {
    if (!cov.is_cover(given.target, given.cover)) {
      r.add("cover", idx.describe(given.target, given.cover) + " is not a cover of " +
                         cov.cat().object_name(given.target));
      continue;
    }
    MatchingFamily fam;
    try {
      fam = complete_family(F, idx, given);
    } catch (const Error& e) {
      r.add("compatibility", e.what());
      continue;
    }
    const auto found = amalgams(F, idx, fam);
    const int n = static_cast<int>(found.size());
    if (n != 1)
      detail::check_one_family(F, idx, fam, n, n ? found[0] : -1, n > 1 ? found[1] : -1, r, opt);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Slices and matching objects

/// F ∘ dom_A on the slice category.
inline PresheafPtr slice_restrict(const PresheafPtr& F, const SliceCategory& sl) {
  const auto& sc = *sl.cat;
  auto out = std::make_shared<Presheaf>(sl.cat, F->name() + "/" +
                                                    sl.cat->slice->base->object_name(
                                                        sl.cat->slice->apex));
  for (ObjId p = 0; p < sc.num_objects(); ++p)
    out->set_elements(p, F->elements(sl.dom.object_map[p]));
  for (MorId g = 0; g < sc.num_morphisms(); ++g)
    out->set_restriction(g, F->restriction(sl.dom.morphism_map[g]));
  auto dom = sl.dom.object_map;
  out->describer = [F, dom](ObjId p, int i) { return F->describe(dom[p], i); };
  return out;
}

inline PresheafPtr slice_restrict(const PresheafPtr& F, ObjId apex) {
  return slice_restrict(F, slice_category(F->base_ptr(), apex));
}

/// A commuting square f∘pf = g∘pg with apex `apex`.
struct PullbackSquare {
  ObjId apex = kNone;
  MorId pf = kNone;
  MorId pg = kNone;
};

/// The pullback of two inclusions in a powerset base: the intersection.
inline PullbackSquare powerset_pullback(const FinCat& c, MorId f, MorId g) {
  const LocMask i = static_cast<LocMask>(c.src(f)) & static_cast<LocMask>(c.src(g));
  return {static_cast<ObjId>(i), inclusion_or_throw(c, i, static_cast<LocMask>(c.src(f))),
          inclusion_or_throw(c, i, static_cast<LocMask>(c.src(g)))};
}

/// Pairs (s_f, s_g) of points that agree on the pullback.
inline std::vector<std::pair<int, int>> matching_object(const Presheaf& F, MorId f, MorId g,
                                                        const PullbackSquare& pb) {
  const auto& c = F.base();
  if (c.dst(f) != c.dst(g))
    throw Error(ErrorKind::TypeMismatch, c.morphism_name(f) + " and " + c.morphism_name(g) +
                                             " have different targets");
  if (c.dst(pb.pf) != c.src(f) || c.dst(pb.pg) != c.src(g) || c.src(pb.pf) != pb.apex ||
      c.src(pb.pg) != pb.apex || c.then(pb.pf, f) != c.then(pb.pg, g))
    throw Error(ErrorKind::TypeMismatch, "supplied pullback square does not commute");
  std::vector<std::pair<int, int>> out;
  for (int s = 0; s < F.size(c.src(f)); ++s)
    for (int t = 0; t < F.size(c.src(g)); ++t)
      if (F.restrict(pb.pf, s) == F.restrict(pb.pg, t)) out.emplace_back(s, t);
  return out;
}

inline bool in_matching_object(const Presheaf& F, MorId f, MorId g, const PullbackSquare& pb,
                               int s, int t) {
  const auto pairs = matching_object(F, f, g, pb);
  return std::find(pairs.begin(), pairs.end(), std::make_pair(s, t)) != pairs.end();
}

}  // namespace sheafsep
