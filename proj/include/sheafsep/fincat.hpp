#pragma once

// Finite categories with explicit hom-sets and composition tables, the
// strict monoidal structures used by the built-in sites, functors between
// finite categories, and slice categories.

#include <algorithm>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sheafsep/error.hpp"

namespace sheafsep {

using ObjId = int;
using MorId = int;
using LocMask = std::uint32_t;

inline constexpr int kNone = -1;

/// Default size bounds for the enumerated built-ins.
inline constexpr int kMaxLocations = 4;
inline constexpr int kMaxSurjSize = 4;

enum class CatKind { Generic, Powerset, FinSurj, Slice };

class FinCat;

/// Extra data for a slice category C/A.
struct SliceData {
  std::shared_ptr<const FinCat> base;
  ObjId apex = kNone;
  std::vector<MorId> legs;        // slice object -> base morphism into apex
  std::vector<MorId> underlying;  // slice morphism -> base morphism
};

class FinCat {
 public:
  FinCat() = default;

  ObjId add_object(std::string name) {
    objects_.push_back(std::move(name));
    identities_.push_back(kNone);
    incoming_.emplace_back();
    outgoing_.emplace_back();
    hom_dirty_ = true;
    return static_cast<ObjId>(objects_.size()) - 1;
  }

  MorId add_morphism(ObjId src, ObjId dst, std::string name) {
    check_object(src);
    check_object(dst);
    const auto id = static_cast<MorId>(src_.size());
    src_.push_back(src);
    dst_.push_back(dst);
    mor_names_.push_back(std::move(name));
    incoming_[dst].push_back(id);
    outgoing_[src].push_back(id);
    hom_dirty_ = true;
    return id;
  }

  void set_identity(ObjId o, MorId m) {
    check_object(o);
    identities_[o] = m;
  }

  /// Records g∘f = h. No typing check; validate_category reports mistakes.
  void set_compose(MorId g, MorId f, MorId h) {
    ensure_table();
    comp_[index(g, f)] = h;
  }

  /// Fills the composition table from a callback on composable pairs.
  template <class Fn>
  void fill_composition(Fn&& fn) {
    ensure_table();
    for (MorId f = 0; f < num_morphisms(); ++f)
      for (MorId g : outgoing_[dst_[f]]) comp_[index(g, f)] = fn(g, f);
  }

  int num_objects() const { return static_cast<int>(objects_.size()); }
  int num_morphisms() const { return static_cast<int>(src_.size()); }

  ObjId src(MorId m) const { return src_.at(m); }
  ObjId dst(MorId m) const { return dst_.at(m); }
  MorId identity(ObjId o) const { return identities_.at(o); }
  bool is_identity(MorId m) const { return identities_.at(src_.at(m)) == m; }

  /// g∘f, or nullopt when undefined.
  std::optional<MorId> compose(MorId g, MorId f) const {
    if (comp_.empty()) return std::nullopt;
    const MorId h = comp_[index(g, f)];
    if (h == kNone) return std::nullopt;
    return h;
  }

  /// g∘f for a pair known to be composable.
  MorId then(MorId f, MorId g) const {
    auto h = compose(g, f);
    if (!h)
      throw Error(ErrorKind::TypeMismatch,
                  "cannot compose " + mor_names_[g] + " after " + mor_names_[f]);
    return *h;
  }

  const std::vector<MorId>& hom(ObjId a, ObjId b) const {
    build_homs();
    return homs_[static_cast<std::size_t>(a) * objects_.size() + b];
  }
  const std::vector<MorId>& into(ObjId b) const { return incoming_.at(b); }
  const std::vector<MorId>& out_of(ObjId a) const { return outgoing_.at(a); }

  const std::string& object_name(ObjId o) const { return objects_.at(o); }
  const std::string& morphism_name(MorId m) const { return mor_names_.at(m); }

  std::optional<ObjId> find_object(const std::string& name) const {
    for (ObjId o = 0; o < num_objects(); ++o)
      if (objects_[o] == name) return o;
    return std::nullopt;
  }

  /// True when every hom-set has at most one element.
  bool is_thin() const {
    for (ObjId a = 0; a < num_objects(); ++a)
      for (ObjId b = 0; b < num_objects(); ++b)
        if (hom(a, b).size() > 1) return false;
    return true;
  }

  void check_object(ObjId o) const {
    if (o < 0 || o >= num_objects())
      throw Error(ErrorKind::UnknownObject, "unknown object id " + std::to_string(o));
  }

  // Kind-specific payloads.
  CatKind kind = CatKind::Generic;
  std::vector<std::string> locations;           // Powerset: object id == mask
  std::vector<int> sizes;                       // FinSurj: object -> |set|
  std::vector<std::vector<int>> maps;           // FinSurj: morphism -> function (0-based)
  std::optional<SliceData> slice;               // Slice

 private:
  std::size_t index(MorId g, MorId f) const {
    return static_cast<std::size_t>(g) * src_.size() + f;
  }
  void ensure_table() {
    const std::size_t need = src_.size() * src_.size();
    if (comp_.size() != need) {
      // Rebuild preserving nothing: the table is filled once after all
      // morphisms exist.
      comp_.assign(need, kNone);
    }
  }
  void build_homs() const {
    if (!hom_dirty_) return;
    homs_.assign(objects_.size() * objects_.size(), {});
    for (MorId m = 0; m < num_morphisms(); ++m)
      homs_[static_cast<std::size_t>(src_[m]) * objects_.size() + dst_[m]].push_back(m);
    hom_dirty_ = false;
  }

  std::vector<std::string> objects_;
  std::vector<MorId> identities_;
  std::vector<ObjId> src_, dst_;
  std::vector<std::string> mor_names_;
  std::vector<MorId> comp_;
  std::vector<std::vector<MorId>> incoming_, outgoing_;
  mutable std::vector<std::vector<MorId>> homs_;
  mutable bool hom_dirty_ = true;
};

using CatPtr = std::shared_ptr<const FinCat>;

/// A strict (possibly partial) monoidal structure on a finite category.
struct MonoidalStructure {
  std::vector<ObjId> tensor_obj;  // n*n, kNone when undefined
  std::vector<MorId> tensor_mor;  // m*m, kNone when undefined
  ObjId unit = kNone;
  bool symmetric = false;
  int n = 0;
  int m = 0;

  std::optional<ObjId> tensor(ObjId a, ObjId b) const {
    const ObjId r = tensor_obj.at(static_cast<std::size_t>(a) * n + b);
    return r == kNone ? std::nullopt : std::optional<ObjId>(r);
  }
  std::optional<MorId> tensor_morphism(MorId f, MorId g) const {
    const MorId r = tensor_mor.at(static_cast<std::size_t>(f) * m + g);
    return r == kNone ? std::nullopt : std::optional<MorId>(r);
  }
};

struct MonoidalCategory {
  CatPtr cat;
  MonoidalStructure tensor;
};

/// Object and morphism maps between two finite categories.
struct FunctorData {
  CatPtr source;
  CatPtr target;
  std::vector<ObjId> object_map;
  std::vector<MorId> morphism_map;
};

// ---------------------------------------------------------------------------
// Powerset category

inline std::string mask_name(const std::vector<std::string>& locs, LocMask mask) {
  std::string s = "{";
  bool first = true;
  for (std::size_t i = 0; i < locs.size(); ++i) {
    if (!(mask & (LocMask{1} << i))) continue;
    if (!first) s += ",";
    s += locs[i];
    first = false;
  }
  return s + "}";
}

inline bool subset(LocMask a, LocMask b) { return (a & ~b) == 0; }

/// The morphism A ⊆ B of a powerset category, if any.
inline std::optional<MorId> inclusion(const FinCat& c, LocMask a, LocMask b) {
  const auto& h = c.hom(static_cast<ObjId>(a), static_cast<ObjId>(b));
  if (h.empty()) return std::nullopt;
  return h.front();
}

inline MorId inclusion_or_throw(const FinCat& c, LocMask a, LocMask b) {
  auto m = inclusion(c, a, b);
  if (!m)
    throw Error(ErrorKind::TypeMismatch, mask_name(c.locations, a) + " is not a subset of " +
                                             mask_name(c.locations, b));
  return *m;
}

/// Powerset of `locations` ordered by inclusion, with union as tensor and ∅
/// as unit. Object ids coincide with location bitmasks.
inline MonoidalCategory build_powerset_category(const std::vector<std::string>& locations,
                                                int max_locations = kMaxLocations) {
  if (static_cast<int>(locations.size()) > max_locations)
    throw Error(ErrorKind::SizeBound, "powerset base has " + std::to_string(locations.size()) +
                                          " locations; bound is " +
                                          std::to_string(max_locations));
  auto c = std::make_shared<FinCat>();
  c->kind = CatKind::Powerset;
  c->locations = locations;
  const LocMask n = LocMask{1} << locations.size();
  for (LocMask a = 0; a < n; ++a) c->add_object(mask_name(locations, a));
  std::vector<MorId> inc(static_cast<std::size_t>(n) * n, kNone);
  for (LocMask a = 0; a < n; ++a)
    for (LocMask b = 0; b < n; ++b)
      if (subset(a, b)) {
        const MorId m = c->add_morphism(static_cast<ObjId>(a), static_cast<ObjId>(b),
                                        mask_name(locations, a) + "<=" + mask_name(locations, b));
        inc[a * n + b] = m;
        if (a == b) c->set_identity(static_cast<ObjId>(a), m);
      }
  c->fill_composition([&](MorId g, MorId f) {
    return inc[static_cast<LocMask>(c->src(f)) * n + static_cast<LocMask>(c->dst(g))];
  });

  MonoidalStructure t;
  t.n = c->num_objects();
  t.m = c->num_morphisms();
  t.unit = 0;
  t.symmetric = true;
  t.tensor_obj.assign(static_cast<std::size_t>(t.n) * t.n, kNone);
  for (LocMask a = 0; a < n; ++a)
    for (LocMask b = 0; b < n; ++b) t.tensor_obj[a * n + b] = static_cast<ObjId>(a | b);
  t.tensor_mor.assign(static_cast<std::size_t>(t.m) * t.m, kNone);
  for (MorId f = 0; f < t.m; ++f)
    for (MorId g = 0; g < t.m; ++g) {
      const LocMask s = static_cast<LocMask>(c->src(f)) | static_cast<LocMask>(c->src(g));
      const LocMask d = static_cast<LocMask>(c->dst(f)) | static_cast<LocMask>(c->dst(g));
      t.tensor_mor[static_cast<std::size_t>(f) * t.m + g] = inc[s * n + d];
    }
  return {std::move(c), std::move(t)};
}

// ---------------------------------------------------------------------------
// Finite sets and surjections

namespace detail {

inline bool is_surjective(const std::vector<int>& fn, int codomain) {
  std::vector<bool> hit(codomain, false);
  for (int v : fn) hit[v] = true;
  return std::all_of(hit.begin(), hit.end(), [](bool b) { return b; });
}

inline std::string map_name(const std::vector<int>& fn, int cod) {
  std::string s = "[";
  for (std::size_t i = 0; i < fn.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(fn[i] + 1);
  }
  return s + "]:" + std::to_string(fn.size()) + "->" + std::to_string(cod);
}

}  // namespace detail

/// The category of sets {1..n}, 1 ≤ n ≤ max_size, and surjections, with the
/// cartesian product as a partial tensor (pairs whose product exceeds the
/// bound have no tensor). A pair (i, j) ∈ {1..a}×{1..b} is encoded as
/// (i-1)·b + j.
inline MonoidalCategory build_finsurj_category(int max_size) {
  if (max_size < 1 || max_size > kMaxSurjSize)
    throw Error(ErrorKind::SizeBound, "FinSurj size " + std::to_string(max_size) +
                                          " outside [1, " + std::to_string(kMaxSurjSize) + "]");
  auto c = std::make_shared<FinCat>();
  c->kind = CatKind::FinSurj;
  for (int n = 1; n <= max_size; ++n) {
    c->add_object(std::to_string(n));
    c->sizes.push_back(n);
  }
  // Morphism lookup by (domain size, function).
  std::vector<std::vector<std::pair<std::vector<int>, MorId>>> by_src(max_size + 1);
  for (int a = 1; a <= max_size; ++a)
    for (int b = 1; b <= a; ++b) {
      std::vector<int> fn(a, 0);
      while (true) {
        if (detail::is_surjective(fn, b)) {
          const MorId m = c->add_morphism(a - 1, b - 1, detail::map_name(fn, b));
          c->maps.push_back(fn);
          by_src[a].emplace_back(fn, m);
          bool ident = (a == b);
          for (int i = 0; ident && i < a; ++i) ident = (fn[i] == i);
          if (ident) c->set_identity(a - 1, m);
        }
        int i = a - 1;
        while (i >= 0 && fn[i] == b - 1) fn[i--] = 0;
        if (i < 0) break;
        ++fn[i];
      }
    }
  auto lookup = [&](int a, int b, const std::vector<int>& fn) -> MorId {
    for (const auto& [f, m] : by_src[a])
      if (f == fn && c->sizes[c->dst(m)] == b) return m;
    return kNone;
  };
  c->fill_composition([&](MorId g, MorId f) {
    const auto& fv = c->maps[f];
    const auto& gv = c->maps[g];
    std::vector<int> h(fv.size());
    for (std::size_t i = 0; i < fv.size(); ++i) h[i] = gv[fv[i]];
    return lookup(static_cast<int>(fv.size()), c->sizes[c->dst(g)], h);
  });

  MonoidalStructure t;
  t.n = c->num_objects();
  t.m = c->num_morphisms();
  t.unit = 0;
  t.symmetric = true;
  t.tensor_obj.assign(static_cast<std::size_t>(t.n) * t.n, kNone);
  for (int a = 1; a <= max_size; ++a)
    for (int b = 1; b <= max_size; ++b)
      if (a * b <= max_size) t.tensor_obj[(a - 1) * t.n + (b - 1)] = a * b - 1;
  t.tensor_mor.assign(static_cast<std::size_t>(t.m) * t.m, kNone);
  for (MorId f = 0; f < t.m; ++f)
    for (MorId g = 0; g < t.m; ++g) {
      const int a1 = c->sizes[c->src(f)], a2 = c->sizes[c->src(g)];
      if (a1 * a2 > max_size) continue;
      const int b2 = c->sizes[c->dst(g)];
      const auto& fv = c->maps[f];
      const auto& gv = c->maps[g];
      std::vector<int> h(static_cast<std::size_t>(a1) * a2);
      for (int i = 0; i < a1; ++i)
        for (int j = 0; j < a2; ++j) h[i * a2 + j] = fv[i] * b2 + gv[j];
      t.tensor_mor[static_cast<std::size_t>(f) * t.m + g] =
          lookup(a1 * a2, c->sizes[c->dst(f)] * b2, h);
    }
  return {std::move(c), std::move(t)};
}

/// The surjection with the given 0-based function table, if present.
inline std::optional<MorId> find_surjection(const FinCat& c, int codomain,
                                            const std::vector<int>& fn) {
  if (fn.empty() || codomain < 1 || codomain > static_cast<int>(c.sizes.size()) ||
      static_cast<int>(fn.size()) > static_cast<int>(c.sizes.size()))
    return std::nullopt;
  for (MorId m : c.hom(static_cast<ObjId>(fn.size()) - 1, codomain - 1))
    if (c.maps[m] == fn) return m;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Slices

struct SliceCategory {
  CatPtr cat;
  FunctorData dom;  // the domain functor C/A -> C
};

/// C/A: objects are morphisms p into A, and hom(q, p) = { g | p∘g = q }.
inline SliceCategory slice_category(const CatPtr& base, ObjId apex) {
  base->check_object(apex);
  auto s = std::make_shared<FinCat>();
  s->kind = CatKind::Slice;
  SliceData data;
  data.base = base;
  data.apex = apex;
  const auto& legs = base->into(apex);
  std::vector<int> slice_of_leg(base->num_morphisms(), kNone);
  for (MorId p : legs) {
    slice_of_leg[p] = s->add_object(base->morphism_name(p));
    data.legs.push_back(p);
  }
  // Morphisms g: q -> p for every base g with p∘g = q.
  for (std::size_t pi = 0; pi < legs.size(); ++pi) {
    const MorId p = legs[pi];
    for (MorId g : base->into(base->src(p))) {
      const auto q = base->compose(p, g);
      if (!q) continue;
      const MorId sm = s->add_morphism(slice_of_leg[*q], static_cast<ObjId>(pi),
                                       base->morphism_name(g));
      data.underlying.push_back(g);
      if (base->is_identity(g)) s->set_identity(static_cast<ObjId>(pi), sm);
    }
  }
  // Composition follows base composition.
  s->fill_composition([&](MorId g, MorId f) -> MorId {
    const auto h = base->compose(data.underlying[g], data.underlying[f]);
    if (!h) return kNone;
    for (MorId cand : s->hom(s->src(f), s->dst(g)))
      if (data.underlying[cand] == *h) return cand;
    return kNone;
  });
  FunctorData dom;
  dom.target = base;
  for (MorId p : data.legs) dom.object_map.push_back(base->src(p));
  dom.morphism_map = data.underlying;
  s->slice = std::move(data);
  CatPtr sc = s;
  dom.source = sc;
  return {sc, std::move(dom)};
}

// ---------------------------------------------------------------------------
// Validation

/// Exhaustive typing, unit, and associativity check.
inline Report validate_category(const FinCat& c) {
  Report r;
  const int m = c.num_morphisms();
  for (ObjId o = 0; o < c.num_objects(); ++o) {
    const MorId id = c.identity(o);
    if (id == kNone || c.src(id) != o || c.dst(id) != o)
      r.add("identity", "object " + c.object_name(o) + " lacks a well-typed identity");
  }
  for (MorId f = 0; f < m; ++f)
    for (MorId g = 0; g < m; ++g) {
      const auto h = c.compose(g, f);
      const bool composable = c.dst(f) == c.src(g);
      if (composable != h.has_value()) {
        r.add("typing", "compose(" + c.morphism_name(g) + ", " + c.morphism_name(f) + ") " +
                            (composable ? "undefined on a composable pair"
                                        : "defined on a non-composable pair"));
        continue;
      }
      if (h && (c.src(*h) != c.src(f) || c.dst(*h) != c.dst(g)))
        r.add("typing", "compose(" + c.morphism_name(g) + ", " + c.morphism_name(f) +
                            ") = " + c.morphism_name(*h) + " has the wrong type");
    }
  for (MorId f = 0; f < m; ++f) {
    const MorId is = c.identity(c.src(f));
    const MorId id = c.identity(c.dst(f));
    if (is != kNone && c.compose(f, is) != std::optional<MorId>(f))
      r.add("unit", c.morphism_name(f) + " ∘ id != " + c.morphism_name(f));
    if (id != kNone && c.compose(id, f) != std::optional<MorId>(f))
      r.add("unit", "id ∘ " + c.morphism_name(f) + " != " + c.morphism_name(f));
  }
  for (MorId f = 0; f < m; ++f)
    for (MorId g : c.out_of(c.dst(f))) {
      const auto gf = c.compose(g, f);
      if (!gf) continue;
      for (MorId h : c.out_of(c.dst(g))) {
        const auto hg = c.compose(h, g);
        if (!hg) continue;
        const auto l = c.compose(h, *gf);
        const auto rr = c.compose(*hg, f);
        if (l != rr)
          r.add("associativity", c.morphism_name(h) + "," + c.morphism_name(g) + "," +
                                     c.morphism_name(f));
      }
    }
  return r;
}

/// Checks that a functor preserves typing, identities, and composition.
inline Report validate_functor(const FunctorData& F) {
  Report r;
  const auto& s = *F.source;
  const auto& t = *F.target;
  for (MorId f = 0; f < s.num_morphisms(); ++f) {
    const MorId Ff = F.morphism_map.at(f);
    if (t.src(Ff) != F.object_map.at(s.src(f)) || t.dst(Ff) != F.object_map.at(s.dst(f)))
      r.add("functor-typing", s.morphism_name(f));
  }
  for (ObjId o = 0; o < s.num_objects(); ++o)
    if (F.morphism_map.at(s.identity(o)) != t.identity(F.object_map.at(o)))
      r.add("functor-identity", s.object_name(o));
  for (MorId f = 0; f < s.num_morphisms(); ++f)
    for (MorId g : s.out_of(s.dst(f))) {
      const auto gf = s.compose(g, f);
      if (!gf) continue;
      if (t.compose(F.morphism_map[g], F.morphism_map[f]) !=
          std::optional<MorId>(F.morphism_map[*gf]))
        r.add("functor-composition", s.morphism_name(g) + "∘" + s.morphism_name(f));
    }
  return r;
}

/// Functoriality of the tensor on the parts where it is defined.
inline Report validate_monoidal(const FinCat& c, const MonoidalStructure& t) {
  Report r;
  if (t.unit == kNone) r.add("monoidal-unit", "no unit object");
  for (ObjId a = 0; a < c.num_objects(); ++a) {
    const auto ua = t.tensor(t.unit, a);
    const auto au = t.tensor(a, t.unit);
    if (ua != std::optional<ObjId>(a) || au != std::optional<ObjId>(a))
      r.add("monoidal-unitor", c.object_name(a));
    for (ObjId b = 0; b < c.num_objects(); ++b) {
      const auto ab = t.tensor(a, b);
      if (!ab) continue;
      if (t.symmetric && t.tensor(b, a) != ab) r.add("monoidal-symmetry", c.object_name(a));
      const auto id = t.tensor_morphism(c.identity(a), c.identity(b));
      if (id != std::optional<MorId>(c.identity(*ab)))
        r.add("tensor-identity", c.object_name(a) + "," + c.object_name(b));
    }
  }
  for (MorId f = 0; f < c.num_morphisms(); ++f)
    for (MorId g = 0; g < c.num_morphisms(); ++g) {
      const auto fg = t.tensor_morphism(f, g);
      if (!fg) continue;
      if (c.src(*fg) != *t.tensor(c.src(f), c.src(g)) ||
          c.dst(*fg) != *t.tensor(c.dst(f), c.dst(g)))
        r.add("tensor-typing", c.morphism_name(f) + "⊗" + c.morphism_name(g));
      for (MorId f2 : c.out_of(c.dst(f)))
        for (MorId g2 : c.out_of(c.dst(g))) {
          const auto rhs = t.tensor_morphism(f2, g2);
          if (!rhs) continue;
          const auto lhs = t.tensor_morphism(c.then(f, f2), c.then(g, g2));
          if (lhs != c.compose(*rhs, *fg))
            r.add("tensor-composition", c.morphism_name(f) + "," + c.morphism_name(g));
        }
    }
  return r;
}

}  // namespace sheafsep
