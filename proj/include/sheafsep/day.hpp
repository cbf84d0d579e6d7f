#pragma once

// Day convolution: the decomposition presheaf, the coend quotient, resource
// monoids on partial memory, and the law and stability checks.

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sheafsep/matching.hpp"
#include "sheafsep/presheaf.hpp"
#include "sheafsep/site.hpp"

namespace sheafsep {

// ---------------------------------------------------------------------------
// Decomposition presheaf

/// (F ⊛ G) before quotienting. On a powerset base the stage A holds the
/// exact splittings B ∪ C = A; elsewhere it holds every witnessed triple
/// (B, C, ξ: A → B⊗C, s, t), restricted by precomposition with ξ.
inline PresheafPtr day_decomp(const PresheafPtr& F, const PresheafPtr& G,
                              const MonoidalStructure& t) {
  const auto& c = F->base();
  if (&c != &G->base())
    throw Error(ErrorKind::TypeMismatch, "day_decomp needs presheaves on one base");
  if (t.unit == kNone || t.n != c.num_objects())
    throw Error(ErrorKind::NotMonoidal, "base lacks a monoidal structure");
  auto D = std::make_shared<Presheaf>(F->base_ptr(), F->name() + " * " + G->name());
  D->components = {F, G};
  const bool exact = c.kind == CatKind::Powerset;
  for (ObjId a = 0; a < c.num_objects(); ++a) {
    std::vector<Element> pts;
    for (ObjId b = 0; b < c.num_objects(); ++b)
      for (ObjId d = 0; d < c.num_objects(); ++d) {
        const auto bd = t.tensor(b, d);
        if (!bd) continue;
        std::vector<MorId> witnesses;
        if (exact) {
          if (*bd == a) witnesses.push_back(c.identity(a));
        } else {
          witnesses = c.hom(a, *bd);
        }
        for (MorId xi : witnesses)
          for (int s = 0; s < F->size(b); ++s)
            for (int u = 0; u < G->size(d); ++u) pts.emplace_back(Decomp{b, d, xi, s, u});
      }
    D->set_elements(a, std::move(pts));
  }
  if (exact) {
    D->tabulate_restrictions([&](MorId h, const Element& e) -> Element {
      const auto& x = e.as<Decomp>();
      const LocMask a2 = static_cast<LocMask>(c.src(h));
      const LocMask b2 = static_cast<LocMask>(x.left) & a2;
      const LocMask d2 = static_cast<LocMask>(x.right) & a2;
      const MorId ub = inclusion_or_throw(c, b2, static_cast<LocMask>(x.left));
      const MorId ud = inclusion_or_throw(c, d2, static_cast<LocMask>(x.right));
      return Decomp{static_cast<ObjId>(b2), static_cast<ObjId>(d2), c.identity(c.src(h)),
                    F->restrict(ub, x.s), G->restrict(ud, x.t)};
    });
  } else {
    D->tabulate_restrictions([&](MorId h, const Element& e) -> Element {
      auto x = e.as<Decomp>();
      x.witness = c.then(h, x.witness);
      return x;
    });
  }
  return D;
}

// ---------------------------------------------------------------------------
// Coend

struct DayCoend {
  PresheafPtr presheaf;                       // points are ClassRef{id}
  std::vector<std::vector<Decomp>> triples;   // every witnessed triple per stage
  std::vector<std::vector<int>> class_of;     // triple index -> class id
  std::vector<std::vector<Decomp>> canonical; // least triple per class
  Report report;

  int class_of_triple(ObjId a, const Decomp& d) const {
    const auto& v = triples.at(a);
    auto it = std::lower_bound(v.begin(), v.end(), d, [](const Decomp& x, const Decomp& y) {
      return Element(x) < Element(y);
    });
    if (it == v.end() || !(Element(*it) == Element(d)))
      throw Error(ErrorKind::TypeMismatch, "triple is not witnessed at this stage");
    return class_of[a][it - v.begin()];
  }
};

/// The coend ∫^{B,C} C(-, B⊗C) × F(B) × G(C), computed by union-find over
/// the relation (ξ, F(u)s, G(v)t) ~ ((u⊗v)∘ξ, s, t).
inline DayCoend day_coend(const PresheafPtr& F, const PresheafPtr& G, const MonoidalStructure& t,
                          std::size_t budget = 2'000'000) {
  const auto& c = F->base();
  if (&c != &G->base()) throw Error(ErrorKind::TypeMismatch, "day_coend needs presheaves on one base");
  if (t.unit == kNone || t.n != c.num_objects())
    throw Error(ErrorKind::NotMonoidal, "base lacks a monoidal structure");
  DayCoend out;
  auto P = std::make_shared<Presheaf>(F->base_ptr(), F->name() + " (x) " + G->name());
  const auto less = [](const Decomp& x, const Decomp& y) { return Element(x) < Element(y); };
  out.triples.resize(c.num_objects());
  out.class_of.resize(c.num_objects());
  out.canonical.resize(c.num_objects());
  std::size_t total = 0;
  for (ObjId a = 0; a < c.num_objects(); ++a) {
    auto& v = out.triples[a];
    for (ObjId b = 0; b < c.num_objects(); ++b)
      for (ObjId d = 0; d < c.num_objects(); ++d) {
        const auto bd = t.tensor(b, d);
        if (!bd) continue;
        for (MorId xi : c.hom(a, *bd))
          for (int s = 0; s < F->size(b); ++s)
            for (int u = 0; u < G->size(d); ++u) v.push_back(Decomp{b, d, xi, s, u});
      }
    std::sort(v.begin(), v.end(), less);
    total += v.size();
    if (total > budget)
      throw Error(ErrorKind::Budget, "coend needs more than " + std::to_string(budget) + " triples");
  }
  for (ObjId a = 0; a < c.num_objects(); ++a) {
    const auto& v = out.triples[a];
    auto pos = [&](const Decomp& d) {
      return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), d, less) - v.begin());
    };
    detail::UnionFind uf(v.size());
    for (MorId u = 0; u < c.num_morphisms(); ++u)
      for (MorId w = 0; w < c.num_morphisms(); ++w) {
        const auto uw = t.tensor_morphism(u, w);
        if (!uw) continue;
        const ObjId b = c.src(u), b2 = c.dst(u), d = c.src(w), d2 = c.dst(w);
        for (MorId xi : c.hom(a, c.src(*uw))) {
          const MorId xi2 = c.then(xi, *uw);
          for (int s = 0; s < F->size(b2); ++s)
            for (int r = 0; r < G->size(d2); ++r)
              uf.unite(pos(Decomp{b, d, xi, F->restrict(u, s), G->restrict(w, r)}),
                       pos(Decomp{b2, d2, xi2, s, r}));
        }
      }
    std::map<std::size_t, int> ids;
    auto& cls = out.class_of[a];
    cls.resize(v.size());
    // Triples are sorted, so the first triple met in each class is its least.
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto [it, fresh] = ids.try_emplace(uf.find(i), static_cast<int>(ids.size()));
      if (fresh) out.canonical[a].push_back(v[i]);
      cls[i] = it->second;
    }
    std::vector<Element> pts;
    for (std::size_t k = 0; k < ids.size(); ++k) pts.emplace_back(ClassRef{static_cast<int>(k)});
    P->set_elements(a, std::move(pts));
  }
  for (MorId h = 0; h < c.num_morphisms(); ++h) {
    const ObjId a = c.dst(h), a2 = c.src(h);
    const auto& v = out.triples[a];
    std::vector<int> table(out.canonical[a].size(), -1);
    for (std::size_t i = 0; i < v.size(); ++i) {
      Decomp r = v[i];
      r.witness = c.then(h, r.witness);
      const int target = out.class_of_triple(a2, r);
      int& slot = table[out.class_of[a][i]];
      if (slot >= 0 && slot != target)
        out.report.add("coend-restriction",
                       "restriction along " + c.morphism_name(h) + " is not constant on a class");
      slot = target;
    }
    P->set_restriction(h, std::move(table));
  }
  auto canon = out.canonical;
  const CatPtr base = F->base_ptr();
  P->describer = [canon, base, F, G](ObjId a, int i) {
    const auto& d = canon[a][i];
    return "[" + base->morphism_name(d.witness) + " ; " + F->describe(d.left, d.s) + " ; " +
           G->describe(d.right, d.t) + "]";
  };
  P->components = {F, G};
  out.presheaf = P;
  return out;
}

/// The quotient map from the decomposition presheaf to the coend.
inline StageMap decomp_to_coend(const PresheafPtr& D, const DayCoend& q) {
  StageMap m{D, q.presheaf, {}, "quotient"};
  for (ObjId a = 0; a < D->base().num_objects(); ++a) {
    std::vector<int> comp;
    for (const auto& e : D->elements(a)) comp.push_back(q.class_of_triple(a, e.as<Decomp>()));
    m.component.push_back(std::move(comp));
  }
  return m;
}

/// Yo(A) ⊛ Yo(B) -> Yo(A⊗B), sending (ξ, u, v) to (u⊗v)∘ξ; reports whether
/// it is well defined on classes and bijective at every stage.
inline Report check_yoneda_tensor(const CatPtr& base, const MonoidalStructure& t, ObjId a,
                                  ObjId b) {
  Report r;
  const auto& c = *base;
  const auto ab = t.tensor(a, b);
  if (!ab) throw Error(ErrorKind::NotMonoidal, "tensor of the representing objects is undefined");
  auto YA = yoneda(base, a), YB = yoneda(base, b), YAB = yoneda(base, *ab);
  const auto q = day_coend(YA, YB, t);
  r.append(q.report);
  for (ObjId u = 0; u < c.num_objects(); ++u) {
    std::vector<int> image(q.presheaf->size(u), -1);
    const auto& v = q.triples[u];
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto& d = v[i];
      const MorId f = YA->at(d.left, d.s).as<MorWitness>().mor;
      const MorId g = YB->at(d.right, d.t).as<MorWitness>().mor;
      const auto fg = t.tensor_morphism(f, g);
      if (!fg) {
        r.add("yoneda-tensor", "tensor of legs undefined at " + c.object_name(u));
        continue;
      }
      const int target = YAB->index_of(u, MorWitness{c.then(d.witness, *fg)});
      int& slot = image[q.class_of[u][i]];
      if (slot >= 0 && slot != target)
        r.add("yoneda-tensor", "comparison not constant on a class at " + c.object_name(u));
      slot = target;
    }
    std::vector<int> sorted = image;
    std::sort(sorted.begin(), sorted.end());
    const bool bijective = static_cast<int>(sorted.size()) == YAB->size(u) &&
                           std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end() &&
                           (sorted.empty() || sorted.front() >= 0);
    if (!bijective)
      r.add("yoneda-tensor", "stage " + c.object_name(u) + ": " +
                                 std::to_string(q.presheaf->size(u)) + " classes vs " +
                                 std::to_string(YAB->size(u)) + " morphisms into " +
                                 c.object_name(*ab));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Resource monoids

enum class MonoidVariant { Total, Weak, Strong };

inline std::string_view to_string(MonoidVariant v) {
  switch (v) {
    case MonoidVariant::Total: return "total";
    case MonoidVariant::Weak: return "weak";
    case MonoidVariant::Strong: return "strong";
  }
  return "?";
}

/// m_{U1,U2}(σ1, σ2), or nullopt where the variant leaves it undefined.
inline std::optional<Heap> heap_mult(MonoidVariant variant, const Heap& s1, const Heap& s2) {
  const LocMask u1 = s1.stage, u2 = s2.stage, both = u1 & u2;
  if (variant == MonoidVariant::Strong && both != 0) return std::nullopt;
  Heap out;
  for (int x = 0; x < kMaxLocations; ++x) {
    const LocMask bit = LocMask{1} << x;
    if (!((u1 | u2) & bit)) continue;
    if ((u1 & bit) && !(u2 & bit)) {
      s1.has(x) ? out.set(x, s1.get(x)) : out.set_bottom(x);
    } else if ((u2 & bit) && !(u1 & bit)) {
      s2.has(x) ? out.set(x, s2.get(x)) : out.set_bottom(x);
    } else {
      const bool agree = s1.has(x) == s2.has(x) && (!s1.has(x) || s1.get(x) == s2.get(x));
      if (!agree && variant == MonoidVariant::Weak) return std::nullopt;
      if (agree && s1.has(x))
        out.set(x, s1.get(x));
      else
        out.set_bottom(x);
    }
  }
  return out;
}

struct ResourceMonoid {
  PresheafPtr carrier;
  PresheafPtr decomp;  // day_decomp(carrier, carrier)
  StageMap mult;       // decomp -> carrier, -1 where undefined
  ObjId unit_object = kNone;
  int unit_point = -1;
  MonoidVariant variant = MonoidVariant::Total;

  /// Multiplication on two carrier points; nullopt when undefined.
  std::optional<int> apply(ObjId left, int s, ObjId right, int t) const {
    const auto& c = carrier->base();
    const ObjId a = static_cast<ObjId>(static_cast<LocMask>(left) | static_cast<LocMask>(right));
    const int d = decomp->index_of(a, Decomp{left, right, c.identity(a), s, t});
    const int r = mult.apply(a, d);
    if (r < 0) return std::nullopt;
    return r;
  }
};

/// The total, weak, or strong partial-memory monoid. The carrier must hold
/// every partial heap: results with ⊥ cells are required by the total
/// variant and the partial variants need the empty heap at every overlap.
inline ResourceMonoid build_memory_monoid(const PresheafPtr& carrier, const MonoidalStructure& t,
                                          MonoidVariant variant) {
  const auto& c = carrier->base();
  if (c.kind != CatKind::Powerset)
    throw Error(ErrorKind::KindMismatch, "memory monoid needs a powerset base");
  for (ObjId a = 0; a < c.num_objects(); ++a) {
    Heap all_bottom;
    for (int x = 0; x < kMaxLocations; ++x)
      if ((static_cast<LocMask>(a) >> x) & 1U) all_bottom.set_bottom(x);
    if (!carrier->find(a, all_bottom))
      throw Error(ErrorKind::Validation, "the " + std::string(to_string(variant)) +
                                             " memory monoid needs the partial memory sheaf; " +
                                             carrier->name() + " has no empty heap at " +
                                             c.object_name(a));
  }
  ResourceMonoid m;
  m.carrier = carrier;
  m.decomp = day_decomp(carrier, carrier, t);
  m.variant = variant;
  m.unit_object = t.unit;
  m.unit_point = carrier->index_of(t.unit, Heap{});
  m.mult = {m.decomp, carrier, {}, "mult-" + std::string(to_string(variant))};
  for (ObjId a = 0; a < c.num_objects(); ++a) {
    std::vector<int> comp;
    for (const auto& e : m.decomp->elements(a)) {
      const auto& d = e.as<Decomp>();
      const auto r = heap_mult(variant, carrier->at(d.left, d.s).as<Heap>(),
                               carrier->at(d.right, d.t).as<Heap>());
      comp.push_back(r ? carrier->index_of(a, *r) : -1);
    }
    m.mult.component.push_back(std::move(comp));
  }
  return m;
}

/// Exhaustive unit, associativity, and commutativity checks under Kleene
/// equality (both sides undefined, or both defined and equal).
inline Report check_monoid_laws(const ResourceMonoid& m) {
  Report r;
  const auto& F = *m.carrier;
  const auto& c = F.base();
  const int n = c.num_objects();
  auto kleene = [](std::optional<int> x, std::optional<int> y) { return x == y; };
  auto at = [](ObjId x, ObjId y) {
    return static_cast<ObjId>(static_cast<LocMask>(x) | static_cast<LocMask>(y));
  };
  for (ObjId a = 0; a < n; ++a)
    for (int s = 0; s < F.size(a); ++s) {
      if (m.apply(a, s, m.unit_object, m.unit_point) != std::optional<int>(s))
        r.add("unit", "right unit fails at " + F.describe(a, s));
      if (m.apply(m.unit_object, m.unit_point, a, s) != std::optional<int>(s))
        r.add("unit", "left unit fails at " + F.describe(a, s));
    }
  for (ObjId a = 0; a < n; ++a)
    for (ObjId b = 0; b < n; ++b)
      for (int s = 0; s < F.size(a); ++s)
        for (int t = 0; t < F.size(b); ++t) {
          if (!kleene(m.apply(a, s, b, t), m.apply(b, t, a, s)))
            r.add("commutativity", F.describe(a, s) + " and " + F.describe(b, t));
          for (ObjId d = 0; d < n; ++d)
            for (int u = 0; u < F.size(d); ++u) {
              std::optional<int> lhs, rhs;
              if (auto st = m.apply(a, s, b, t)) lhs = m.apply(at(a, b), *st, d, u);
              if (auto tu = m.apply(b, t, d, u)) rhs = m.apply(a, s, at(b, d), *tu);
              if (!kleene(lhs, rhs))
                r.add("associativity", F.describe(a, s) + ", " + F.describe(b, t) + ", " +
                                           F.describe(d, u));
            }
        }
  return r;
}

/// Two exact triples in one coend class on which the multiplication
/// disagrees, if any.
struct DinaturalityWitness {
  ObjId stage = kNone;
  Decomp first, second;
  int first_value = -1, second_value = -1;
};

inline std::optional<DinaturalityWitness> find_dinaturality_failure(const ResourceMonoid& m,
                                                                    const DayCoend& q) {
  const auto& D = *m.decomp;
  const auto& c = D.base();
  for (ObjId a = 0; a < c.num_objects(); ++a) {
    std::map<int, std::pair<int, int>> seen;  // class -> (decomp index, mult value)
    for (int i = 0; i < D.size(a); ++i) {
      const auto& d = D.at(a, i).as<Decomp>();
      const int cls = q.class_of_triple(a, d);
      const int val = m.mult.apply(a, i);
      auto [it, fresh] = seen.try_emplace(cls, i, val);
      if (!fresh && it->second.second != val)
        return DinaturalityWitness{a, D.at(a, it->second.first).as<Decomp>(), d,
                                   it->second.second, val};
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Day stability

/// A presheaf map assumed to be an inclusion of a subsheaf.
struct SubsheafSample {
  PresheafPtr sub;
  StageMap inclusion;
};

inline StageMap inclusion_map(const PresheafPtr& S, const PresheafPtr& F) {
  StageMap m{S, F, {}, "inclusion"};
  for (ObjId a = 0; a < S->base().num_objects(); ++a) {
    std::vector<int> comp;
    for (const auto& e : S->elements(a)) comp.push_back(F->index_of(a, e));
    m.component.push_back(std::move(comp));
  }
  return m;
}

struct DayStabilityOptions {
  bool check_coend = true;
  SheafCheckOptions sheaf;
};

/// Runs the three stability checks: convolutions of sampled sheaves are
/// sheaves, convolution of sampled inclusions stays injective, and the slice
/// tensor γ(p, q) = p⊗q is functorial where defined.
inline Report check_day_stability(const MonoidalCategory& mc, const Coverage& cov,
                                  const std::vector<PresheafPtr>& samples,
                                  const std::vector<SubsheafSample>& subsheaves,
                                  const DayStabilityOptions& opt = {}) {
  Report r;
  const auto& c = *mc.cat;
  const auto& t = mc.tensor;
  if (t.unit == kNone || t.n != c.num_objects())
    throw Error(ErrorKind::NotMonoidal, "no slice tensor witness: base lacks a monoidal structure");

  for (const auto& F : samples)
    for (const auto& G : samples) {
      const auto D = day_decomp(F, G, t);
      for (const auto& v : check_sheaf(*D, cov, opt.sheaf).violations)
        r.add("decomp-sheaf", D->name() + ": " + v.witness);
      if (opt.check_coend) {
        const auto q = day_coend(F, G, t);
        r.append(q.report);
        for (const auto& v : check_sheaf(*q.presheaf, cov, opt.sheaf).violations)
          r.add("coend-sheaf", q.presheaf->name() + ": " + v.witness);
      }
    }

  for (const auto& sample : subsheaves) {
    const auto& S = sample.sub;
    const auto& F = sample.inclusion.target;
    const auto DS = day_decomp(S, S, t), DF = day_decomp(F, F, t);
    std::optional<DayCoend> qS, qF;
    if (opt.check_coend) {
      qS = day_coend(S, S, t);
      qF = day_coend(F, F, t);
    }
    for (ObjId a = 0; a < c.num_objects(); ++a) {
      std::map<int, int> hit;
      for (int i = 0; i < DS->size(a); ++i) {
        auto d = DS->at(a, i).as<Decomp>();
        d.s = sample.inclusion.apply(d.left, d.s);
        d.t = sample.inclusion.apply(d.right, d.t);
        const int j = DF->index_of(a, d);
        if (!hit.try_emplace(j, i).second) {
          r.add("mono-preservation", DS->name() + " -> " + DF->name() + " identifies " +
                                         DS->describe(a, hit[j]) + " and " + DS->describe(a, i));
          break;
        }
      }
      if (!opt.check_coend) continue;
      std::map<int, int> image;
      const auto& v = qS->triples[a];
      for (std::size_t i = 0; i < v.size(); ++i) {
        auto d = v[i];
        d.s = sample.inclusion.apply(d.left, d.s);
        d.t = sample.inclusion.apply(d.right, d.t);
        const int cls = qS->class_of[a][i];
        const int target = qF->class_of_triple(a, d);
        auto [it, fresh] = image.try_emplace(target, cls);
        if (!fresh && it->second != cls) {
          r.add("mono-preservation", "coend of " + S->name() + " -> coend of " + F->name() +
                                         " is not injective at " + c.object_name(a));
          break;
        }
      }
    }
  }

  // γ on slices: objects (p, q) with p⊗q defined, morphisms (g, h) ↦ g⊗h.
  std::size_t defined = 0, undefined = 0;
  for (ObjId a = 0; a < c.num_objects(); ++a)
    for (ObjId b = 0; b < c.num_objects(); ++b) {
      if (!t.tensor(a, b)) continue;
      for (MorId p : c.into(a))
        for (MorId q : c.into(b)) {
          const auto pq = t.tensor_morphism(p, q);
          if (!pq) {
            ++undefined;
            continue;
          }
          ++defined;
          const auto idpq = t.tensor_morphism(c.identity(c.src(p)), c.identity(c.src(q)));
          if (idpq != std::optional<MorId>(c.identity(c.src(*pq))))
            r.add("gamma-identity", c.morphism_name(p) + " , " + c.morphism_name(q));
          for (MorId g : c.into(c.src(p)))
            for (MorId h : c.into(c.src(q))) {
              const auto gh = t.tensor_morphism(g, h);
              const auto composite = t.tensor_morphism(c.then(g, p), c.then(h, q));
              if (!gh || !composite) continue;
              if (c.compose(*pq, *gh) != composite)
                r.add("gamma-typing", c.morphism_name(g) + "⊗" + c.morphism_name(h) +
                                               " over " + c.morphism_name(p) + "⊗" +
                                               c.morphism_name(q));
            }
        }
    }
  // γ acts on slice morphisms by the base tensor, so its functoriality is
  // the functoriality of ⊗.
  for (const auto& v : validate_monoidal(c, t).violations)
    r.add("gamma-composition", v.check + ": " + v.witness);
  r.notes.push_back("slice tensor defined on " + std::to_string(defined) + " pairs of legs, " +
                    std::to_string(undefined) + " pairs exceed the size bound");
  return r;
}

}  // namespace sheafsep
