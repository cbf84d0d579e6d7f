#pragma once

// Formula semantics over a resource model: points-to atoms, the separating
// conjunction (categorical pipeline and the unfolded comprehensions), and
// satisfaction with a witnessing decomposition.

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sheafsep/day.hpp"
#include "sheafsep/formula.hpp"
#include "sheafsep/matching.hpp"
#include "sheafsep/pred.hpp"

namespace sheafsep {

enum class SepMode { Pipeline, Unfolded };

inline std::string_view to_string(SepMode m) {
  return m == SepMode::Pipeline ? "pipeline" : "unfolded";
}

/// Interprets an atom as a predicate in the given fibre.
using AtomFn = std::function<KripkePredicate(const Formula&, const FibrePtr&)>;

/// A site, a resource sheaf on it, and optionally a resource monoid.
class ResourceModel {
 public:
  ResourceModel(MonoidalCategory base, std::shared_ptr<const Coverage> coverage,
                PresheafPtr resource, std::optional<MonoidVariant> variant = std::nullopt)
      : base_(std::move(base)),
        coverage_(std::move(coverage)),
        resource_(std::move(resource)),
        cache_(std::make_unique<FibreCache>(*coverage_)) {
    if (&resource_->base() != base_.cat.get() || &coverage_->cat() != base_.cat.get())
      throw Error(ErrorKind::TypeMismatch, "site, coverage and resource must share one base");
    if (variant) monoid_ = build_memory_monoid(resource_, base_.tensor, *variant);
  }

  const FinCat& base() const { return *base_.cat; }
  const MonoidalCategory& monoidal() const { return base_; }
  const Coverage& coverage() const { return *coverage_; }
  const PresheafPtr& resource() const { return resource_; }
  const std::optional<ResourceMonoid>& monoid() const { return monoid_; }

  const ResourceMonoid& require_monoid() const {
    if (!monoid_) throw Error(ErrorKind::Validation, "model has no resource monoid");
    return *monoid_;
  }

  FibrePtr fibre(ObjId stage) const { return cache_->fibre(resource_, stage); }
  FibrePtr fibre_of(const PresheafPtr& F, ObjId stage) const { return cache_->fibre(F, stage); }

  const MatchingPresheaf& matching() const {
    if (!match_) match_ = std::make_unique<MatchingPresheaf>(matching_presheaf(resource_, *coverage_));
    return *match_;
  }

  const AmalgamationOperator& amalgamation() const {
    if (!amalg_)
      amalg_ = std::make_unique<AmalgamationOperator>(amalgamation_operator(matching(), *coverage_));
    return *amalg_;
  }

  /// The multiplication followed by the inverse of amalgamation:
  /// F ⊛ F -> Match(F).
  const StageMap& lifted_mult() const {
    if (!lifted_)
      lifted_ = std::make_unique<StageMap>(compose_maps(amalgamation().theta, require_monoid().mult));
    return *lifted_;
  }

  /// Overrides the built-in points-to interpretation.
  AtomFn atoms;

 private:
  MonoidalCategory base_;
  std::shared_ptr<const Coverage> coverage_;
  PresheafPtr resource_;
  std::optional<ResourceMonoid> monoid_;
  std::unique_ptr<FibreCache> cache_;
  mutable std::unique_ptr<MatchingPresheaf> match_;
  mutable std::unique_ptr<AmalgamationOperator> amalg_;
  mutable std::unique_ptr<StageMap> lifted_;
};

inline Vocabulary vocabulary_of(const ResourceModel& m, const std::vector<Value>& values) {
  Vocabulary v;
  for (const auto& l : locations_of(m.base())) v.locations.insert(l);
  v.values.insert(values.begin(), values.end());
  return v;
}

inline int location_index(const FinCat& c, const std::string& name) {
  const auto& locs = locations_of(c);
  for (std::size_t i = 0; i < locs.size(); ++i)
    if (locs[i] == name) return static_cast<int>(i);
  throw Error(ErrorKind::UnknownIdentifier, "unknown location '" + name + "'");
}

/// Points-to atoms on a memory sheaf:
///   strict     x |-> v   {σ | x ∈ V ⇒ σ(x) = v}
///   non-strict x ~> v    {σ | x ∈ V ⇒ x ∈ dom σ ∧ σ(x) = v}
///   allocated  x |->! v  {σ | x ∈ V ∧ σ(x) = v}
/// A ⊥ cell never equals a value, so the first two agree on partial memory.
inline KripkePredicate memory_atom(const Formula& atom, const FibrePtr& f) {
  const auto& c = f->resource()->base();
  if (c.kind != CatKind::Powerset)
    throw Error(ErrorKind::KindMismatch, "points-to atoms need a memory resource");
  if (atom.kind == FormulaKind::Dist)
    throw Error(ErrorKind::KindMismatch, "distribution atom " + to_string(atom) +
                                             " has no meaning on a memory resource");
  const int x = location_index(c, atom.name);
  const LocMask bit = LocMask{1} << x;
  return tabulate(f, [&](int p, int i) {
    const auto& h = f->view()->at(p, i).as<Heap>();
    const bool in_view = (static_cast<LocMask>(f->domain(p)) & bit) != 0;
    const bool holds = h.has(x) && h.get(x) == atom.value;
    switch (atom.kind) {
      case FormulaKind::PointsToStrict:
      case FormulaKind::PointsToNonStrict: return !in_view || holds;
      case FormulaKind::PointsToAlloc: return in_view && holds;
      default: return false;
    }
  });
}

inline KripkePredicate atom_predicate(const ResourceModel& model, const Formula& atom,
                                      const FibrePtr& f) {
  if (model.atoms) return model.atoms(atom, f);
  return memory_atom(atom, f);
}

namespace detail {

inline void require_stage(const KripkePredicate& P, const KripkePredicate& Q) {
  if (P.fibre->stage() != Q.fibre->stage() || P.fibre->resource() != Q.fibre->resource())
    throw Error(ErrorKind::TypeMismatch, "separating conjunction needs predicates at one stage");
}

/// The three displayed comprehensions, stated directly on heaps.
inline std::optional<Heap> unfolded_combine(MonoidVariant variant, const Heap& m1, const Heap& m2) {
  const LocMask u1 = m1.stage, u2 = m2.stage, both = u1 & u2;
  const auto cell = [](const Heap& h, int x) -> std::optional<Value> {
    if (h.has(x)) return h.get(x);
    return std::nullopt;
  };
  Heap m;
  switch (variant) {
    case MonoidVariant::Weak:
      if (!(m1.restrict_to(both) == m2.restrict_to(both))) return std::nullopt;
      break;
    case MonoidVariant::Strong:
      if (both != 0) return std::nullopt;
      break;
    case MonoidVariant::Total: {
      for (int x = 0; x < kMaxLocations; ++x) {
        const LocMask b = LocMask{1} << x;
        std::optional<Value> v;
        if ((u1 & b) && (!(u2 & b) || cell(m1, x) == cell(m2, x)))
          v = cell(m1, x);
        else if ((u2 & b) && !(u1 & b))
          v = cell(m2, x);
        else if (!((u1 | u2) & b))
          continue;
        v ? m.set(x, *v) : m.set_bottom(x);
      }
      return m;
    }
  }
  // m = m1 ∪ m2 as partial maps on U1 ∪ U2.
  for (int x = 0; x < kMaxLocations; ++x) {
    const LocMask b = LocMask{1} << x;
    const Heap* src = (u1 & b) ? &m1 : (u2 & b) ? &m2 : nullptr;
    if (!src) continue;
    src->has(x) ? m.set(x, src->get(x)) : m.set_bottom(x);
  }
  return m;
}

}  // namespace detail

/// ⋆ by the categorical route: α into the decomposition presheaf, image
/// along the multiplication into Match(F), then image along amalgamation.
inline KripkePredicate sep_conj_pipeline(const ResourceModel& model, const KripkePredicate& P,
                                         const KripkePredicate& Q) {
  detail::require_stage(P, Q);
  const auto& mon = model.require_monoid();
  const ObjId u = P.fibre->stage();
  const auto alpha = combine_alpha(P, Q, model.fibre_of(mon.decomp, u));
  const auto& match = model.matching();
  const auto in_match = direct_image(model.lifted_mult(), alpha, model.fibre_of(match.presheaf, u));
  return direct_image(model.amalgamation().amalg, in_match, P.fibre);
}

/// ⋆ by the unfolded comprehension, applied at every stage V below U:
/// m ∈ (P ⋆ Q)(V) iff m = m1 · m2 for some U1 ∪ U2 = V, m1 ∈ P(U1), m2 ∈ Q(U2).
inline KripkePredicate sep_conj_unfolded(const ResourceModel& model, const KripkePredicate& P,
                                         const KripkePredicate& Q) {
  detail::require_stage(P, Q);
  const auto variant = model.require_monoid().variant;
  const auto& f = P.fibre;
  const auto& F = *f->resource();
  KripkePredicate R = bottom(f);
  for (int p = 0; p < f->num_objects(); ++p) {
    const LocMask v = static_cast<LocMask>(f->domain(p));
    for (LocMask u1 = v;; u1 = (u1 - 1) & v) {
      for (LocMask u2 = v;; u2 = (u2 - 1) & v) {
        if ((u1 | u2) == v) {
          const int p1 = f->object_over(static_cast<ObjId>(u1));
          const int p2 = f->object_over(static_cast<ObjId>(u2));
          for (auto i = P.family[p1].find_first(); i != Bits::npos; i = P.family[p1].find_next(i))
            for (auto j = Q.family[p2].find_first(); j != Bits::npos; j = Q.family[p2].find_next(j)) {
              const auto m = detail::unfolded_combine(
                  variant, F.at(static_cast<ObjId>(u1), static_cast<int>(i)).as<Heap>(),
                  F.at(static_cast<ObjId>(u2), static_cast<int>(j)).as<Heap>());
              if (m) R.family[p].set(F.index_of(static_cast<ObjId>(v), *m));
            }
        }
        if (u2 == 0) break;
      }
      if (u1 == 0) break;
    }
  }
  return R;
}

inline KripkePredicate sep_conj(const ResourceModel& model, const KripkePredicate& P,
                                const KripkePredicate& Q, SepMode mode) {
  return mode == SepMode::Pipeline ? sep_conj_pipeline(model, P, Q)
                                   : sep_conj_unfolded(model, P, Q);
}

/// ⟦φ⟧ in the fibre over `stage`.
inline KripkePredicate eval_formula(const ResourceModel& model, const Formula& phi, ObjId stage,
                                    SepMode mode = SepMode::Unfolded) {
  const auto f = model.fibre(stage);
  switch (phi.kind) {
    case FormulaKind::Top: return top(f);
    case FormulaKind::Bottom: return bottom(f);
    case FormulaKind::And:
      return meet(eval_formula(model, *phi.lhs, stage, mode), eval_formula(model, *phi.rhs, stage, mode));
    case FormulaKind::Or:
      return join(eval_formula(model, *phi.lhs, stage, mode), eval_formula(model, *phi.rhs, stage, mode));
    case FormulaKind::Imp:
      return implication(eval_formula(model, *phi.lhs, stage, mode),
                         eval_formula(model, *phi.rhs, stage, mode));
    case FormulaKind::Star:
      return sep_conj(model, eval_formula(model, *phi.lhs, stage, mode),
                      eval_formula(model, *phi.rhs, stage, mode), mode);
    default: return atom_predicate(model, phi, f);
  }
}

/// A decomposition witnessing m ∈ (P ⋆ Q)(U).
struct StarWitness {
  ObjId left = kNone;
  ObjId right = kNone;
  int s = -1;  // index in F(left)
  int t = -1;  // index in F(right)
};

struct SatResult {
  bool result = false;
  std::optional<StarWitness> witness;
  std::string explanation;
};

/// The least (U1, U2, m1, m2) in the order (U1, U2, m1, m2) with
/// U1 ∪ U2 = U, m1 ∈ P(U1), m2 ∈ Q(U2) and m1 · m2 = m.
inline std::optional<StarWitness> star_witness(const ResourceModel& model, const KripkePredicate& P,
                                               const KripkePredicate& Q, int m) {
  const auto& mon = model.require_monoid();
  const auto& f = P.fibre;
  const auto& F = *f->resource();
  const LocMask u = static_cast<LocMask>(f->stage());
  const Heap& target = F.at(f->stage(), m).as<Heap>();
  for (LocMask u1 = 0; u1 <= u; ++u1) {
    if (!subset(u1, u)) continue;
    for (LocMask u2 = 0; u2 <= u; ++u2) {
      if (!subset(u2, u) || (u1 | u2) != u) continue;
      const int p1 = f->object_over(static_cast<ObjId>(u1));
      const int p2 = f->object_over(static_cast<ObjId>(u2));
      for (auto i = P.family[p1].find_first(); i != Bits::npos; i = P.family[p1].find_next(i))
        for (auto j = Q.family[p2].find_first(); j != Bits::npos; j = Q.family[p2].find_next(j)) {
          const auto r = detail::unfolded_combine(
              mon.variant, F.at(static_cast<ObjId>(u1), static_cast<int>(i)).as<Heap>(),
              F.at(static_cast<ObjId>(u2), static_cast<int>(j)).as<Heap>());
          if (r && *r == target)
            return StarWitness{static_cast<ObjId>(u1), static_cast<ObjId>(u2), static_cast<int>(i),
                               static_cast<int>(j)};
        }
    }
  }
  return std::nullopt;
}

/// Does the point `element` of F(stage) satisfy φ?
inline SatResult sat(const ResourceModel& model, const Formula& phi, ObjId stage,
                     const Element& element, SepMode mode = SepMode::Unfolded) {
  const auto& F = *model.resource();
  const auto idx = F.find(stage, element);
  if (!idx)
    throw Error(ErrorKind::TypeMismatch, F.describe_element(stage, element) + " is not a point of " +
                                             F.name() + "(" + model.base().object_name(stage) + ")");
  SatResult out;
  out.result = eval_formula(model, phi, stage, mode).holds(*idx);
  if (phi.kind == FormulaKind::Star) {
    const auto P = eval_formula(model, *phi.lhs, stage, mode);
    const auto Q = eval_formula(model, *phi.rhs, stage, mode);
    out.witness = star_witness(model, P, Q, *idx);
    if (out.witness) {
      const auto& w = *out.witness;
      out.explanation = "split " + model.base().object_name(w.left) + " | " +
                        model.base().object_name(w.right) + " as " + F.describe(w.left, w.s) +
                        " * " + F.describe(w.right, w.t);
    } else if (out.result) {
      out.explanation = "holds by local closure; no single decomposition at this stage";
    } else {
      out.explanation = "no decomposition satisfies both sides";
    }
  } else {
    out.explanation = out.result ? "holds" : "fails";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Predicate generators

/// The closure of a random seed; each point is seeded with probability
/// `density`.
template <class Rng>
KripkePredicate random_predicate(const FibrePtr& f, Rng& rng, double density = 0.3) {
  std::bernoulli_distribution coin(density);
  std::vector<Bits> seed;
  for (int p = 0; p < f->num_objects(); ++p) {
    Bits b(f->size(p));
    for (int i = 0; i < f->size(p); ++i)
      if (coin(rng)) b.set(i);
    seed.push_back(std::move(b));
  }
  return close(f, std::move(seed));
}

/// Every predicate in the fibre, by filtering all families. Only for fibres
/// with at most 24 points in total.
inline std::vector<KripkePredicate> all_predicates(const FibrePtr& f) {
  int total = 0;
  for (int p = 0; p < f->num_objects(); ++p) total += f->size(p);
  if (total > 24)
    throw Error(ErrorKind::Budget, "fibre has " + std::to_string(total) +
                                       " points; exhaustive enumeration is capped at 24");
  std::vector<KripkePredicate> out;
  for (std::uint32_t mask = 0; mask < (std::uint32_t{1} << total); ++mask) {
    KripkePredicate P = bottom(f);
    int k = 0;
    for (int p = 0; p < f->num_objects(); ++p)
      for (int i = 0; i < f->size(p); ++i, ++k)
        if ((mask >> k) & 1U) P.family[p].set(i);
    if (validate_predicate(P).ok()) out.push_back(std::move(P));
  }
  return out;
}

/// Stage-indexed listing: one row per slice object, named by its domain on
/// a powerset base and by its leg otherwise.
inline std::vector<std::pair<std::string, std::vector<std::string>>> describe_predicate(
    const KripkePredicate& P) {
  std::vector<std::pair<std::string, std::vector<std::string>>> rows;
  const auto& f = *P.fibre;
  for (int p = 0; p < f.num_objects(); ++p) {
    std::vector<std::string> pts;
    for (auto i = P.family[p].find_first(); i != Bits::npos; i = P.family[p].find_next(i))
      pts.push_back(f.view()->describe(p, static_cast<int>(i)));
    const auto& c = f.resource()->base();
    rows.emplace_back(c.kind == CatKind::Powerset ? c.object_name(f.domain(p)) : c.morphism_name(f.leg(p)),
                      std::move(pts));
  }
  return rows;
}

}  // namespace sheafsep
