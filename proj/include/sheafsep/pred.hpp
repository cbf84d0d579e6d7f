#pragma once

// Predicate fibres: subsheaves of a resource sheaf restricted over a stage,
// stored extensionally per slice object. Heyting operations, reindexing,
// direct image, gluing, and the α combinator into decomposition predicates.

#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/dynamic_bitset.hpp>

#include "sheafsep/day.hpp"
#include "sheafsep/presheaf.hpp"
#include "sheafsep/site.hpp"

namespace sheafsep {

using Bits = boost::dynamic_bitset<>;
using SliceSitePtr = std::shared_ptr<const SliceSite>;

inline SliceSitePtr make_slice_site(const Coverage& cov, ObjId stage) {
  return std::make_shared<const SliceSite>(slice_coverage(cov, stage));
}

/// The resource sheaf viewed over C/A, with the minimal covers of each
/// slice object listed by their generators.
class Fibre {
 public:
  Fibre(PresheafPtr resource, SliceSitePtr site)
      : resource_(std::move(resource)),
        site_(std::move(site)),
        view_(slice_restrict(resource_, site_->slice)) {
    const auto& sc = *site_->slice.cat;
    const auto& idx = site_->coverage.sieves();
    local_.resize(sc.num_objects());
    for (ObjId p = 0; p < sc.num_objects(); ++p) {
      const auto& covers = site_->coverage.covers(p);
      for (SieveBits s : covers) {
        bool minimal = true;
        for (SieveBits t : covers)
          if (t != s && (t & ~s) == 0) {
            minimal = false;
            break;
          }
        if (minimal && s != idx.maximal(p)) local_[p].push_back(idx.generators(p, s));
      }
    }
    identity_ = kNone;
    const auto& legs = sc.slice->legs;
    for (std::size_t i = 0; i < legs.size(); ++i)
      if (site_->slice.dom.target->is_identity(legs[i])) identity_ = static_cast<int>(i);
  }

  const PresheafPtr& resource() const { return resource_; }
  const PresheafPtr& view() const { return view_; }
  const FinCat& slice() const { return *site_->slice.cat; }
  const SliceSitePtr& site() const { return site_; }
  ObjId stage() const { return site_->slice.cat->slice->apex; }
  int num_objects() const { return slice().num_objects(); }
  /// Slice object of the identity leg.
  int top() const { return identity_; }
  MorId leg(int p) const { return slice().slice->legs[p]; }
  ObjId domain(int p) const { return site_->slice.dom.object_map[p]; }
  int size(int p) const { return view_->size(p); }

  /// The slice object whose leg is the given base morphism.
  int object_of_leg(MorId leg) const {
    const auto& legs = slice().slice->legs;
    for (std::size_t i = 0; i < legs.size(); ++i)
      if (legs[i] == leg) return static_cast<int>(i);
    throw Error(ErrorKind::UnknownObject, "morphism is not a leg into the stage");
  }

  /// On a thin base: the slice object over the base object `b`.
  int object_over(ObjId b) const {
    const auto& base = *site_->slice.dom.target;
    const auto& h = base.hom(b, stage());
    if (h.size() != 1)
      throw Error(ErrorKind::UnknownObject,
                  base.object_name(b) + " is not uniquely below " + base.object_name(stage()));
    return object_of_leg(h.front());
  }

  const std::vector<std::vector<MorId>>& local_covers(int p) const { return local_[p]; }

 private:
  PresheafPtr resource_;
  SliceSitePtr site_;
  PresheafPtr view_;
  std::vector<std::vector<std::vector<MorId>>> local_;
  int identity_;
};

using FibrePtr = std::shared_ptr<const Fibre>;

/// Shares slice sites and fibres across predicates built on one coverage.
class FibreCache {
 public:
  explicit FibreCache(const Coverage& cov) : cov_(cov), sites_(cov.cat().num_objects()) {}

  const Coverage& coverage() const { return cov_; }

  SliceSitePtr site(ObjId stage) {
    auto& s = sites_.at(stage);
    if (!s) s = make_slice_site(cov_, stage);
    return s;
  }

  FibrePtr fibre(const PresheafPtr& resource, ObjId stage) {
    auto key = std::make_pair(resource.get(), stage);
    auto it = fibres_.find(key);
    if (it != fibres_.end()) return it->second.second;
    auto f = std::make_shared<const Fibre>(resource, site(stage));
    fibres_[key] = {resource, f};
    return f;
  }

 private:
  const Coverage& cov_;
  std::vector<SliceSitePtr> sites_;
  std::map<std::pair<const Presheaf*, ObjId>, std::pair<PresheafPtr, FibrePtr>> fibres_;
};

struct KripkePredicate {
  FibrePtr fibre;
  std::vector<Bits> family;

  bool contains(int p, int i) const { return family[p].test(i); }
  /// Membership at the stage itself.
  bool holds(int i) const { return family[fibre->top()].test(i); }
  const Bits& at_top() const { return family[fibre->top()]; }

  bool subset_of(const KripkePredicate& o) const {
    for (std::size_t p = 0; p < family.size(); ++p)
      if (!family[p].is_subset_of(o.family[p])) return false;
    return true;
  }
  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& b : family) n += b.count();
    return n;
  }
};

inline bool operator==(const KripkePredicate& a, const KripkePredicate& b) {
  return a.family == b.family;
}

namespace detail {

inline void require_same_fibre(const KripkePredicate& a, const KripkePredicate& b) {
  if (a.fibre->resource() != b.fibre->resource() || a.fibre->stage() != b.fibre->stage())
    throw Error(ErrorKind::TypeMismatch, "predicates live over different resources or stages");
}

inline std::vector<Bits> empty_family(const Fibre& f) {
  std::vector<Bits> out;
  for (int p = 0; p < f.num_objects(); ++p) out.emplace_back(f.size(p));
  return out;
}

}  // namespace detail

inline KripkePredicate top(const FibrePtr& f) {
  KripkePredicate P{f, detail::empty_family(*f)};
  for (auto& b : P.family) b.set();
  return P;
}

inline KripkePredicate bottom(const FibrePtr& f) { return {f, detail::empty_family(*f)}; }

/// Smallest restriction-closed, locally closed family containing `seed`.
inline KripkePredicate close(const FibrePtr& f, std::vector<Bits> seed) {
  const auto& sc = f->slice();
  const auto& V = *f->view();
  std::vector<Bits> fam = detail::empty_family(*f);
  for (MorId g = 0; g < sc.num_morphisms(); ++g) {
    const int p = sc.dst(g), q = sc.src(g);
    for (auto i = seed[p].find_first(); i != Bits::npos; i = seed[p].find_next(i))
      fam[q].set(V.restrict(g, static_cast<int>(i)));
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (int p = 0; p < f->num_objects(); ++p)
      for (int a = 0; a < f->size(p); ++a) {
        if (fam[p].test(a)) continue;
        for (const auto& gens : f->local_covers(p)) {
          bool all = true;
          for (MorId g : gens)
            if (!fam[sc.src(g)].test(V.restrict(g, a))) {
              all = false;
              break;
            }
          if (all) {
            fam[p].set(a);
            changed = true;
            break;
          }
        }
      }
  }
  return {f, std::move(fam)};
}

/// Restriction-closure and local-character violations.
inline Report validate_predicate(const KripkePredicate& P) {
  Report r;
  const auto& f = *P.fibre;
  const auto& sc = f.slice();
  const auto& V = *f.view();
  for (MorId g = 0; g < sc.num_morphisms(); ++g) {
    const int p = sc.dst(g), q = sc.src(g);
    for (auto i = P.family[p].find_first(); i != Bits::npos; i = P.family[p].find_next(i))
      if (!P.family[q].test(V.restrict(g, static_cast<int>(i)))) {
        r.add("restriction-closed", V.describe(p, static_cast<int>(i)) + " restricted along " +
                                        sc.morphism_name(g) + " leaves the family");
        break;
      }
  }
  for (int p = 0; p < f.num_objects(); ++p)
    for (int a = 0; a < f.size(p); ++a) {
      if (P.family[p].test(a)) continue;
      for (const auto& gens : f.local_covers(p)) {
        bool all = true;
        for (MorId g : gens) all = all && P.family[sc.src(g)].test(V.restrict(g, a));
        if (all) {
          r.add("local-character", V.describe(p, a) + " is locally in the family at " +
                                       sc.object_name(p) + " but not in it");
          break;
        }
      }
    }
  return r;
}

inline KripkePredicate meet(const KripkePredicate& P, const KripkePredicate& Q) {
  detail::require_same_fibre(P, Q);
  KripkePredicate R = P;
  for (std::size_t p = 0; p < R.family.size(); ++p) R.family[p] &= Q.family[p];
  return R;
}

inline KripkePredicate join(const KripkePredicate& P, const KripkePredicate& Q) {
  detail::require_same_fibre(P, Q);
  auto fam = P.family;
  for (std::size_t p = 0; p < fam.size(); ++p) fam[p] |= Q.family[p];
  return close(P.fibre, std::move(fam));
}

/// s ∈ (P ⇒ Q)(p) iff every restriction of s along a slice morphism into p
/// that lies in P also lies in Q.
inline KripkePredicate implication(const KripkePredicate& P, const KripkePredicate& Q) {
  detail::require_same_fibre(P, Q);
  const auto& f = *P.fibre;
  const auto& sc = f.slice();
  const auto& V = *f.view();
  KripkePredicate R = bottom(P.fibre);
  for (int p = 0; p < f.num_objects(); ++p)
    for (int s = 0; s < f.size(p); ++s) {
      bool ok = true;
      for (MorId g : sc.into(p)) {
        const int q = sc.src(g);
        const int r = V.restrict(g, s);
        if (P.family[q].test(r) && !Q.family[q].test(r)) {
          ok = false;
          break;
        }
      }
      if (ok) R.family[p].set(s);
    }
  return R;
}

/// Pointwise predicate from a membership test on (slice object, point).
template <class Pred>
KripkePredicate tabulate(const FibrePtr& f, Pred pred) {
  KripkePredicate P = bottom(f);
  for (int p = 0; p < f->num_objects(); ++p)
    for (int a = 0; a < f->size(p); ++a)
      if (pred(p, a)) P.family[p].set(a);
  return P;
}

namespace detail {

inline void require_map_fits(const StageMap& alpha, const Fibre& src, const Fibre& dst) {
  if (alpha.source != src.resource() || alpha.target != dst.resource())
    throw Error(ErrorKind::TypeMismatch, "map " + alpha.name + " does not connect the fibres");
  if (src.stage() != dst.stage())
    throw Error(ErrorKind::TypeMismatch, "fibres sit over different stages");
}

}  // namespace detail

/// α*(Q): stage-wise preimage. Points where a partial α is undefined are
/// excluded.
inline KripkePredicate reindex_preimage(const StageMap& alpha, const FibrePtr& source,
                                        const KripkePredicate& Q) {
  detail::require_map_fits(alpha, *source, *Q.fibre);
  const auto nat = check_naturality(alpha);
  if (!nat.ok()) throw Error(ErrorKind::NotNatural, nat.violations.front().witness);
  return tabulate(source, [&](int p, int a) {
    const int x = alpha.apply(source->domain(p), a);
    return x >= 0 && Q.family[p].test(x);
  });
}

/// ∃^α(P): closure of the stage-wise image over defined points.
inline KripkePredicate direct_image(const StageMap& alpha, const KripkePredicate& P,
                                    const FibrePtr& target) {
  detail::require_map_fits(alpha, *P.fibre, *target);
  auto fam = detail::empty_family(*target);
  const auto& f = *P.fibre;
  for (int p = 0; p < f.num_objects(); ++p)
    for (auto i = P.family[p].find_first(); i != Bits::npos; i = P.family[p].find_next(i)) {
      const int x = alpha.apply(f.domain(p), static_cast<int>(i));
      if (x >= 0) fam[p].set(x);
    }
  return close(target, std::move(fam));
}

/// Composite of two stage-wise maps, undefined wherever either is.
inline StageMap compose_maps(const StageMap& second, const StageMap& first) {
  if (first.target != second.source)
    throw Error(ErrorKind::TypeMismatch, "cannot compose " + second.name + " after " + first.name);
  StageMap out{first.source, second.target, {}, second.name + " . " + first.name};
  for (std::size_t a = 0; a < first.component.size(); ++a) {
    std::vector<int> comp;
    for (int x : first.component[a]) comp.push_back(x < 0 ? -1 : second.component[a][x]);
    out.component.push_back(std::move(comp));
  }
  return out;
}

inline StageMap identity_map(const PresheafPtr& F) {
  StageMap m{F, F, {}, "id"};
  for (ObjId a = 0; a < F->base().num_objects(); ++a) {
    std::vector<int> comp(F->size(a));
    std::iota(comp.begin(), comp.end(), 0);
    m.component.push_back(std::move(comp));
  }
  return m;
}

/// P restricted along the leg of slice object p: a predicate at dom(p).
inline KripkePredicate restrict_predicate(const KripkePredicate& P, int p, const FibrePtr& target) {
  const auto& f = *P.fibre;
  const auto& base = *f.site()->slice.dom.target;
  if (target->resource() != f.resource() || target->stage() != f.domain(p))
    throw Error(ErrorKind::TypeMismatch, "target fibre is not over the domain of the leg");
  KripkePredicate R = bottom(target);
  for (int q = 0; q < target->num_objects(); ++q)
    R.family[q] = P.family[f.object_of_leg(base.then(target->leg(q), f.leg(p)))];
  return R;
}

/// The unique predicate at the cover's target whose restriction along each
/// member f of the cover is the part given for f. Parts may be given on
/// generators only; the rest are obtained by restriction.
inline KripkePredicate glue_predicates(FibreCache& cache, const PresheafPtr& F, ObjId target,
                                       SieveBits cover,
                                       const std::vector<std::pair<MorId, KripkePredicate>>& parts) {
  const auto& c = F->base();
  const auto& idx = cache.coverage().sieves();
  if (!cache.coverage().is_cover(target, cover))
    throw Error(ErrorKind::TypeMismatch, idx.describe(target, cover) + " is not a cover of " +
                                             c.object_name(target));
  std::map<MorId, KripkePredicate> full;
  for (const auto& [f, P] : parts) {
    if (c.dst(f) != target || !(cover & idx.bit(f)))
      throw Error(ErrorKind::TypeMismatch, c.morphism_name(f) + " is not a member of the cover");
    if (P.fibre->resource() != F || P.fibre->stage() != c.src(f))
      throw Error(ErrorKind::TypeMismatch, "part for " + c.morphism_name(f) +
                                               " is not a predicate at " +
                                               c.object_name(c.src(f)));
    for (int q = 0; q < P.fibre->num_objects(); ++q) {
      const MorId k = P.fibre->leg(q);
      const MorId fk = c.then(k, f);
      auto R = restrict_predicate(P, q, cache.fibre(F, c.src(k)));
      auto [it, fresh] = full.try_emplace(fk, R);
      if (!fresh && !(it->second == R))
        throw Error(ErrorKind::Incompatible, "parts disagree at " + c.morphism_name(fk));
    }
  }
  for (MorId f : idx.members(target, cover))
    if (!full.count(f))
      throw Error(ErrorKind::TypeMismatch, "no part determines " + c.morphism_name(f));

  const auto fib = cache.fibre(F, target);
  return tabulate(fib, [&](int p, int s) {
    const MorId leg = fib->leg(p);
    const ObjId b = c.src(leg);
    for (MorId g : idx.members(b, idx.pullback(cover, leg))) {
      const auto& part = full.at(c.then(g, leg));
      if (!part.holds(F->restrict(g, s))) return false;
    }
    return true;
  });
}

/// α(P, Q) on a powerset base: a decomposition (B, C, s, t) lies in the
/// result iff B is within P's stage, C within Q's, s ∈ P(B) and t ∈ Q(C).
/// The result sits over the decomposition presheaf at the union of stages.
inline KripkePredicate combine_alpha(const KripkePredicate& P, const KripkePredicate& Q,
                                     const FibrePtr& target) {
  const auto& D = *target->resource();
  const auto& c = D.base();
  if (c.kind != CatKind::Powerset)
    throw Error(ErrorKind::KindMismatch, "combine_alpha is realized on powerset bases");
  if (D.components.size() != 2 || D.components[0] != P.fibre->resource() ||
      D.components[1] != Q.fibre->resource())
    throw Error(ErrorKind::TypeMismatch, "target is not the decomposition of the two resources");
  const LocMask u1 = static_cast<LocMask>(P.fibre->stage());
  const LocMask u2 = static_cast<LocMask>(Q.fibre->stage());
  if (static_cast<LocMask>(target->stage()) != (u1 | u2))
    throw Error(ErrorKind::TypeMismatch, "decomposition fibre must sit over the union of stages");
  return tabulate(target, [&](int p, int i) {
    const auto& d = target->view()->at(p, i).as<Decomp>();
    const LocMask b = static_cast<LocMask>(d.left), e = static_cast<LocMask>(d.right);
    if (!subset(b, u1) || !subset(e, u2)) return false;
    return P.contains(P.fibre->object_over(d.left), d.s) &&
           Q.contains(Q.fibre->object_over(d.right), d.t);
  });
}

}  // namespace sheafsep
