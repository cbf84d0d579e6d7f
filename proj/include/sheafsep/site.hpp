#pragma once

// Sieves, Grothendieck coverages, saturation of pre-coverages, the built-in
// coverages, and the coverage induced on a slice.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sheafsep/error.hpp"
#include "sheafsep/fincat.hpp"

namespace sheafsep {

using SieveBits = std::uint64_t;

/// Positions of morphisms in their target's incoming list, and the principal
/// sieve generated by each morphism. Sieves on A are bitmasks over
/// `cat.into(A)`.
class SieveIndex {
 public:
  explicit SieveIndex(CatPtr cat) : cat_(std::move(cat)) {
    const auto& c = *cat_;
    pos_.assign(c.num_morphisms(), kNone);
    for (ObjId a = 0; a < c.num_objects(); ++a) {
      const auto& in = c.into(a);
      if (in.size() > 64)
        throw Error(ErrorKind::Budget, "object " + c.object_name(a) + " has " +
                                           std::to_string(in.size()) +
                                           " incoming morphisms; sieve bound is 64");
      for (std::size_t i = 0; i < in.size(); ++i) pos_[in[i]] = static_cast<int>(i);
    }
    principal_.assign(c.num_morphisms(), 0);
    for (MorId f = 0; f < c.num_morphisms(); ++f)
      for (MorId k : c.into(c.src(f))) principal_[f] |= bit(c.then(k, f));
  }

  const FinCat& cat() const { return *cat_; }
  const CatPtr& cat_ptr() const { return cat_; }
  SieveBits bit(MorId m) const { return SieveBits{1} << pos_[m]; }
  int position(MorId m) const { return pos_[m]; }
  SieveBits principal(MorId m) const { return principal_[m]; }

  SieveBits maximal(ObjId a) const {
    const auto n = cat_->into(a).size();
    return n == 64 ? ~SieveBits{0} : ((SieveBits{1} << n) - 1);
  }

  std::vector<MorId> members(ObjId a, SieveBits s) const {
    std::vector<MorId> out;
    const auto& in = cat_->into(a);
    for (std::size_t i = 0; i < in.size(); ++i)
      if (s & (SieveBits{1} << i)) out.push_back(in[i]);
    return out;
  }

  /// Closure under precomposition of a family of morphisms into `a`.
  SieveBits closure(const std::vector<MorId>& family) const {
    SieveBits s = 0;
    for (MorId f : family) s |= principal_[f];
    return s;
  }

  bool is_sieve(ObjId a, SieveBits s) const {
    for (MorId f : members(a, s))
      if ((principal_[f] & ~s) != 0) return false;
    return true;
  }

  /// h*(S) = { g | h∘g ∈ S }, a sieve on src(h).
  SieveBits pullback(SieveBits s, MorId h) const {
    const auto& c = *cat_;
    SieveBits out = 0;
    for (MorId g : c.into(c.src(h)))
      if (s & bit(c.then(g, h))) out |= bit(g);
    return out;
  }

  /// Every sieve on `a`, in increasing numeric order.
  std::vector<SieveBits> all_sieves(ObjId a) const {
    std::set<SieveBits> seen{0};
    std::vector<SieveBits> frontier{0};
    const auto& in = cat_->into(a);
    while (!frontier.empty()) {
      std::vector<SieveBits> next;
      for (SieveBits s : frontier)
        for (MorId f : in) {
          const SieveBits t = s | principal_[f];
          if (seen.insert(t).second) next.push_back(t);
        }
      frontier = std::move(next);
    }
    return {seen.begin(), seen.end()};
  }

  /// Representatives of the maximal factorization classes of a sieve: every
  /// member factors through one of them.
  std::vector<MorId> generators(ObjId a, SieveBits s) const {
    std::vector<MorId> gens;
    SieveBits covered = 0;
    auto mem = members(a, s);
    // Members with larger principal sieves first; ties by id.
    std::sort(mem.begin(), mem.end(), [&](MorId x, MorId y) {
      const int px = std::popcount(principal_[x]), py = std::popcount(principal_[y]);
      return px != py ? px > py : x < y;
    });
    for (MorId f : mem) {
      if (covered & bit(f)) continue;
      gens.push_back(f);
      covered |= principal_[f];
    }
    std::sort(gens.begin(), gens.end());
    return gens;
  }

  std::string describe(ObjId a, SieveBits s) const {
    std::string out = "{";
    bool first = true;
    for (MorId f : members(a, s)) {
      if (!first) out += ", ";
      out += cat_->morphism_name(f);
      first = false;
    }
    return out + "}";
  }

 private:
  CatPtr cat_;
  std::vector<int> pos_;
  std::vector<SieveBits> principal_;
};

using SieveIndexPtr = std::shared_ptr<const SieveIndex>;

/// A sieve on `target`, stored as explicit membership over `into(target)`.
struct Sieve {
  ObjId target = kNone;
  SieveBits bits = 0;
  auto operator<=>(const Sieve&) const = default;
};

struct PreCover {
  ObjId target = kNone;
  std::vector<MorId> family;
};

enum class CoverageKind { DownwardClosed, FiniteCovers, Atomic, Saturated, Slice };

inline std::string_view to_string(CoverageKind k) {
  switch (k) {
    case CoverageKind::DownwardClosed: return "downward-closed";
    case CoverageKind::FiniteCovers: return "finite-covers";
    case CoverageKind::Atomic: return "atomic";
    case CoverageKind::Saturated: return "saturated";
    case CoverageKind::Slice: return "slice";
  }
  return "?";
}

/// J: object -> set of covering sieves.
class Coverage {
 public:
  Coverage(SieveIndexPtr index, CoverageKind kind)
      : index_(std::move(index)), kind_(kind), covers_(index_->cat().num_objects()) {}

  const FinCat& cat() const { return index_->cat(); }
  const CatPtr& cat_ptr() const { return index_->cat_ptr(); }
  const SieveIndex& sieves() const { return *index_; }
  const SieveIndexPtr& sieve_index() const { return index_; }
  CoverageKind kind() const { return kind_; }

  const std::set<SieveBits>& covers(ObjId a) const { return covers_.at(a); }
  bool is_cover(ObjId a, SieveBits s) const { return covers_.at(a).count(s) > 0; }
  bool is_cover(const Sieve& s) const { return is_cover(s.target, s.bits); }
  bool add(ObjId a, SieveBits s) { return covers_.at(a).insert(s).second; }
  void remove(ObjId a, SieveBits s) { covers_.at(a).erase(s); }

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& c : covers_) n += c.size();
    return n;
  }

  bool operator==(const Coverage& o) const { return covers_ == o.covers_; }

 private:
  SieveIndexPtr index_;
  CoverageKind kind_;
  std::vector<std::set<SieveBits>> covers_;
};

struct CoverageBuild {
  Coverage coverage;
  std::vector<std::string> notes;
};

inline Sieve pullback_sieve(const SieveIndex& idx, const Sieve& s, MorId h) {
  const auto& c = idx.cat();
  if (c.dst(h) != s.target)
    throw Error(ErrorKind::TypeMismatch, "pullback along " + c.morphism_name(h) +
                                             " whose target is not " +
                                             c.object_name(s.target));
  return {c.src(h), idx.pullback(s.bits, h)};
}

namespace detail {

inline LocMask union_of_domains(const SieveIndex& idx, ObjId a, SieveBits s) {
  LocMask u = 0;
  for (MorId f : idx.members(a, s)) u |= static_cast<LocMask>(idx.cat().src(f));
  return u;
}

/// Searches for a cospan f, g into a common object with no commuting span.
inline std::optional<std::string> ore_witness(const FinCat& c) {
  for (ObjId a = 0; a < c.num_objects(); ++a)
    for (MorId f : c.into(a))
      for (MorId g : c.into(a)) {
        bool found = false;
        for (MorId h : c.into(c.src(f))) {
          for (MorId k : c.hom(c.src(h), c.src(g)))
            if (c.then(h, f) == c.then(k, g)) {
              found = true;
              break;
            }
          if (found) break;
        }
        if (!found) return c.morphism_name(f) + " and " + c.morphism_name(g);
      }
  return std::nullopt;
}

}  // namespace detail

/// Builds one of the built-in coverages.
///
/// Covers are nonempty: the empty family is not admitted as a cover of the
/// empty region. On a finite powerset the downward-closed and finite-cover
/// coverages coincide; the build notes record the comparison.
inline CoverageBuild build_coverage(const CatPtr& cat, CoverageKind kind) {
  auto idx = std::make_shared<const SieveIndex>(cat);
  const auto& c = *cat;
  Coverage cov(idx, kind);
  std::vector<std::string> notes;
  switch (kind) {
    case CoverageKind::DownwardClosed: {
      if (c.kind != CatKind::Powerset)
        throw Error(ErrorKind::KindMismatch, "downward-closed coverage needs a powerset base");
      for (ObjId a = 0; a < c.num_objects(); ++a)
        for (SieveBits s : idx->all_sieves(a))
          if (s != 0 && detail::union_of_domains(*idx, a, s) == static_cast<LocMask>(a))
            cov.add(a, s);
      break;
    }
    case CoverageKind::FiniteCovers: {
      if (c.kind != CatKind::Powerset)
        throw Error(ErrorKind::KindMismatch, "finite-cover coverage needs a powerset base");
      // Every nonempty finite family of subsets of U with union U, closed
      // downward.
      for (ObjId a = 0; a < c.num_objects(); ++a) {
        const auto& in = c.into(a);
        const std::size_t n = in.size();
        for (std::uint64_t fam = 1; fam < (std::uint64_t{1} << n); ++fam) {
          std::vector<MorId> family;
          LocMask u = 0;
          for (std::size_t i = 0; i < n; ++i)
            if (fam & (std::uint64_t{1} << i)) {
              family.push_back(in[i]);
              u |= static_cast<LocMask>(c.src(in[i]));
            }
          if (u == static_cast<LocMask>(a)) cov.add(a, idx->closure(family));
        }
      }
      const auto dc = build_coverage(cat, CoverageKind::DownwardClosed).coverage;
      notes.push_back(dc == cov ? "finite-covers coincides with downward-closed on this finite base"
                                : "finite-covers differs from downward-closed on this base");
      break;
    }
    case CoverageKind::Atomic: {
      if (auto w = detail::ore_witness(c))
        throw Error(ErrorKind::KindMismatch,
                    "atomic coverage needs every cospan to complete to a commuting square; "
                    "no span completes " + *w);
      for (ObjId a = 0; a < c.num_objects(); ++a)
        for (SieveBits s : idx->all_sieves(a))
          if (s != 0) cov.add(a, s);
      break;
    }
    default:
      throw Error(ErrorKind::KindMismatch, "not a built-in coverage kind");
  }
  return {std::move(cov), std::move(notes)};
}

/// Least Grothendieck coverage containing the sieves generated by the given
/// pre-covers. Maximal pre-covers {id_A} are always present.
inline Coverage saturate_precoverage(const CatPtr& cat,
                                     const std::vector<PreCover>& assignment) {
  auto idx = std::make_shared<const SieveIndex>(cat);
  const auto& c = *cat;
  std::vector<std::vector<std::vector<MorId>>> pre(c.num_objects());
  for (ObjId a = 0; a < c.num_objects(); ++a) pre[a].push_back({c.identity(a)});
  for (const auto& pc : assignment) {
    c.check_object(pc.target);
    for (MorId f : pc.family)
      if (c.dst(f) != pc.target)
        throw Error(ErrorKind::TypeMismatch,
                    c.morphism_name(f) + " does not target " + c.object_name(pc.target));
    pre[pc.target].push_back(pc.family);
  }
  // Pre-coverage condition: every pre-cover pulls back along h to a
  // refinement by some pre-cover of the domain of h.
  for (ObjId a = 0; a < c.num_objects(); ++a)
    for (const auto& fam : pre[a])
      for (MorId h : c.into(a)) {
        const SieveBits gen = idx->closure(fam);
        bool ok = false;
        for (const auto& cand : pre[c.src(h)]) {
          ok = std::all_of(cand.begin(), cand.end(),
                           [&](MorId g) { return (gen & idx->bit(c.then(g, h))) != 0; });
          if (ok) break;
        }
        if (!ok)
          throw Error(ErrorKind::PreCoverage,
                      "pre-cover " + idx->describe(a, gen) + " of " + c.object_name(a) +
                          " has no refining pre-cover along h = " + c.morphism_name(h));
      }

  Coverage cov(idx, CoverageKind::Saturated);
  for (ObjId a = 0; a < c.num_objects(); ++a)
    for (const auto& fam : pre[a]) cov.add(a, idx->closure(fam));

  std::vector<std::vector<SieveBits>> all(c.num_objects());
  for (ObjId a = 0; a < c.num_objects(); ++a) all[a] = idx->all_sieves(a);

  bool changed = true;
  while (changed) {
    changed = false;
    for (ObjId a = 0; a < c.num_objects(); ++a) {
      const std::vector<SieveBits> current(cov.covers(a).begin(), cov.covers(a).end());
      for (SieveBits s : current)
        for (MorId h : c.into(a)) changed |= cov.add(c.src(h), idx->pullback(s, h));
    }
    for (ObjId a = 0; a < c.num_objects(); ++a)
      for (SieveBits r : all[a]) {
        if (cov.is_cover(a, r)) continue;
        for (SieveBits s : std::vector<SieveBits>(cov.covers(a).begin(), cov.covers(a).end())) {
          bool all_cover = true;
          for (MorId h : idx->members(a, s))
            if (!cov.is_cover(c.src(h), idx->pullback(r, h))) {
              all_cover = false;
              break;
            }
          if (all_cover) {
            changed |= cov.add(a, r);
            break;
          }
        }
      }
  }
  return cov;
}

/// Exhaustive check of the sieve property and the three coverage axioms.
inline Report validate_coverage(const Coverage& cov) {
  Report r;
  const auto& idx = cov.sieves();
  const auto& c = cov.cat();
  for (ObjId a = 0; a < c.num_objects(); ++a) {
    for (SieveBits s : cov.covers(a))
      if (!idx.is_sieve(a, s))
        r.add("sieve", idx.describe(a, s) + " on " + c.object_name(a) +
                           " is not closed under precomposition");
    if (!cov.is_cover(a, idx.maximal(a)))
      r.add("maximality", "maximal sieve missing at " + c.object_name(a));
    for (SieveBits s : cov.covers(a))
      for (MorId h : c.into(a))
        if (!cov.is_cover(c.src(h), idx.pullback(s, h)))
          r.add("stability", "pullback of " + idx.describe(a, s) + " along h = " +
                                 c.morphism_name(h) + " is not a cover");
    for (SieveBits rr : idx.all_sieves(a)) {
      if (cov.is_cover(a, rr)) continue;
      for (SieveBits s : cov.covers(a)) {
        bool all_cover = true;
        for (MorId h : idx.members(a, s))
          if (!cov.is_cover(c.src(h), idx.pullback(rr, h))) {
            all_cover = false;
            break;
          }
        if (all_cover) {
          r.add("transitivity", idx.describe(a, rr) + " on " + c.object_name(a) +
                                    " is locally covering over " + idx.describe(a, s) +
                                    " but not a cover");
          break;
        }
      }
    }
  }
  return r;
}

struct SliceSite {
  SliceCategory slice;
  Coverage coverage;
};

/// The coverage on C/A whose covers of p are the sieves whose image under
/// dom_A covers dom(p).
inline SliceSite slice_coverage(const Coverage& cov, ObjId apex) {
  auto sl = slice_category(cov.cat_ptr(), apex);
  auto idx = std::make_shared<const SieveIndex>(sl.cat);
  const auto& sc = *sl.cat;
  const auto& base_idx = cov.sieves();
  Coverage out(idx, CoverageKind::Slice);
  for (ObjId p = 0; p < sc.num_objects(); ++p) {
    const ObjId b = sl.dom.object_map[p];
    for (SieveBits s : cov.covers(b)) {
      SieveBits t = 0;
      for (MorId g : sc.into(p))
        if (s & base_idx.bit(sl.dom.morphism_map[g])) t |= idx->bit(g);
      out.add(p, t);
    }
  }
  return {std::move(sl), std::move(out)};
}

}  // namespace sheafsep
