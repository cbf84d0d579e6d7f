#pragma once

// The matching-object presheaf Match(F): compatible families over covers up
// to agreement on a common refinement, and the amalgamation map
// Match(F) -> F with its inverse.

#include <algorithm>
#include <bit>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "sheafsep/presheaf.hpp"
#include "sheafsep/site.hpp"

namespace sheafsep {

struct MatchingPresheaf {
  PresheafPtr resource;
  PresheafPtr presheaf;  // points are ClassRef{id}
  std::vector<std::vector<MatchingFamily>> canonical;
  std::vector<std::vector<std::vector<MatchingFamily>>> members;
  std::vector<std::map<MatchingFamily, int>> class_of;

  int lookup(const MatchingFamily& fam) const {
    const auto& m = class_of.at(fam.target);
    auto it = m.find(fam);
    if (it == m.end())
      throw Error(ErrorKind::TypeMismatch, "family is not a representative in the matching presheaf");
    return it->second;
  }
};

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

/// Smaller cover first, then lexicographic on (cover, values).
inline bool canonical_before(const MatchingFamily& a, const MatchingFamily& b) {
  const int pa = std::popcount(a.cover), pb = std::popcount(b.cover);
  if (pa != pb) return pa < pb;
  return a < b;
}

/// Members of both families' sieves on which they carry the same value.
inline SieveBits agreement(const SieveIndex& idx, const MatchingFamily& x,
                           const MatchingFamily& y) {
  SieveBits common = x.cover & y.cover;
  SieveBits out = 0;
  for (MorId f : idx.members(x.target, common))
    if (x.values[idx.position(f)] == y.values[idx.position(f)]) out |= idx.bit(f);
  return out;
}

inline MatchingFamily pullback_family(const SieveIndex& idx, const MatchingFamily& fam, MorId h) {
  const auto& c = idx.cat();
  const ObjId b = c.src(h);
  MatchingFamily out{b, idx.pullback(fam.cover, h), std::vector<int>(c.into(b).size(), -1)};
  for (MorId g : idx.members(b, out.cover))
    out.values[idx.position(g)] = fam.values[idx.position(c.then(g, h))];
  return out;
}

}  // namespace detail

/// Enumerates every compatible family over every cover and identifies two
/// families when the sieve on which they agree is covering.
inline MatchingPresheaf matching_presheaf(const PresheafPtr& F, const Coverage& cov,
                                          std::uint64_t budget = 5'000'000) {
  const auto& c = cov.cat();
  const auto& idx = cov.sieves();
  if (&F->base() != &c)
    throw Error(ErrorKind::TypeMismatch, "presheaf and coverage live on different bases");
  MatchingPresheaf m;
  m.resource = F;
  auto P = std::make_shared<Presheaf>(cov.cat_ptr(), "match(" + F->name() + ")");
  m.canonical.resize(c.num_objects());
  m.members.resize(c.num_objects());
  m.class_of.resize(c.num_objects());
  for (ObjId a = 0; a < c.num_objects(); ++a) {
    std::vector<MatchingFamily> reps;
    for (SieveBits s : cov.covers(a)) {
      FamilyEnumerator en(*F, idx, a, s);
      en.for_each(budget, [&](const MatchingFamily& fam) { reps.push_back(fam); });
    }
    detail::UnionFind uf(reps.size());
    for (std::size_t i = 0; i < reps.size(); ++i)
      for (std::size_t j = i + 1; j < reps.size(); ++j)
        if (uf.find(i) != uf.find(j) && cov.is_cover(a, detail::agreement(idx, reps[i], reps[j])))
          uf.unite(i, j);
    std::map<std::size_t, std::vector<MatchingFamily>> groups;
    for (std::size_t i = 0; i < reps.size(); ++i) groups[uf.find(i)].push_back(reps[i]);
    std::vector<std::vector<MatchingFamily>> classes;
    for (auto& [root, g] : groups) {
      std::sort(g.begin(), g.end(), detail::canonical_before);
      classes.push_back(std::move(g));
    }
    std::sort(classes.begin(), classes.end(), [](const auto& x, const auto& y) {
      return detail::canonical_before(x.front(), y.front());
    });
    std::vector<Element> points;
    for (std::size_t k = 0; k < classes.size(); ++k) {
      points.emplace_back(ClassRef{static_cast<int>(k)});
      m.canonical[a].push_back(classes[k].front());
      for (const auto& fam : classes[k]) m.class_of[a][fam] = static_cast<int>(k);
    }
    m.members[a] = std::move(classes);
    P->set_elements(a, std::move(points));
  }
  for (MorId h = 0; h < c.num_morphisms(); ++h) {
    const ObjId a = c.dst(h);
    std::vector<int> table;
    for (const auto& rep : m.canonical[a])
      table.push_back(m.lookup(detail::pullback_family(idx, rep, h)));
    P->set_restriction(h, std::move(table));
  }
  auto canon = m.canonical;
  auto index = cov.sieve_index();
  P->describer = [F, canon, index](ObjId a, int i) {
    const auto& fam = canon[a][i];
    return "[" + index->describe(a, fam.cover) + " : " + describe_family(*F, *index, fam) + "]";
  };
  m.presheaf = P;
  return m;
}

struct AmalgamationOperator {
  StageMap amalg;  // Match(F) -> F
  StageMap theta;  // F -> Match(F)
  Report report;
};

/// Sends each class to the amalgam of its representatives and each point to
/// the class of its restrictions to the maximal sieve, then checks that the
/// two maps are mutually inverse and natural.
inline AmalgamationOperator amalgamation_operator(const MatchingPresheaf& m, const Coverage& cov) {
  const auto& F = *m.resource;
  const auto& c = cov.cat();
  const auto& idx = cov.sieves();
  AmalgamationOperator op;
  op.amalg = {m.presheaf, m.resource, {}, "amalg"};
  op.theta = {m.resource, m.presheaf, {}, "theta"};
  for (ObjId a = 0; a < c.num_objects(); ++a) {
    std::vector<int> forward;
    for (std::size_t k = 0; k < m.members[a].size(); ++k) {
      int value = -1;
      for (const auto& fam : m.members[a][k]) {
        const auto found = amalgams(F, idx, fam);
        if (found.empty())
          throw Error(ErrorKind::NoAmalgamation, F.name() + " is not a sheaf: " +
                                                     describe_family(F, idx, fam) +
                                                     " has no amalgamation");
        if (found.size() > 1)
          throw Error(ErrorKind::NonUnique, F.name() + " is not a sheaf: " +
                                                describe_family(F, idx, fam) +
                                                " amalgamates non-uniquely");
        if (value >= 0 && value != found.front())
          op.report.add("well-defined", "class " + m.presheaf->describe(a, static_cast<int>(k)) +
                                            " has representatives with different amalgams");
        value = found.front();
      }
      forward.push_back(value);
    }
    std::vector<int> backward;
    for (int p = 0; p < F.size(a); ++p)
      backward.push_back(m.lookup(family_of(F, idx, a, idx.maximal(a), p)));
    for (int p = 0; p < F.size(a); ++p)
      if (forward[backward[p]] != p)
        op.report.add("bijection", "amalg(theta(" + F.describe(a, p) + ")) differs at " +
                                       c.object_name(a));
    for (std::size_t k = 0; k < forward.size(); ++k)
      if (backward[forward[k]] != static_cast<int>(k))
        op.report.add("bijection", "theta(amalg(" + m.presheaf->describe(a, static_cast<int>(k)) +
                                       ")) differs at " + c.object_name(a));
    op.amalg.component.push_back(std::move(forward));
    op.theta.component.push_back(std::move(backward));
  }
  op.report.append(check_naturality(op.amalg));
  op.report.append(check_naturality(op.theta));
  return op;
}

}  // namespace sheafsep
