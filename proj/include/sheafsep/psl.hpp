#pragma once

// Finite probability spaces, pullback along surjections, laws of random
// variables, and satisfaction for the probabilistic logic whose separating
// conjunction splits a space into independent factors.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sheafsep/element.hpp"
#include "sheafsep/fincat.hpp"
#include "sheafsep/formula.hpp"
#include "sheafsep/presheaf.hpp"
#include "sheafsep/seplogic.hpp"

namespace sheafsep {

inline constexpr int kDefaultSampleBound = 6;

using RandomVariable = std::vector<Value>;  // point i of {1..n} at index i
using Law = std::map<Value, Rational>;

inline std::string format_law(const Law& law) {
  std::string s = "{";
  bool first = true;
  for (const auto& [v, p] : law) {
    if (!first) s += ", ";
    s += std::to_string(v) + ": " + to_string(p);
    first = false;
  }
  return s + "}";
}

/// Blocks partition the points, every measure lies in [0, 1], and the total
/// is exactly 1.
inline Report validate_space(const ProbSpace& sp) {
  Report r;
  std::vector<bool> used(sp.measure.size(), false);
  for (int i = 0; i < sp.points(); ++i) {
    const int b = sp.block[i];
    if (b < 0 || b >= sp.blocks()) {
      r.add("partition", "point " + std::to_string(i + 1) + " names no block");
      return r;
    }
    used[b] = true;
  }
  Rational total(0);
  for (int b = 0; b < sp.blocks(); ++b) {
    if (!used[b]) r.add("partition", "block " + std::to_string(b) + " is empty");
    if (sp.measure[b] < Rational(0) || sp.measure[b] > Rational(1))
      r.add("measure-range", "block " + std::to_string(b) + " has measure " + to_string(sp.measure[b]));
    total += sp.measure[b];
  }
  if (total != Rational(1)) r.add("normalized", "measures sum to " + to_string(total));
  return r;
}

/// The space on {1..n} whose σ-algebra is discrete.
inline ProbSpace discrete_space(std::vector<Rational> masses) {
  ProbSpace sp;
  for (std::size_t i = 0; i < masses.size(); ++i) sp.block.push_back(static_cast<int>(i));
  sp.measure = std::move(masses);
  return sp;
}

inline ProbSpace uniform_space(int n) {
  return discrete_space(std::vector<Rational>(n, Rational(1, n)));
}

/// Pullback of `sp` on {1..m} along f: {1..n} ↠ {1..m}.
inline ProbSpace pullback_space(const std::vector<int>& f, const ProbSpace& sp) {
  if (!detail::is_surjective(f, sp.points()))
    throw Error(ErrorKind::NotSurjective, "pullback needs a surjection onto " +
                                              std::to_string(sp.points()) + " points");
  ProbSpace out;
  for (int x : f) out.block.push_back(sp.block[x]);
  out.measure = sp.measure;
  out.normalize();
  return out;
}

/// Law of X; X must be constant on every block.
inline Law law_of(const RandomVariable& X, const ProbSpace& sp) {
  if (static_cast<int>(X.size()) != sp.points())
    throw Error(ErrorKind::TypeMismatch, "random variable has " + std::to_string(X.size()) +
                                             " values for " + std::to_string(sp.points()) +
                                             " points");
  std::vector<std::optional<Value>> on_block(sp.blocks());
  for (int i = 0; i < sp.points(); ++i) {
    auto& v = on_block[sp.block[i]];
    if (v && *v != X[i]) {
      std::string pts;
      for (int j = 0; j < sp.points(); ++j)
        if (sp.block[j] == sp.block[i]) pts += (pts.empty() ? "" : ",") + std::to_string(j + 1);
      throw Error(ErrorKind::NotMeasurable, "random variable takes values " + std::to_string(*v) +
                                                " and " + std::to_string(X[i]) + " on block {" +
                                                pts + "}");
    }
    v = X[i];
  }
  Law law;
  for (int b = 0; b < sp.blocks(); ++b) law[*on_block[b]] += sp.measure[b];
  std::erase_if(law, [](const auto& e) { return e.second == Rational(0); });
  return law;
}

inline bool is_measurable(const RandomVariable& X, const ProbSpace& sp) {
  std::vector<std::optional<Value>> on_block(sp.blocks());
  for (int i = 0; i < sp.points(); ++i) {
    auto& v = on_block[sp.block[i]];
    if (v && *v != X[i]) return false;
    v = X[i];
  }
  return true;
}

/// P(X=a, Y=b) = P(X=a)·P(Y=b) for every pair of attained values.
inline bool independence_oracle(const ProbSpace& sp, const RandomVariable& X,
                                const RandomVariable& Y) {
  const Law lx = law_of(X, sp), ly = law_of(Y, sp);
  std::map<std::pair<Value, Value>, Rational> joint;
  std::vector<bool> seen(sp.blocks(), false);
  for (int i = 0; i < sp.points(); ++i) {
    if (seen[sp.block[i]]) continue;
    seen[sp.block[i]] = true;
    joint[{X[i], Y[i]}] += sp.measure[sp.block[i]];
  }
  const auto prob = [](const Law& l, Value v) {
    auto it = l.find(v);
    return it == l.end() ? Rational(0) : it->second;
  };
  for (Value a : X)
    for (Value b : Y) {
      auto it = joint.find({a, b});
      const Rational pab = it == joint.end() ? Rational(0) : it->second;
      if (pab != prob(lx, a) * prob(ly, b)) return false;
    }
  return true;
}

// ---------------------------------------------------------------------------
// Quotients

/// Every set partition of {0..n-1} as a restricted growth string.
inline const std::vector<std::vector<int>>& set_partitions(int n) {
  static std::map<int, std::vector<std::vector<int>>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<std::vector<int>> out;
  std::vector<int> cur(n, 0);
  const auto rec = [&](auto&& self, int i, int max_label) -> void {
    if (i == n) {
      out.push_back(cur);
      return;
    }
    for (int l = 0; l <= max_label + 1; ++l) {
      cur[i] = l;
      self(self, i + 1, std::max(max_label, l));
    }
  };
  if (n == 0)
    out.push_back({});
  else {
    cur[0] = 0;
    rec(rec, 1, 0);
  }
  return cache.emplace(n, std::move(out)).first->second;
}

inline int count_classes(const std::vector<int>& q) {
  int m = 0;
  for (int x : q) m = std::max(m, x + 1);
  return m;
}

struct QuotientPair {
  std::vector<int> q1, q2;
  int n1 = 0, n2 = 0;
};

/// Pairs of quotient maps q1, q2 on n points with ⟨q1, q2⟩ onto S1 × S2.
inline const std::vector<QuotientPair>& surjective_quotient_pairs(int n) {
  static std::map<int, std::vector<QuotientPair>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<QuotientPair> out;
  const auto& parts = set_partitions(n);
  for (const auto& a : parts)
    for (const auto& b : parts) {
      const int n1 = count_classes(a), n2 = count_classes(b);
      if (n1 * n2 > n) continue;
      std::vector<bool> hit(static_cast<std::size_t>(n1 * n2), false);
      int count = 0;
      for (int i = 0; i < n; ++i) {
        auto&& h = hit[static_cast<std::size_t>(a[i] * n2 + b[i])];
        if (!h) {
          h = true;
          ++count;
        }
      }
      if (count == n1 * n2) out.push_back({a, b, n1, n2});
    }
  return cache.emplace(n, std::move(out)).first->second;
}

// ---------------------------------------------------------------------------
// Satisfaction

/// A space together with the random variables defined on it.
struct PslModel {
  ProbSpace space;
  std::map<std::string, RandomVariable> variables;
};

struct PslWitness {
  QuotientPair pair;
  std::vector<Rational> mu1, mu2;
};

struct PslResult {
  bool result = false;
  std::optional<PslWitness> witness;
};

namespace detail {

/// Variables that factor through q, transported to the quotient.
inline std::map<std::string, RandomVariable> transport(const std::map<std::string, RandomVariable>& vars,
                                                       const std::vector<int>& q, int classes) {
  std::map<std::string, RandomVariable> out;
  for (const auto& [name, X] : vars) {
    RandomVariable Y(classes);
    std::vector<bool> set(classes, false);
    bool ok = true;
    for (std::size_t i = 0; i < q.size() && ok; ++i) {
      if (set[q[i]] && Y[q[i]] != X[i]) ok = false;
      Y[q[i]] = X[i];
      set[q[i]] = true;
    }
    if (ok) out.emplace(name, std::move(Y));
  }
  return out;
}

inline PslResult psl_eval(const PslModel& m, const Formula& phi, const std::set<std::string>& declared);

/// Searches the quotient pairs in enumeration order for one that splits the
/// space into independent factors satisfying the two sides.
inline PslResult psl_star(const PslModel& m, const Formula& phi, const std::set<std::string>& declared) {
  const auto& sp = m.space;
  const int n = sp.points();
  for (const auto& pr : surjective_quotient_pairs(n)) {
    // Each fibre of ⟨q1, q2⟩ must be measurable: q1 and q2 constant on blocks.
    std::vector<int> cell_of_block(sp.blocks(), -1);
    bool measurable = true;
    for (int i = 0; i < n && measurable; ++i) {
      const int cell = pr.q1[i] * pr.n2 + pr.q2[i];
      int& c = cell_of_block[sp.block[i]];
      if (c >= 0 && c != cell) measurable = false;
      c = cell;
    }
    if (!measurable) continue;
    std::vector<Rational> joint(static_cast<std::size_t>(pr.n1 * pr.n2), Rational(0));
    for (int b = 0; b < sp.blocks(); ++b) joint[cell_of_block[b]] += sp.measure[b];
    std::vector<Rational> mu1(pr.n1, Rational(0)), mu2(pr.n2, Rational(0));
    for (int a = 0; a < pr.n1; ++a)
      for (int b = 0; b < pr.n2; ++b) {
        mu1[a] += joint[a * pr.n2 + b];
        mu2[b] += joint[a * pr.n2 + b];
      }
    bool product = true;
    for (int a = 0; a < pr.n1 && product; ++a)
      for (int b = 0; b < pr.n2 && product; ++b)
        product = joint[a * pr.n2 + b] == mu1[a] * mu2[b];
    if (!product) continue;
    const PslModel left{discrete_space(mu1), transport(m.variables, pr.q1, pr.n1)};
    if (!psl_eval(left, *phi.lhs, declared).result) continue;
    const PslModel right{discrete_space(mu2), transport(m.variables, pr.q2, pr.n2)};
    if (!psl_eval(right, *phi.rhs, declared).result) continue;
    return {true, PslWitness{pr, mu1, mu2}};
  }
  return {false, std::nullopt};
}

inline PslResult psl_eval(const PslModel& m, const Formula& phi, const std::set<std::string>& declared) {
  switch (phi.kind) {
    case FormulaKind::Top: return {true, std::nullopt};
    case FormulaKind::Bottom: return {false, std::nullopt};
    case FormulaKind::And:
      return {psl_eval(m, *phi.lhs, declared).result && psl_eval(m, *phi.rhs, declared).result,
              std::nullopt};
    case FormulaKind::Or:
      return {psl_eval(m, *phi.lhs, declared).result || psl_eval(m, *phi.rhs, declared).result,
              std::nullopt};
    case FormulaKind::Imp:
      return {!psl_eval(m, *phi.lhs, declared).result || psl_eval(m, *phi.rhs, declared).result,
              std::nullopt};
    case FormulaKind::Star: return psl_star(m, phi, declared);
    case FormulaKind::Dist: {
      if (!declared.count(phi.name))
        throw Error(ErrorKind::UnknownIdentifier, "unknown random variable '" + phi.name + "'");
      auto it = m.variables.find(phi.name);
      if (it == m.variables.end() || !is_measurable(it->second, m.space)) return {false, std::nullopt};
      const Law law = law_of(it->second, m.space);
      const Law want(phi.law.begin(), phi.law.end());
      return {law == want, std::nullopt};
    }
    default:
      throw Error(ErrorKind::KindMismatch,
                  "points-to atom " + to_string(phi) + " has no meaning on a probability space");
  }
}

}  // namespace detail

/// Classical evaluation at one space; ⋆ searches exhaustively over pairs of
/// quotients of the sample set.
inline PslResult psl_sat(const PslModel& m, const Formula& phi, int bound = kDefaultSampleBound) {
  if (m.space.points() > bound)
    throw Error(ErrorKind::SizeBound, "sample space has " + std::to_string(m.space.points()) +
                                          " points; the bound is " + std::to_string(bound));
  const auto rep = validate_space(m.space);
  if (!rep.ok()) throw Error(ErrorKind::Validation, rep.violations.front().witness);
  std::set<std::string> declared;
  for (const auto& [name, X] : m.variables) {
    if (static_cast<int>(X.size()) != m.space.points())
      throw Error(ErrorKind::TypeMismatch, "random variable " + name + " has the wrong length");
    declared.insert(name);
  }
  return detail::psl_eval(m, phi, declared);
}

template <class T>
std::string describe_quotient(const std::vector<T>& q) {
  std::string s = "[";
  for (std::size_t i = 0; i < q.size(); ++i) s += (i ? "," : "") + std::to_string(q[i] + 1);
  return s + "]";
}

// ---------------------------------------------------------------------------
// Stage-indexed semantics over finite surjections

/// Probability spaces on each finite set with every block measure a
/// multiple of 1/denominator, restricted by pullback.
inline PresheafPtr probability_presheaf(const CatPtr& base, int denominator) {
  const auto& c = *base;
  if (c.kind != CatKind::FinSurj)
    throw Error(ErrorKind::KindMismatch, "probability presheaf needs a surjection base");
  if (denominator < 1) throw Error(ErrorKind::Validation, "denominator must be positive");
  auto P = std::make_shared<Presheaf>(base, "prob(1/" + std::to_string(denominator) + ")");
  for (ObjId o = 0; o < c.num_objects(); ++o) {
    std::vector<Element> spaces;
    for (const auto& part : set_partitions(c.sizes[o])) {
      const int k = count_classes(part);
      std::vector<int> w(k, 0);
      const auto rec = [&](auto&& self, int i, int left) -> void {
        if (i == k - 1) {
          w[i] = left;
          ProbSpace sp{part, {}};
          for (int x : w) sp.measure.emplace_back(x, denominator);
          spaces.emplace_back(std::move(sp));
          return;
        }
        for (int x = 0; x <= left; ++x) {
          w[i] = x;
          self(self, i + 1, left - x);
        }
      };
      rec(rec, 0, denominator);
    }
    P->set_elements(o, std::move(spaces));
  }
  P->tabulate_restrictions([&](MorId f, const Element& e) -> Element {
    return pullback_space(c.maps[f], e.as<ProbSpace>());
  });
  return P;
}

/// X ~ μ as a predicate over the slice of a probability presheaf: a space
/// on T with leg p: T ↠ S satisfies it when X∘p is measurable with law μ.
inline AtomFn distribution_atoms(std::map<std::string, RandomVariable> variables) {
  return [vars = std::move(variables)](const Formula& atom, const FibrePtr& f) {
    if (atom.kind != FormulaKind::Dist)
      throw Error(ErrorKind::KindMismatch, "points-to atom " + to_string(atom) +
                                               " has no meaning on a probability space");
    auto it = vars.find(atom.name);
    if (it == vars.end())
      throw Error(ErrorKind::UnknownIdentifier, "unknown random variable '" + atom.name + "'");
    const auto& base = f->resource()->base();
    const Law want(atom.law.begin(), atom.law.end());
    return tabulate(f, [&](int p, int i) {
      const auto& leg = base.maps[f->leg(p)];
      RandomVariable Xp;
      for (int t : leg) Xp.push_back(it->second[t]);
      const auto& sp = f->view()->at(p, i).as<ProbSpace>();
      return is_measurable(Xp, sp) && law_of(Xp, sp) == want;
    });
  };
}

}  // namespace sheafsep
