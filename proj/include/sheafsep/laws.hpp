#pragma once

// Law suites shared by the command-line `laws` command and the acceptance
// runner. Each suite returns a report plus a few named statistics.

#include <chrono>
#include <cstdint>
#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <thread>
#include <string>
#include <utility>
#include <vector>

#include "sheafsep/day.hpp"
#include "sheafsep/matching.hpp"
#include "sheafsep/pred.hpp"
#include "sheafsep/psl.hpp"
#include "sheafsep/seplogic.hpp"

namespace sheafsep {

inline constexpr std::uint64_t kDefaultSeed = 20240601;

struct SuiteResult {
  std::string name;
  Report report;
  std::vector<std::pair<std::string, std::string>> stats;
  double seconds = 0;

  bool ok() const { return report.ok(); }
  void stat(std::string key, std::string value) { stats.emplace_back(std::move(key), std::move(value)); }
  void stat(std::string key, std::size_t value) { stat(std::move(key), std::to_string(value)); }
};

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline std::string show(const KripkePredicate& P) {
  std::string s;
  for (const auto& [obj, pts] : describe_predicate(P)) {
    s += obj + ":{";
    for (std::size_t i = 0; i < pts.size(); ++i) s += (i ? " " : "") + pts[i];
    s += "} ";
  }
  return s;
}

/// meet(P,Q) ⊆ R ⟺ P ⊆ (Q ⇒ R), plus distributivity of meet over join.
inline void check_heyting_triple(Report& r, const KripkePredicate& P, const KripkePredicate& Q,
                                 const KripkePredicate& R) {
  const bool lhs = meet(P, Q).subset_of(R);
  const bool rhs = P.subset_of(implication(Q, R));
  if (lhs != rhs && r.count("residuation") < 5)
    r.add("residuation", "P=" + show(P) + "Q=" + show(Q) + "R=" + show(R));
  const auto d1 = meet(P, join(Q, R));
  const auto d2 = join(meet(P, Q), meet(P, R));
  if (!(d1 == d2) && r.count("distributivity") < 5)
    r.add("distributivity", "P=" + show(P) + "Q=" + show(Q) + "R=" + show(R));
}

}  // namespace detail

/// Residuation exhaustively over every predicate at `exhaustive` stages and
/// on `samples` random triples at `sampled`.
inline SuiteResult residuation_suite(FibreCache& cache, const PresheafPtr& F,
                                     const std::vector<ObjId>& exhaustive, ObjId sampled,
                                     int samples, std::uint64_t seed) {
  detail::Stopwatch sw;
  SuiteResult out{"heyting-residuation", {}, {}, 0};
  std::size_t triples = 0, predicates = 0;
  for (ObjId a : exhaustive) {
    const auto all = all_predicates(cache.fibre(F, a));
    predicates += all.size();
    for (const auto& P : all) {
      if (!validate_predicate(implication(P, P)).ok())
        out.report.add("implication-closed", "implication leaves the predicate lattice");
      for (const auto& Q : all)
        for (const auto& R : all) {
          detail::check_heyting_triple(out.report, P, Q, R);
          ++triples;
        }
    }
  }
  std::mt19937_64 rng(seed);
  const auto f = cache.fibre(F, sampled);
  for (int k = 0; k < samples; ++k) {
    const auto P = random_predicate(f, rng), Q = random_predicate(f, rng),
               R = random_predicate(f, rng);
    detail::check_heyting_triple(out.report, P, Q, R);
    const auto I = implication(Q, R);
    if (!validate_predicate(I).ok() && out.report.count("implication-closed") < 5)
      out.report.add("implication-closed", "Q=" + detail::show(Q) + "R=" + detail::show(R));
  }
  out.stat("exhaustive-predicates", predicates);
  out.stat("exhaustive-triples", triples);
  out.stat("sampled-triples", static_cast<std::size_t>(samples));
  out.seconds = sw.seconds();
  return out;
}

/// ∃^α P ⊆ Q ⟺ P ⊆ α*Q on random predicates at random stages. Partial
/// maps have no right adjoint on subsheaves and are skipped with a note.
inline SuiteResult adjunction_suite(const ResourceModel& model, const std::vector<const StageMap*>& maps,
                                    int cases, std::uint64_t seed) {
  detail::Stopwatch sw;
  SuiteResult out{"adjunction", {}, {}, 0};
  std::vector<const StageMap*> total_maps;
  for (const StageMap* m : maps) {
    bool total = true;
    for (const auto& comp : m->component)
      for (int x : comp) total = total && x >= 0;
    if (total)
      total_maps.push_back(m);
    else
      out.report.notes.push_back("skipped partial map " + m->name);
  }
  std::mt19937_64 rng(seed);
  const int n = model.base().num_objects();
  std::uniform_int_distribution<int> pick_stage(0, n - 1);
  std::size_t holds = 0, run = 0;
  for (int k = 0; k < cases && !total_maps.empty(); ++k, ++run) {
    const StageMap& alpha = *total_maps[static_cast<std::size_t>(k) % total_maps.size()];
    const ObjId a = pick_stage(rng);
    const auto src = model.fibre_of(alpha.source, a);
    const auto dst = model.fibre_of(alpha.target, a);
    const auto where = alpha.name + " at " + model.base().object_name(a);
    const auto P = random_predicate(src, rng), Q = random_predicate(dst, rng);
    const bool lhs = direct_image(alpha, P, dst).subset_of(Q);
    const bool rhs = P.subset_of(reindex_preimage(alpha, src, Q));
    if (lhs) ++holds;
    if (lhs != rhs && out.report.count("galois") < 5)
      out.report.add("galois", where + ": P=" + detail::show(P) + "Q=" + detail::show(Q));
    // Preimage preserves meets and top; image preserves joins and bottom.
    const auto Q2 = random_predicate(dst, rng);
    if (!(reindex_preimage(alpha, src, meet(Q, Q2)) ==
          meet(reindex_preimage(alpha, src, Q), reindex_preimage(alpha, src, Q2))) &&
        out.report.count("preimage-meet") < 5)
      out.report.add("preimage-meet", where);
    if (!(reindex_preimage(alpha, src, top(dst)) == top(src)) && out.report.count("preimage-top") < 5)
      out.report.add("preimage-top", where);
    const auto P2 = random_predicate(src, rng);
    if (!(direct_image(alpha, join(P, P2), dst) ==
          join(direct_image(alpha, P, dst), direct_image(alpha, P2, dst))) &&
        out.report.count("image-join") < 5)
      out.report.add("image-join", where);
    if (!(direct_image(alpha, bottom(src), dst) == bottom(dst)) && out.report.count("image-bottom") < 5)
      out.report.add("image-bottom", where);
  }
  out.stat("cases", run);
  out.stat("cases-with-image-inside", holds);
  out.seconds = sw.seconds();
  return out;
}

/// Pipeline and unfolded ⋆ agree on random pairs at the top stage.
inline SuiteResult pipeline_suite(const ResourceModel& model, int pairs, std::uint64_t seed) {
  detail::Stopwatch sw;
  const auto& mon = model.require_monoid();
  SuiteResult out{"pipeline-" + std::string(to_string(mon.variant)), {}, {}, 0};
  std::mt19937_64 rng(seed);
  const ObjId top_stage = model.base().num_objects() - 1;
  const auto f = model.fibre(top_stage);
  std::size_t equal = 0;
  for (int k = 0; k < pairs; ++k) {
    const auto P = random_predicate(f, rng), Q = random_predicate(f, rng);
    const auto A = sep_conj_pipeline(model, P, Q);
    const auto B = sep_conj_unfolded(model, P, Q);
    if (A == B)
      ++equal;
    else if (out.report.count("pipeline-equals-unfolded") < 5)
      out.report.add("pipeline-equals-unfolded", "P=" + detail::show(P) + "Q=" + detail::show(Q) +
                                                     "pipeline=" + detail::show(A) +
                                                     "unfolded=" + detail::show(B));
  }
  out.stat("pairs", static_cast<std::size_t>(pairs));
  out.stat("equal", equal);
  out.seconds = sw.seconds();
  return out;
}

/// Commutativity, monotonicity and (for total and strong) associativity of ⋆
/// on random predicates. The weak-variant associativity and every unit law
/// are measured and reported as statistics.
inline SuiteResult sepconj_suite(const ResourceModel& model, int samples, std::uint64_t seed) {
  detail::Stopwatch sw;
  const auto& mon = model.require_monoid();
  SuiteResult out{"sepconj-" + std::string(to_string(mon.variant)), {}, {}, 0};
  std::mt19937_64 rng(seed);
  const ObjId top_stage = model.base().num_objects() - 1;
  const auto f = model.fibre(top_stage);
  const auto star = [&](const KripkePredicate& P, const KripkePredicate& Q) {
    return sep_conj_unfolded(model, P, Q);
  };
  // emp: the all-⊥ heap at every stage.
  const auto emp = tabulate(f, [&](int p, int i) {
    return f->view()->at(p, i).as<Heap>().defined == 0;
  });
  std::size_t assoc_fail = 0, unit_sub = 0, unit_eq = 0;
  for (int k = 0; k < samples; ++k) {
    const auto P = random_predicate(f, rng), Q = random_predicate(f, rng),
               R = random_predicate(f, rng);
    if (!(star(P, Q) == star(Q, P)) && out.report.count("commutativity") < 5)
      out.report.add("commutativity", "P=" + detail::show(P) + "Q=" + detail::show(Q));
    const auto P2 = join(P, R);
    if (!star(P, Q).subset_of(star(P2, Q)) && out.report.count("monotonicity") < 5)
      out.report.add("monotonicity", "P=" + detail::show(P) + "Q=" + detail::show(Q));
    if (!(star(star(P, Q), R) == star(P, star(Q, R)))) {
      ++assoc_fail;
      if (mon.variant != MonoidVariant::Weak && out.report.count("associativity") < 5)
        out.report.add("associativity", "P=" + detail::show(P) + "Q=" + detail::show(Q) +
                                            "R=" + detail::show(R));
    }
    const auto PU = star(P, emp);
    if (P.subset_of(PU)) ++unit_sub;
    if (PU == P) ++unit_eq;
  }
  out.stat("samples", static_cast<std::size_t>(samples));
  out.stat("associativity-failures", assoc_fail);
  out.stat("unit-contains-P", unit_sub);
  out.stat("unit-equals-P", unit_eq);
  out.seconds = sw.seconds();
  return out;
}

inline SuiteResult monoid_suite(const ResourceMonoid& m) {
  detail::Stopwatch sw;
  SuiteResult out{"monoid-" + std::string(to_string(m.variant)), check_monoid_laws(m), {}, 0};
  out.report.append(check_naturality(m.mult));
  std::size_t defined = 0, total = 0;
  for (const auto& comp : m.mult.component)
    for (int x : comp) {
      ++total;
      if (x >= 0) ++defined;
    }
  out.stat("decompositions", total);
  out.stat("defined-products", defined);
  out.seconds = sw.seconds();
  return out;
}

/// Yo(A) ⊛ Yo(B) ≅ Yo(A⊗B) for all A, B, the coend non-dinaturality witness
/// for a multiplication, and stability of sheaves under the decomposition.
inline SuiteResult day_suite(const MonoidalCategory& mc, const Coverage& cov,
                             const ResourceMonoid* witness_monoid,
                             const std::vector<PresheafPtr>& samples) {
  detail::Stopwatch sw;
  SuiteResult out{"day", {}, {}, 0};
  const int n = mc.cat->num_objects();
  std::size_t pairs = 0;
  for (ObjId a = 0; a < n; ++a)
    for (ObjId b = 0; b < n; ++b) {
      if (!mc.tensor.tensor(a, b)) continue;
      out.report.append(check_yoneda_tensor(mc.cat, mc.tensor, a, b));
      ++pairs;
    }
  out.stat("yoneda-pairs", pairs);
  if (witness_monoid) {
    const auto q = day_coend(witness_monoid->carrier, witness_monoid->carrier, mc.tensor);
    const auto w = find_dinaturality_failure(*witness_monoid, q);
    out.stat("mult-factors-through-coend", w ? "no" : "yes");
    if (w) {
      const auto& D = *witness_monoid->decomp;
      out.stat("dinaturality-witness",
               D.describe_element(w->stage, w->first) + " ~ " +
                   D.describe_element(w->stage, w->second));
    }
  }
  const auto stab = check_day_stability(mc, cov, samples, {}, {});
  out.report.append(stab);
  out.seconds = sw.seconds();
  return out;
}

inline SuiteResult amalgamation_suite(const ResourceModel& model) {
  detail::Stopwatch sw;
  SuiteResult out{"amalgamation-iso", {}, {}, 0};
  const auto& m = model.matching();
  const auto& op = model.amalgamation();
  out.report = op.report;
  std::size_t classes = 0, families = 0;
  for (ObjId a = 0; a < model.base().num_objects(); ++a) {
    classes += m.canonical[a].size();
    for (const auto& c : m.members[a]) families += c.size();
  }
  out.stat("classes", classes);
  out.stat("families", families);
  out.seconds = sw.seconds();
  return out;
}

// ---------------------------------------------------------------------------
// Probability suites

/// Every normalized space on {1..n}: a set partition into blocks and block
/// weights drawn from `weights` (not all zero), deduplicated after scaling.
inline std::vector<ProbSpace> enumerate_spaces(int n, const std::vector<int>& weights) {
  std::vector<ProbSpace> out;
  std::set<std::pair<std::vector<int>, std::vector<Rational>>> seen;
  for (const auto& part : set_partitions(n)) {
    const int k = count_classes(part);
    std::vector<std::size_t> idx(k, 0);
    while (true) {
      int total = 0;
      for (int b = 0; b < k; ++b) total += weights[idx[b]];
      if (total > 0) {
        ProbSpace sp{part, {}};
        for (int b = 0; b < k; ++b) sp.measure.emplace_back(weights[idx[b]], total);
        if (seen.insert({sp.block, sp.measure}).second) out.push_back(std::move(sp));
      }
      int b = 0;
      while (b < k && ++idx[b] == weights.size()) idx[b++] = 0;
      if (b == k) break;
    }
  }
  return out;
}

/// Random variables constant on the blocks of `sp`, up to renaming of
/// values, with at most `max_values` values.
inline std::vector<RandomVariable> block_variables(const ProbSpace& sp, int max_values) {
  std::vector<RandomVariable> out;
  for (const auto& labels : set_partitions(sp.blocks())) {
    if (count_classes(labels) > max_values) continue;
    RandomVariable X;
    for (int b : sp.block) X.push_back(labels[b]);
    out.push_back(std::move(X));
  }
  return out;
}

inline FormulaPtr law_formula(const std::string& name, const Law& law) {
  return make_dist(name, std::vector<std::pair<Value, Rational>>(law.begin(), law.end()));
}

/// (X ~ law X) ∗ (Y ~ law Y) against the independence oracle for every space
/// from `enumerate_spaces` with up to `max_points` points and every pair of
/// measurable variables with at most `max_values` values. Disagreements on
/// spaces with a null block and on spaces without one are counted apart.
inline std::string describe_space(const ProbSpace& sp) {
  std::string m;
  for (const auto& r : sp.measure) m += (m.empty() ? "" : ",") + to_string(r);
  return "space " + describe_quotient(sp.block) + " mu=" + m;
}

inline SuiteResult psl_agreement_suite(int max_points, const std::vector<int>& weights,
                                       int max_values, unsigned threads = 0) {
  detail::Stopwatch sw;
  SuiteResult out{"psl-star-oracle", {}, {}, 0};
  std::vector<ProbSpace> spaces;
  for (int n = 1; n <= max_points; ++n) {
    auto s = enumerate_spaces(n, weights);
    spaces.insert(spaces.end(), s.begin(), s.end());
  }
  for (int n = 1; n <= max_points; ++n) surjective_quotient_pairs(n);
  struct Tally {
    std::size_t cases = 0, null_cases = 0, disagree = 0, null_disagree = 0;
    std::vector<std::string> witnesses;
  };
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  std::vector<Tally> tallies(spaces.size());
  const auto work = [&](std::size_t first, std::size_t step) {
    for (std::size_t s = first; s < spaces.size(); s += step) {
      const auto& sp = spaces[s];
      auto& t = tallies[s];
      const bool has_null = std::any_of(sp.measure.begin(), sp.measure.end(),
                                        [](const Rational& m) { return m == Rational(0); });
      const auto vars = block_variables(sp, max_values);
      for (const auto& X : vars)
        for (const auto& Y : vars) {
          const auto phi = make_formula(FormulaKind::Star, law_formula("X", law_of(X, sp)),
                                        law_formula("Y", law_of(Y, sp)));
          const bool star = psl_sat(PslModel{sp, {{"X", X}, {"Y", Y}}}, *phi, max_points).result;
          const bool oracle = independence_oracle(sp, X, Y);
          ++t.cases;
          if (has_null) ++t.null_cases;
          if (star != oracle) {
            ++(has_null ? t.null_disagree : t.disagree);
            if (t.witnesses.size() < 2)
              t.witnesses.push_back(describe_space(sp) + " X=" + describe_quotient(X) +
                                    " Y=" + describe_quotient(Y) + " star=" +
                                    (star ? "true" : "false") + " oracle=" +
                                    (oracle ? "true" : "false"));
          }
        }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned k = 0; k < threads; ++k) pool.emplace_back(work, k, threads);
  for (auto& th : pool) th.join();
  Tally sum;
  for (const auto& t : tallies) {
    sum.cases += t.cases;
    sum.null_cases += t.null_cases;
    sum.disagree += t.disagree;
    sum.null_disagree += t.null_disagree;
    for (const auto& w : t.witnesses)
      if (out.report.violations.size() < 5) out.report.add("star-oracle", w);
  }
  out.stat("spaces", spaces.size());
  out.stat("cases", sum.cases);
  out.stat("cases-with-null-block", sum.null_cases);
  out.stat("disagreements-positive", sum.disagree);
  out.stat("disagreements-null-block", sum.null_disagree);
  out.seconds = sw.seconds();
  return out;
}

/// ⋆ commutativity on random spaces and variables, and functoriality and
/// normalization of pullback along random surjections.
inline SuiteResult psl_laws_suite(int max_points, int samples, std::uint64_t seed) {
  detail::Stopwatch sw;
  SuiteResult out{"psl-laws", {}, {}, 0};
  std::mt19937_64 rng(seed);
  const auto random_space = [&](int n) {
    const auto& parts = set_partitions(n);
    ProbSpace sp{parts[std::uniform_int_distribution<std::size_t>(0, parts.size() - 1)(rng)], {}};
    std::vector<int> w(count_classes(sp.block));
    int total = 0;
    while (total == 0) {
      total = 0;
      for (int& x : w) total += (x = std::uniform_int_distribution<int>(0, 3)(rng));
    }
    for (int x : w) sp.measure.emplace_back(x, total);
    return sp;
  };
  const auto random_surjection = [&](int n, int m) {
    std::vector<int> f(n);
    std::iota(f.begin(), f.end(), 0);
    for (int& x : f) x %= m;
    std::shuffle(f.begin(), f.end(), rng);
    return f;
  };
  const auto random_variable = [&](const ProbSpace& sp) {
    std::vector<Value> on_block(sp.blocks());
    for (auto& v : on_block) v = std::uniform_int_distribution<int>(0, 2)(rng);
    RandomVariable X;
    for (int b : sp.block) X.push_back(on_block[b]);
    return X;
  };
  std::size_t stars = 0;
  for (int k = 0; k < samples; ++k) {
    const int n = std::uniform_int_distribution<int>(1, max_points)(rng);
    const auto sp = random_space(n);
    const auto X = random_variable(sp), Y = random_variable(sp);
    const auto lx = law_formula("X", law_of(X, sp)), ly = law_formula("Y", law_of(Y, sp));
    const PslModel m{sp, {{"X", X}, {"Y", Y}}};
    const bool xy = psl_sat(m, *make_formula(FormulaKind::Star, lx, ly), max_points).result;
    const bool yx = psl_sat(m, *make_formula(FormulaKind::Star, ly, lx), max_points).result;
    if (xy) ++stars;
    if (xy != yx && out.report.count("star-commutativity") < 5)
      out.report.add("star-commutativity", "space " + describe_quotient(sp.block) + " X=" +
                                               describe_quotient(X) + " Y=" + describe_quotient(Y));

    // {1..n2} ->> {1..n1} ->> {1..n}
    const int n1 = n + std::uniform_int_distribution<int>(0, 2)(rng);
    const int n2 = n1 + std::uniform_int_distribution<int>(0, 2)(rng);
    const auto g = random_surjection(n1, n), f = random_surjection(n2, n1);
    std::vector<int> gf;
    for (int x : f) gf.push_back(g[x]);
    const auto twice = pullback_space(f, pullback_space(g, sp));
    const auto once = pullback_space(gf, sp);
    if ((twice.block != once.block || twice.measure != once.measure) &&
        out.report.count("pullback-functoriality") < 5)
      out.report.add("pullback-functoriality", "g=" + describe_quotient(g) + " f=" + describe_quotient(f));
    const auto rep = validate_space(once);
    if (!rep.ok() && out.report.count("normalized") < 5)
      out.report.add("normalized", rep.violations.front().witness);
  }
  out.stat("samples", static_cast<std::size_t>(samples));
  out.stat("star-true", stars);
  out.seconds = sw.seconds();
  return out;
}

}  // namespace sheafsep
