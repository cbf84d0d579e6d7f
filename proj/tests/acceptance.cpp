// Acceptance run: one PASS/FAIL line per criterion, each with its time
// budget. The process exits 0 when the set of failing criteria equals the
// set given with --expect-fail (empty by default).

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sheafsep/laws.hpp"

using namespace sheafsep;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      pass = false;
      notes.push_back("failed: " + what);
    }
  }
  void note(std::string s) { notes.push_back(std::move(s)); }
};

struct Criterion {
  int id;
  const char* title;
  double budget_seconds;
  std::function<void(Outcome&)> body;
};

Heap heap(std::initializer_list<std::pair<int, std::optional<Value>>> cells) {
  Heap h;
  for (const auto& [x, v] : cells) v ? h.set(x, *v) : h.set_bottom(x);
  return h;
}

struct MemorySite {
  explicit MemorySite(std::vector<std::string> locs, ResourceKind kind = ResourceKind::PartialMemory)
      : p(build_powerset_category(std::move(locs))),
        cov(std::make_shared<const Coverage>(
            build_coverage(p.cat, CoverageKind::DownwardClosed).coverage)) {
    ResourceSpec s;
    s.kind = kind;
    F = build_resource_sheaf(p.cat, s);
  }
  ResourceModel model(std::optional<MonoidVariant> v) const { return ResourceModel(p, cov, F, v); }

  MonoidalCategory p;
  std::shared_ptr<const Coverage> cov;
  PresheafPtr F;
};

std::string stat_of(const SuiteResult& s, const std::string& key) {
  for (const auto& [k, v] : s.stats)
    if (k == key) return v;
  return "?";
}

void require_suite(Outcome& o, const SuiteResult& s) {
  o.require(s.ok(), s.name + " reports " + std::to_string(s.report.violations.size()) +
                        " violations" +
                        (s.ok() ? "" : ", first: " + s.report.violations.front().witness));
}

// 1
void matching_example(Outcome& o) {
  auto p = build_powerset_category({"x1", "x2", "x3"});
  ResourceSpec s;
  s.kind = ResourceKind::StrictMemory;
  s.values = {-1, 3, 7, 9};
  auto M = build_resource_sheaf(p.cat, s);
  const LocMask u1 = 0b011, u2 = 0b110, u = 0b111;
  const MorId f = inclusion_or_throw(*p.cat, u1, u), g = inclusion_or_throw(*p.cat, u2, u);
  const auto pb = powerset_pullback(*p.cat, f, g);
  o.require(pb.apex == 0b010, "pullback of the two covers is {x2}");
  const int s1 = M->index_of(u1, heap({{0, 7}, {1, 3}}));
  const int s2 = M->index_of(u2, heap({{1, 3}, {2, 9}}));
  const int s2b = M->index_of(u2, heap({{1, -1}, {2, 9}}));
  o.require(in_matching_object(*M, f, g, pb, s1, s2), "(sigma1, sigma2) is a member");
  o.require(!in_matching_object(*M, f, g, pb, s1, s2b), "(sigma1, sigma2') is not a member");
}

// 2
void amalgamation_iso(Outcome& o) {
  MemorySite site({"x", "y", "z"});
  const auto m = matching_presheaf(site.F, *site.cov);
  const auto op = amalgamation_operator(m, *site.cov);
  o.require(op.report.ok(), "amalgamation operator reports no violations");
  const auto& c = *site.p.cat;
  std::size_t classes = 0;
  for (ObjId a = 0; a < c.num_objects(); ++a) {
    const int n = m.presheaf->size(a);
    classes += static_cast<std::size_t>(n);
    std::vector<bool> hit(site.F->size(a), false);
    bool injective = n == site.F->size(a);
    for (int k = 0; k < n && injective; ++k) {
      const int img = op.amalg.apply(a, k);
      if (hit[img]) injective = false;
      hit[img] = true;
    }
    o.require(injective, "bijective at " + c.object_name(a));
  }
  std::size_t squares = 0;
  for (MorId f = 0; f < c.num_morphisms(); ++f)
    for (int k = 0; k < m.presheaf->size(c.dst(f)); ++k) {
      ++squares;
      if (op.amalg.apply(c.src(f), m.presheaf->restrict(f, k)) !=
          site.F->restrict(f, op.amalg.apply(c.dst(f), k))) {
        o.require(false, "natural along " + c.morphism_name(f));
        return;
      }
    }
  o.note(std::to_string(classes) + " classes, " + std::to_string(squares) + " naturality squares");
}

// 3
void weak_strong(Outcome& o) {
  MemorySite site({"x"});
  const auto phi = parse_formula("x |->! 0 * x |->! 0");
  const Element h = heap({{0, 0}});
  for (auto mode : {SepMode::Unfolded, SepMode::Pipeline}) {
    const auto weak = site.model(MonoidVariant::Weak);
    const auto strong = site.model(MonoidVariant::Strong);
    const auto w = sat(weak, *phi, 1, h, mode);
    const auto s = sat(strong, *phi, 1, h, mode);
    const std::string m(to_string(mode));
    o.require(w.result, "weak satisfied (" + m + ")");
    o.require(w.witness && w.witness->left == 1 && w.witness->right == 1,
              "weak witness splits {x} | {x} (" + m + ")");
    o.require(!s.result && !s.witness, "strong not satisfied (" + m + ")");
  }
}

// 4
void pipeline_oracle(Outcome& o) {
  MemorySite site({"x", "y"});
  std::size_t equal = 0, total = 0;
  for (auto v : {MonoidVariant::Total, MonoidVariant::Weak, MonoidVariant::Strong}) {
    const auto model = site.model(v);
    std::mt19937_64 rng(kDefaultSeed + static_cast<int>(v));
    const auto f = model.fibre(3);
    for (int k = 0; k < 200; ++k) {
      const auto P = random_predicate(f, rng), Q = random_predicate(f, rng);
      ++total;
      if (sep_conj_pipeline(model, P, Q) == sep_conj_unfolded(model, P, Q)) ++equal;
    }
  }
  o.require(equal == total, std::to_string(total - equal) + " pairs differ");
  o.note(std::to_string(equal) + "/" + std::to_string(total) + " pairs equal");
}

// 5
void residuation(Outcome& o) {
  MemorySite one({"x"}), two({"x", "y"});
  FibreCache c1(*one.cov), c2(*two.cov);
  const auto a = residuation_suite(c1, one.F, {0, 1}, 1, 0, kDefaultSeed);
  const auto b = residuation_suite(c2, two.F, {}, 3, 500, kDefaultSeed);
  require_suite(o, a);
  require_suite(o, b);
  o.note("exhaustive at {x}: " + stat_of(a, "exhaustive-triples") + " triples");
}

// 6
void adjunction(Outcome& o) {
  MemorySite site({"x", "y"});
  const auto model = site.model(MonoidVariant::Total);
  const auto s = adjunction_suite(model, {&model.monoid()->mult, &model.amalgamation().amalg}, 200,
                                  kDefaultSeed);
  require_suite(o, s);
  o.note("cases: " + stat_of(s, "cases"));
}

// 7
void monoid_laws(Outcome& o) {
  MemorySite site({"x", "y"});
  for (auto v : {MonoidVariant::Total, MonoidVariant::Weak, MonoidVariant::Strong}) {
    const auto m = build_memory_monoid(site.F, site.p.tensor, v);
    const auto r = check_monoid_laws(m);
    o.require(r.ok(), std::string(to_string(v)) + " monoid laws");
  }
}

// 8
void day_yoneda(Outcome& o) {
  auto p = build_powerset_category({"x", "y", "z"});
  const int n = p.cat->num_objects();
  for (ObjId a = 0; a < n; ++a)
    for (ObjId b = 0; b < n; ++b) {
      const auto q = day_coend(yoneda(p.cat, a), yoneda(p.cat, b), p.tensor);
      const auto r = check_yoneda_tensor(p.cat, p.tensor, a, b);
      o.require(r.ok(), "Yoneda tensor " + p.cat->object_name(a) + ", " + p.cat->object_name(b));
      const LocMask join = static_cast<LocMask>(a | b);
      for (ObjId u = 0; u < n; ++u) {
        const int want = subset(static_cast<LocMask>(u), join) ? 1 : 0;
        if (q.presheaf->size(u) != want)
          o.require(false, "size of the coend at " + p.cat->object_name(u));
      }
    }
  auto px = build_powerset_category({"x"});
  auto Mp = build_resource_sheaf(px.cat, ResourceSpec{});
  const auto m = build_memory_monoid(Mp, px.tensor, MonoidVariant::Total);
  const auto q = day_coend(Mp, Mp, px.tensor);
  const auto w = find_dinaturality_failure(m, q);
  o.require(w.has_value(), "total multiplication fails to factor through the coend");
  const Decomp d1{1, 1, px.cat->identity(1), Mp->index_of(1, heap({{0, 0}})),
                  Mp->index_of(1, heap({{0, 1}}))};
  const Decomp d2{1, 0, px.cat->identity(1), Mp->index_of(1, heap({{0, 0}})),
                  Mp->index_of(0, Heap{})};
  o.require(q.class_of_triple(1, d1) == q.class_of_triple(1, d2),
            "(x:0, x:1) and (x:0, <>) share a coend class");
  o.require(*m.apply(1, d1.s, 1, d1.t) != *m.apply(1, d2.s, 0, d2.t),
            "their products differ");
}

// 9
void sheaf_checks(Outcome& o) {
  MemorySite strict({"x", "y"}, ResourceKind::StrictMemory);
  MemorySite partial({"x", "y"}, ResourceKind::PartialMemory);
  MemorySite bounded({"x", "y"}, ResourceKind::SupportBounded);
  o.require(check_sheaf(*strict.F, *strict.cov).ok(), "M is a sheaf");
  o.require(check_sheaf(*partial.F, *partial.cov).ok(), "M_p is a sheaf");
  const auto r = check_sheaf(*bounded.F, *bounded.cov);
  bool witness = false;
  for (const auto& v : r.violations)
    witness = witness || (v.check == "existence" && v.witness.find("{x:0}") != std::string::npos &&
                          v.witness.find("{y:0}") != std::string::npos);
  o.require(!r.ok() && witness, "support-bounded fails with the sigma_x/sigma_y family");
  for (auto k : {CoverageKind::DownwardClosed, CoverageKind::FiniteCovers})
    o.require(validate_coverage(build_coverage(strict.p.cat, k).coverage).ok(),
              std::string(to_string(k)) + " coverage");
  auto fs = build_finsurj_category(2);
  o.require(validate_coverage(build_coverage(fs.cat, CoverageKind::Atomic).coverage).ok(),
            "atomic coverage");
}

// 10: σ ∈ (P ⇒ ⊥)(V) iff no restriction of σ to W ⊆ V lies in P(W), where
// P(W) = {τ | x ∈ W implies τ(x) = 0}. Computed on heaps directly.
void kripke_implication(Outcome& o) {
  MemorySite site({"x"});
  const auto model = site.model(std::nullopt);
  const auto K = eval_formula(model, *parse_formula("(x ~> 0) -> F"), 1);
  const auto in_P = [](const Heap& t) { return !(t.stage & 1U) || (t.has(0) && t.get(0) == 0); };
  const auto& f = *K.fibre;
  bool agree = true;
  for (int p = 0; p < f.num_objects(); ++p) {
    const LocMask v = static_cast<LocMask>(f.domain(p));
    for (int i = 0; i < f.size(p); ++i) {
      const Heap& sigma = f.view()->at(p, i).as<Heap>();
      bool naive = true;
      for (LocMask w = 0; w <= v; ++w)
        if (subset(w, v) && in_P(sigma.restrict_to(w))) naive = false;
      agree = agree && naive == K.contains(p, i);
    }
  }
  o.require(K.at_top().count() == 0, "empty at {x}");
  o.require(agree, "agrees with the naive evaluator at every slice object");
}

// 11
void psl(Outcome& o) {
  const PslModel bits{uniform_space(4), {{"X", {0, 0, 1, 1}}, {"Y", {0, 1, 0, 1}}}};
  const PslModel corr{uniform_space(2), {{"X", {0, 1}}, {"Y", {0, 1}}}};
  const auto phi = parse_formula("X ~ Unif{0,1} * Y ~ Unif{0,1}");
  o.require(psl_sat(bits, *phi).result, "two-bit space satisfies the star");
  o.require(!psl_sat(corr, *phi).result, "correlated space does not");
  const auto s = psl_agreement_suite(5, {0, 1, 2}, 3);
  o.note("agreement over " + stat_of(s, "spaces") + " spaces, " + stat_of(s, "cases") +
         " cases: " + stat_of(s, "disagreements-positive") + " disagreements without null blocks, " +
         stat_of(s, "disagreements-null-block") + " with null blocks");
  require_suite(o, s);
}

// 12
void gluing(Outcome& o) {
  MemorySite site({"x", "y"});
  FibreCache cache(*site.cov);
  const auto& c = *site.p.cat;
  const MorId ix = inclusion_or_throw(c, 1, 3), iy = inclusion_or_throw(c, 2, 3);
  const SieveBits cover = site.cov->sieves().closure({ix, iy});
  const auto part = [&](ObjId stage, int loc, Value v) {
    const auto f = cache.fibre(site.F, stage);
    return tabulate(f, [&](int q, int i) {
      const auto& h = f->view()->at(q, i).as<Heap>();
      return !((f->domain(q) >> loc) & 1) || (h.has(loc) && h.get(loc) == v);
    });
  };
  const auto Px = part(1, 0, 0), Py = part(2, 1, 1);
  const auto G = glue_predicates(cache, site.F, 3, cover, {{ix, Px}, {iy, Py}});
  const auto f = G.fibre;
  o.require(restrict_predicate(G, f->object_over(1), Px.fibre) == Px, "restricts to the {x} part");
  o.require(restrict_predicate(G, f->object_over(2), Py.fibre) == Py, "restricts to the {y} part");
  std::size_t searched = 0, matches = 0;
  for (const auto& Q : all_predicates(f)) {
    ++searched;
    if (restrict_predicate(Q, f->object_over(1), Px.fibre) == Px &&
        restrict_predicate(Q, f->object_over(2), Py.fibre) == Py) {
      ++matches;
      o.require(Q == G, "every matching predicate is the glued one");
    }
  }
  o.require(matches == 1, "exactly one predicate restricts correctly");
  o.note(std::to_string(searched) + " predicates searched, " + std::to_string(matches) + " match");
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--expect-fail" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string id;
      while (std::getline(ss, id, ',')) expected.insert(std::stoi(id));
    } else {
      std::cerr << "usage: acceptance [--expect-fail N[,N...]]\n";
      return 2;
    }
  }

  const std::vector<Criterion> criteria{
      {1, "matching-object worked example", 1, matching_example},
      {2, "amalgamation isomorphism on three locations", 30, amalgamation_iso},
      {3, "weak and strong separating conjunction diverge", 1, weak_strong},
      {4, "pipeline equals unfolded semantics", 60, pipeline_oracle},
      {5, "Heyting residuation", 60, residuation},
      {6, "image and preimage adjunction", 30, adjunction},
      {7, "memory monoid laws", 30, monoid_laws},
      {8, "Day tensor of representables", 10, day_yoneda},
      {9, "sheaf and coverage checks", 30, sheaf_checks},
      {10, "Kripke implication", 1, kripke_implication},
      {11, "probabilistic separation", 120, psl},
      {12, "predicate gluing", 30, gluing},
  };

  std::set<int> failed;
  for (const auto& c : criteria) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.body(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_seconds) o.require(false, "over the time budget");
    if (!o.pass) failed.insert(c.id);
    std::printf("%s %2d  %s  (%.2f s, budget %.0f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.title,
                secs, c.budget_seconds);
    for (const auto& n : o.notes) std::printf("        %s\n", n.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria pass\n", criteria.size() - failed.size(), criteria.size());
  if (failed != expected) {
    std::printf("failing set differs from the expected set\n");
    return 1;
  }
  return 0;
}
