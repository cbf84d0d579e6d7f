#include <gtest/gtest.h>

#include <random>

#include "sheafsep/seplogic.hpp"

using namespace sheafsep;

namespace {

Heap heap(std::initializer_list<std::pair<int, std::optional<Value>>> cells) {
  Heap h;
  for (const auto& [x, v] : cells) v ? h.set(x, *v) : h.set_bottom(x);
  return h;
}

std::unique_ptr<ResourceModel> memory_model(std::vector<std::string> locs,
                                            std::optional<MonoidVariant> v) {
  auto p = build_powerset_category(locs);
  auto cov = std::make_shared<const Coverage>(
      build_coverage(p.cat, CoverageKind::DownwardClosed).coverage);
  auto Mp = build_resource_sheaf(p.cat, ResourceSpec{});
  return std::make_unique<ResourceModel>(p, cov, Mp, v);
}

KripkePredicate eval(const ResourceModel& m, const char* text, ObjId stage,
                     SepMode mode = SepMode::Unfolded) {
  return eval_formula(m, *parse_formula(text), stage, mode);
}

std::vector<Heap> at_top(const ResourceModel& m, const KripkePredicate& P) {
  std::vector<Heap> out;
  const auto stage = P.fibre->stage();
  for (int i = 0; i < m.resource()->size(stage); ++i)
    if (P.holds(i)) out.push_back(m.resource()->at(stage, i).as<Heap>());
  return out;
}

constexpr MonoidVariant kVariants[] = {MonoidVariant::Total, MonoidVariant::Weak,
                                       MonoidVariant::Strong};

}  // namespace

TEST(Atoms, StrictAtSingleLocation) {
  auto m = memory_model({"x"}, std::nullopt);
  EXPECT_EQ(at_top(*m, eval(*m, "x |-> 0", 1)), (std::vector<Heap>{heap({{0, 0}})}));
}

TEST(Atoms, NonStrictVacuousAtEmptyStage) {
  auto m = memory_model({"x"}, std::nullopt);
  const auto P = eval(*m, "x ~> 0", 0);
  EXPECT_EQ(P, top(P.fibre));
}

TEST(Atoms, AllocatedEmptyWithoutLocation) {
  auto m = memory_model({"x", "y"}, std::nullopt);
  const auto P = eval(*m, "x |->! 0", 2);
  EXPECT_EQ(P, bottom(P.fibre));
}

TEST(Atoms, StrictAndNonStrictAgreeOnPartialMemory) {
  auto m = memory_model({"x", "y"}, std::nullopt);
  for (ObjId a = 0; a < 4; ++a)
    for (Value v : {0, 1}) {
      const auto s = "x |-> " + std::to_string(v), n = "x ~> " + std::to_string(v);
      EXPECT_EQ(eval(*m, s.c_str(), a), eval(*m, n.c_str(), a));
    }
}

TEST(SepConj, WeakAllowsSharedLocation) {
  auto weak = memory_model({"x"}, MonoidVariant::Weak);
  auto strong = memory_model({"x"}, MonoidVariant::Strong);
  const auto phi = parse_formula("x |->! 0 * x |->! 0");
  const Element h = heap({{0, 0}});
  const auto w = sat(*weak, *phi, 1, h);
  EXPECT_TRUE(w.result);
  ASSERT_TRUE(w.witness);
  EXPECT_EQ(w.witness->left, 1);
  EXPECT_EQ(w.witness->right, 1);
  const auto s = sat(*strong, *phi, 1, h);
  EXPECT_FALSE(s.result);
  EXPECT_FALSE(s.witness);
}

TEST(SepConj, DisjointSplitInEveryVariant) {
  for (auto v : kVariants) {
    auto m = memory_model({"x", "y"}, v);
    const auto r = sat(*m, *parse_formula("x |->! 0 * y |->! 1"), 3, Element(heap({{0, 0}, {1, 1}})));
    EXPECT_TRUE(r.result);
    ASSERT_TRUE(r.witness);
    EXPECT_EQ(r.witness->left, 1);
    EXPECT_EQ(r.witness->right, 2);
    EXPECT_EQ(r.explanation, "split {x} | {y} as {x:0} * {y:1}");
  }
}

TEST(Eval, Examples) {
  auto m = memory_model({"x", "y"}, MonoidVariant::Weak);
  std::mt19937_64 rng(1);
  for (int k = 0; k < 20; ++k) {
    const auto f = m->fibre(3);
    const auto P = random_predicate(f, rng);
    m->atoms = [&](const Formula&, const FibrePtr&) { return P; };
    EXPECT_EQ(eval(*m, "T /\\ x |-> 0", 3), P);
  }
  m->atoms = nullptr;
  auto one = memory_model({"x"}, MonoidVariant::Weak);
  EXPECT_EQ(eval(*one, "(x ~> 0) -> F", 1).at_top().count(), 0U);
  EXPECT_EQ(at_top(*one, eval(*one, "x |->! 0 \\/ x |->! 1", 1)),
            (std::vector<Heap>{heap({{0, 0}}), heap({{0, 1}})}));
}

TEST(Sat, Examples) {
  auto m = memory_model({"x"}, MonoidVariant::Weak);
  for (int i = 0; i < m->resource()->size(1); ++i)
    EXPECT_TRUE(sat(*m, *parse_formula("T"), 1, m->resource()->at(1, i)).result);
  EXPECT_FALSE(sat(*m, *parse_formula("x ~> 1"), 1, Element(heap({{0, 0}}))).result);
  try {
    sat(*m, *parse_formula("T"), 0, Element(heap({{0, 0}})));
    FAIL() << "element at the wrong stage accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TypeMismatch);
  }
}

TEST(SepConj, PipelineMatchesUnfolded) {
  for (auto v : kVariants) {
    auto m = memory_model({"x", "y"}, v);
    std::mt19937_64 rng(100 + static_cast<int>(v));
    for (ObjId a = 0; a < 4; ++a) {
      const auto f = m->fibre(a);
      for (int k = 0; k < 60; ++k) {
        const auto P = random_predicate(f, rng), Q = random_predicate(f, rng);
        EXPECT_EQ(sep_conj_pipeline(*m, P, Q), sep_conj_unfolded(*m, P, Q))
            << to_string(v) << " at stage " << a;
      }
    }
  }
}

TEST(SepConj, CommutativeAndMonotone) {
  for (auto v : kVariants) {
    auto m = memory_model({"x", "y"}, v);
    std::mt19937_64 rng(7);
    const auto f = m->fibre(3);
    for (int k = 0; k < 100; ++k) {
      const auto P = random_predicate(f, rng), Q = random_predicate(f, rng);
      const auto PQ = sep_conj_unfolded(*m, P, Q);
      EXPECT_EQ(PQ, sep_conj_unfolded(*m, Q, P));
      const auto P2 = join(P, random_predicate(f, rng)), Q2 = join(Q, random_predicate(f, rng));
      EXPECT_TRUE(PQ.subset_of(sep_conj_unfolded(*m, P2, Q2)));
      EXPECT_TRUE(validate_predicate(PQ).ok());
    }
  }
}

TEST(SepConj, AssociativeForTotalAndStrong) {
  for (auto v : {MonoidVariant::Total, MonoidVariant::Strong}) {
    auto m = memory_model({"x", "y"}, v);
    std::mt19937_64 rng(13);
    const auto f = m->fibre(3);
    for (int k = 0; k < 60; ++k) {
      const auto P = random_predicate(f, rng), Q = random_predicate(f, rng),
                 R = random_predicate(f, rng);
      EXPECT_EQ(sep_conj_unfolded(*m, sep_conj_unfolded(*m, P, Q), R),
                sep_conj_unfolded(*m, P, sep_conj_unfolded(*m, Q, R)))
          << to_string(v);
    }
  }
}

TEST(SepConj, RequiresMonoid) {
  auto m = memory_model({"x"}, std::nullopt);
  try {
    eval(*m, "T * T", 1);
    FAIL() << "star evaluated without a monoid";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Validation);
  }
}
