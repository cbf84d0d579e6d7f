#include <gtest/gtest.h>

#include "sheafsep/day.hpp"

using namespace sheafsep;

namespace {

Heap heap(std::initializer_list<std::pair<int, std::optional<Value>>> cells) {
  Heap h;
  for (const auto& [x, v] : cells) v ? h.set(x, *v) : h.set_bottom(x);
  return h;
}

// Independent statement of the case formula for m_{U1,U2}.
std::optional<Heap> oracle_mult(MonoidVariant v, const Heap& a, const Heap& b) {
  const auto cell = [](const Heap& h, int x) -> std::optional<Value> {
    return h.has(x) ? std::optional<Value>(h.get(x)) : std::nullopt;
  };
  if (v == MonoidVariant::Strong && (a.stage & b.stage)) return std::nullopt;
  Heap out;
  for (int x = 0; x < kMaxLocations; ++x) {
    const bool in1 = (a.stage >> x) & 1U, in2 = (b.stage >> x) & 1U;
    if (!in1 && !in2) continue;
    std::optional<Value> r;
    if (in1 && !in2)
      r = cell(a, x);
    else if (in2 && !in1)
      r = cell(b, x);
    else if (cell(a, x) == cell(b, x))
      r = cell(a, x);
    else if (v == MonoidVariant::Weak)
      return std::nullopt;
    r ? out.set(x, *r) : out.set_bottom(x);
  }
  return out;
}

struct Fx {
  MonoidalCategory p = build_powerset_category({"x", "y"});
  PresheafPtr Mp = build_resource_sheaf(p.cat, ResourceSpec{});
};

}  // namespace

TEST(Decomp, SizesMatchSplittingCount) {
  auto p = build_powerset_category({"x"});
  auto Mp = build_resource_sheaf(p.cat, ResourceSpec{});
  auto D = day_decomp(Mp, Mp, p.tensor);
  EXPECT_EQ(D->size(1), 15);
  EXPECT_TRUE(validate_presheaf(*D).ok());
  Fx fx;
  auto D2 = day_decomp(fx.Mp, fx.Mp, fx.p.tensor);
  for (ObjId a = 0; a < 4; ++a) {
    int expected = 0;
    for (ObjId b = 0; b < 4; ++b)
      for (ObjId c = 0; c < 4; ++c)
        if ((b | c) == a) expected += fx.Mp->size(b) * fx.Mp->size(c);
    EXPECT_EQ(D2->size(a), expected);
  }
}

TEST(Decomp, UnitAndYoneda) {
  Fx fx;
  auto DY = day_decomp(fx.Mp, yoneda(fx.p.cat, 0), fx.p.tensor);
  for (ObjId a = 0; a < 4; ++a) EXPECT_EQ(DY->size(a), fx.Mp->size(a));
  auto p = build_powerset_category({"x"});
  auto Yx = yoneda(p.cat, 1);
  EXPECT_EQ(day_decomp(Yx, Yx, p.tensor)->size(1), 3);
}

TEST(Coend, YonedaExamples) {
  auto p = build_powerset_category({"x", "y"});
  auto Yx = yoneda(p.cat, 1), Yy = yoneda(p.cat, 2), Yxy = yoneda(p.cat, 3);
  auto q = day_coend(Yx, Yx, p.tensor);
  EXPECT_EQ(q.presheaf->size(1), 1);
  auto qxy = day_coend(Yx, Yy, p.tensor);
  for (ObjId a = 0; a < 4; ++a) EXPECT_EQ(qxy.presheaf->size(a), Yxy->size(a)) << a;
  EXPECT_EQ(qxy.presheaf->size(3), 1);
  for (ObjId a = 0; a < 4; ++a)
    for (ObjId b = 0; b < 4; ++b) EXPECT_TRUE(check_yoneda_tensor(p.cat, p.tensor, a, b).ok());
}

TEST(Coend, UnitLaw) {
  Fx fx;
  auto q = day_coend(fx.Mp, yoneda(fx.p.cat, 0), fx.p.tensor);
  for (ObjId a = 0; a < 4; ++a) EXPECT_EQ(q.presheaf->size(a), fx.Mp->size(a));
}

TEST(Monoid, CaseFormula) {
  EXPECT_EQ(heap_mult(MonoidVariant::Total, heap({{0, 0}}), heap({{0, 1}})), heap({{0, std::nullopt}}));
  for (auto v : {MonoidVariant::Total, MonoidVariant::Weak, MonoidVariant::Strong})
    EXPECT_EQ(heap_mult(v, heap({{0, 0}}), heap({{1, 1}})), heap({{0, 0}, {1, 1}}));
  EXPECT_FALSE(heap_mult(MonoidVariant::Strong, heap({{0, 0}}), heap({{0, 0}})));
  EXPECT_EQ(heap_mult(MonoidVariant::Weak, heap({{0, 0}}), heap({{0, 0}})), heap({{0, 0}}));
}

TEST(Monoid, AgreesWithOracleEverywhere) {
  Fx fx;
  for (auto v : {MonoidVariant::Total, MonoidVariant::Weak, MonoidVariant::Strong}) {
    auto m = build_memory_monoid(fx.Mp, fx.p.tensor, v);
    for (ObjId a = 0; a < 4; ++a)
      for (ObjId b = 0; b < 4; ++b)
        for (int s = 0; s < fx.Mp->size(a); ++s)
          for (int t = 0; t < fx.Mp->size(b); ++t) {
            const auto& h1 = fx.Mp->at(a, s).as<Heap>();
            const auto& h2 = fx.Mp->at(b, t).as<Heap>();
            const auto want = oracle_mult(v, h1, h2);
            const auto got = m.apply(a, s, b, t);
            ASSERT_EQ(got.has_value(), want.has_value());
            if (got) {
              EXPECT_EQ(fx.Mp->at(a | b, *got).as<Heap>(), *want);
            }
          }
  }
}

TEST(Monoid, Laws) {
  Fx fx;
  for (auto v : {MonoidVariant::Total, MonoidVariant::Weak, MonoidVariant::Strong}) {
    auto m = build_memory_monoid(fx.Mp, fx.p.tensor, v);
    EXPECT_TRUE(check_monoid_laws(m).ok()) << to_string(v);
    EXPECT_TRUE(check_naturality(m.mult).ok()) << to_string(v);
    for (ObjId a = 0; a < 4; ++a)
      for (int s = 0; s < fx.Mp->size(a); ++s) EXPECT_EQ(m.apply(a, s, 0, m.unit_point), std::optional<int>(s));
  }
  // Strong: triples sharing a location are undefined on both sides.
  auto strong = build_memory_monoid(fx.Mp, fx.p.tensor, MonoidVariant::Strong);
  const int x0 = fx.Mp->index_of(1, heap({{0, 0}}));
  EXPECT_FALSE(strong.apply(1, x0, 1, x0));
}

TEST(Monoid, StrictMemoryRejected) {
  Fx fx;
  ResourceSpec s;
  s.kind = ResourceKind::StrictMemory;
  auto M = build_resource_sheaf(fx.p.cat, s);
  try {
    build_memory_monoid(M, fx.p.tensor, MonoidVariant::Weak);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Validation);
  }
}

TEST(Coend, TotalMultDoesNotFactor) {
  auto p = build_powerset_category({"x"});
  auto Mp = build_resource_sheaf(p.cat, ResourceSpec{});
  auto m = build_memory_monoid(Mp, p.tensor, MonoidVariant::Total);
  auto q = day_coend(Mp, Mp, p.tensor);
  EXPECT_TRUE(find_dinaturality_failure(m, q).has_value());
  // (x:0, x:1) over ({x},{x}) and (x:0, ⟨⟩) over ({x},∅) share a class.
  const Decomp a{1, 1, p.cat->identity(1), Mp->index_of(1, heap({{0, 0}})), Mp->index_of(1, heap({{0, 1}}))};
  const Decomp b{1, 0, p.cat->identity(1), Mp->index_of(1, heap({{0, 0}})), Mp->index_of(0, Heap{})};
  EXPECT_EQ(q.class_of_triple(1, a), q.class_of_triple(1, b));
  EXPECT_EQ(Mp->at(1, *m.apply(1, a.s, 1, a.t)).as<Heap>(), heap({{0, std::nullopt}}));
  EXPECT_EQ(Mp->at(1, *m.apply(1, b.s, 0, b.t)).as<Heap>(), heap({{0, 0}}));
}

TEST(Stability, PowersetSamples) {
  Fx fx;
  auto cov = build_coverage(fx.p.cat, CoverageKind::DownwardClosed).coverage;
  ResourceSpec s;
  s.kind = ResourceKind::StrictMemory;
  auto M = build_resource_sheaf(fx.p.cat, s);
  const auto r = check_day_stability(fx.p, cov, {M, fx.Mp, yoneda(fx.p.cat, 1)}, {{M, inclusion_map(M, fx.Mp)}});
  EXPECT_TRUE(r.ok());
}

TEST(Stability, InjectedNonMono) {
  Fx fx;
  auto cov = build_coverage(fx.p.cat, CoverageKind::DownwardClosed).coverage;
  ResourceSpec s;
  s.kind = ResourceKind::StrictMemory;
  auto M = build_resource_sheaf(fx.p.cat, s);
  // Every strict heap goes to the all-⊥ heap: natural, but not a mono.
  StageMap collapse{M, fx.Mp, {}, "collapse"};
  for (ObjId a = 0; a < 4; ++a) {
    Heap bottom;
    for (int x = 0; x < 2; ++x)
      if ((a >> x) & 1) bottom.set_bottom(x);
    collapse.component.emplace_back(M->size(a), fx.Mp->index_of(a, bottom));
  }
  ASSERT_TRUE(check_naturality(collapse).ok());
  const auto r = check_day_stability(fx.p, cov, {}, {{M, collapse}});
  EXPECT_GE(r.count("mono-preservation"), 1U);
}

TEST(Stability, PowersetSliceTensor) {
  Fx fx;
  const auto& c = *fx.p.cat;
  for (ObjId a = 0; a < 4; ++a)
    for (ObjId b = 0; b < 4; ++b) {
      EXPECT_EQ(fx.p.tensor.tensor_morphism(c.identity(a), c.identity(b)), std::optional<MorId>(c.identity(a | b)));
      for (ObjId v = 0; v < 4; ++v)
        for (ObjId w = 0; w < 4; ++w) {
          const auto f = inclusion(c, v, a), g = inclusion(c, w, b);
          if (!f || !g) continue;
          EXPECT_EQ(fx.p.tensor.tensor_morphism(*f, *g), inclusion(c, v | w, a | b));
        }
    }
}
