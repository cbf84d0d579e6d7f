#include <gtest/gtest.h>

#include "sheafsep/presheaf.hpp"

using namespace sheafsep;

namespace {

struct Fixture {
  MonoidalCategory p = build_powerset_category({"x", "y"});
  Coverage cov = build_coverage(p.cat, CoverageKind::DownwardClosed).coverage;

  PresheafPtr sheaf(ResourceKind kind, std::vector<Value> values = {0, 1}) const {
    ResourceSpec s;
    s.kind = kind;
    s.values = std::move(values);
    return build_resource_sheaf(p.cat, s);
  }
  MorId inc(LocMask a, LocMask b) const { return inclusion_or_throw(*p.cat, a, b); }
};

Heap heap(std::initializer_list<std::pair<int, std::optional<Value>>> cells) {
  Heap h;
  for (const auto& [x, v] : cells) v ? h.set(x, *v) : h.set_bottom(x);
  return h;
}

// |values|^|stage| total maps, (|values|+1)^|stage| partial ones.
int power(int b, int e) {
  int r = 1;
  while (e--) r *= b;
  return r;
}

}  // namespace

TEST(Memory, Sizes) {
  Fixture fx;
  auto M = fx.sheaf(ResourceKind::StrictMemory);
  auto Mp = fx.sheaf(ResourceKind::PartialMemory);
  EXPECT_EQ(M->size(3), 4);
  EXPECT_EQ(M->size(1), 2);
  EXPECT_EQ(Mp->size(3), 9);
  for (ObjId a = 0; a < 4; ++a) {
    const int n = std::popcount(static_cast<unsigned>(a));
    EXPECT_EQ(M->size(a), power(2, n));
    EXPECT_EQ(Mp->size(a), power(3, n));
  }
}

TEST(Memory, RestrictionIsPrecomposition) {
  Fixture fx;
  auto M = fx.sheaf(ResourceKind::StrictMemory);
  const int i = M->index_of(3, heap({{0, 0}, {1, 1}}));
  const int j = M->restrict(fx.inc(1, 3), i);
  EXPECT_EQ(M->at(1, j).as<Heap>(), heap({{0, 0}}));
  EXPECT_EQ(M->describe(1, j), "{x:0}");
}

TEST(Presheaf, BuildersValidate) {
  Fixture fx;
  for (auto k : {ResourceKind::StrictMemory, ResourceKind::PartialMemory, ResourceKind::SupportBounded,
                 ResourceKind::Terminal})
    EXPECT_TRUE(validate_presheaf(*fx.sheaf(k)).ok()) << to_string(k);
  for (ObjId a = 0; a < 4; ++a) EXPECT_TRUE(validate_presheaf(*yoneda(fx.p.cat, a)).ok());
}

TEST(Presheaf, InjectedFaults) {
  Fixture fx;
  auto Mp = fx.sheaf(ResourceKind::PartialMemory);
  Presheaf bad_id = *Mp;
  auto table = bad_id.restriction(fx.p.cat->identity(1));
  std::swap(table[0], table[1]);
  bad_id.set_restriction(fx.p.cat->identity(1), table);
  EXPECT_EQ(validate_presheaf(bad_id).count("identity"), 1U);

  auto p3 = build_powerset_category({"x", "y", "z"});
  Presheaf bad_comp = *build_resource_sheaf(p3.cat, ResourceSpec{});
  const MorId top = inclusion_or_throw(*p3.cat, 0b011, 0b111);
  auto t = bad_comp.restriction(top);
  std::swap(t[0], t[t.size() - 1]);
  bad_comp.set_restriction(top, t);
  const auto r = validate_presheaf(bad_comp);
  EXPECT_GE(r.count("composition"), 1U);
  EXPECT_NE(r.violations.front().witness.find("chain"), std::string::npos);
}

TEST(Sheaf, MemorySheaves) {
  Fixture fx;
  EXPECT_TRUE(check_sheaf(*fx.sheaf(ResourceKind::StrictMemory), fx.cov).ok());
  EXPECT_TRUE(check_sheaf(*fx.sheaf(ResourceKind::PartialMemory), fx.cov).ok());
}

TEST(Sheaf, SupportBoundedFails) {
  Fixture fx;
  auto B = fx.sheaf(ResourceKind::SupportBounded);
  const auto r = check_sheaf(*B, fx.cov);
  EXPECT_GE(r.count("existence"), 1U);
  // The σ_x, σ_y family: the only candidate {x:0, y:0} has support 2.
  const SieveBits cover = fx.cov.sieves().closure({fx.inc(1, 3), fx.inc(2, 3)});
  CompatibleFamily fam{3, cover,
                       {{fx.inc(1, 3), B->index_of(1, heap({{0, 0}}))},
                        {fx.inc(2, 3), B->index_of(2, heap({{1, 0}}))}}};
  try {
    amalgamate(*B, fam);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoAmalgamation);
  }
  bool found = false;
  for (const auto& v : r.violations)
    found = found || (v.witness.find("{x:0}") != std::string::npos &&
                      v.witness.find("{y:0}") != std::string::npos);
  EXPECT_TRUE(found);
}

TEST(Sheaf, ConstantPresheaf) {
  Fixture fx;
  ResourceSpec cs;
  cs.kind = ResourceKind::Constant;
  cs.constant = {Element("a"), Element("b")};
  auto C = build_resource_sheaf(fx.p.cat, cs);
  EXPECT_TRUE(check_sheaf(*C, fx.cov).ok());
  // Assigning different values to {x} and {y} clashes at ∅.
  const SieveBits cover = fx.cov.sieves().closure({fx.inc(1, 3), fx.inc(2, 3)});
  CompatibleFamily fam{3, cover, {{fx.inc(1, 3), 0}, {fx.inc(2, 3), 1}}};
  try {
    amalgamate(*C, fam);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Incompatible);
  }
}

TEST(Amalgamate, Examples) {
  Fixture fx;
  auto Mp = fx.sheaf(ResourceKind::PartialMemory);
  const SieveBits cover = fx.cov.sieves().closure({fx.inc(1, 3), fx.inc(2, 3)});
  CompatibleFamily fam{3, cover,
                       {{fx.inc(1, 3), Mp->index_of(1, heap({{0, 0}}))},
                        {fx.inc(2, 3), Mp->index_of(2, heap({{1, 1}}))}}};
  EXPECT_EQ(Mp->at(3, amalgamate(*Mp, fam)).as<Heap>(), heap({{0, 0}, {1, 1}}));

  for (int a = 0; a < Mp->size(3); ++a) {
    CompatibleFamily id{3, fx.cov.sieves().maximal(3), {{fx.p.cat->identity(3), a}}};
    EXPECT_EQ(amalgamate(*Mp, id), a);
  }
  // Two values for {x} over the same overlap.
  CompatibleFamily clash{1, fx.cov.sieves().maximal(1),
                         {{fx.p.cat->identity(1), Mp->index_of(1, heap({{0, 0}}))},
                          {fx.p.cat->identity(1), Mp->index_of(1, heap({{0, 1}}))}}};
  try {
    amalgamate(*Mp, clash);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Incompatible);
  }
}

TEST(Slice, Restrict) {
  Fixture fx;
  auto M = fx.sheaf(ResourceKind::StrictMemory);
  auto Mp = fx.sheaf(ResourceKind::PartialMemory);
  auto sl = slice_category(fx.p.cat, 1);
  auto Mx = slice_restrict(M, sl);
  for (ObjId q = 0; q < sl.cat->num_objects(); ++q)
    if (sl.cat->slice->legs[q] == fx.p.cat->identity(1)) {
      EXPECT_EQ(Mx->elements(q), M->elements(1));
    }
  auto sl3 = slice_category(fx.p.cat, 3);
  auto s = slice_coverage(fx.cov, 3);
  EXPECT_TRUE(check_sheaf(*slice_restrict(Mp, sl3), s.coverage).ok());
  auto M0 = slice_restrict(M, 0);
  EXPECT_EQ(M0->base().num_objects(), 1);
  EXPECT_EQ(M0->size(0), M->size(0));
}

TEST(MatchingObject, WorkedExample) {
  auto p = build_powerset_category({"x1", "x2", "x3"});
  ResourceSpec s;
  s.kind = ResourceKind::StrictMemory;
  s.values = {-1, 3, 7, 9};
  auto M = build_resource_sheaf(p.cat, s);
  const LocMask u1 = 0b011, u2 = 0b110, u = 0b111;
  const MorId f = inclusion_or_throw(*p.cat, u1, u), g = inclusion_or_throw(*p.cat, u2, u);
  const auto pb = powerset_pullback(*p.cat, f, g);
  EXPECT_EQ(pb.apex, 0b010);
  const int s1 = M->index_of(u1, heap({{0, 7}, {1, 3}}));
  const int s2 = M->index_of(u2, heap({{1, 3}, {2, 9}}));
  const int s2b = M->index_of(u2, heap({{1, -1}, {2, 9}}));
  EXPECT_TRUE(in_matching_object(*M, f, g, pb, s1, s2));
  EXPECT_FALSE(in_matching_object(*M, f, g, pb, s1, s2b));

  const MorId id = p.cat->identity(u);
  const auto diag = matching_object(*M, id, id, {u, id, id});
  ASSERT_EQ(static_cast<int>(diag.size()), M->size(u));
  for (const auto& [a, b] : diag) EXPECT_EQ(a, b);
}
