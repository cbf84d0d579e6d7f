#include <gtest/gtest.h>

#include <algorithm>

#include "sheafsep/site.hpp"

using namespace sheafsep;

namespace {

// Number of surjections {1..a} ->> {1..b}, by brute force over all functions.
int count_surjections(int a, int b) {
  int total = 0, funcs = 1;
  for (int i = 0; i < a; ++i) funcs *= b;
  for (int code = 0; code < funcs; ++code) {
    std::vector<bool> hit(b, false);
    for (int i = 0, c = code; i < a; ++i, c /= b) hit[c % b] = true;
    total += std::all_of(hit.begin(), hit.end(), [](bool h) { return h; });
  }
  return total;
}

LocMask mask_of(std::initializer_list<int> locs) {
  LocMask m = 0;
  for (int l : locs) m |= LocMask{1} << l;
  return m;
}

}  // namespace

TEST(Powerset, CountsAndHoms) {
  auto p = build_powerset_category({"x", "y"});
  EXPECT_EQ(p.cat->num_objects(), 4);
  EXPECT_EQ(p.cat->num_morphisms(), 9);
  EXPECT_TRUE(p.cat->hom(mask_of({0}), 0).empty());
  EXPECT_EQ(p.cat->hom(0, mask_of({0})).size(), 1U);
  EXPECT_EQ(p.tensor.tensor(mask_of({0}), mask_of({1})), std::optional<ObjId>(mask_of({0, 1})));
  EXPECT_EQ(p.tensor.unit, 0);
  EXPECT_TRUE(validate_category(*p.cat).ok());
  EXPECT_TRUE(validate_monoidal(*p.cat, p.tensor).ok());
}

TEST(Powerset, MorphismCountIsThreeToTheN) {
  std::vector<std::string> locs;
  int expected = 1;
  for (int n = 0; n <= kMaxLocations; ++n) {
    auto p = build_powerset_category(locs);
    EXPECT_EQ(p.cat->num_morphisms(), expected) << n;
    locs.push_back("l" + std::to_string(n));
    expected *= 3;
  }
}

TEST(Powerset, SizeBound) {
  try {
    build_powerset_category({"a", "b", "c", "d", "e"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SizeBound);
  }
}

TEST(FinSurj, HomCounts) {
  auto fs = build_finsurj_category(3);
  for (int a = 1; a <= 3; ++a)
    for (int b = 1; b <= 3; ++b)
      EXPECT_EQ(static_cast<int>(fs.cat->hom(a - 1, b - 1).size()), count_surjections(a, b)) << a << "->" << b;
  EXPECT_EQ(fs.cat->hom(1, 1).size(), 2U);
  EXPECT_TRUE(fs.cat->hom(0, 1).empty());
  EXPECT_EQ(fs.cat->hom(2, 1).size(), 6U);
  EXPECT_TRUE(validate_category(*fs.cat).ok());
  EXPECT_TRUE(validate_monoidal(*fs.cat, fs.tensor).ok());
}

TEST(FinCat, InjectedCompositionFault) {
  auto p = build_powerset_category({"x", "y"});
  FinCat broken = *p.cat;
  const MorId f = inclusion_or_throw(broken, 0, 1);
  const MorId g = inclusion_or_throw(broken, 1, 3);
  broken.set_compose(g, f, inclusion_or_throw(broken, 0, 2));
  const auto r = validate_category(broken);
  EXPECT_FALSE(r.ok());
  EXPECT_GE(r.violations.size(), 1U);
}

TEST(Slice, PowersetSliceIsDownset) {
  auto p = build_powerset_category({"x", "y"});
  auto sl = slice_category(p.cat, 3);
  EXPECT_EQ(sl.cat->num_objects(), 4);
  EXPECT_TRUE(validate_category(*sl.cat).ok());
  EXPECT_TRUE(validate_functor(sl.dom).ok());
  auto s0 = slice_category(p.cat, 0);
  EXPECT_EQ(s0.cat->num_objects(), 1);
  EXPECT_EQ(s0.dom.object_map[0], 0);
}

TEST(Coverage, PowersetCoversByUnion) {
  auto p = build_powerset_category({"x", "y"});
  auto cov = build_coverage(p.cat, CoverageKind::DownwardClosed).coverage;
  const auto& idx = cov.sieves();
  const SieveBits xy = idx.closure({inclusion_or_throw(*p.cat, 1, 3), inclusion_or_throw(*p.cat, 2, 3)});
  EXPECT_TRUE(cov.is_cover(3, xy));
  // Oracle: a sieve covers A iff the union of its domains is A.
  for (ObjId a = 0; a < 4; ++a)
    for (SieveBits s : idx.all_sieves(a)) {
      LocMask u = 0;
      for (MorId f : idx.members(a, s)) u |= static_cast<LocMask>(p.cat->src(f));
      EXPECT_EQ(cov.is_cover(a, s), s != 0 && u == static_cast<LocMask>(a));
    }
  auto p1 = build_powerset_category({"x"});
  for (auto kind : {CoverageKind::DownwardClosed, CoverageKind::FiniteCovers}) {
    auto c1 = build_coverage(p1.cat, kind).coverage;
    EXPECT_TRUE(c1.is_cover(1, c1.sieves().maximal(1)));
  }
}

TEST(Coverage, BuiltInsValidate) {
  auto p = build_powerset_category({"x", "y", "z"});
  for (auto kind : {CoverageKind::DownwardClosed, CoverageKind::FiniteCovers})
    EXPECT_TRUE(validate_coverage(build_coverage(p.cat, kind).coverage).ok());
  auto fs = build_finsurj_category(2);
  auto at = build_coverage(fs.cat, CoverageKind::Atomic).coverage;
  EXPECT_TRUE(validate_coverage(at).ok());
  for (ObjId a = 0; a < 2; ++a)
    for (SieveBits s : at.sieves().all_sieves(a)) EXPECT_EQ(at.is_cover(a, s), s != 0);
}

TEST(Coverage, AtomicNeedsOre) {
  auto fs = build_finsurj_category(3);
  try {
    build_coverage(fs.cat, CoverageKind::Atomic);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("no span completes"), std::string::npos);
  }
}

TEST(Coverage, InjectedFaults) {
  auto p = build_powerset_category({"x", "y"});
  auto cov = build_coverage(p.cat, CoverageKind::DownwardClosed).coverage;
  auto no_max = cov;
  no_max.remove(3, cov.sieves().maximal(3));
  EXPECT_EQ(validate_coverage(no_max).count("maximality"), 1U);

  auto p3 = build_powerset_category({"x", "y", "z"});
  auto cov3 = build_coverage(p3.cat, CoverageKind::DownwardClosed).coverage;
  const auto& idx = cov3.sieves();
  const auto inc = [&](LocMask a, LocMask b) { return inclusion_or_throw(*p3.cat, a, b); };
  // The pullback of the {x},{y},{z} cover along {x,y} -> {x,y,z} is the
  // {x},{y} cover of {x,y}; dropping it breaks stability.
  const SieveBits xy = idx.closure({inc(1, 3), inc(2, 3)});
  ASSERT_EQ(idx.pullback(idx.closure({inc(1, 7), inc(2, 7), inc(4, 7)}), inc(3, 7)), xy);
  auto broken = cov3;
  broken.remove(3, xy);
  const auto r = validate_coverage(broken);
  EXPECT_GE(r.count("stability"), 1U);
  EXPECT_EQ(r.count("maximality"), 0U);
}

TEST(Sieves, Pullback) {
  auto p = build_powerset_category({"x", "y"});
  SieveIndex idx(p.cat);
  const MorId ix = inclusion_or_throw(*p.cat, 1, 3);
  const SieveBits xy = idx.closure({ix, inclusion_or_throw(*p.cat, 2, 3)});
  EXPECT_EQ(idx.pullback(xy, ix), idx.maximal(1));
  EXPECT_EQ(idx.pullback(xy, p.cat->identity(3)), xy);
  EXPECT_EQ(idx.pullback(idx.maximal(3), ix), idx.maximal(1));
}

TEST(Saturate, PreCovers) {
  auto p = build_powerset_category({"x", "y"});
  SieveIndex idx(p.cat);
  const MorId ix = inclusion_or_throw(*p.cat, 1, 3), iy = inclusion_or_throw(*p.cat, 2, 3);
  auto s = saturate_precoverage(p.cat, {{3, {ix, iy}}});
  EXPECT_TRUE(s.is_cover(3, idx.closure({ix, iy})));
  EXPECT_TRUE(validate_coverage(s).ok());

  auto only_max = saturate_precoverage(p.cat, {});
  for (ObjId a = 0; a < 4; ++a) {
    EXPECT_EQ(only_max.covers(a).size(), 1U);
    EXPECT_TRUE(only_max.is_cover(a, idx.maximal(a)));
  }
  try {
    saturate_precoverage(p.cat, {{3, {ix}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PreCoverage);
  }
}

TEST(SliceCoverage, MatchesDownset) {
  auto p = build_powerset_category({"x", "y"});
  auto cov = build_coverage(p.cat, CoverageKind::DownwardClosed).coverage;
  for (ObjId a = 0; a < 4; ++a) {
    auto s = slice_coverage(cov, a);
    EXPECT_TRUE(validate_coverage(s.coverage).ok());
    std::size_t base_total = 0;
    for (ObjId b = 0; b < 4; ++b)
      if (subset(static_cast<LocMask>(b), static_cast<LocMask>(a))) base_total += cov.covers(b).size();
    EXPECT_EQ(s.coverage.total(), base_total);
  }
  auto s0 = slice_coverage(cov, 0);
  EXPECT_EQ(s0.coverage.total(), 1U);

  auto fs = build_finsurj_category(2);
  auto at = build_coverage(fs.cat, CoverageKind::Atomic).coverage;
  auto s2 = slice_coverage(at, 1);
  for (ObjId q = 0; q < s2.coverage.cat().num_objects(); ++q)
    for (SieveBits b : s2.coverage.sieves().all_sieves(q)) EXPECT_EQ(s2.coverage.is_cover(q, b), b != 0);
}
