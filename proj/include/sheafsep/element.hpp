#pragma once

// Points of the presheaves: integers, symbols, heaps, finite probability
// spaces, tuples, decompositions, morphism witnesses, and class references.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <string>
#include <tuple>
#include <type_traits>
#include <variant>
#include <vector>

#include <boost/rational.hpp>

#include "sheafsep/fincat.hpp"

namespace sheafsep {

using Value = std::int64_t;
using Rational = boost::rational<std::int64_t>;

inline std::string to_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

/// A heap over a region of a powerset base. Locations in `stage` but not in
/// `defined` hold ⊥.
struct Heap {
  LocMask stage = 0;
  LocMask defined = 0;
  std::array<Value, kMaxLocations> cells{};

  bool has(int loc) const { return (defined >> loc) & 1U; }
  Value get(int loc) const { return cells[loc]; }
  void set(int loc, Value v) {
    stage |= LocMask{1} << loc;
    defined |= LocMask{1} << loc;
    cells[loc] = v;
  }
  void set_bottom(int loc) {
    stage |= LocMask{1} << loc;
    defined &= ~(LocMask{1} << loc);
    cells[loc] = 0;
  }
  int support() const { return std::popcount(defined); }

  /// σ|_V for V ⊆ stage.
  Heap restrict_to(LocMask v) const {
    Heap h;
    h.stage = stage & v;
    h.defined = defined & v;
    for (int i = 0; i < kMaxLocations; ++i)
      if (h.has(i)) h.cells[i] = cells[i];
    return h;
  }
};

/// Location order first, then ⊥ before any value, then numeric order.
inline int compare(const Heap& a, const Heap& b) {
  if (a.stage != b.stage) return a.stage < b.stage ? -1 : 1;
  for (int i = 0; i < kMaxLocations; ++i) {
    if (!((a.stage >> i) & 1U)) continue;
    const bool da = a.has(i), db = b.has(i);
    if (da != db) return da ? 1 : -1;
    if (da && a.cells[i] != b.cells[i]) return a.cells[i] < b.cells[i] ? -1 : 1;
  }
  return 0;
}

inline bool operator==(const Heap& a, const Heap& b) { return compare(a, b) == 0; }

inline std::string format_heap(const Heap& h, const std::vector<std::string>& locs) {
  std::string s = "{";
  bool first = true;
  for (std::size_t i = 0; i < locs.size(); ++i) {
    if (!((h.stage >> i) & 1U)) continue;
    if (!first) s += ", ";
    s += locs[i] + ":" + (h.has(static_cast<int>(i)) ? std::to_string(h.cells[i]) : "null");
    first = false;
  }
  return s + "}";
}

/// A probability space on {1..n}: a partition into blocks generating the
/// σ-algebra and an exact measure per block. Blocks are numbered by first
/// occurrence.
struct ProbSpace {
  std::vector<int> block;
  std::vector<Rational> measure;

  int points() const { return static_cast<int>(block.size()); }
  int blocks() const { return static_cast<int>(measure.size()); }

  /// Renumbers blocks by first occurrence, permuting measures accordingly.
  void normalize() {
    std::vector<int> remap(measure.size(), -1);
    std::vector<Rational> m;
    for (int& b : block) {
      if (remap[b] < 0) {
        remap[b] = static_cast<int>(m.size());
        m.push_back(measure[b]);
      }
      b = remap[b];
    }
    measure = std::move(m);
  }
};

inline int compare(const ProbSpace& a, const ProbSpace& b) {
  if (a.block != b.block) return a.block < b.block ? -1 : 1;
  for (std::size_t i = 0; i < a.measure.size(); ++i)
    if (a.measure[i] != b.measure[i]) return a.measure[i] < b.measure[i] ? -1 : 1;
  return 0;
}

inline std::string format_space(const ProbSpace& sp) {
  std::string s = "[";
  for (int b = 0; b < sp.blocks(); ++b) {
    if (b) s += ", ";
    s += "{";
    bool first = true;
    for (int i = 0; i < sp.points(); ++i)
      if (sp.block[i] == b) {
        if (!first) s += ",";
        s += std::to_string(i + 1);
        first = false;
      }
    s += "}:" + to_string(sp.measure[b]);
  }
  return s + "]";
}

struct Element;

struct StarPoint {};
struct MorWitness {
  MorId mor = kNone;
};
struct ClassRef {
  int id = -1;
};
struct Tuple {
  std::vector<Element> items;
};
/// A point of a decomposition presheaf: a witness ξ: A → left ⊗ right and
/// indices of the component points.
struct Decomp {
  ObjId left = kNone;
  ObjId right = kNone;
  MorId witness = kNone;
  int s = -1;
  int t = -1;
};

struct Element {
  using Data = std::variant<StarPoint, Value, std::string, Heap, ProbSpace, Tuple, Decomp,
                            MorWitness, ClassRef>;
  Data data;

  Element() = default;
  Element(StarPoint v) : data(v) {}
  Element(Value v) : data(v) {}
  Element(int v) : data(Value{v}) {}
  Element(const char* v) : data(std::string(v)) {}
  Element(std::string v) : data(std::move(v)) {}
  Element(Heap v) : data(v) {}
  Element(ProbSpace v) : data(std::move(v)) {}
  Element(Tuple v) : data(std::move(v)) {}
  Element(Decomp v) : data(v) {}
  Element(MorWitness v) : data(v) {}
  Element(ClassRef v) : data(v) {}

  template <class T>
  bool is() const { return std::holds_alternative<T>(data); }
  template <class T>
  const T& as() const { return std::get<T>(data); }
};

inline int compare(const Element& a, const Element& b);

namespace detail {

template <class T>
int three_way(const T& a, const T& b) {
  return a < b ? -1 : (b < a ? 1 : 0);
}

}  // namespace detail

inline int compare(const Element& a, const Element& b) {
  if (a.data.index() != b.data.index()) return a.data.index() < b.data.index() ? -1 : 1;
  return std::visit(
      [&](const auto& x) -> int {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b.data);
        if constexpr (std::is_same_v<T, StarPoint>) {
          return 0;
        } else if constexpr (std::is_same_v<T, Value> || std::is_same_v<T, std::string>) {
          return detail::three_way(x, y);
        } else if constexpr (std::is_same_v<T, Heap> || std::is_same_v<T, ProbSpace>) {
          return compare(x, y);
        } else if constexpr (std::is_same_v<T, Tuple>) {
          const std::size_t n = std::min(x.items.size(), y.items.size());
          for (std::size_t i = 0; i < n; ++i)
            if (int c = compare(x.items[i], y.items[i])) return c;
          return detail::three_way(x.items.size(), y.items.size());
        } else if constexpr (std::is_same_v<T, Decomp>) {
          return detail::three_way(std::tie(x.left, x.right, x.witness, x.s, x.t),
                                   std::tie(y.left, y.right, y.witness, y.s, y.t));
        } else if constexpr (std::is_same_v<T, MorWitness>) {
          return detail::three_way(x.mor, y.mor);
        } else {
          return detail::three_way(x.id, y.id);
        }
      },
      a.data);
}

inline bool operator==(const Element& a, const Element& b) { return compare(a, b) == 0; }
inline bool operator<(const Element& a, const Element& b) { return compare(a, b) < 0; }

}  // namespace sheafsep
