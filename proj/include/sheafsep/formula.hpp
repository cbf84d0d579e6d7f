#pragma once

// Formula AST and a recursive-descent parser for the surface syntax.
//
//   imp  ::= or ('->' imp)?
//   or   ::= and ('\/' and)*
//   and  ::= star ('/\' star)*
//   star ::= atom ('*' atom)*
//   atom ::= 'T' | 'F' | '(' imp ')'
//          | ident '|->' int | ident '|->!' int | ident '~>' int
//          | ident '~' dist
//   dist ::= '{' int ':' rat (',' int ':' rat)* '}' | 'Unif' '{' int (',' int)* '}'
//
// Unicode spellings ⊤ ⊥ ∧ ∨ → ∗ ↦ ↦! ↪ are accepted as aliases.

#include <cctype>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sheafsep/element.hpp"
#include "sheafsep/error.hpp"

namespace sheafsep {

enum class FormulaKind {
  Top,
  Bottom,
  And,
  Or,
  Imp,
  Star,
  PointsToStrict,
  PointsToNonStrict,
  PointsToAlloc,
  Dist,
};

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
  FormulaKind kind = FormulaKind::Top;
  FormulaPtr lhs, rhs;
  std::string name;  // location or random variable
  Value value = 0;
  std::vector<std::pair<Value, Rational>> law;
  std::size_t pos = 0;

  bool is_binary() const {
    return kind == FormulaKind::And || kind == FormulaKind::Or || kind == FormulaKind::Imp ||
           kind == FormulaKind::Star;
  }
};

inline FormulaPtr make_formula(FormulaKind k, FormulaPtr l = nullptr, FormulaPtr r = nullptr) {
  auto f = std::make_shared<Formula>();
  f->kind = k;
  f->lhs = std::move(l);
  f->rhs = std::move(r);
  return f;
}

inline FormulaPtr make_points_to(FormulaKind k, std::string loc, Value v) {
  auto f = std::make_shared<Formula>();
  f->kind = k;
  f->name = std::move(loc);
  f->value = v;
  return f;
}

inline FormulaPtr make_dist(std::string var, std::vector<std::pair<Value, Rational>> law) {
  auto f = std::make_shared<Formula>();
  f->kind = FormulaKind::Dist;
  f->name = std::move(var);
  f->law = std::move(law);
  return f;
}

inline bool equal(const Formula& a, const Formula& b) {
  if (a.kind != b.kind || a.name != b.name || a.value != b.value || a.law != b.law) return false;
  if (a.is_binary()) return equal(*a.lhs, *b.lhs) && equal(*a.rhs, *b.rhs);
  return true;
}

/// ASCII rendering; binary connectives are fully parenthesized.
inline std::string to_string(const Formula& f) {
  switch (f.kind) {
    case FormulaKind::Top: return "T";
    case FormulaKind::Bottom: return "F";
    case FormulaKind::And: return "(" + to_string(*f.lhs) + " /\\ " + to_string(*f.rhs) + ")";
    case FormulaKind::Or: return "(" + to_string(*f.lhs) + " \\/ " + to_string(*f.rhs) + ")";
    case FormulaKind::Imp: return "(" + to_string(*f.lhs) + " -> " + to_string(*f.rhs) + ")";
    case FormulaKind::Star: return "(" + to_string(*f.lhs) + " * " + to_string(*f.rhs) + ")";
    case FormulaKind::PointsToStrict: return f.name + " |-> " + std::to_string(f.value);
    case FormulaKind::PointsToNonStrict: return f.name + " ~> " + std::to_string(f.value);
    case FormulaKind::PointsToAlloc: return f.name + " |->! " + std::to_string(f.value);
    case FormulaKind::Dist: {
      std::string s = f.name + " ~ {";
      for (std::size_t i = 0; i < f.law.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(f.law[i].first) + ": " + to_string(f.law[i].second);
      }
      return s + "}";
    }
  }
  return "?";
}

/// Names an ambient model declares; atoms naming anything else are rejected.
struct Vocabulary {
  std::set<std::string> locations;
  std::set<Value> values;
  std::set<std::string> variables;
};

namespace detail {

class FormulaParser {
 public:
  FormulaParser(std::string_view text, const Vocabulary* vocab) : s_(text), vocab_(vocab) {}

  FormulaPtr parse() {
    auto f = parse_imp();
    skip();
    if (i_ != s_.size()) fail("unexpected input");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::Syntax, "syntax error at position " + std::to_string(i_) + ": " + what);
  }

  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }

  bool accept(std::string_view tok) {
    skip();
    if (s_.substr(i_, tok.size()) == tok) {
      i_ += tok.size();
      return true;
    }
    return false;
  }

  bool accept_any(std::initializer_list<std::string_view> toks) {
    for (auto t : toks)
      if (accept(t)) return true;
    return false;
  }

  bool at_word(std::string_view w) {
    skip();
    if (s_.substr(i_, w.size()) != w) return false;
    const std::size_t j = i_ + w.size();
    return j >= s_.size() || !(std::isalnum(static_cast<unsigned char>(s_[j])) || s_[j] == '_');
  }

  std::string ident() {
    skip();
    const std::size_t start = i_;
    if (i_ < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) {
      while (i_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_'))
        ++i_;
    }
    if (start == i_) fail("expected an identifier");
    return std::string(s_.substr(start, i_ - start));
  }

  Value integer(const char* what) {
    skip();
    const std::size_t start = i_;
    if (i_ < s_.size() && (s_[i_] == '-' || s_[i_] == '+')) ++i_;
    const std::size_t digits = i_;
    while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
    if (digits == i_) {
      i_ = start;
      fail(std::string("expected ") + what);
    }
    try {
      return std::stoll(std::string(s_.substr(start, i_ - start)));
    } catch (const std::out_of_range&) {
      i_ = start;
      fail("integer out of range");
    }
  }

  Rational rational() {
    const std::size_t start = i_;
    const Value n = integer("a probability");
    Value d = 1;
    if (accept("/")) d = integer("a denominator");
    if (d <= 0 || n < 0 || n > d) {
      i_ = start;
      fail("probability must be p/q with 0 <= p <= q");
    }
    return Rational(n, d);
  }

  void check_location(const std::string& loc, std::size_t at) {
    if (vocab_ && !vocab_->locations.count(loc))
      throw Error(ErrorKind::UnknownIdentifier,
                  "unknown location '" + loc + "' at position " + std::to_string(at));
  }
  void check_value(Value v, std::size_t at) {
    if (vocab_ && !vocab_->values.empty() && !vocab_->values.count(v))
      throw Error(ErrorKind::UnknownIdentifier,
                  "value " + std::to_string(v) + " at position " + std::to_string(at) +
                      " is not in the model's value set");
  }

  FormulaPtr parse_imp() {
    auto lhs = parse_or();
    const std::size_t at = i_;
    if (accept_any({"->", "→"})) {
      auto f = make_formula(FormulaKind::Imp, lhs, parse_imp());
      std::const_pointer_cast<Formula>(f)->pos = at;
      return f;
    }
    return lhs;
  }

  FormulaPtr parse_or() {
    auto lhs = parse_and();
    while (accept_any({"\\/", "∨"})) lhs = make_formula(FormulaKind::Or, lhs, parse_and());
    return lhs;
  }

  FormulaPtr parse_and() {
    auto lhs = parse_star();
    while (accept_any({"/\\", "∧"})) lhs = make_formula(FormulaKind::And, lhs, parse_star());
    return lhs;
  }

  FormulaPtr parse_star() {
    auto lhs = parse_atom();
    while (true) {
      skip();
      if (accept_any({"*", "∗"}))
        lhs = make_formula(FormulaKind::Star, lhs, parse_atom());
      else
        break;
    }
    return lhs;
  }

  FormulaPtr parse_atom() {
    skip();
    const std::size_t at = i_;
    if (i_ >= s_.size()) fail("expected a formula");
    if (accept("(")) {
      auto f = parse_imp();
      if (!accept(")")) fail("expected ')'");
      return f;
    }
    if (accept("⊤")) return make_formula(FormulaKind::Top);
    if (accept("⊥")) return make_formula(FormulaKind::Bottom);
    if (at_word("T")) {
      ++i_;
      return make_formula(FormulaKind::Top);
    }
    if (at_word("F")) {
      ++i_;
      return make_formula(FormulaKind::Bottom);
    }
    const std::string name = ident();
    FormulaKind kind;
    if (accept_any({"|->!", "↦!"}))
      kind = FormulaKind::PointsToAlloc;
    else if (accept_any({"|->", "↦"}))
      kind = FormulaKind::PointsToStrict;
    else if (accept_any({"~>", "↪"}))
      kind = FormulaKind::PointsToNonStrict;
    else if (accept("~"))
      return parse_dist(name, at);
    else
      fail("expected '|->', '|->!', '~>' or '~' after '" + name + "'");
    check_location(name, at);
    const std::size_t vat = i_;
    const Value v = integer("a value");
    check_value(v, vat);
    auto f = make_points_to(kind, name, v);
    std::const_pointer_cast<Formula>(f)->pos = at;
    return f;
  }

  FormulaPtr parse_dist(const std::string& var, std::size_t at) {
    if (vocab_ && !vocab_->variables.count(var))
      throw Error(ErrorKind::UnknownIdentifier,
                  "unknown random variable '" + var + "' at position " + std::to_string(at));
    std::vector<std::pair<Value, Rational>> law;
    if (at_word("Unif")) {
      i_ += 4;
      if (!accept("{")) fail("expected '{'");
      std::vector<Value> support;
      do support.push_back(integer("a value"));
      while (accept(","));
      if (!accept("}")) fail("expected '}'");
      for (Value v : support)
        law.emplace_back(v, Rational(1, static_cast<std::int64_t>(support.size())));
    } else {
      if (!accept("{")) fail("expected a distribution literal");
      do {
        const Value v = integer("a value");
        if (!accept(":")) fail("expected ':'");
        law.emplace_back(v, rational());
      } while (accept(","));
      if (!accept("}")) fail("expected '}'");
    }
    // Merge repeated values and drop zero entries.
    std::vector<std::pair<Value, Rational>> merged;
    std::sort(law.begin(), law.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [v, p] : law) {
      if (!merged.empty() && merged.back().first == v)
        merged.back().second += p;
      else
        merged.emplace_back(v, p);
    }
    std::erase_if(merged, [](const auto& e) { return e.second == Rational(0); });
    Rational total(0);
    for (const auto& e : merged) total += e.second;
    if (total != Rational(1))
      throw Error(ErrorKind::Syntax, "distribution at position " + std::to_string(at) +
                                         " sums to " + to_string(total) + ", not 1");
    auto f = make_dist(var, std::move(merged));
    std::const_pointer_cast<Formula>(f)->pos = at;
    return f;
  }

  std::string_view s_;
  std::size_t i_ = 0;
  const Vocabulary* vocab_;
};

}  // namespace detail

inline FormulaPtr parse_formula(std::string_view text, const Vocabulary* vocab = nullptr) {
  return detail::FormulaParser(text, vocab).parse();
}

}  // namespace sheafsep
