#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sheafsep {

enum class ErrorKind {
  SizeBound,
  UnknownObject,
  TypeMismatch,
  KindMismatch,
  PreCoverage,
  Incompatible,
  NoAmalgamation,
  NonUnique,
  Budget,
  NotNatural,
  NotMonoidal,
  Syntax,
  UnknownIdentifier,
  NotMeasurable,
  NotSurjective,
  Schema,
  Validation,
  Usage,
};

inline std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::SizeBound: return "size-bound";
    case ErrorKind::UnknownObject: return "unknown-object";
    case ErrorKind::TypeMismatch: return "type-mismatch";
    case ErrorKind::KindMismatch: return "kind-mismatch";
    case ErrorKind::PreCoverage: return "pre-coverage";
    case ErrorKind::Incompatible: return "incompatible";
    case ErrorKind::NoAmalgamation: return "no-amalgamation";
    case ErrorKind::NonUnique: return "non-unique";
    case ErrorKind::Budget: return "budget-exceeded";
    case ErrorKind::NotNatural: return "not-natural";
    case ErrorKind::NotMonoidal: return "not-monoidal";
    case ErrorKind::Syntax: return "syntax";
    case ErrorKind::UnknownIdentifier: return "unknown-identifier";
    case ErrorKind::NotMeasurable: return "not-measurable";
    case ErrorKind::NotSurjective: return "not-surjective";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Usage: return "usage";
  }
  return "unknown";
}

/// Library-wide exception. `kind` is stable and machine-readable; `what()`
/// carries the human-readable witness.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// A single violated law or condition, with a textual witness.
struct Violation {
  std::string check;
  std::string witness;
};

/// Outcome of a validation pass; empty means valid.
struct Report {
  std::vector<Violation> violations;
  std::vector<std::string> notes;

  bool ok() const { return violations.empty(); }
  void add(std::string check, std::string witness) {
    violations.push_back({std::move(check), std::move(witness)});
  }
  void append(const Report& other) {
    violations.insert(violations.end(), other.violations.begin(), other.violations.end());
    notes.insert(notes.end(), other.notes.begin(), other.notes.end());
  }
  std::size_t count(std::string_view check) const {
    std::size_t n = 0;
    for (const auto& v : violations) n += (v.check == check);
    return n;
  }
};

}  // namespace sheafsep
