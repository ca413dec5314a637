#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lipshadow {

// Thrown when a point (or an orbit step) leaves the domain of a map.
// `index` is the offending step for orbit-style operations, -1 otherwise.
class OutOfDomainError : public std::runtime_error {
public:
  explicit OutOfDomainError(const std::string& what, long index = -1)
      : std::runtime_error(what), index(index) {}
  long index;
};

class PieceBudgetExceeded : public std::runtime_error {
public:
  explicit PieceBudgetExceeded(const std::string& what) : std::runtime_error(what) {}
};

// A stated hypothesis of a lemma/theorem/operation does not hold for the
// given inputs. `items` names the failed clauses, e.g. {"(2.1)", "(2.3)"}.
class PreconditionViolated : public std::runtime_error {
public:
  PreconditionViolated(const std::string& what, std::vector<std::string> items = {})
      : std::runtime_error(what), items(std::move(items)) {}
  std::vector<std::string> items;
};

class InvalidConstants : public std::runtime_error {
public:
  explicit InvalidConstants(const std::string& what) : std::runtime_error(what) {}
};

class NoItinerary : public std::runtime_error {
public:
  explicit NoItinerary(const std::string& what, long index = -1)
      : std::runtime_error(what), index(index) {}
  long index;
};

// A block-to-block transition could not be certified; `segment` is the index
// j of the failed transition. This is a reportable outcome, not a bug.
class TransitionFailed : public std::runtime_error {
public:
  TransitionFailed(const std::string& what, long segment)
      : std::runtime_error(what), segment(segment) {}
  long segment;
};

class DTooLarge : public std::runtime_error {
public:
  explicit DTooLarge(const std::string& what) : std::runtime_error(what) {}
};

class DTooShort : public std::runtime_error {
public:
  explicit DTooShort(const std::string& what) : std::runtime_error(what) {}
};

class InfeasibleDesign : public std::runtime_error {
public:
  explicit InfeasibleDesign(const std::string& what) : std::runtime_error(what) {}
};

class AmbiguousBoundary : public std::runtime_error {
public:
  explicit AmbiguousBoundary(const std::string& what) : std::runtime_error(what) {}
};

class ParseError : public std::runtime_error {
public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lipshadow
