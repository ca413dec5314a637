#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace lipshadow {

struct AcceptanceOptions {
  std::uint64_t seed = 20250810;
  int jobs = 4;
  std::optional<int> only_item;  // run a single criterion
  std::string corrupt;           // harness self-test hook, e.g. "K" or "f0"
};

struct AcceptanceDetail {
  std::string name;
  bool pass = false;
  std::string note;
};

struct AcceptanceItem {
  int number = 0;
  std::string title;
  bool pass = false;
  double seconds = 0;
  double budget_seconds = 0;
  long checks = 0;
  std::vector<AcceptanceDetail> details;
  std::string failure;
};

struct AcceptanceReport {
  std::vector<AcceptanceItem> items;
  bool all_pass = false;
};

AcceptanceReport run_acceptance(const AcceptanceOptions& options);

nlohmann::ordered_json acceptance_to_json(const AcceptanceReport& report);
void print_acceptance(std::ostream& out, const AcceptanceReport& report, bool verbose);

}  // namespace lipshadow
