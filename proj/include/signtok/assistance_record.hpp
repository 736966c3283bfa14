#pragma once

#include <string>
#include <vector>

namespace signtok {

// Ordered keywords with integer relative durations; the shortest present
// word has duration 1 (vacuous when empty).
struct AssistanceRecord {
  std::vector<std::string> words;
  std::vector<int> durations;

  bool empty() const { return words.empty(); }

  // Throws ContractError when the invariants are broken.
  void validate() const;
};

// Canonical serialization: `word:duration` pairs joined by single spaces.
// Empty record serializes to the empty string.
std::string canonical_assistance(const AssistanceRecord& rec);

// Rescale durations so the minimum present becomes 1: each duration is
// divided by the minimum and rounded to the nearest integer, floored at 1.
std::vector<int> rescale_durations_to_unit(const std::vector<int>& durations);

}  // namespace signtok
