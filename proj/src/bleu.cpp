#include "signtok/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "signtok/errors.hpp"

namespace signtok {

namespace {

std::vector<std::string> tokens_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string w;
  while (in >> w) {
    out.push_back(w);
  }
  return out;
}

std::map<std::string, int> ngram_counts(const std::vector<std::string>& toks, int k) {
  std::map<std::string, int> counts;
  if (static_cast<int>(toks.size()) < k) {
    return counts;
  }
  for (std::size_t i = 0; i + static_cast<std::size_t>(k) <= toks.size(); ++i) {
    std::string key = toks[i];
    for (int j = 1; j < k; ++j) {
      key += '\x1f';
      key += toks[i + static_cast<std::size_t>(j)];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

double bleu_n(const std::vector<std::string>& candidates,
              const std::vector<std::string>& references, int n) {
  if (candidates.size() != references.size()) {
    throw ContractError("bleu_n: candidate/reference count mismatch");
  }
  if (n < 1 || n > 4) {
    throw ContractError("bleu_n: n must be in 1..4");
  }

  std::vector<long long> matches(static_cast<std::size_t>(n), 0);
  std::vector<long long> totals(static_cast<std::size_t>(n), 0);
  long long cand_len = 0;
  long long ref_len = 0;

  for (std::size_t s = 0; s < candidates.size(); ++s) {
    const auto cand = tokens_of(candidates[s]);
    const auto ref = tokens_of(references[s]);
    cand_len += static_cast<long long>(cand.size());
    ref_len += static_cast<long long>(ref.size());
    for (int k = 1; k <= n; ++k) {
      const auto cc = ngram_counts(cand, k);
      const auto rc = ngram_counts(ref, k);
      for (const auto& [gram, count] : cc) {
        const auto it = rc.find(gram);
        const int clipped = it == rc.end() ? 0 : std::min(count, it->second);
        matches[static_cast<std::size_t>(k - 1)] += clipped;
        totals[static_cast<std::size_t>(k - 1)] += count;
      }
    }
  }

  if (cand_len == 0) {
    return 0.0;
  }

  double log_sum = 0.0;
  for (int k = 1; k <= n; ++k) {
    long long m = matches[static_cast<std::size_t>(k - 1)];
    long long t = totals[static_cast<std::size_t>(k - 1)];
    if (k >= 2 && m == 0) {
      m += 1;
      t += 1;
    }
    if (m == 0 || t == 0) {
      return 0.0;  // unigram miss: no smoothing, score collapses
    }
    log_sum += std::log(static_cast<double>(m) / static_cast<double>(t));
  }
  const double precision = std::exp(log_sum / static_cast<double>(n));
  const double bp =
      cand_len >= ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
  return 100.0 * bp * precision;
}

}  // namespace signtok
