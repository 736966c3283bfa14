#pragma once

#include <string>
#include <vector>

namespace signtok {

// Corpus-level BLEU-n in [0, 100] with whitespace tokenization.
//
// Definition used throughout: modified k-gram precision p_k (candidate
// k-gram counts clipped by reference counts, pooled over the corpus) for
// k = 1..n, geometric mean exp(mean_k ln p_k), multiplied by the brevity
// penalty exp(1 - r/c) when the pooled candidate length c is below the
// pooled reference length r. Zero counts at k >= 2 get add-one smoothing
// (matches + 1) / (total + 1); a zero unigram numerator yields 0.
double bleu_n(const std::vector<std::string>& candidates,
              const std::vector<std::string>& references, int n);

}  // namespace signtok
