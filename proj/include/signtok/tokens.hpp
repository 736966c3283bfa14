#pragma once

#include <string>
#include <vector>

namespace signtok {

// Ordered codebook indices for one sequence; every index lies in [0, K).
struct TokenSequence {
  std::string id;
  std::vector<int> indices;
};

// Token file: one line per sequence, id then whitespace-separated decimal
// indices.
void save_token_file(const std::string& path, const std::vector<TokenSequence>& seqs);
std::vector<TokenSequence> load_token_file(const std::string& path);

}  // namespace signtok
