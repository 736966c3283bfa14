#include "signtok/tokens.hpp"

#include <fstream>
#include <sstream>

#include "signtok/errors.hpp"

namespace signtok {

void save_token_file(const std::string& path, const std::vector<TokenSequence>& seqs) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write token file: " + path);
  }
  for (const TokenSequence& ts : seqs) {
    out << ts.id;
    for (int k : ts.indices) {
      out << ' ' << k;
    }
    out << '\n';
  }
  if (!out) {
    throw IoError("token file write failed: " + path);
  }
}

std::vector<TokenSequence> load_token_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open token file: " + path);
  }
  std::vector<TokenSequence> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    std::istringstream ls(line);
    TokenSequence ts;
    if (!(ls >> ts.id)) {
      throw ParseError("token file line " + std::to_string(line_no) + ": missing id");
    }
    long long k;
    while (ls >> k) {
      ts.indices.push_back(static_cast<int>(k));
    }
    if (!ls.eof()) {
      throw ParseError("token file line " + std::to_string(line_no) +
                       ": non-numeric token index");
    }
    out.push_back(std::move(ts));
  }
  return out;
}

}  // namespace signtok
