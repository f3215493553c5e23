#pragma once

#include <map>
#include <string>
#include <vector>

#include "rumor/corpus.hpp"

namespace rumor {

// Sparse encoding of one instance over a vocabulary; densified only at the
// model boundary.
struct EncodedInstance {
  std::string id;
  std::size_t dim = 0;
  std::map<std::uint32_t, double> values;

  std::vector<double> to_dense() const {
    std::vector<double> dense(dim, 0.0);
    for (const auto& [idx, v] : values) dense[idx] = v;
    return dense;
  }
};

// Source-post bag of words; comments never enter the encoding.
EncodedInstance root_text(const MicroblogInstance& instance, const Vocabulary& vocab);

// Mean of the source bag of words and all comment bags: (r + sum_j r_j) / (k+1).
EncodedInstance mean_text(const MicroblogInstance& instance, const Vocabulary& vocab);

}  // namespace rumor
