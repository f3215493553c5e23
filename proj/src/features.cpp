#include "rumor/features.hpp"

namespace rumor {

EncodedInstance root_text(const MicroblogInstance& instance, const Vocabulary& vocab) {
  EncodedInstance enc;
  enc.id = instance.id;
  enc.dim = vocab.size();
  for (const auto& [idx, count] : bow_vector(tokenize(instance.source_text), vocab)) {
    enc.values[idx] = static_cast<double>(count);
  }
  return enc;
}

EncodedInstance mean_text(const MicroblogInstance& instance, const Vocabulary& vocab) {
  EncodedInstance enc;
  enc.id = instance.id;
  enc.dim = vocab.size();
  BowVector total = bow_vector(tokenize(instance.source_text), vocab);
  for (const auto& comment : instance.comments) {
    total = bow_add(total, bow_vector(tokenize(comment.text), vocab));
  }
  const double denom = static_cast<double>(instance.comments.size()) + 1.0;
  for (const auto& [idx, count] : total) {
    enc.values[idx] = static_cast<double>(count) / denom;
  }
  return enc;
}

}  // namespace rumor
