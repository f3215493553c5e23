#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rumor/error.hpp"

namespace rumor {

// Veracity classes, stable integer codes 0..3.
enum class Label : int {
  kNonRumor = 0,
  kFalseRumor = 1,
  kTrueRumor = 2,
  kUnverified = 3,
};

constexpr int kNumClasses = 4;

// On-disk label strings: "non-rumor" | "false" | "true" | "unverified".
Label label_from_string(std::string_view s);
const char* label_to_string(Label label);

struct Comment {
  std::string user_id;
  std::string text;  // empty text encodes a bare repost
  std::int64_t timestamp = 0;
};

struct MicroblogInstance {
  std::string id;
  std::string publisher_id;
  std::string event_id;
  Label label = Label::kNonRumor;
  std::string source_text;
  std::int64_t source_timestamp = 0;
  std::vector<Comment> comments;  // ascending by timestamp once inside a Corpus
};

// Immutable collection of instances with derived event/publisher indices.
class Corpus {
 public:
  // Validates id uniqueness, re-sorts comments by timestamp (stable), and
  // builds the derived maps. Throws Error on violation.
  explicit Corpus(std::vector<MicroblogInstance> instances);

  std::size_t size() const { return instances_.size(); }
  const std::vector<MicroblogInstance>& instances() const { return instances_; }
  const MicroblogInstance& at(std::size_t i) const { return instances_.at(i); }

  // Index of an instance id; throws Error if absent.
  std::size_t index_of(const std::string& id) const;
  bool contains(const std::string& id) const { return by_id_.count(id) > 0; }

  // event_id -> indices of member instances, in corpus order.
  const std::map<std::string, std::vector<std::size_t>>& events() const {
    return events_;
  }
  // publisher_id -> indices of authored instances, in corpus order.
  const std::map<std::string, std::vector<std::size_t>>& publishers() const {
    return publishers_;
  }

 private:
  std::vector<MicroblogInstance> instances_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::map<std::string, std::vector<std::size_t>> events_;
  std::map<std::string, std::vector<std::size_t>> publishers_;
};

// Lowercases (ASCII), drops whitespace-delimited chunks that start with
// "http://", "https://", "www." or "@", then splits the rest on
// non-alphanumeric bytes. Empty tokens are dropped.
std::vector<std::string> tokenize(std::string_view text);

// JSON Lines reader/writer for the dataset format. Malformed lines raise
// Error naming the 1-based line number; unknown extra fields are ignored.
Corpus load_corpus(const std::string& path);
void save_corpus(const Corpus& corpus, const std::string& path);
std::string instance_to_json_line(const MicroblogInstance& instance);

// Token -> dense index map, ranked by descending frequency then token text.
class Vocabulary {
 public:
  // Counts tokens over all source posts and comments of `corpus`, keeps the
  // `max_size` most frequent. Throws Error when the corpus yields no tokens.
  static Vocabulary build(const Corpus& corpus, std::size_t max_size);

  std::size_t size() const { return tokens_.size(); }
  std::optional<std::uint32_t> index_of(std::string_view token) const;
  const std::string& token_at(std::uint32_t index) const {
    return tokens_.at(index);
  }
  std::uint64_t frequency_at(std::uint32_t index) const {
    return frequencies_.at(index);
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> frequencies_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

constexpr std::size_t kDefaultVocabCap = 50000;

// Sparse token-count vector over a vocabulary; zero counts are never stored.
using BowVector = std::map<std::uint32_t, std::uint32_t>;

// Counts in-vocabulary tokens; out-of-vocabulary tokens are ignored.
BowVector bow_vector(const std::vector<std::string>& tokens,
                     const Vocabulary& vocab);
BowVector bow_add(const BowVector& a, const BowVector& b);

}  // namespace rumor
