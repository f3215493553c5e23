#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rumor/corpus.hpp"
#include "rumor/splits.hpp"

namespace rumor {

// Instances sharing one normalized source-text token sequence.
struct DuplicateCluster {
  std::string normalized_text;          // tokens joined by single spaces
  std::vector<std::string> member_ids;  // corpus order, size >= 2
  bool spans_splits = false;            // members fall in >= 2 parts of the split
};

// Exact-match clustering over normalized source texts. Clusters are ordered
// by their first member's corpus position.
std::vector<DuplicateCluster> duplicate_clusters(const Corpus& corpus,
                                                 const SplitSpec* split = nullptr);

struct EventSizeStats {
  std::map<std::size_t, std::size_t> histogram;  // event size -> number of events
  double fraction_in_large_events = 0.0;         // instances in events of size > 5
  double top5_coverage = 0.0;                    // instance share of the 5 largest events
};

EventSizeStats event_size_stats(const Corpus& corpus);

struct KeywordScore {
  std::string token;
  double score = 0.0;  // max over classes of P(class | instances containing token)
  std::size_t doc_frequency = 0;
};

// Source-text tokens with document frequency >= min_support, sorted by
// descending score, then descending frequency, then token text.
std::vector<KeywordScore> keyword_label_scores(const Corpus& corpus,
                                               std::size_t min_support);

struct TendencyScore {
  std::string publisher_id;
  std::array<double, kNumClasses> scores{};  // sums to 1
  std::size_t post_count = 0;
};

std::vector<TendencyScore> publisher_tendency(const Corpus& corpus);

struct InteractionFeature {
  std::string instance_id;
  std::size_t interaction_count = 0;
  std::int64_t time_range = 0;  // seconds; clamped at 0
};

// Comment count and covered time span per instance, in corpus order. A
// comment timestamped before its source clamps the range to 0 and appends a
// note to `warnings` when provided.
std::vector<InteractionFeature> interaction_features(const Corpus& corpus,
                                                     std::vector<std::string>* warnings = nullptr);

// Bagged decision trees over a small dense feature matrix. Each node draws
// one feature uniformly at random and takes the Gini-optimal midpoint split.
class RandomForest {
 public:
  struct Config {
    int trees = 100;
    int max_depth = 8;
    std::uint64_t seed = 1;
  };

  static RandomForest train(const std::vector<std::vector<double>>& features,
                            const std::vector<Label>& labels, const Config& config);

  Label predict(const std::vector<double>& row) const;
  std::vector<Label> predict(const std::vector<std::vector<double>>& rows) const;

  int tree_count() const { return static_cast<int>(trees_.size()); }

 private:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::array<std::size_t, kNumClasses> histogram{};
  };
  struct Tree {
    std::vector<Node> nodes;
  };

  Label tree_vote(const Tree& tree, const std::vector<double>& row) const;

  std::vector<Tree> trees_;
};

}  // namespace rumor
