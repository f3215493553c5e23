#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rumor/corpus.hpp"

namespace rumor {

// Knobs for planting dataset artifacts into a generated corpus. Every rate
// lives in [0, 1]; generation is a pure function of the whole struct.
struct SynthConfig {
  std::size_t n_instances = 1000;
  std::size_t n_events = 50;
  std::size_t n_publishers = 100;

  // Probability that an instance's source text carries its event's keyword.
  double keyword_label_strength = 0.9;
  // Fraction of each event's posts that verbatim-copy another post of the
  // same event.
  double duplicate_rate = 0.0;
  // Probability that a post is routed to a publisher whose dominant class
  // matches the post's label.
  double publisher_consistency = 0.5;
  // 0 = all source groups share one interaction profile; 1 = fully separated
  // per-group interaction count / time range distributions.
  double source_signature_strength = 0.0;

  int comments_min = 1;
  int comments_max = 10;
  int theme_tokens_per_class = 10;
  int n_source_groups = 3;

  std::uint64_t seed = 1;
};

// Generated corpus plus the planted ground truth used by audit tests.
struct SynthOutput {
  Corpus corpus;
  // Source-text duplicate groups (original first), only groups of size >= 2.
  std::vector<std::vector<std::string>> duplicate_groups;
  // instance id -> source group index, in corpus order.
  std::vector<int> source_groups;
  // Planted per-group means actually used for interaction counts/ranges.
  std::vector<double> group_count_means;
  std::vector<double> group_range_means;
};

SynthOutput generate_synthetic_detailed(const SynthConfig& config);
Corpus generate_synthetic(const SynthConfig& config);

// Full effective configuration, echoed into CLI outputs.
std::string synth_config_to_json(const SynthConfig& config);

}  // namespace rumor
