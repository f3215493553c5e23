#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "rumor/corpus.hpp"

namespace rumor {

enum class SplitMode { kMixed, kSeparated };

const char* split_mode_to_string(SplitMode mode);
SplitMode split_mode_from_string(std::string_view s);

// Train/validation/test membership by instance id, with derived event sets.
struct SplitSpec {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
  std::set<std::string> train_events;
  std::set<std::string> validation_events;
  std::set<std::string> test_events;
  SplitMode mode = SplitMode::kMixed;
  std::uint64_t seed = 0;
};

// Event-level split: ~10% of instances to validation (whole events), the
// remainder packed 3:1 into train/test with disjoint event sets. Throws Error
// when the corpus has < 8 events, an event exceeds 25% of instances, or the
// packing misses its targets by more than 5 percentage points.
SplitSpec event_separated_split(const Corpus& corpus, std::uint64_t seed);

// Instance-level split: floor(N/10) validation, remainder 3:1 train/test.
// Requires N >= 20. Events may straddle all three parts.
SplitSpec event_mixed_split(const Corpus& corpus, std::uint64_t seed);

// Removes from A's training set every instance whose event occurs in B's test
// events and refills with the same number of instances sampled (by seed) from
// A's test set, excluding events that overlap B's test events. Instances of
// the recruited events leave A's test part so event sets stay disjoint.
// Throws Error when the replacement pool is too small.
SplitSpec cross_dataset_adjust(const SplitSpec& train_split_a,
                               const Corpus& corpus_a,
                               const SplitSpec& test_split_b,
                               const Corpus& corpus_b,
                               std::uint64_t seed);

// Keeps the earliest floor(fraction * k) of the k comments; the source post
// always survives. fraction must lie in [0, 1].
MicroblogInstance early_view(const MicroblogInstance& instance, double fraction);

// Serialized form: id lists + seed + mode (sorted JSON keys, byte-stable).
std::string split_to_json_string(const SplitSpec& split);
void save_split(const SplitSpec& split, const std::string& path);
SplitSpec load_split(const std::string& path, const Corpus& corpus);

// Checks coverage, pairwise id disjointness and, in separated mode, event
// disjointness of all three parts. Throws Error on violation.
void validate_split(const SplitSpec& split, const Corpus& corpus);

}  // namespace rumor
