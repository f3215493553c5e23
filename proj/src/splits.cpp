#include "rumor/splits.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "rumor/rng.hpp"

namespace rumor {

using nlohmann::json;

const char* split_mode_to_string(SplitMode mode) {
  return mode == SplitMode::kMixed ? "mixed" : "separated";
}

SplitMode split_mode_from_string(std::string_view s) {
  if (s == "mixed") return SplitMode::kMixed;
  if (s == "separated") return SplitMode::kSeparated;
  throw Error("unknown split mode \"" + std::string(s) + "\"");
}

namespace {

std::set<std::string> event_set(const std::vector<std::string>& ids, const Corpus& corpus) {
  std::set<std::string> events;
  for (const auto& id : ids) events.insert(corpus.at(corpus.index_of(id)).event_id);
  return events;
}

void finalize_events(SplitSpec& split, const Corpus& corpus) {
  split.train_events = event_set(split.train, corpus);
  split.validation_events = event_set(split.validation, corpus);
  split.test_events = event_set(split.test, corpus);
}

}  // namespace

void validate_split(const SplitSpec& split, const Corpus& corpus) {
  std::unordered_set<std::string> seen;
  for (const auto* part : {&split.train, &split.validation, &split.test}) {
    for (const auto& id : *part) {
      if (!corpus.contains(id)) throw Error("split references unknown id \"" + id + "\"");
      if (!seen.insert(id).second) {
        throw Error("instance \"" + id + "\" appears in more than one split part");
      }
    }
  }
  if (split.mode == SplitMode::kSeparated) {
    auto disjoint = [](const std::set<std::string>& a, const std::set<std::string>& b) {
      for (const auto& e : a) {
        if (b.count(e)) return false;
      }
      return true;
    };
    if (!disjoint(split.train_events, split.test_events) ||
        !disjoint(split.validation_events, split.train_events) ||
        !disjoint(split.validation_events, split.test_events)) {
      throw Error("separated split has overlapping event sets");
    }
  }
}

SplitSpec event_separated_split(const Corpus& corpus, std::uint64_t seed) {
  const auto& events = corpus.events();
  const double n = static_cast<double>(corpus.size());
  if (events.size() < 8) {
    throw Error("event-separated split needs at least 8 events, corpus has " +
                std::to_string(events.size()));
  }
  for (const auto& [event_id, members] : events) {
    if (static_cast<double>(members.size()) > 0.25 * n) {
      throw Error("event \"" + event_id + "\" covers more than 25% of instances; " +
                  "train/test targets are unreachable");
    }
  }

  struct EventBucket {
    std::string id;
    std::vector<std::size_t> members;
  };
  std::vector<EventBucket> buckets;
  buckets.reserve(events.size());
  for (const auto& [event_id, members] : events) buckets.push_back({event_id, members});

  Rng rng(seed);
  rng.shuffle(buckets);

  SplitSpec split;
  split.mode = SplitMode::kSeparated;
  split.seed = seed;

  auto append = [&corpus](std::vector<std::string>& part, const EventBucket& bucket) {
    for (std::size_t i : bucket.members) part.push_back(corpus.at(i).id);
  };

  // Validation: shuffled events until the part first reaches 10% of N.
  const double val_target = 0.10 * n;
  std::size_t next = 0;
  while (next < buckets.size() &&
         static_cast<double>(split.validation.size()) < val_target) {
    append(split.validation, buckets[next]);
    ++next;
  }

  // Remainder: largest event first, to whichever of train/test is furthest
  // below its 3:1 target (ties go to train).
  std::vector<EventBucket> rest(buckets.begin() + static_cast<long>(next), buckets.end());
  std::stable_sort(rest.begin(), rest.end(), [](const EventBucket& a, const EventBucket& b) {
    return a.members.size() > b.members.size();
  });
  const double remainder = n - static_cast<double>(split.validation.size());
  const double train_target = 0.75 * remainder;
  const double test_target = 0.25 * remainder;
  for (const auto& bucket : rest) {
    double train_deficit = train_target - static_cast<double>(split.train.size());
    double test_deficit = test_target - static_cast<double>(split.test.size());
    append(train_deficit >= test_deficit ? split.train : split.test, bucket);
  }

  const double val_frac = static_cast<double>(split.validation.size()) / n;
  const double train_frac = remainder > 0
      ? static_cast<double>(split.train.size()) / remainder : 0.0;
  if (std::abs(val_frac - 0.10) > 0.05 || std::abs(train_frac - 0.75) > 0.05) {
    throw Error("event-separated split infeasible for this corpus/seed: "
                "validation fraction " + std::to_string(val_frac) +
                ", train fraction of remainder " + std::to_string(train_frac) +
                " (targets 0.10 and 0.75, tolerance 0.05)");
  }

  finalize_events(split, corpus);
  validate_split(split, corpus);
  return split;
}

SplitSpec event_mixed_split(const Corpus& corpus, std::uint64_t seed) {
  const std::size_t n = corpus.size();
  if (n < 20) {
    throw Error("event-mixed split needs at least 20 instances, corpus has " +
                std::to_string(n));
  }
  std::vector<std::string> ids;
  ids.reserve(n);
  for (const auto& inst : corpus.instances()) ids.push_back(inst.id);
  Rng rng(seed);
  rng.shuffle(ids);

  const std::size_t n_val = n / 10;
  const std::size_t n_test = (n - n_val) / 4;
  const std::size_t n_train = n - n_val - n_test;

  SplitSpec split;
  split.mode = SplitMode::kMixed;
  split.seed = seed;
  split.validation.assign(ids.begin(), ids.begin() + static_cast<long>(n_val));
  split.train.assign(ids.begin() + static_cast<long>(n_val),
                     ids.begin() + static_cast<long>(n_val + n_train));
  split.test.assign(ids.begin() + static_cast<long>(n_val + n_train), ids.end());
  finalize_events(split, corpus);
  validate_split(split, corpus);
  return split;
}

SplitSpec cross_dataset_adjust(const SplitSpec& train_split_a, const Corpus& corpus_a,
                               const SplitSpec& test_split_b, const Corpus& corpus_b,
                               std::uint64_t seed) {
  (void)corpus_b;
  const auto& blocked_events = test_split_b.test_events;

  std::vector<std::string> kept;
  std::size_t removed = 0;
  for (const auto& id : train_split_a.train) {
    const auto& event = corpus_a.at(corpus_a.index_of(id)).event_id;
    if (blocked_events.count(event)) {
      ++removed;
    } else {
      kept.push_back(id);
    }
  }
  if (removed == 0) return train_split_a;

  std::vector<std::string> pool;
  for (const auto& id : train_split_a.test) {
    const auto& event = corpus_a.at(corpus_a.index_of(id)).event_id;
    if (!blocked_events.count(event)) pool.push_back(id);
  }
  if (pool.size() < removed) {
    throw Error("cross-dataset adjustment short of replacements: need " +
                std::to_string(removed) + ", pool has " + std::to_string(pool.size()));
  }
  Rng rng(seed);
  rng.shuffle(pool);
  pool.resize(removed);

  SplitSpec adjusted;
  adjusted.mode = train_split_a.mode;
  adjusted.seed = seed;
  adjusted.train = std::move(kept);
  adjusted.train.insert(adjusted.train.end(), pool.begin(), pool.end());
  adjusted.validation = train_split_a.validation;

  // Events recruited into train leave the test part wholesale.
  std::set<std::string> recruited_events;
  for (const auto& id : pool) {
    recruited_events.insert(corpus_a.at(corpus_a.index_of(id)).event_id);
  }
  std::unordered_set<std::string> moved(pool.begin(), pool.end());
  for (const auto& id : train_split_a.test) {
    if (moved.count(id)) continue;
    if (recruited_events.count(corpus_a.at(corpus_a.index_of(id)).event_id)) continue;
    adjusted.test.push_back(id);
  }

  finalize_events(adjusted, corpus_a);
  validate_split(adjusted, corpus_a);
  return adjusted;
}

MicroblogInstance early_view(const MicroblogInstance& instance, double fraction) {
  if (fraction < 0.0 || fraction > 1.0) {
    throw Error("early-view fraction must lie in [0, 1]");
  }
  MicroblogInstance view = instance;
  const double k = static_cast<double>(instance.comments.size());
  // The epsilon tolerates binary rounding of fraction * k (e.g. 0.3 * 10).
  auto keep = static_cast<std::size_t>(std::floor(fraction * k + 1e-9));
  if (keep < view.comments.size()) view.comments.resize(keep);
  return view;
}

std::string split_to_json_string(const SplitSpec& split) {
  json j;
  j["mode"] = split_mode_to_string(split.mode);
  j["seed"] = split.seed;
  j["train"] = split.train;
  j["validation"] = split.validation;
  j["test"] = split.test;
  return j.dump();
}

void save_split(const SplitSpec& split, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write split file \"" + path + "\"");
  out << split_to_json_string(split) << '\n';
  if (!out) throw Error("write failure on \"" + path + "\"");
}

SplitSpec load_split(const std::string& path, const Corpus& corpus) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open split file \"" + path + "\"");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("malformed split file \"" + path + "\": " + e.what());
  }
  SplitSpec split;
  try {
    split.mode = split_mode_from_string(j.at("mode").get<std::string>());
    split.seed = j.at("seed").get<std::uint64_t>();
    split.train = j.at("train").get<std::vector<std::string>>();
    split.validation = j.at("validation").get<std::vector<std::string>>();
    split.test = j.at("test").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error("malformed split file \"" + path + "\": " + e.what());
  }
  finalize_events(split, corpus);
  validate_split(split, corpus);
  return split;
}

}  // namespace rumor
