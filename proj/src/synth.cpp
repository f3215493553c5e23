#include "rumor/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_set>

#include <json.hpp>

#include "rumor/rng.hpp"

namespace rumor {

namespace {

// Fixed generalizable-signal strengths. Theme tokens are emitted at most once
// per text so the class signal stays weak and event-separated accuracy lands
// between chance and ceiling.
constexpr double kSourceThemeProb = 0.35;
constexpr double kCommentThemeProb = 0.08;
constexpr int kSourceFillerTokens = 6;
constexpr int kCommentFillerTokens = 3;
constexpr int kCommonPoolSize = 200;
constexpr int kCommenterPoolSize = 500;
constexpr std::int64_t kEpochBase = 1600000000;
constexpr std::int64_t kRangeMin = 600;
constexpr std::int64_t kRangeMax = 21600;

std::string fmt_id(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, i);
  return std::string(buf);
}

void validate(const SynthConfig& c) {
  auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (c.n_events < 8) throw Error("synthetic config needs n_events >= 8");
  if (c.n_instances < c.n_events) throw Error("synthetic config needs n_instances >= n_events");
  if (c.n_publishers < 4) throw Error("synthetic config needs n_publishers >= 4");
  if (!in_unit(c.keyword_label_strength) || !in_unit(c.duplicate_rate) ||
      !in_unit(c.publisher_consistency) || !in_unit(c.source_signature_strength)) {
    throw Error("synthetic rates must lie in [0, 1]");
  }
  if (c.comments_min < 0 || c.comments_max < c.comments_min) {
    throw Error("synthetic comment range is invalid");
  }
  if (c.theme_tokens_per_class < 1) throw Error("synthetic config needs >= 1 theme token per class");
  if (c.n_source_groups < 1) throw Error("synthetic config needs >= 1 source group");
}

// Group means laid out symmetrically around the middle of the value range;
// strength 0 collapses every group onto the midpoint.
double group_mean_fraction(int group, int n_groups, double strength) {
  if (n_groups <= 1) return 0.5;
  double position = static_cast<double>(group) / static_cast<double>(n_groups - 1);
  return 0.5 + strength * (position - 0.5) * 0.8;
}

}  // namespace

SynthOutput generate_synthetic_detailed(const SynthConfig& config) {
  validate(config);
  Rng rng(config.seed);

  const std::size_t n = config.n_instances;
  const std::size_t n_events = config.n_events;
  const int groups = config.n_source_groups;

  std::vector<std::string> common_pool(kCommonPoolSize);
  for (int i = 0; i < kCommonPoolSize; ++i) common_pool[i] = fmt_id("cm", i, 3);
  std::vector<std::vector<std::string>> theme_pool(kNumClasses);
  for (int c = 0; c < kNumClasses; ++c) {
    for (int i = 0; i < config.theme_tokens_per_class; ++i) {
      theme_pool[c].push_back("st" + std::to_string(c) + "w" + std::to_string(i));
    }
  }

  // Publishers partitioned into four dominant-class pools.
  std::vector<std::vector<std::size_t>> class_pool(kNumClasses);
  for (std::size_t p = 0; p < config.n_publishers; ++p) {
    class_pool[p % kNumClasses].push_back(p);
  }
  std::vector<std::size_t> pool_cursor(kNumClasses, 0);

  // Per-event instance counts: N/E each, the first N%E events take one extra.
  std::vector<std::size_t> event_size(n_events, n / n_events);
  for (std::size_t e = 0; e < n % n_events; ++e) ++event_size[e];

  SynthOutput out{Corpus({}), {}, {}, {}, {}};
  std::vector<MicroblogInstance> instances;
  instances.reserve(n);
  std::vector<int> source_groups;
  source_groups.reserve(n);
  std::vector<std::vector<std::string>> duplicate_groups;

  for (int g = 0; g < groups; ++g) {
    double count_frac = group_mean_fraction(g, groups, config.source_signature_strength);
    double range_frac = count_frac;
    out.group_count_means.push_back(
        config.comments_min + count_frac * (config.comments_max - config.comments_min));
    out.group_range_means.push_back(
        static_cast<double>(kRangeMin) + range_frac * static_cast<double>(kRangeMax - kRangeMin));
  }

  std::unordered_set<std::string> used_texts;
  std::size_t unique_counter = 0;
  std::size_t global_index = 0;

  auto draw_text = [&](int label_class, bool with_keyword, const std::string& keyword) {
    std::string text;
    for (int attempt = 0;; ++attempt) {
      std::vector<std::string> tokens;
      if (with_keyword) tokens.push_back(keyword);
      if (rng.bernoulli(kSourceThemeProb)) {
        tokens.push_back(theme_pool[label_class][rng.uniform_index(theme_pool[label_class].size())]);
      }
      for (int f = 0; f < kSourceFillerTokens; ++f) {
        tokens.push_back(common_pool[rng.uniform_index(common_pool.size())]);
      }
      if (attempt >= 20) tokens.push_back("uq" + std::to_string(unique_counter++));
      text.clear();
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (t) text += ' ';
        text += tokens[t];
      }
      if (used_texts.insert(text).second) break;
    }
    return text;
  };

  for (std::size_t e = 0; e < n_events; ++e) {
    const int label_class = static_cast<int>(e % kNumClasses);
    const auto label = static_cast<Label>(label_class);
    const std::string event_id = fmt_id("ev", e, 3);
    const std::string keyword = fmt_id("kw", e, 3);
    const int group = label_class % groups;
    const std::size_t m = event_size[e];
    std::size_t n_dups = m >= 2
        ? std::min(static_cast<std::size_t>(std::floor(config.duplicate_rate * static_cast<double>(m))), m - 1)
        : 0;
    const std::size_t n_originals = m - n_dups;

    std::vector<std::size_t> event_indices;
    std::map<std::size_t, std::vector<std::string>> clusters;  // original pos -> member ids

    for (std::size_t i = 0; i < m; ++i) {
      MicroblogInstance inst;
      inst.id = fmt_id("t", global_index, 5);
      inst.event_id = event_id;
      inst.label = label;
      inst.source_timestamp = kEpochBase + static_cast<std::int64_t>(global_index) * 3600;

      const bool is_copy = i >= n_originals;
      if (is_copy) {
        std::size_t src_pos = rng.uniform_index(n_originals);
        std::size_t src_index = event_indices[src_pos];
        inst.source_text = instances[src_index].source_text;
        auto& cluster = clusters[src_pos];
        if (cluster.empty()) cluster.push_back(instances[src_index].id);
        cluster.push_back(inst.id);
      } else {
        bool with_keyword = rng.bernoulli(config.keyword_label_strength);
        inst.source_text = draw_text(label_class, with_keyword, keyword);
      }

      // Publisher routing: consistent pool with probability rho, else uniform.
      std::size_t publisher;
      if (rng.bernoulli(config.publisher_consistency)) {
        auto& pool = class_pool[label_class];
        publisher = pool[pool_cursor[label_class]++ % pool.size()];
      } else {
        publisher = rng.uniform_index(config.n_publishers);
      }
      inst.publisher_id = fmt_id("pub", publisher, 3);

      // Interaction profile drawn from the event's source group.
      double count_frac = group_mean_fraction(group, groups, config.source_signature_strength);
      double frac = rng.normal(count_frac, 0.05);
      double span = static_cast<double>(config.comments_max - config.comments_min);
      int k = static_cast<int>(std::lround(config.comments_min + frac * span));
      k = std::clamp(k, config.comments_min, config.comments_max);

      double rfrac = rng.normal(count_frac, 0.05);
      auto range = static_cast<std::int64_t>(std::lround(
          kRangeMin + rfrac * static_cast<double>(kRangeMax - kRangeMin)));
      range = std::clamp<std::int64_t>(range, 60, 2 * kRangeMax);

      for (int j = 1; j <= k; ++j) {
        Comment comment;
        comment.user_id = fmt_id("cu", rng.uniform_index(kCommenterPoolSize), 3);
        std::vector<std::string> tokens;
        if (rng.bernoulli(kCommentThemeProb)) {
          tokens.push_back(theme_pool[label_class][rng.uniform_index(theme_pool[label_class].size())]);
        }
        for (int f = 0; f < kCommentFillerTokens; ++f) {
          tokens.push_back(common_pool[rng.uniform_index(common_pool.size())]);
        }
        for (std::size_t t = 0; t < tokens.size(); ++t) {
          if (t) comment.text += ' ';
          comment.text += tokens[t];
        }
        comment.timestamp = inst.source_timestamp +
            static_cast<std::int64_t>(std::llround(static_cast<double>(range) *
                                                   static_cast<double>(j) / static_cast<double>(k)));
        inst.comments.push_back(std::move(comment));
      }

      event_indices.push_back(global_index);
      source_groups.push_back(group);
      instances.push_back(std::move(inst));
      ++global_index;
    }

    for (auto& [pos, members] : clusters) duplicate_groups.push_back(std::move(members));
  }

  out.corpus = Corpus(std::move(instances));
  out.duplicate_groups = std::move(duplicate_groups);
  out.source_groups = std::move(source_groups);
  return out;
}

Corpus generate_synthetic(const SynthConfig& config) {
  return std::move(generate_synthetic_detailed(config).corpus);
}

std::string synth_config_to_json(const SynthConfig& c) {
  nlohmann::json j;
  j["n_instances"] = c.n_instances;
  j["n_events"] = c.n_events;
  j["n_publishers"] = c.n_publishers;
  j["keyword_label_strength"] = c.keyword_label_strength;
  j["duplicate_rate"] = c.duplicate_rate;
  j["publisher_consistency"] = c.publisher_consistency;
  j["source_signature_strength"] = c.source_signature_strength;
  j["comments_min"] = c.comments_min;
  j["comments_max"] = c.comments_max;
  j["theme_tokens_per_class"] = c.theme_tokens_per_class;
  j["n_source_groups"] = c.n_source_groups;
  j["seed"] = c.seed;
  return j.dump();
}

}  // namespace rumor
