#include "rumor/probes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "rumor/rng.hpp"

namespace rumor {

std::vector<DuplicateCluster> duplicate_clusters(const Corpus& corpus, const SplitSpec* split) {
  std::unordered_map<std::string, std::vector<std::size_t>> groups;
  std::vector<std::string> order;  // first-seen normalized texts
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto tokens = tokenize(corpus.at(i).source_text);
    std::string key;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      if (t) key += ' ';
      key += tokens[t];
    }
    auto [it, inserted] = groups.try_emplace(std::move(key));
    if (inserted) order.push_back(it->first);
    it->second.push_back(i);
  }

  std::unordered_map<std::string, int> part_of;
  if (split != nullptr) {
    for (const auto& id : split->train) part_of[id] = 0;
    for (const auto& id : split->validation) part_of[id] = 1;
    for (const auto& id : split->test) part_of[id] = 2;
  }

  std::vector<DuplicateCluster> clusters;
  for (const auto& key : order) {
    const auto& members = groups.at(key);
    if (members.size() < 2) continue;
    DuplicateCluster cluster;
    cluster.normalized_text = key;
    std::set<int> parts;
    for (std::size_t i : members) {
      cluster.member_ids.push_back(corpus.at(i).id);
      if (split != nullptr) {
        auto it = part_of.find(corpus.at(i).id);
        if (it != part_of.end()) parts.insert(it->second);
      }
    }
    cluster.spans_splits = parts.size() >= 2;
    clusters.push_back(std::move(cluster));
  }
  return clusters;
}

EventSizeStats event_size_stats(const Corpus& corpus) {
  EventSizeStats stats;
  if (corpus.size() == 0) return stats;

  std::vector<std::size_t> sizes;
  std::size_t in_large = 0;
  for (const auto& [event_id, members] : corpus.events()) {
    ++stats.histogram[members.size()];
    sizes.push_back(members.size());
    if (members.size() > 5) in_large += members.size();
  }
  std::sort(sizes.begin(), sizes.end(), std::greater<>());
  std::size_t top5 = 0;
  for (std::size_t i = 0; i < sizes.size() && i < 5; ++i) top5 += sizes[i];

  const double n = static_cast<double>(corpus.size());
  stats.fraction_in_large_events = static_cast<double>(in_large) / n;
  stats.top5_coverage = static_cast<double>(top5) / n;
  return stats;
}

std::vector<KeywordScore> keyword_label_scores(const Corpus& corpus, std::size_t min_support) {
  if (min_support < 1) throw Error("keyword score min_support must be >= 1");

  // token -> per-class document frequency over source texts.
  std::map<std::string, std::array<std::size_t, kNumClasses>> counts;
  for (const auto& inst : corpus.instances()) {
    auto tokens = tokenize(inst.source_text);
    std::unordered_set<std::string> seen(tokens.begin(), tokens.end());
    for (const auto& tok : seen) {
      counts.try_emplace(tok).first->second[static_cast<int>(inst.label)] += 1;
    }
  }

  std::vector<KeywordScore> scores;
  for (const auto& [token, by_class] : counts) {
    std::size_t df = std::accumulate(by_class.begin(), by_class.end(), std::size_t{0});
    if (df < min_support) continue;
    std::size_t best = *std::max_element(by_class.begin(), by_class.end());
    scores.push_back({token, static_cast<double>(best) / static_cast<double>(df), df});
  }
  std::stable_sort(scores.begin(), scores.end(), [](const KeywordScore& a, const KeywordScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_frequency > b.doc_frequency;
  });
  return scores;
}

std::vector<TendencyScore> publisher_tendency(const Corpus& corpus) {
  std::vector<TendencyScore> out;
  for (const auto& [publisher_id, members] : corpus.publishers()) {
    TendencyScore score;
    score.publisher_id = publisher_id;
    score.post_count = members.size();
    for (std::size_t i : members) {
      score.scores[static_cast<int>(corpus.at(i).label)] += 1.0;
    }
    for (double& s : score.scores) s /= static_cast<double>(members.size());
    out.push_back(std::move(score));
  }
  return out;
}

std::vector<InteractionFeature> interaction_features(const Corpus& corpus,
                                                     std::vector<std::string>* warnings) {
  std::vector<InteractionFeature> out;
  out.reserve(corpus.size());
  for (const auto& inst : corpus.instances()) {
    InteractionFeature feat;
    feat.instance_id = inst.id;
    feat.interaction_count = inst.comments.size();
    if (!inst.comments.empty()) {
      std::int64_t latest = inst.comments.back().timestamp;  // comments sorted ascending
      std::int64_t range = latest - inst.source_timestamp;
      if (range < 0) {
        if (warnings != nullptr) {
          warnings->push_back("instance \"" + inst.id +
                              "\" has comments earlier than its source; range clamped to 0");
        }
        range = 0;
      }
      feat.time_range = range;
    }
    out.push_back(std::move(feat));
  }
  return out;
}

namespace {

struct Sample {
  std::vector<double> row;
  Label label;
};

double gini(const std::array<std::size_t, kNumClasses>& histogram, std::size_t total) {
  if (total == 0) return 0.0;
  double impurity = 1.0;
  for (std::size_t count : histogram) {
    double p = static_cast<double>(count) / static_cast<double>(total);
    impurity -= p * p;
  }
  return impurity;
}

}  // namespace

RandomForest RandomForest::train(const std::vector<std::vector<double>>& features,
                                 const std::vector<Label>& labels, const Config& config) {
  if (features.empty()) throw Error("random forest needs a non-empty feature matrix");
  if (features.size() != labels.size()) throw Error("feature/label length mismatch");
  if (config.trees < 1) throw Error("random forest needs >= 1 tree");
  const std::size_t n_features = features.front().size();
  if (n_features == 0) throw Error("random forest needs >= 1 feature column");
  for (const auto& row : features) {
    if (row.size() != n_features) throw Error("ragged feature matrix");
  }

  // Canonical row order (features, then label) makes the forest a function of
  // the training multiset, so predictions cannot depend on input row order.
  std::vector<Sample> data(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) data[i] = {features[i], labels[i]};
  std::stable_sort(data.begin(), data.end(), [](const Sample& a, const Sample& b) {
    if (a.row != b.row) return a.row < b.row;
    return static_cast<int>(a.label) < static_cast<int>(b.label);
  });

  Rng master(config.seed);
  RandomForest forest;
  forest.trees_.resize(static_cast<std::size_t>(config.trees));

  for (int t = 0; t < config.trees; ++t) {
    Rng rng = master.fork(static_cast<std::uint64_t>(t));
    // Bootstrap indices are drawn up front, before any node-level sorting.
    std::vector<std::size_t> bootstrap(data.size());
    for (auto& idx : bootstrap) idx = rng.uniform_index(data.size());

    Tree& tree = forest.trees_[static_cast<std::size_t>(t)];

    struct Frame {
      std::vector<std::size_t> indices;
      int depth;
      int node;
    };

    auto make_node = [&tree]() {
      tree.nodes.emplace_back();
      return static_cast<int>(tree.nodes.size() - 1);
    };

    std::vector<Frame> stack;
    stack.push_back({bootstrap, 0, make_node()});

    while (!stack.empty()) {
      Frame frame = std::move(stack.back());
      stack.pop_back();
      Node& node = tree.nodes[static_cast<std::size_t>(frame.node)];

      std::array<std::size_t, kNumClasses> histogram{};
      for (std::size_t i : frame.indices) histogram[static_cast<int>(data[i].label)] += 1;
      node.histogram = histogram;

      bool pure = std::count(histogram.begin(), histogram.end(), std::size_t{0}) == kNumClasses - 1;
      if (frame.depth >= config.max_depth || pure) continue;

      const std::size_t feature = rng.uniform_index(n_features);
      std::vector<double> values;
      values.reserve(frame.indices.size());
      for (std::size_t i : frame.indices) values.push_back(data[i].row[feature]);
      std::sort(values.begin(), values.end());
      values.erase(std::unique(values.begin(), values.end()), values.end());
      if (values.size() < 2) continue;  // constant feature: stay a leaf

      double best_impurity = std::numeric_limits<double>::infinity();
      double best_threshold = 0.0;
      const double total = static_cast<double>(frame.indices.size());
      for (std::size_t v = 0; v + 1 < values.size(); ++v) {
        const double threshold = (values[v] + values[v + 1]) / 2.0;
        std::array<std::size_t, kNumClasses> left{};
        std::size_t n_left = 0;
        for (std::size_t i : frame.indices) {
          if (data[i].row[feature] < threshold) {
            left[static_cast<int>(data[i].label)] += 1;
            ++n_left;
          }
        }
        std::array<std::size_t, kNumClasses> right{};
        for (int c = 0; c < kNumClasses; ++c) right[c] = histogram[c] - left[c];
        const std::size_t n_right = frame.indices.size() - n_left;
        double weighted = (static_cast<double>(n_left) * gini(left, n_left) +
                           static_cast<double>(n_right) * gini(right, n_right)) / total;
        if (weighted < best_impurity - 1e-15) {
          best_impurity = weighted;
          best_threshold = threshold;
        }
      }
      if (best_impurity >= gini(histogram, frame.indices.size()) - 1e-15) continue;

      std::vector<std::size_t> left_idx;
      std::vector<std::size_t> right_idx;
      for (std::size_t i : frame.indices) {
        (data[i].row[feature] < best_threshold ? left_idx : right_idx).push_back(i);
      }
      if (left_idx.empty() || right_idx.empty()) continue;

      const int left_node = make_node();
      const int right_node = make_node();
      // `node` may dangle after make_node reallocates; re-fetch.
      Node& fixed = tree.nodes[static_cast<std::size_t>(frame.node)];
      fixed.feature = static_cast<int>(feature);
      fixed.threshold = best_threshold;
      fixed.left = left_node;
      fixed.right = right_node;
      stack.push_back({std::move(right_idx), frame.depth + 1, right_node});
      stack.push_back({std::move(left_idx), frame.depth + 1, left_node});
    }
  }
  return forest;
}

Label RandomForest::tree_vote(const Tree& tree, const std::vector<double>& row) const {
  const Node* node = &tree.nodes.front();
  while (node->feature >= 0) {
    node = row[static_cast<std::size_t>(node->feature)] < node->threshold
               ? &tree.nodes[static_cast<std::size_t>(node->left)]
               : &tree.nodes[static_cast<std::size_t>(node->right)];
  }
  int best = 0;
  for (int c = 1; c < kNumClasses; ++c) {
    if (node->histogram[c] > node->histogram[best]) best = c;  // ties -> lowest code
  }
  return static_cast<Label>(best);
}

Label RandomForest::predict(const std::vector<double>& row) const {
  std::array<int, kNumClasses> votes{};
  for (const auto& tree : trees_) votes[static_cast<int>(tree_vote(tree, row))] += 1;
  int best = 0;
  for (int c = 1; c < kNumClasses; ++c) {
    if (votes[c] > votes[best]) best = c;  // ties -> lowest code
  }
  return static_cast<Label>(best);
}

std::vector<Label> RandomForest::predict(const std::vector<std::vector<double>>& rows) const {
  std::vector<Label> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(predict(row));
  return out;
}

}  // namespace rumor
