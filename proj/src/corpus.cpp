#include "rumor/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rumor {

using nlohmann::json;

Label label_from_string(std::string_view s) {
  if (s == "non-rumor") return Label::kNonRumor;
  if (s == "false") return Label::kFalseRumor;
  if (s == "true") return Label::kTrueRumor;
  if (s == "unverified") return Label::kUnverified;
  throw Error("unknown label \"" + std::string(s) + "\"");
}

const char* label_to_string(Label label) {
  switch (label) {
    case Label::kNonRumor: return "non-rumor";
    case Label::kFalseRumor: return "false";
    case Label::kTrueRumor: return "true";
    case Label::kUnverified: return "unverified";
  }
  throw Error("invalid label code");
}

Corpus::Corpus(std::vector<MicroblogInstance> instances)
    : instances_(std::move(instances)) {
  by_id_.reserve(instances_.size());
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    auto& inst = instances_[i];
    if (!by_id_.emplace(inst.id, i).second) {
      throw Error("duplicate instance id \"" + inst.id + "\"");
    }
    std::stable_sort(inst.comments.begin(), inst.comments.end(),
                     [](const Comment& a, const Comment& b) {
                       return a.timestamp < b.timestamp;
                     });
    events_[inst.event_id].push_back(i);
    publishers_[inst.publisher_id].push_back(i);
  }
}

std::size_t Corpus::index_of(const std::string& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) throw Error("unknown instance id \"" + id + "\"");
  return it->second;
}

namespace {

bool is_token_char(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::string lower(text);
  for (char& c : lower) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }

  std::vector<std::string> tokens;
  std::size_t pos = 0;
  while (pos < lower.size()) {
    while (pos < lower.size() && std::isspace(static_cast<unsigned char>(lower[pos]))) ++pos;
    std::size_t end = pos;
    while (end < lower.size() && !std::isspace(static_cast<unsigned char>(lower[end]))) ++end;
    if (end == pos) break;
    std::string_view chunk(lower.data() + pos, end - pos);
    pos = end;
    if (starts_with(chunk, "http://") || starts_with(chunk, "https://") ||
        starts_with(chunk, "www.") || starts_with(chunk, "@")) {
      continue;
    }
    std::size_t start = 0;
    for (std::size_t i = 0; i <= chunk.size(); ++i) {
      if (i == chunk.size() || !is_token_char(static_cast<unsigned char>(chunk[i]))) {
        if (i > start) tokens.emplace_back(chunk.substr(start, i - start));
        start = i + 1;
      }
    }
  }
  return tokens;
}

namespace {

std::int64_t require_timestamp(const json& j, const char* field) {
  if (!j.contains(field) || !j.at(field).is_number_integer()) {
    throw Error(std::string("missing or non-integer \"") + field + "\"");
  }
  auto ts = j.at(field).get<std::int64_t>();
  if (ts < 0) throw Error(std::string("negative \"") + field + "\"");
  return ts;
}

std::string require_string(const json& j, const char* field) {
  if (!j.contains(field) || !j.at(field).is_string()) {
    throw Error(std::string("missing or non-string \"") + field + "\"");
  }
  return j.at(field).get<std::string>();
}

MicroblogInstance instance_from_json(const json& j) {
  MicroblogInstance inst;
  inst.id = require_string(j, "id");
  inst.event_id = require_string(j, "event_id");
  inst.publisher_id = require_string(j, "publisher_id");
  inst.label = label_from_string(require_string(j, "label"));
  if (!j.contains("source") || !j.at("source").is_object()) {
    throw Error("missing \"source\" object");
  }
  const json& src = j.at("source");
  inst.source_text = require_string(src, "text");
  inst.source_timestamp = require_timestamp(src, "timestamp");
  if (j.contains("comments")) {
    if (!j.at("comments").is_array()) throw Error("\"comments\" is not an array");
    for (const json& c : j.at("comments")) {
      Comment comment;
      comment.user_id = require_string(c, "user_id");
      comment.text = require_string(c, "text");
      comment.timestamp = require_timestamp(c, "timestamp");
      inst.comments.push_back(std::move(comment));
    }
  }
  return inst;
}

}  // namespace

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file \"" + path + "\"");
  std::vector<MicroblogInstance> instances;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      instances.push_back(instance_from_json(j));
    } catch (const json::exception& e) {
      throw Error(path + ":" + std::to_string(line_no) + ": malformed instance: " + e.what());
    } catch (const Error& e) {
      throw Error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return Corpus(std::move(instances));
}

std::string instance_to_json_line(const MicroblogInstance& inst) {
  json j;
  j["id"] = inst.id;
  j["event_id"] = inst.event_id;
  j["publisher_id"] = inst.publisher_id;
  j["label"] = label_to_string(inst.label);
  j["source"] = {{"text", inst.source_text}, {"timestamp", inst.source_timestamp}};
  json comments = json::array();
  for (const Comment& c : inst.comments) {
    comments.push_back({{"user_id", c.user_id}, {"text", c.text}, {"timestamp", c.timestamp}});
  }
  j["comments"] = std::move(comments);
  return j.dump();
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write dataset file \"" + path + "\"");
  for (const auto& inst : corpus.instances()) {
    out << instance_to_json_line(inst) << '\n';
  }
  if (!out) throw Error("write failure on \"" + path + "\"");
}

Vocabulary Vocabulary::build(const Corpus& corpus, std::size_t max_size) {
  if (corpus.size() == 0) throw Error("cannot build vocabulary from an empty corpus");
  std::map<std::string, std::uint64_t> counts;  // ordered: lexicographic tie-break for free
  for (const auto& inst : corpus.instances()) {
    for (auto& tok : tokenize(inst.source_text)) ++counts[std::move(tok)];
    for (const auto& c : inst.comments) {
      for (auto& tok : tokenize(c.text)) ++counts[std::move(tok)];
    }
  }
  if (counts.empty()) throw Error("corpus contains no tokens");

  std::vector<std::pair<std::string, std::uint64_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_size) ranked.resize(max_size);

  Vocabulary vocab;
  vocab.tokens_.reserve(ranked.size());
  vocab.frequencies_.reserve(ranked.size());
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    vocab.index_.emplace(ranked[i].first, static_cast<std::uint32_t>(i));
    vocab.tokens_.push_back(std::move(ranked[i].first));
    vocab.frequencies_.push_back(ranked[i].second);
  }
  return vocab;
}

std::optional<std::uint32_t> Vocabulary::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

BowVector bow_vector(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
  BowVector bow;
  for (const auto& tok : tokens) {
    if (auto idx = vocab.index_of(tok)) ++bow[*idx];
  }
  return bow;
}

BowVector bow_add(const BowVector& a, const BowVector& b) {
  BowVector out = a;
  for (const auto& [idx, count] : b) out[idx] += count;
  return out;
}

}  // namespace rumor
