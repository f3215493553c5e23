#include "rumor/psa.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rumor {

using nlohmann::json;

const char* encoder_to_string(Encoder encoder) {
  return encoder == Encoder::kRootText ? "roottext" : "meantext";
}

Encoder encoder_from_string(std::string_view s) {
  if (s == "roottext") return Encoder::kRootText;
  if (s == "meantext") return Encoder::kMeanText;
  throw Error("unknown encoder \"" + std::string(s) + "\"");
}

const char* aggr_to_string(AggrMode mode) {
  switch (mode) {
    case AggrMode::kNone: return "none";
    case AggrMode::kSum: return "sum";
    case AggrMode::kMean: return "mean";
  }
  throw Error("invalid aggregation mode");
}

AggrMode aggr_from_string(std::string_view s) {
  if (s == "none") return AggrMode::kNone;
  if (s == "sum") return AggrMode::kSum;
  if (s == "mean") return AggrMode::kMean;
  throw Error("unknown aggregation mode \"" + std::string(s) + "\"");
}

std::string PsaConfig::model_name() const {
  std::string name = encoder == Encoder::kRootText ? "roottext" : "meantext";
  if (aggr != AggrMode::kNone) {
    name += std::string("+psa(") + aggr_to_string(aggr) + ")";
  }
  return name;
}

std::string psa_config_to_json(const PsaConfig& c) {
  json j;
  j["encoder"] = encoder_to_string(c.encoder);
  j["aggr"] = aggr_to_string(c.aggr);
  j["vocab_cap"] = c.vocab_cap;
  j["embed_dim"] = c.embed_dim;
  j["max_tokens"] = c.max_tokens;
  j["filters"] = c.filters;
  j["windows"] = c.windows;
  j["hidden1"] = c.hidden1;
  j["hidden2"] = c.hidden2;
  j["dropout"] = c.dropout;
  j["learning_rate"] = c.learning_rate;
  j["weight_decay"] = c.weight_decay;
  j["batch_size"] = c.batch_size;
  j["max_epochs"] = c.max_epochs;
  j["patience"] = c.patience;
  j["embeddings_path"] = c.embeddings_path;
  return j.dump();
}

PsaConfig psa_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("malformed model config: ") + e.what());
  }
  PsaConfig c;
  try {
    c.encoder = encoder_from_string(j.at("encoder").get<std::string>());
    c.aggr = aggr_from_string(j.at("aggr").get<std::string>());
    c.vocab_cap = j.at("vocab_cap").get<std::size_t>();
    c.embed_dim = j.at("embed_dim").get<std::size_t>();
    c.max_tokens = j.at("max_tokens").get<std::size_t>();
    c.filters = j.at("filters").get<std::size_t>();
    auto windows = j.at("windows").get<std::vector<std::size_t>>();
    if (windows.size() != 3) throw Error("model config needs exactly 3 windows");
    std::copy(windows.begin(), windows.end(), c.windows.begin());
    c.hidden1 = j.at("hidden1").get<std::size_t>();
    c.hidden2 = j.at("hidden2").get<std::size_t>();
    c.dropout = j.at("dropout").get<double>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
    c.patience = j.at("patience").get<std::size_t>();
    c.embeddings_path = j.at("embeddings_path").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(std::string("malformed model config: ") + e.what());
  }
  return c;
}

std::vector<std::size_t> accessible_posts(const std::string& publisher_id,
                                          const SplitSpec& split,
                                          const MicroblogInstance& instance,
                                          const Corpus& corpus) {
  const std::size_t own = corpus.index_of(instance.id);

  std::vector<std::size_t> train_posts;
  for (const auto& id : split.train) {
    const std::size_t i = corpus.index_of(id);
    if (corpus.at(i).publisher_id == publisher_id) train_posts.push_back(i);
  }
  std::sort(train_posts.begin(), train_posts.end());  // corpus order

  for (std::size_t i : train_posts) {
    if (i == own) return train_posts;  // training instance: training posts only
  }
  train_posts.push_back(own);
  return train_posts;
}

PsaContext PsaContext::build(const Corpus& corpus, const SplitSpec& split,
                             const Vocabulary& vocab, const PsaConfig& config) {
  PsaContext ctx;
  ctx.corpus = &corpus;
  ctx.part.assign(corpus.size(), -1);
  for (const auto& id : split.train) ctx.part[corpus.index_of(id)] = 0;
  for (const auto& id : split.validation) ctx.part[corpus.index_of(id)] = 1;
  for (const auto& id : split.test) ctx.part[corpus.index_of(id)] = 2;

  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (ctx.part[i] == 0) {
      ctx.publisher_train_posts[corpus.at(i).publisher_id].push_back(i);
    }
  }

  ctx.encoded.reserve(corpus.size());
  ctx.padded_tokens.reserve(corpus.size());
  const auto pad = static_cast<std::uint32_t>(vocab.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& inst = corpus.at(i);
    EncodedInstance enc = config.encoder == Encoder::kRootText ? root_text(inst, vocab)
                                                               : mean_text(inst, vocab);
    ctx.encoded.push_back(std::move(enc.values));

    std::vector<std::uint32_t> ids(config.max_tokens, pad);
    auto tokens = tokenize(inst.source_text);
    std::size_t t = 0;
    for (const auto& token : tokens) {
      if (t >= config.max_tokens) break;
      // Out-of-vocabulary tokens map to pad, i.e. a zero embedding row.
      if (auto idx = vocab.index_of(token)) ids[t] = *idx;
      ++t;
    }
    ctx.padded_tokens.push_back(std::move(ids));
  }
  return ctx;
}

std::vector<std::size_t> PsaContext::accessible(std::size_t instance_index) const {
  const auto& inst = corpus->at(instance_index);
  std::vector<std::size_t> posts;
  auto it = publisher_train_posts.find(inst.publisher_id);
  if (it != publisher_train_posts.end()) posts = it->second;
  if (part[instance_index] == 0) return posts;  // contains the instance itself
  posts.push_back(instance_index);
  return posts;
}

std::map<std::uint32_t, std::vector<double>> load_embedding_file(const std::string& path,
                                                                 const Vocabulary& vocab,
                                                                 std::size_t dim) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embedding file \"" + path + "\"");
  std::map<std::uint32_t, std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    auto idx = vocab.index_of(token);
    std::vector<double> values;
    values.reserve(dim);
    double v = 0.0;
    while (ss >> v) values.push_back(v);
    if (values.size() != dim) {
      throw Error("embedding file " + path + ":" + std::to_string(line_no) + ": expected " +
                  std::to_string(dim) + " values, found " + std::to_string(values.size()));
    }
    if (idx) rows[*idx] = std::move(values);  // tokens outside the vocabulary are skipped
  }
  return rows;
}

std::vector<nn::BlockReport> psa_grad_check(PsaModelT<double>& model, const PsaContext& ctx,
                                            const Corpus& corpus,
                                            const std::vector<std::size_t>& batch,
                                            double step, std::uint64_t seed) {
  if (batch.empty()) throw Error("gradient check needs a non-empty batch");
  const double scale = 1.0 / static_cast<double>(batch.size());

  auto loss_fn = [&]() {
    double total = 0.0;
    typename PsaModelT<double>::Cache cache;
    for (std::size_t i : batch) {
      auto probs = model.forward(ctx.encoded[i], i, ctx, false, nullptr, cache);
      const auto target = static_cast<std::size_t>(static_cast<int>(corpus.at(i).label));
      total += -std::log(std::max(probs[target], std::numeric_limits<double>::min()));
    }
    return total * scale;
  };
  auto backward_fn = [&]() {
    model.zero_grads();
    typename PsaModelT<double>::Cache cache;
    for (std::size_t i : batch) {
      model.forward(ctx.encoded[i], i, ctx, false, nullptr, cache);
      model.backward(cache, corpus.at(i).label, scale, ctx);
    }
  };
  return nn::grad_check(loss_fn, backward_fn, model.params(), step, 20, seed);
}

namespace {

template <class T>
void write_raw(std::ofstream& out, const nn::Tensor<T>& tensor) {
  out.write(reinterpret_cast<const char*>(tensor.data.data()),
            static_cast<std::streamsize>(tensor.data.size() * sizeof(T)));
}

}  // namespace

void save_checkpoint(PsaModelT<float>& model, const std::string& prefix) {
  json manifest;
  manifest["dtype"] = "f32";
  manifest["config"] = json::parse(psa_config_to_json(model.config()));
  manifest["seed"] = model.init_seed();
  manifest["vocab_size"] = model.vocab().size();
  json blocks = json::array();
  std::size_t offset = 0;
  for (auto* p : model.params()) {
    blocks.push_back({{"name", p->name},
                      {"shape", p->value.shape},
                      {"offset", offset},
                      {"count", p->value.numel()}});
    offset += p->value.numel();
  }
  manifest["blocks"] = std::move(blocks);

  std::ofstream meta(prefix + ".json", std::ios::binary);
  if (!meta) throw Error("cannot write checkpoint manifest \"" + prefix + ".json\"");
  meta << manifest.dump(2) << '\n';

  std::ofstream bin(prefix + ".bin", std::ios::binary);
  if (!bin) throw Error("cannot write checkpoint data \"" + prefix + ".bin\"");
  for (auto* p : model.params()) write_raw(bin, p->value);
  if (!meta || !bin) throw Error("write failure while saving checkpoint \"" + prefix + "\"");
}

PsaModelT<float> load_checkpoint(const std::string& prefix, const Vocabulary& vocab) {
  std::ifstream meta(prefix + ".json");
  if (!meta) throw Error("cannot open checkpoint manifest \"" + prefix + ".json\"");
  json manifest;
  try {
    meta >> manifest;
  } catch (const json::exception& e) {
    throw Error("malformed checkpoint manifest: " + std::string(e.what()));
  }
  if (manifest.value("dtype", "") != "f32") throw Error("unsupported checkpoint dtype");
  if (manifest.at("vocab_size").get<std::size_t>() != vocab.size()) {
    throw Error("checkpoint vocabulary size does not match the supplied vocabulary");
  }
  PsaConfig config = psa_config_from_json(manifest.at("config").dump());
  PsaModelT<float> model(config, vocab, manifest.at("seed").get<std::uint64_t>());

  std::ifstream bin(prefix + ".bin", std::ios::binary);
  if (!bin) throw Error("cannot open checkpoint data \"" + prefix + ".bin\"");
  for (const auto& block : manifest.at("blocks")) {
    auto& param = model.block(block.at("name").get<std::string>());
    const auto count = block.at("count").get<std::size_t>();
    if (param.value.numel() != count) {
      throw Error("checkpoint block \"" + param.name + "\" has unexpected size");
    }
    bin.read(reinterpret_cast<char*>(param.value.data.data()),
             static_cast<std::streamsize>(count * sizeof(float)));
    if (!bin) throw Error("checkpoint data truncated in block \"" + param.name + "\"");
  }
  return model;
}

}  // namespace rumor
