#include "slatebandit/featurizer.h"

#include <algorithm>
#include <map>
#include <set>

namespace slatebandit {

Featurizer::Featurizer(std::shared_ptr<const TextEmbedder> embedder,
                       std::vector<CategoricalBlock> blocks)
    : embedder_(std::move(embedder)), blocks_(std::move(blocks)) {
  if (!embedder_) throw ValidationError("featurizer: embedder is required");
  input_dim_ = 2 * embedder_->dim();
  for (CategoricalBlock& block : blocks_) {
    std::sort(block.vocab.begin(), block.vocab.end());
    input_dim_ += block.width();
  }
}

Featurizer Featurizer::Build(std::shared_ptr<const TextEmbedder> embedder,
                             std::span<const Context> contexts) {
  std::map<std::string, std::set<std::string>> values;
  for (const Context& c : contexts) {
    for (const auto& [name, value] : c.features) values[name].insert(value);
  }
  std::vector<CategoricalBlock> blocks;
  for (const auto& [name, vocab] : values) {
    blocks.push_back({name, {vocab.begin(), vocab.end()}});
  }
  return Featurizer(std::move(embedder), std::move(blocks));
}

Eigen::VectorXd Featurizer::Featurize(const Context& context,
                                      const Action& action) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(input_dim_);
  const int e = embedder_->dim();
  if (context.query && !context.query->empty()) {
    x.segment(0, e) = embedder_->Embed(*context.query);
  }
  x.segment(e, e) = embedder_->Embed(action.title);
  int offset = 2 * e;
  for (const CategoricalBlock& block : blocks_) {
    auto it = context.features.find(block.feature);
    if (it != context.features.end()) {
      auto pos = std::lower_bound(block.vocab.begin(), block.vocab.end(),
                                  it->second);
      const bool known = pos != block.vocab.end() && *pos == it->second;
      const int slot = known ? static_cast<int>(pos - block.vocab.begin())
                             : static_cast<int>(block.vocab.size());
      x[offset + slot] = 1.0;
    }
    offset += block.width();
  }
  return x;
}

nlohmann::json Featurizer::ToJson() const {
  nlohmann::json blocks = nlohmann::json::array();
  for (const CategoricalBlock& block : blocks_) {
    blocks.push_back({{"feature", block.feature}, {"vocab", block.vocab}});
  }
  return {{"embedder", embedder_->ToJson()}, {"categorical", blocks}};
}

Featurizer Featurizer::FromJson(const nlohmann::json& j) {
  std::vector<CategoricalBlock> blocks;
  for (const auto& b : j.at("categorical")) {
    blocks.push_back({b.at("feature").get<std::string>(),
                      b.at("vocab").get<std::vector<std::string>>()});
  }
  return Featurizer(EmbedderFromJson(j.at("embedder")), std::move(blocks));
}

}  // namespace slatebandit
