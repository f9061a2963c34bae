#ifndef SLATEBANDIT_FEATURIZER_H_
#define SLATEBANDIT_FEATURIZER_H_

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "slatebandit/embedding.h"
#include "slatebandit/types.h"

namespace slatebandit {

// One-hot block for a categorical context feature. Slot vocab.size() is the
// reserved "unknown" slot.
struct CategoricalBlock {
  std::string feature;
  std::vector<std::string> vocab;  // sorted

  int width() const { return static_cast<int>(vocab.size()) + 1; }
};

// Input vector layout: [query embedding | title embedding | one-hot blocks].
class Featurizer {
 public:
  Featurizer(std::shared_ptr<const TextEmbedder> embedder,
             std::vector<CategoricalBlock> blocks);

  // Vocabularies are the sorted distinct values of every context feature
  // seen in `contexts`.
  static Featurizer Build(std::shared_ptr<const TextEmbedder> embedder,
                          std::span<const Context> contexts);

  int input_dim() const { return input_dim_; }
  int embed_dim() const { return embedder_->dim(); }
  const std::vector<CategoricalBlock>& blocks() const { return blocks_; }

  // A missing query gives a zero query block; a missing categorical feature
  // gives a zero block; an unseen value lights the unknown slot.
  Eigen::VectorXd Featurize(const Context& context, const Action& action) const;

  nlohmann::json ToJson() const;
  static Featurizer FromJson(const nlohmann::json& j);

 private:
  std::shared_ptr<const TextEmbedder> embedder_;
  std::vector<CategoricalBlock> blocks_;
  int input_dim_;
};

}  // namespace slatebandit

#endif  // SLATEBANDIT_FEATURIZER_H_
