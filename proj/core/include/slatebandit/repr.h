// The representation function: a reward regressor over featurized
// (context, action) pairs whose last hidden layer provides the d-dimensional
// features consumed by the linear bandit head.

#ifndef SLATEBANDIT_REPR_H_
#define SLATEBANDIT_REPR_H_

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "slatebandit/featurizer.h"
#include "slatebandit/network.h"
#include "slatebandit/reward.h"
#include "slatebandit/types.h"

namespace slatebandit {

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 40;
  int batch_size = 32;
  std::vector<int> hidden = {128, 64};
  std::uint64_t seed = 7;
  int embed_dim = 32;

  void Validate() const;
};

class FeatureMap {
 public:
  FeatureMap(Featurizer featurizer, Mlp net, std::uint64_t seed);

  int d() const { return net_.feature_dim(); }
  const Featurizer& featurizer() const { return featurizer_; }
  const Mlp& net() const { return net_; }
  std::uint64_t seed() const { return seed_; }

  // Forward pass through every layer but the output layer.
  Eigen::VectorXd Phi(const Context& context, const Action& action) const;
  // Output layer applied to Phi.
  double Predict(const Context& context, const Action& action) const;

  nlohmann::json ToJson() const;
  static FeatureMap FromJson(const nlohmann::json& j);

 private:
  Featurizer featurizer_;
  Mlp net_;
  std::uint64_t seed_;
};

struct LabeledPair {
  Context context;
  Action action;
  double reward;
};

// Clicked-action pairs of events that carry a reward under `spec`.
std::vector<LabeledPair> LabeledPairs(std::span<const LoggedEvent> events,
                                      const RewardSpec& spec);

struct TrainResult {
  FeatureMap map;
  // Training-set MSE after each epoch.
  std::vector<double> epoch_losses;
};

// Mini-batch gradient descent on squared error. Throws NoDataError when no
// event carries a reward.
TrainResult Train(std::span<const LoggedEvent> events, const RewardSpec& spec,
                  const TrainConfig& cfg);

// Same, over already-extracted pairs and a fixed featurizer.
TrainResult TrainOnPairs(std::span<const LabeledPair> pairs,
                         Featurizer featurizer, const TrainConfig& cfg);

}  // namespace slatebandit

#endif  // SLATEBANDIT_REPR_H_
