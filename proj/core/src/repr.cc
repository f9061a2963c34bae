#include "slatebandit/repr.h"

#include <algorithm>
#include <numeric>

#include "slatebandit/rng.h"

namespace slatebandit {

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("train: learning_rate must be positive");
  if (epochs < 1) throw ValidationError("train: epochs must be positive");
  if (batch_size < 1) throw ValidationError("train: batch_size must be positive");
  if (embed_dim < 1) throw ValidationError("train: embed_dim must be positive");
  if (hidden.empty()) throw ValidationError("train: need at least one hidden layer");
  for (int h : hidden) {
    if (h < 1) throw ValidationError("train: hidden sizes must be positive");
  }
}

FeatureMap::FeatureMap(Featurizer featurizer, Mlp net, std::uint64_t seed)
    : featurizer_(std::move(featurizer)), net_(std::move(net)), seed_(seed) {
  if (featurizer_.input_dim() != net_.input_dim()) {
    throw ValidationError("feature map: featurizer and network disagree on input size");
  }
}

Eigen::VectorXd FeatureMap::Phi(const Context& context,
                                const Action& action) const {
  return net_.Features(featurizer_.Featurize(context, action));
}

double FeatureMap::Predict(const Context& context, const Action& action) const {
  return net_.Output(Phi(context, action));
}

nlohmann::json FeatureMap::ToJson() const {
  return {{"format", "slatebandit.feature_map/1"},
          {"d", d()},
          {"seed", seed_},
          {"featurizer", featurizer_.ToJson()},
          {"network", net_.ToJson()}};
}

FeatureMap FeatureMap::FromJson(const nlohmann::json& j) {
  if (j.value("format", std::string()) != "slatebandit.feature_map/1") {
    throw ValidationError("feature map: unsupported format tag");
  }
  return FeatureMap(Featurizer::FromJson(j.at("featurizer")),
                    Mlp::FromJson(j.at("network")),
                    j.at("seed").get<std::uint64_t>());
}

std::vector<LabeledPair> LabeledPairs(std::span<const LoggedEvent> events,
                                      const RewardSpec& spec) {
  std::vector<LabeledPair> pairs;
  for (const LoggedEvent& e : events) {
    const Action* clicked = e.ClickedAction();
    if (clicked == nullptr) continue;
    const std::optional<double> r = RewardOf(e.feedback, spec);
    if (!r) continue;
    pairs.push_back({e.context, *clicked, *r});
  }
  return pairs;
}

TrainResult TrainOnPairs(std::span<const LabeledPair> pairs,
                         Featurizer featurizer, const TrainConfig& cfg) {
  cfg.Validate();
  if (pairs.empty()) throw NoDataError("no labeled events");
  const auto n = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd X(n, featurizer.input_dim());
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X.row(i) = featurizer.Featurize(pairs[i].context, pairs[i].action);
    y[i] = pairs[i].reward;
  }

  std::vector<int> sizes = {featurizer.input_dim()};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  Mlp net = Mlp::Initialize(sizes, SeedFor(cfg.seed, 1));

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> params = net.Flatten();
  std::vector<double> grad;
  std::vector<double> losses;
  const Eigen::Index batch = std::min<Eigen::Index>(cfg.batch_size, n);
  Eigen::MatrixXd xb;
  Eigen::VectorXd yb;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(SeedFor(cfg.seed, 2, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index m = std::min(batch, n - start);
      xb.resize(m, X.cols());
      yb.resize(m);
      for (Eigen::Index i = 0; i < m; ++i) {
        xb.row(i) = X.row(order[start + i]);
        yb[i] = y[order[start + i]];
      }
      SquaredErrorLoss<double>(net, xb, yb, &grad);
      for (std::size_t k = 0; k < params.size(); ++k) {
        params[k] -= cfg.learning_rate * grad[k];
      }
      net.Unflatten(params);
    }
    losses.push_back(SquaredErrorLoss<double>(net, X, y, nullptr));
  }
  return {FeatureMap(std::move(featurizer), std::move(net), cfg.seed),
          std::move(losses)};
}

TrainResult Train(std::span<const LoggedEvent> events, const RewardSpec& spec,
                  const TrainConfig& cfg) {
  cfg.Validate();
  std::vector<LabeledPair> pairs = LabeledPairs(events, spec);
  if (pairs.empty()) throw NoDataError("no labeled events");
  std::vector<Context> contexts;
  contexts.reserve(pairs.size());
  for (const LabeledPair& p : pairs) contexts.push_back(p.context);
  auto embedder = std::make_shared<HashingEmbedder>(
      cfg.embed_dim, SeedFor(cfg.seed, 3), 2);
  return TrainOnPairs(pairs, Featurizer::Build(embedder, contexts), cfg);
}

}  // namespace slatebandit
