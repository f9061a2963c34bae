// Small fully connected reward regressor. Hidden layers use tanh; the output
// layer is affine and scalar. The activations of the last hidden layer are
// the neural features.

#ifndef SLATEBANDIT_NETWORK_H_
#define SLATEBANDIT_NETWORK_H_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace slatebandit {

class Mlp {
 public:
  // layer_sizes = {input, hidden_1, ..., hidden_k}, k >= 1. Glorot-uniform
  // initialization from `seed`.
  static Mlp Initialize(const std::vector<int>& layer_sizes,
                        std::uint64_t seed);

  int input_dim() const { return layer_sizes_.front(); }
  int feature_dim() const { return layer_sizes_.back(); }
  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  std::size_t num_parameters() const;

  Eigen::VectorXd Features(const Eigen::VectorXd& x) const;
  // Rows of X are inputs; rows of the result are feature vectors.
  Eigen::MatrixXd FeaturesBatch(const Eigen::MatrixXd& X) const;
  double Output(const Eigen::VectorXd& features) const;
  double Predict(const Eigen::VectorXd& x) const { return Output(Features(x)); }

  const std::vector<Eigen::MatrixXd>& hidden_weights() const { return w_; }
  const std::vector<Eigen::VectorXd>& hidden_biases() const { return b_; }
  const Eigen::VectorXd& output_weights() const { return w_out_; }
  double output_bias() const { return b_out_; }

  // Parameters in a fixed order: per hidden layer W (row-major) then b, then
  // output weights and output bias.
  std::vector<double> Flatten() const;
  void Unflatten(std::span<const double> params);

  nlohmann::json ToJson() const;
  static Mlp FromJson(const nlohmann::json& j);

  friend bool operator==(const Mlp& a, const Mlp& b);

 private:
  std::vector<int> layer_sizes_;
  std::vector<Eigen::MatrixXd> w_;  // out x in
  std::vector<Eigen::VectorXd> b_;
  Eigen::VectorXd w_out_;
  double b_out_ = 0.0;
};

// Mean squared error of the network over the batch (rows of X), evaluated in
// scalar type T. When `grad` is non-null it receives dLoss/dparams in
// Flatten() order.
template <typename T>
T SquaredErrorLoss(const Mlp& net,
                   const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& X,
                   const Eigen::Matrix<T, Eigen::Dynamic, 1>& y,
                   std::vector<T>* grad);

extern template double SquaredErrorLoss<double>(const Mlp&,
                                                const Eigen::MatrixXd&,
                                                const Eigen::VectorXd&,
                                                std::vector<double>*);
extern template long double SquaredErrorLoss<long double>(
    const Mlp&,
    const Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>&,
    const Eigen::Matrix<long double, Eigen::Dynamic, 1>&,
    std::vector<long double>*);

}  // namespace slatebandit

#endif  // SLATEBANDIT_NETWORK_H_
