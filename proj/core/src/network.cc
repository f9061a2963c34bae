#include "slatebandit/network.h"

#include <cmath>
#include <random>

#include "slatebandit/rng.h"
#include "slatebandit/types.h"

namespace slatebandit {

namespace {

template <typename T>
using MatrixT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using VectorT = Eigen::Matrix<T, Eigen::Dynamic, 1>;

}  // namespace

Mlp Mlp::Initialize(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2) {
    throw ValidationError("network: need an input and at least one hidden layer");
  }
  for (int n : layer_sizes) {
    if (n < 1) throw ValidationError("network: layer sizes must be positive");
  }
  Mlp net;
  net.layer_sizes_ = layer_sizes;
  Rng rng(seed);
  auto glorot = [&rng](int fan_in, int fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    return std::uniform_real_distribution<double>(-limit, limit);
  };
  for (std::size_t l = 1; l < layer_sizes.size(); ++l) {
    const int in = layer_sizes[l - 1];
    const int out = layer_sizes[l];
    auto dist = glorot(in, out);
    Eigen::MatrixXd w(out, in);
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) w(r, c) = dist(rng);
    }
    net.w_.push_back(std::move(w));
    net.b_.push_back(Eigen::VectorXd::Zero(out));
  }
  const int d = layer_sizes.back();
  auto dist = glorot(d, 1);
  net.w_out_.resize(d);
  for (int i = 0; i < d; ++i) net.w_out_[i] = dist(rng);
  net.b_out_ = 0.0;
  return net;
}

std::size_t Mlp::num_parameters() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < w_.size(); ++l) n += w_[l].size() + b_[l].size();
  return n + w_out_.size() + 1;
}

Eigen::VectorXd Mlp::Features(const Eigen::VectorXd& x) const {
  if (x.size() != input_dim()) {
    throw ValidationError("network: input has wrong dimension");
  }
  Eigen::VectorXd h = x;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    h = (w_[l] * h + b_[l]).array().tanh().matrix();
  }
  return h;
}

Eigen::MatrixXd Mlp::FeaturesBatch(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd h = X;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    Eigen::MatrixXd z = h * w_[l].transpose();
    z.rowwise() += b_[l].transpose();
    h = z.array().tanh().matrix();
  }
  return h;
}

double Mlp::Output(const Eigen::VectorXd& features) const {
  return w_out_.dot(features) + b_out_;
}

std::vector<double> Mlp::Flatten() const {
  std::vector<double> params;
  params.reserve(num_parameters());
  for (std::size_t l = 0; l < w_.size(); ++l) {
    for (Eigen::Index r = 0; r < w_[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < w_[l].cols(); ++c) {
        params.push_back(w_[l](r, c));
      }
    }
    for (Eigen::Index i = 0; i < b_[l].size(); ++i) params.push_back(b_[l][i]);
  }
  for (Eigen::Index i = 0; i < w_out_.size(); ++i) params.push_back(w_out_[i]);
  params.push_back(b_out_);
  return params;
}

void Mlp::Unflatten(std::span<const double> params) {
  if (params.size() != num_parameters()) {
    throw ValidationError("network: parameter vector has wrong length");
  }
  std::size_t k = 0;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    for (Eigen::Index r = 0; r < w_[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < w_[l].cols(); ++c) w_[l](r, c) = params[k++];
    }
    for (Eigen::Index i = 0; i < b_[l].size(); ++i) b_[l][i] = params[k++];
  }
  for (Eigen::Index i = 0; i < w_out_.size(); ++i) w_out_[i] = params[k++];
  b_out_ = params[k++];
}

nlohmann::json Mlp::ToJson() const {
  return {{"layer_sizes", layer_sizes_}, {"parameters", Flatten()}};
}

Mlp Mlp::FromJson(const nlohmann::json& j) {
  Mlp net = Initialize(j.at("layer_sizes").get<std::vector<int>>(), 0);
  net.Unflatten(j.at("parameters").get<std::vector<double>>());
  return net;
}

bool operator==(const Mlp& a, const Mlp& b) {
  return a.layer_sizes_ == b.layer_sizes_ && a.Flatten() == b.Flatten();
}

template <typename T>
T SquaredErrorLoss(const Mlp& net, const MatrixT<T>& X, const VectorT<T>& y,
                   std::vector<T>* grad) {
  const Eigen::Index n = X.rows();
  if (n == 0 || y.size() != n || X.cols() != net.input_dim()) {
    throw ValidationError("squared error: batch shape mismatch");
  }
  const auto& ws = net.hidden_weights();
  const auto& bs = net.hidden_biases();
  const std::size_t layers = ws.size();

  std::vector<MatrixT<T>> act;  // act[0] = X, act[l + 1] = tanh(z_l)
  act.reserve(layers + 1);
  act.push_back(X);
  for (std::size_t l = 0; l < layers; ++l) {
    MatrixT<T> z = act.back() * ws[l].template cast<T>().transpose();
    z.rowwise() += bs[l].template cast<T>().transpose();
    act.push_back(z.array().tanh().matrix());
  }
  const VectorT<T> w_out = net.output_weights().template cast<T>();
  VectorT<T> pred = act.back() * w_out;
  pred.array() += static_cast<T>(net.output_bias());
  const VectorT<T> resid = pred - y;
  const T loss = resid.squaredNorm() / static_cast<T>(n);
  if (grad == nullptr) return loss;

  // dLoss/dpred
  VectorT<T> dpred = resid * (static_cast<T>(2) / static_cast<T>(n));
  std::vector<MatrixT<T>> dw(layers);
  std::vector<VectorT<T>> db(layers);
  const VectorT<T> dw_out = act.back().transpose() * dpred;
  const T db_out = dpred.sum();
  MatrixT<T> dh = dpred * w_out.transpose();  // n x d
  for (std::size_t l = layers; l-- > 0;) {
    const MatrixT<T>& h = act[l + 1];
    MatrixT<T> dz =
        (dh.array() * (static_cast<T>(1) - h.array().square())).matrix();
    dw[l] = dz.transpose() * act[l];
    db[l] = dz.colwise().sum().transpose();
    if (l > 0) dh = dz * ws[l].template cast<T>();
  }

  grad->clear();
  grad->reserve(net.num_parameters());
  for (std::size_t l = 0; l < layers; ++l) {
    for (Eigen::Index r = 0; r < dw[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < dw[l].cols(); ++c) grad->push_back(dw[l](r, c));
    }
    for (Eigen::Index i = 0; i < db[l].size(); ++i) grad->push_back(db[l][i]);
  }
  for (Eigen::Index i = 0; i < dw_out.size(); ++i) grad->push_back(dw_out[i]);
  grad->push_back(db_out);
  return loss;
}

template double SquaredErrorLoss<double>(const Mlp&, const Eigen::MatrixXd&,
                                         const Eigen::VectorXd&,
                                         std::vector<double>*);
template long double SquaredErrorLoss<long double>(
    const Mlp&, const MatrixT<long double>&, const VectorT<long double>&,
    std::vector<long double>*);

}  // namespace slatebandit
