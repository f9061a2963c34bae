// Linear bandit head over neural features: windowed sufficient statistics,
// least squares restricted to the leading principal components, the
// inverse-quadratic-form bonus, and the EwS / linear Thompson samplers.

#ifndef SLATEBANDIT_LINEAR_H_
#define SLATEBANDIT_LINEAR_H_

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "slatebandit/rng.h"

namespace slatebandit {

using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VectorXld = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

// f = sum r_i phi_i, B = sum phi_i phi_i^T over the retained samples.
class SufficientStats {
 public:
  struct Sample {
    Eigen::VectorXd phi;
    double reward;
    std::int64_t ts;
  };

  explicit SufficientStats(int d,
                           std::optional<std::int64_t> window_seconds = {});

  int d() const { return d_; }
  std::size_t n() const { return buffer_.size(); }
  const Eigen::VectorXd& f() const { return f_; }
  const Eigen::MatrixXd& B() const { return B_; }
  const std::deque<Sample>& buffer() const { return buffer_; }
  std::optional<std::int64_t> window_seconds() const { return window_; }

  // Evicts samples that left the window (when one is set), then adds.
  void Absorb(const Eigen::VectorXd& phi, double reward, std::int64_t ts);
  // Drops samples with ts <= now - window. No-op without a window.
  void AdvanceClock(std::int64_t now);

 private:
  void Evict(const Sample& s);

  int d_;
  std::optional<std::int64_t> window_;
  Eigen::VectorXd f_;
  Eigen::MatrixXd B_;
  std::deque<Sample> buffer_;
};

class BanditHead {
 public:
  int d() const { return static_cast<int>(basis_.rows()); }
  int rank() const { return static_cast<int>(basis_.cols()); }
  const Eigen::VectorXd& w_hat() const { return w_hat_; }
  const MatrixXld& basis() const { return basis_; }
  const MatrixXld& l_inv() const { return l_inv_; }
  const VectorXld& w_projected() const { return w_tilde_; }
  double pcr_threshold() const { return pcr_threshold_; }
  double ridge() const { return ridge_; }
  std::size_t n_samples() const { return n_samples_; }

  // Coordinates of phi in the retained principal basis.
  VectorXld Project(const Eigen::VectorXd& phi) const;
  // w_hat^T (projected phi).
  double Predict(const Eigen::VectorXd& phi) const;
  // 1 / (phi~^T B~^-1 phi~) = ||L^-1 phi~||^-2. Zero when phi has no
  // component in the retained subspace.
  double Bonus(const Eigen::VectorXd& phi) const;

  nlohmann::json ToJson() const;
  static BanditHead FromJson(const nlohmann::json& j);

 private:
  friend BanditHead Fit(const SufficientStats& stats, double pcr_threshold);

  MatrixXld basis_;   // d x k, orthonormal columns
  MatrixXld l_inv_;   // k x k lower triangular, (L L^T)^-1 = L_inv^T L_inv
  VectorXld w_tilde_; // k
  Eigen::VectorXd w_hat_;
  double pcr_threshold_ = 0.99;
  double ridge_ = 0.0;
  std::size_t n_samples_ = 0;
  std::int64_t first_ts_ = 0;
  std::int64_t last_ts_ = 0;
};

// Eigendecomposes B, keeps the smallest leading set of components whose
// eigenvalue mass reaches pcr_threshold of the total, and solves the
// projected normal equations through a Cholesky factor. A ridge of
// 1e-8 * trace(B) / d is added only if the projected matrix does not factor.
// Throws NoDataError when B is numerically zero.
BanditHead Fit(const SufficientStats& stats, double pcr_threshold = 0.99);

// Number of components Fit keeps for the given eigenvalues (any order).
int RetainedComponents(std::span<const long double> eigenvalues,
                       double pcr_threshold);

struct ArmEstimate {
  std::string id;
  double prediction;
  double bonus;
};

ArmEstimate Estimate(const BanditHead& head, std::string id,
                     const Eigen::VectorXd& phi);

// Normalized exp(-2 b g^2) over the arms.
std::vector<double> EwsProbabilities(std::span<const double> bonus,
                                     std::span<const double> gaps);

struct EwsDecision {
  std::size_t chosen = 0;
  std::size_t best = 0;  // argmax prediction, ties to the smaller id
  std::vector<double> gaps;
  std::vector<double> probabilities;
};

EwsDecision EwsSample(std::span<const ArmEstimate> arms, Rng& rng);

// Slate order by repeated EwS draws over the arms not yet placed. When
// `first_probabilities` is non-null it receives the first draw's
// distribution.
std::vector<std::size_t> EwsRanking(std::span<const ArmEstimate> arms,
                                    Rng& rng,
                                    std::vector<double>* first_probabilities);

struct LinearCandidate {
  std::string id;
  Eigen::VectorXd phi;
};

// One draw w~ ~ N(w_hat, prior_scale * B~^-1); scores w~^T phi.
std::vector<double> ThompsonScores(const BanditHead& head,
                                   std::span<const LinearCandidate> candidates,
                                   double prior_scale, Rng& rng);

// argmax of ThompsonScores, ties to the smaller id.
std::size_t ThompsonSample(const BanditHead& head,
                           std::span<const LinearCandidate> candidates,
                           double prior_scale, Rng& rng);

}  // namespace slatebandit

#endif  // SLATEBANDIT_LINEAR_H_
