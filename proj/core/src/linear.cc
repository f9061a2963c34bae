#include "slatebandit/linear.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "slatebandit/types.h"

namespace slatebandit {

namespace {

std::string LongDoubleToString(long double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.21Lg", x);
  return buf;
}

long double LongDoubleFromJson(const nlohmann::json& j) {
  if (j.is_string()) return std::strtold(j.get<std::string>().c_str(), nullptr);
  return static_cast<long double>(j.get<double>());
}

nlohmann::json MatrixToJson(const MatrixXld& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row.push_back(LongDoubleToString(m(r, c)));
    }
    rows.push_back(std::move(row));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

MatrixXld MatrixFromJson(const nlohmann::json& j) {
  MatrixXld m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
  const auto& data = j.at("data");
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = LongDoubleFromJson(data.at(r).at(c));
    }
  }
  return m;
}

std::size_t ArgmaxPrediction(std::span<const ArmEstimate> arms,
                             std::span<const std::size_t> live) {
  std::size_t best = live.front();
  for (std::size_t i : live) {
    const ArmEstimate& a = arms[i];
    const ArmEstimate& b = arms[best];
    if (a.prediction > b.prediction ||
        (a.prediction == b.prediction && a.id < b.id)) {
      best = i;
    }
  }
  return best;
}

std::size_t SampleIndex(std::span<const double> probabilities, Rng& rng) {
  const double u = SampleUniform(rng);
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i] <= 0.0) continue;
    cum += probabilities[i];
    last_positive = i;
    if (u < cum) return i;
  }
  return last_positive;
}

}  // namespace

SufficientStats::SufficientStats(int d, std::optional<std::int64_t> window_seconds)
    : d_(d),
      window_(window_seconds),
      f_(Eigen::VectorXd::Zero(d)),
      B_(Eigen::MatrixXd::Zero(d, d)) {
  if (d < 1) throw ValidationError("sufficient stats: d must be >= 1");
  if (window_ && *window_ <= 0) {
    throw ValidationError("sufficient stats: window must be positive");
  }
}

void SufficientStats::Absorb(const Eigen::VectorXd& phi, double reward,
                             std::int64_t ts) {
  if (phi.size() != d_) throw ValidationError("absorb: phi has wrong dimension");
  if (!phi.allFinite() || !std::isfinite(reward)) {
    throw ValidationError("absorb: non-finite input");
  }
  AdvanceClock(ts);
  f_ += reward * phi;
  B_.noalias() += phi * phi.transpose();
  buffer_.push_back({phi, reward, ts});
}

void SufficientStats::AdvanceClock(std::int64_t now) {
  if (!window_) return;
  const std::int64_t cutoff = now - *window_;
  bool evicted = false;
  while (!buffer_.empty() && buffer_.front().ts <= cutoff) {
    Evict(buffer_.front());
    buffer_.pop_front();
    evicted = true;
  }
  if (evicted && buffer_.empty()) {
    f_.setZero();
    B_.setZero();
  }
}

void SufficientStats::Evict(const Sample& s) {
  f_ -= s.reward * s.phi;
  B_.noalias() -= s.phi * s.phi.transpose();
}

int RetainedComponents(std::span<const long double> eigenvalues,
                       double pcr_threshold) {
  std::vector<long double> sorted(eigenvalues.begin(), eigenvalues.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  if (sorted.empty() || !(sorted.front() > 0)) return 0;
  long double total = 0;
  for (long double v : sorted) total += std::max<long double>(v, 0);
  // Directions below this relative size are numerically null.
  const long double floor_value = sorted.front() * 1e-13L;
  int positive = 0;
  for (long double v : sorted) {
    if (v > floor_value) ++positive;
  }
  const long double target = static_cast<long double>(pcr_threshold) * total;
  long double cum = 0;
  for (int k = 0; k < positive; ++k) {
    cum += sorted[k];
    if (cum >= target * (1 - 1e-15L)) return k + 1;
  }
  return positive;
}

BanditHead Fit(const SufficientStats& stats, double pcr_threshold) {
  if (!(pcr_threshold > 0.0 && pcr_threshold <= 1.0)) {
    throw ValidationError("fit: pcr_threshold must lie in (0, 1]");
  }
  const int d = stats.d();
  MatrixXld B = stats.B().cast<long double>();
  B = (B + B.transpose()) / 2;
  const VectorXld f = stats.f().cast<long double>();
  if (stats.n() == 0 || !(B.trace() > 0)) throw NoDataError("no data");

  Eigen::SelfAdjointEigenSolver<MatrixXld> eig(B);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("fit: eigendecomposition failed");
  }
  const VectorXld& values = eig.eigenvalues();  // ascending
  const int k = RetainedComponents(
      std::span<const long double>(values.data(), values.size()), pcr_threshold);
  if (k == 0) throw NoDataError("no data");

  BanditHead head;
  head.basis_.resize(d, k);
  for (int i = 0; i < k; ++i) head.basis_.col(i) = eig.eigenvectors().col(d - 1 - i);
  MatrixXld projected = head.basis_.transpose() * B * head.basis_;
  projected = (projected + projected.transpose()) / 2;
  const VectorXld f_proj = head.basis_.transpose() * f;

  Eigen::LLT<MatrixXld> llt(projected);
  bool usable = llt.info() == Eigen::Success;
  if (usable) {
    const MatrixXld L = llt.matrixL();
    usable = L.diagonal().minCoeff() > 0;
  }
  if (!usable) {
    head.ridge_ = 1e-8 * static_cast<double>(B.trace()) / d;
    projected += static_cast<long double>(head.ridge_) * MatrixXld::Identity(k, k);
    llt.compute(projected);
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error("fit: Cholesky factorization failed");
    }
  }
  const MatrixXld L = llt.matrixL();
  head.l_inv_ = L.triangularView<Eigen::Lower>().solve(MatrixXld::Identity(k, k));
  head.w_tilde_ = head.l_inv_.transpose() * (head.l_inv_ * f_proj);
  head.w_hat_ = (head.basis_ * head.w_tilde_).cast<double>();
  head.pcr_threshold_ = pcr_threshold;
  head.n_samples_ = stats.n();
  head.first_ts_ = stats.buffer().front().ts;
  head.last_ts_ = stats.buffer().back().ts;
  return head;
}

VectorXld BanditHead::Project(const Eigen::VectorXd& phi) const {
  if (phi.size() != d()) throw ValidationError("head: phi has wrong dimension");
  return basis_.transpose() * phi.cast<long double>();
}

double BanditHead::Predict(const Eigen::VectorXd& phi) const {
  return static_cast<double>(w_tilde_.dot(Project(phi)));
}

double BanditHead::Bonus(const Eigen::VectorXd& phi) const {
  const VectorXld p = Project(phi);
  const long double phi_norm = phi.cast<long double>().norm();
  if (phi_norm == 0 || p.norm() <= phi_norm * 1e-12L) return 0.0;
  const VectorXld z = l_inv_ * p;
  const long double quad = z.squaredNorm();
  if (!(quad > 0)) return 0.0;
  return static_cast<double>(1 / quad);
}

nlohmann::json BanditHead::ToJson() const {
  nlohmann::json w_proj = nlohmann::json::array();
  for (Eigen::Index i = 0; i < w_tilde_.size(); ++i) {
    w_proj.push_back(LongDoubleToString(w_tilde_[i]));
  }
  return {{"format", "slatebandit.bandit_head/1"},
          {"d", d()},
          {"rank", rank()},
          {"pcr_threshold", pcr_threshold_},
          {"ridge", ridge_},
          {"basis", MatrixToJson(basis_)},
          {"l_inv", MatrixToJson(l_inv_)},
          {"w_projected", w_proj},
          {"w_hat", std::vector<double>(w_hat_.data(), w_hat_.data() + w_hat_.size())},
          {"window", {{"n_samples", n_samples_},
                      {"first_ts", first_ts_},
                      {"last_ts", last_ts_}}}};
}

BanditHead BanditHead::FromJson(const nlohmann::json& j) {
  if (j.value("format", std::string()) != "slatebandit.bandit_head/1") {
    throw ValidationError("bandit head: unsupported format tag");
  }
  BanditHead head;
  head.basis_ = MatrixFromJson(j.at("basis"));
  head.l_inv_ = MatrixFromJson(j.at("l_inv"));
  const auto& w_proj = j.at("w_projected");
  head.w_tilde_.resize(static_cast<Eigen::Index>(w_proj.size()));
  for (std::size_t i = 0; i < w_proj.size(); ++i) {
    head.w_tilde_[static_cast<Eigen::Index>(i)] = LongDoubleFromJson(w_proj[i]);
  }
  const auto w_hat = j.at("w_hat").get<std::vector<double>>();
  head.w_hat_ = Eigen::Map<const Eigen::VectorXd>(
      w_hat.data(), static_cast<Eigen::Index>(w_hat.size()));
  head.pcr_threshold_ = j.at("pcr_threshold").get<double>();
  head.ridge_ = j.value("ridge", 0.0);
  const auto& window = j.at("window");
  head.n_samples_ = window.at("n_samples").get<std::size_t>();
  head.first_ts_ = window.at("first_ts").get<std::int64_t>();
  head.last_ts_ = window.at("last_ts").get<std::int64_t>();
  if (head.basis_.cols() != head.l_inv_.rows() ||
      head.w_tilde_.size() != head.basis_.cols() ||
      head.w_hat_.size() != head.basis_.rows()) {
    throw ValidationError("bandit head: inconsistent dimensions");
  }
  return head;
}

ArmEstimate Estimate(const BanditHead& head, std::string id,
                     const Eigen::VectorXd& phi) {
  return {std::move(id), head.Predict(phi), head.Bonus(phi)};
}

std::vector<double> EwsProbabilities(std::span<const double> bonus,
                                     std::span<const double> gaps) {
  if (bonus.size() != gaps.size() || bonus.empty()) {
    throw ValidationError("ews: bonus and gaps must be non-empty and parallel");
  }
  std::vector<double> w(bonus.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (gaps[i] < 0.0) throw ValidationError("ews: gaps must be non-negative");
    w[i] = gaps[i] == 0.0 ? 1.0 : std::exp(-2.0 * bonus[i] * gaps[i] * gaps[i]);
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

EwsDecision EwsSample(std::span<const ArmEstimate> arms, Rng& rng) {
  if (arms.empty()) throw ValidationError("ews: need at least one candidate");
  std::vector<std::size_t> live(arms.size());
  std::iota(live.begin(), live.end(), 0);
  EwsDecision out;
  out.best = ArgmaxPrediction(arms, live);
  std::vector<double> bonus(arms.size());
  out.gaps.resize(arms.size());
  for (std::size_t i = 0; i < arms.size(); ++i) {
    bonus[i] = arms[i].bonus;
    out.gaps[i] = i == out.best
                      ? 0.0
                      : std::max(0.0, arms[out.best].prediction - arms[i].prediction);
  }
  out.probabilities = EwsProbabilities(bonus, out.gaps);
  out.chosen = SampleIndex(out.probabilities, rng);
  return out;
}

std::vector<std::size_t> EwsRanking(std::span<const ArmEstimate> arms, Rng& rng,
                                    std::vector<double>* first_probabilities) {
  std::vector<std::size_t> order;
  std::vector<std::size_t> live(arms.size());
  std::iota(live.begin(), live.end(), 0);
  while (!live.empty()) {
    std::vector<ArmEstimate> sub;
    sub.reserve(live.size());
    for (std::size_t i : live) sub.push_back(arms[i]);
    const EwsDecision step = EwsSample(sub, rng);
    if (order.empty() && first_probabilities != nullptr) {
      *first_probabilities = step.probabilities;
    }
    order.push_back(live[step.chosen]);
    live.erase(live.begin() + static_cast<std::ptrdiff_t>(step.chosen));
  }
  return order;
}

std::vector<double> ThompsonScores(const BanditHead& head,
                                   std::span<const LinearCandidate> candidates,
                                   double prior_scale, Rng& rng) {
  if (!(prior_scale > 0.0)) {
    throw ValidationError("thompson: prior_scale must be positive");
  }
  const int k = head.rank();
  VectorXld z(k);
  for (int i = 0; i < k; ++i) z[i] = SampleStandardNormal(rng);
  const VectorXld w = head.w_projected() +
                      std::sqrt(static_cast<long double>(prior_scale)) *
                          (head.l_inv().transpose() * z);
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const LinearCandidate& c : candidates) {
    scores.push_back(static_cast<double>(w.dot(head.Project(c.phi))));
  }
  return scores;
}

std::size_t ThompsonSample(const BanditHead& head,
                           std::span<const LinearCandidate> candidates,
                           double prior_scale, Rng& rng) {
  if (candidates.empty()) {
    throw ValidationError("thompson: need at least one candidate");
  }
  const std::vector<double> scores =
      ThompsonScores(head, candidates, prior_scale, rng);
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best] ||
        (scores[i] == scores[best] && candidates[i].id < candidates[best].id)) {
      best = i;
    }
  }
  return best;
}

}  // namespace slatebandit
