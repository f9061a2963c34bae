#ifndef SLATEBANDIT_TESTS_TEST_UTIL_H_
#define SLATEBANDIT_TESTS_TEST_UTIL_H_

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "slatebandit/types.h"

namespace slatebandit::testing {

inline Action Content(const std::string& id) { return Action{id, "title " + id, false, {}}; }

inline Context Ctx(const std::string& id) { return Context{id, {}, std::nullopt}; }

// Builds a slate from ids; "_" stands for the null item. Scores descend.
inline Slate MakeSlate(const std::vector<std::string>& ids) {
  Slate s;
  double score = 1.0;
  for (const std::string& id : ids) {
    s.items.push_back(id == "_" ? NullAction() : Content(id));
    s.scores.push_back(score);
    score -= 0.1;
  }
  return s;
}

inline LoggedEvent MakeEvent(const std::string& ctx, const std::vector<std::string>& ids,
                             std::optional<int> click, Survey survey = Survey::kSkipped,
                             std::int64_t ts = 0) {
  LoggedEvent e;
  e.timestamp = ts;
  e.context = Ctx(ctx);
  e.slate = MakeSlate(ids);
  e.feedback.click = click;
  e.feedback.survey = survey;
  e.policy_tag = "test";
  return e;
}

// P(X > Y) for X ~ Beta(a1, b1), Y ~ Beta(a2, b2): integral of f_X * F_Y
// by adaptive Gauss-Kronrod quadrature.
inline double BetaGreaterQuadrature(double a1, double b1, double a2, double b2) {
  const boost::math::beta_distribution<double> x(a1, b1);
  auto integrand = [&](double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return boost::math::pdf(x, t) * boost::math::ibeta(a2, b2, t);
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, 1.0,
                                                                       15, 1e-12);
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path ScratchDir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("slatebandit_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace slatebandit::testing

#endif  // SLATEBANDIT_TESTS_TEST_UTIL_H_
