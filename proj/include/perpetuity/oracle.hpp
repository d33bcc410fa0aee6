#pragma once

// Reference perpetuities whose law is known in closed form, used as ground
// truth for simulation and asymptotics.

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "perpetuity/asymptotics.hpp"
#include "perpetuity/joint.hpp"
#include "perpetuity/simulate.hpp"

namespace perp {

struct GammaExact {
  double shape;
  double rate;
};
/// Y - Z with Y ~ Gamma(shape1, rate1) and Z ~ Gamma(shape2, rate2) independent.
struct DifferenceOfGammas {
  double shape1;
  double rate1;
  double shape2;
  double rate2;
};
/// -log Y + B with Y ~ Beta(b, lambda) independent of B.
struct ShiftedNegLogBeta {
  double b;
  double lambda;
  Distribution B;
};
struct ExplicitSurvival {
  std::function<double(double)> survival;
};

using ExactLaw = std::variant<GammaExact, DifferenceOfGammas, ShiftedNegLogBeta, ExplicitSurvival>;

struct ReferenceCase {
  std::string id;
  JointInput joint;
  ExactLaw exact_X_law;
  std::string description;
};

/// E1 Beta(2,1)/Exp(1), E2 constant A = 0.5, E3 difference of gammas,
/// E4 two-sided exponential mixture, E5 -log Beta plus B.
std::vector<ReferenceCase> list_cases();
std::optional<ReferenceCase> find_case(const std::string& id);

/// P{X > x} under the exact law. Convolutions are evaluated by quadrature.
double reference_survival(const ReferenceCase& c, double x);

/// Tail asymptote of the case computed through the asymptotics module.
TailPrediction predicted_tail(const ReferenceCase& c);

struct TailAnchor {
  double level;  // nominal upper-tail probability used to place x
  double x;
  double p_hat;
  double exact;
  double ratio;
  std::size_t exceedances;
  bool assessed;
  bool pass;
};

struct ComparisonReport {
  std::string case_id;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double ks = 0.0;
  double ks_threshold = 0.0;
  std::vector<TailAnchor> anchors;
  TruncationReport truncation;
  bool low_n = false;
  bool pass = false;
};

/// Anchors are judged only with at least this many exceedances, so the
/// relative binomial error is about 3% against the 10% band.
inline constexpr std::size_t kMinExceedances = 1000;
inline constexpr std::size_t kLowN = 10000;

/// Simulates the case and compares with the exact law: KS distance below
/// 4/sqrt(N) and tail ratios within [0.9, 1.1] at upper quantiles 0.5, 0.1,
/// 1e-2, 1e-3, 1e-4 wherever p_hat >= 1e-4 with enough exceedances.
ComparisonReport compare_empirical(const ReferenceCase& c, const SimConfig& cfg);

nlohmann::json to_json(const ComparisonReport& r);
void write_table(std::ostream& os, const ComparisonReport& r);

}  // namespace perp
