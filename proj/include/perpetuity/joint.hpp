#pragma once

// The law of the pair (A, B) driving X = A X' + B.

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "perpetuity/distribution.hpp"
#include "perpetuity/rng.hpp"
#include "perpetuity/tribool.hpp"

namespace perp {

struct Independent {
  bool operator==(const Independent&) const = default;
};

/// A = zeta1 * 1{B > q} + zeta2 * 1{B <= q}.
struct ThresholdDependent {
  double zeta1;
  double zeta2;
  double q;
  bool operator==(const ThresholdDependent&) const = default;
};

using Dependence = std::variant<Independent, ThresholdDependent>;

/// Validated joint law. For threshold dependence the A marginal is derived
/// from B (a two-atom law) and is never sampled on its own.
class JointInput {
 public:
  static JointInput independent(Distribution a, Distribution b);
  static JointInput threshold(Distribution b, double zeta1, double zeta2, double q);

  const Distribution& A() const { return a_; }
  const Distribution& B() const { return b_; }
  const Dependence& dependence() const { return dep_; }
  bool is_independent() const { return std::holds_alternative<Independent>(dep_); }
  /// True when A is the derived marginal of a threshold-dependent pair.
  bool a_is_derived() const { return !is_independent(); }

 private:
  JointInput(Distribution a, Distribution b, Dependence dep) : a_(std::move(a)), b_(std::move(b)), dep_(dep) {}
  Distribution a_;
  Distribution b_;
  Dependence dep_;
};

/// One draw of (A, B). Threshold dependence draws B first and sets A from it.
std::pair<double, double> sample_pair(const JointInput& joint, Rng& rng);

/// Hypothesis flags read by the criteria and asymptotics modules; all derived
/// from the law descriptions without sampling. Probabilities are nullopt when
/// not available in closed form.
struct StructuralFlags {
  std::optional<double> p_A_eq_1;
  std::optional<double> p_A_eq_neg1;
  std::optional<double> p_A_in_0_1;  // P{0 < A < 1}
  std::optional<double> p_A_pos;
  std::optional<double> p_A_neg;
  Tri A_bounded_by_1;  // P{|A| <= 1} = 1
  Tri A_positive;      // P{A > 0} = 1
  Tri A_at_most_1;     // P{A <= 1} = 1
  Tri B_nonneg;
  Tri B_nonpos;
  MgfDomain mgf_B_domain;
  Tri log_moment_B_minus_finite;
};

StructuralFlags structural_flags(const JointInput& joint);

struct NondegeneracyReport {
  bool ok = true;
  /// Name of the failed condition: "A_nonzero", "B_not_zero" or
  /// "no_constant_fixed_point"; empty when ok.
  std::string failed;
  /// The constant c with B + A c = c a.s., when that is the failure.
  std::optional<double> c;
  std::string note;
};

NondegeneracyReport validate_nondegeneracy(const JointInput& joint);

/// E e^{sB} 1{A = v} computed symbolically; nullopt when unavailable.
std::optional<double> mgf_B_on_A_atom(const JointInput& joint, double s, double v);

std::string describe(const JointInput& joint);

}  // namespace perp
