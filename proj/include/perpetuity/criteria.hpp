#pragma once

// Symbolic finiteness verdicts for E e^{rX}, E e^{r|X|} and E psi(rA),
// psi(s) = E e^{sX}. A verdict is Finite or Infinite only when every
// hypothesis of the applied criterion is established from the law
// descriptions; anything else is Inconclusive.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "perpetuity/joint.hpp"
#include "perpetuity/tribool.hpp"

namespace perp {

enum class Verdict { Finite, Infinite, Inconclusive };
std::string to_string(Verdict v);

// Identifiers for theorem_used.
inline constexpr const char* kPositiveA = "positive_A";            // E e^{rX}, A > 0
inline constexpr const char* kMixedSignA = "mixed_sign_A";         // E e^{rX}, P{A<0} > 0, P{A=-1} = 0
inline constexpr const char* kAbsExpMoment = "abs_exp_moment";     // E e^{r|X|}
inline constexpr const char* kExpectedPsi = "expected_psi";        // E psi(rA)
inline constexpr const char* kNoTheorem = "none";

struct Witness {
  std::string name;
  double value;
};

struct ConditionEntry {
  std::string name;
  Tri status;
  std::vector<Witness> witnesses;
  std::string note;
};

struct MomentVerdict {
  Verdict verdict = Verdict::Inconclusive;
  std::string theorem_used;
  std::string quantity;
  double r = 0.0;
  std::vector<ConditionEntry> condition_trace;
  std::string note;
};

nlohmann::json to_json(const ConditionEntry& c);
nlohmann::json to_json(const MomentVerdict& v);
/// Number as JSON; infinities and NaN become the strings "inf", "-inf", "nan".
nlohmann::json json_number(double x);

/// Raised when a criterion is called outside its hypotheses.
class DispatchError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Finiteness of E phi(sA), phi(s) = E e^{sB}, with A and B independent. The
/// value is set when A is purely atomic and every term is closed form.
struct ScaledMgfExpectation {
  Tri finite = Tri::Unknown;
  std::optional<double> value;
  std::string note;
};
ScaledMgfExpectation expected_mgf_of_scaled(const Distribution& A, const Distribution& B, double r);
/// Same for E phi(r A_1 A_2) with A_1, A_2 independent copies of A.
ScaledMgfExpectation expected_mgf_of_product(const Distribution& A, const Distribution& B, double r);

/// True when B is unbounded to the right and A > 0 a.s.; False when B <= 0
/// and A > 0 a.s. (then X <= 0); Unknown otherwise.
Tri support_unbounded_right(const JointInput& joint);

/// E e^{rX} for A > 0 a.s.
MomentVerdict exp_moment_criterion_positiveA(const JointInput& joint, double r, Tri support_unbounded_right);

/// E e^{rX} for P{A<0} > 0 and P{A=-1} = 0.
MomentVerdict exp_moment_criterion_mixedA(const JointInput& joint, double r);

/// E e^{r|X|} for P{|A|=1} = 0 or P{|A|=1} in (0,1).
MomentVerdict two_sided_criterion(const JointInput& joint, double r);

/// E psi(rA) for independent A, B with P{A=1} < 1.
MomentVerdict expected_psi_criterion(const JointInput& joint, double r);

/// E e^{rX}: routes to exactly one of the criteria above (P{A=-1} > 0 uses
/// the |X| criterion, which then coincides), or returns an Inconclusive
/// verdict with theorem_used = "none" naming why nothing applies.
MomentVerdict exp_moment_verdict(const JointInput& joint, double r, Tri support_unbounded_right);

}  // namespace perp
