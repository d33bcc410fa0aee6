#pragma once

// Tail asymptotes P{X > x} ~ constant * a x^c e^{-bx} and the characteristic
// function of X when A ~ Beta(lambda, 1).

#include <complex>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "perpetuity/criteria.hpp"
#include "perpetuity/joint.hpp"
#include "perpetuity/simulate.hpp"
#include "perpetuity/tail_model.hpp"

namespace perp {

/// Which result produced the prediction.
enum class TailTheorem {
  ExpectedPsi,   // P{X>x} ~ E psi(bA) P{B>x}
  ConditionalF,  // P{X>x} ~ E f(X) / (1 - E e^{bB}1{A=1}) P{B>x}, gamma-like B with c < -1
  BetaKernel,    // A ~ Beta(lambda,1): P{X>x} ~ K x^{lambda C} e^{-bx}
};
std::string to_string(TailTheorem t);

enum class ConstantSource { ClosedForm, Quadrature, MonteCarlo };
std::string to_string(ConstantSource s);

struct TailPrediction {
  TailTheorem theorem = TailTheorem::ExpectedPsi;
  GammaLikeTail form;  // predicted P{X>x} = constant * a x^c e^{-bx}
  double constant = 0.0;
  ConstantSource source = ConstantSource::ClosedForm;
  double std_err = 0.0;       // MonteCarlo only
  double error_budget = 0.0;  // propagated absolute error of `constant`
  std::vector<ConditionEntry> preconditions;

  double predict(double x) const;
};

nlohmann::json to_json(const TailPrediction& p);

/// A theorem's hypotheses are violated or unestablished; `trace` names them.
class PredictionRefused : public std::runtime_error {
 public:
  PredictionRefused(const std::string& what, nlohmann::json trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const nlohmann::json& trace() const { return trace_; }

 private:
  nlohmann::json trace_;
};

/// Right-tail form a x^c e^{-bx} of P{B > x} read off a tail model.
GammaLikeTail tail_form(const TailModel& t);

/// E psi(bA) and the asymptote E psi(bA) P{B>x} for independent A, B whose
/// right tail has rate b. Closed-form infinite product for constant A,
/// otherwise median-of-means Monte Carlo with cfg.n_samples draws.
TailPrediction expected_psi_constant(const JointInput& joint, double b, const SimConfig& cfg);

/// f(y) = lim P{Ay + B > x} / P{B > x}: E e^{byA} for independent pairs,
/// e^{b y zeta1} under threshold dependence.
double f_function(const JointInput& joint, double b, double y);

/// E f(X) / (1 - E e^{bB}1{A=1}) for A in (0,1] and a gamma-like tail of B
/// with c < -1; E f(X) by median-of-means over cfg.n_samples perpetuity draws.
TailPrediction conditional_f_constant(const JointInput& joint, const GammaLikeTail& tail_of_B, const SimConfig& cfg);

/// Left tail of B for the beta-kernel constant: y -> P{B <= -y} on y > 0,
/// with an optional exponential decay rate used to truncate the integral.
struct LeftTail {
  std::function<double(double)> mass_below_neg;
  std::optional<double> decay_rate;
};

/// K = C b^{C lambda} / Gamma(C lambda + 1) * exp(lambda [I_r - I_left]) with
/// I_r = int_0^inf (e^{by}-1)/y r(y) dy and
/// I_left = int_0^inf (1-e^{-by})/y P{B <= -y} dy.
TailPrediction beta_kernel_constant(double lambda, const ExpPlusRemainderTail& tail, const std::optional<LeftTail>& left,
                      double tol = 1e-12);

/// lambda when A is Beta(lambda, 1) (Uniform(0,1) counts as lambda = 1).
std::optional<double> beta_kernel_lambda(const Distribution& A);

/// Left tail of B taken from its survival function and MGF domain; nullopt
/// when B >= 0.
std::optional<LeftTail> left_tail_of(const Distribution& B);

struct CfResult {
  std::complex<double> value;
  double abs_error = 0.0;
};

/// Psi(t) = Phi(t) exp(lambda int_0^t (Phi(u) - 1)/u du) for A ~ Beta(lambda,1)
/// independent of B. Throws PredictionRefused on unmet hypotheses or when the
/// quadrature does not converge.
CfResult perpetuity_cf(const JointInput& joint, double t, double tol = 1e-12);

}  // namespace perp
