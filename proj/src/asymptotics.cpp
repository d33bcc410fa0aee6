#include "perpetuity/asymptotics.hpp"

#include <cmath>
#include <numbers>
#include <variant>

#include "perpetuity/quadrature.hpp"
#include "perpetuity/stats.hpp"

namespace perp {

namespace {

constexpr std::uint64_t kSaltExpectedPsi = 0x6578705f707369ULL;
constexpr std::uint64_t kSaltEf = 0x657870656374665fULL;

ConditionEntry cond(std::string name, Tri status, std::vector<Witness> w = {}, std::string note = {}) {
  return {std::move(name), status, std::move(w), std::move(note)};
}

nlohmann::json trace_json(const std::vector<ConditionEntry>& trace) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& c : trace) out.push_back(to_json(c));
  return out;
}

[[noreturn]] void refuse(const std::string& what, const std::vector<ConditionEntry>& trace) {
  throw PredictionRefused(what, trace_json(trace));
}

void require_all(const std::string& what, const std::vector<ConditionEntry>& trace) {
  for (const auto& c : trace) {
    if (c.status != Tri::True) refuse(what + ": hypothesis '" + c.name + "' is " + std::string(to_string(c.status)), trace);
  }
}

}  // namespace

std::string to_string(TailTheorem t) {
  switch (t) {
    case TailTheorem::ExpectedPsi: return "expected_psi";
    case TailTheorem::ConditionalF: return "conditional_f";
    default: return "beta_kernel";
  }
}

std::string to_string(ConstantSource s) {
  switch (s) {
    case ConstantSource::ClosedForm: return "closed_form";
    case ConstantSource::Quadrature: return "quadrature";
    default: return "monte_carlo";
  }
}

double TailPrediction::predict(double x) const {
  return constant * form.a * std::pow(x, form.c) * std::exp(-form.b * x);
}

nlohmann::json to_json(const TailPrediction& p) {
  return {{"theorem", to_string(p.theorem)},
          {"form", {{"a", p.form.a}, {"c", p.form.c}, {"b", p.form.b}}},
          {"constant", json_number(p.constant)},
          {"source", to_string(p.source)},
          {"std_err", json_number(p.std_err)},
          {"error_budget", json_number(p.error_budget)},
          {"preconditions", trace_json(p.preconditions)}};
}

GammaLikeTail tail_form(const TailModel& t) {
  if (const auto* g = std::get_if<GammaLikeTail>(&t)) return *g;
  const auto& e = std::get<ExpPlusRemainderTail>(t);
  return {e.C, 0.0, e.b};
}

TailPrediction expected_psi_constant(const JointInput& joint, double b, const SimConfig& cfg) {
  if (!joint.is_independent()) {
    refuse("expected-psi asymptote requires independent A and B",
           {cond("A_B_independent", Tri::False)});
  }
  const auto tm = tail_model(joint.B());
  TailPrediction out;
  out.theorem = TailTheorem::ExpectedPsi;
  out.preconditions.push_back(cond("B_tail_model_available", to_tri(tm.has_value())));
  if (!tm) refuse("no tail model for B", out.preconditions);
  const double rate = tail_rate(*tm);
  out.preconditions.push_back(cond("tail_rate_matches_b", to_tri(std::abs(rate - b) <= 1e-12 * std::max(1.0, b)),
                                   {{"tail rate", rate}, {"b", b}}));
  const MomentVerdict v = expected_psi_criterion(joint, b);
  out.preconditions.push_back(cond("E_psi_bA_finite", to_tri(v.verdict == Verdict::Finite), {},
                                   "criterion verdict: " + to_string(v.verdict)));
  for (const auto& c : v.condition_trace) out.preconditions.push_back(c);
  require_all("expected-psi asymptote refused", {out.preconditions.begin(), out.preconditions.begin() + 3});
  out.form = tail_form(*tm);

  // Constant A = g: E psi(bA) = psi(bg) = prod_{k>=1} phi(b g^k).
  const auto a_atoms = atoms(joint.A());
  if (a_atoms.size() == 1 && a_atoms.front().mass >= 1.0) {
    const double g = a_atoms.front().value;
    double prod = 1.0;
    double s = b * g;
    bool exact = true;
    std::size_t terms = 0;
    for (; terms < 100000 && s != 0.0; ++terms) {
      const Evaluation e = mgf_eval(joint.B(), s);
      if (!e.exact || !std::isfinite(e.value)) {
        exact = false;
        break;
      }
      prod *= e.value;
      if (std::abs(e.value - 1.0) < 1e-16) break;
      s *= g;
    }
    if (exact) {
      out.constant = prod;
      out.source = ConstantSource::ClosedForm;
      out.error_budget = prod * 4e-16 * static_cast<double>(terms + 1);
      return out;
    }
  }

  std::vector<double> w(cfg.n_samples);
  for_each_chunk(cfg.n_samples, cfg, kSaltExpectedPsi, [&](Rng& rng, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const double a = sample(joint.A(), rng);
      const double x = draw_perpetuity(joint, cfg, rng).value;
      w[i] = std::exp(b * a * x);
    }
  });
  const MeanEstimate m = median_of_means(w);
  out.constant = m.value;
  out.std_err = m.std_err;
  out.error_budget = 3.0 * m.std_err;
  out.source = ConstantSource::MonteCarlo;
  return out;
}

double f_function(const JointInput& joint, double b, double y) {
  if (const auto* t = std::get_if<ThresholdDependent>(&joint.dependence())) return std::exp(b * y * t->zeta1);
  return mgf(joint.A(), b * y);
}

TailPrediction conditional_f_constant(const JointInput& joint, const GammaLikeTail& tail, const SimConfig& cfg) {
  const StructuralFlags f = structural_flags(joint);
  TailPrediction out;
  out.theorem = TailTheorem::ConditionalF;
  out.form = tail;
  const double b = tail.b;

  const NondegeneracyReport nd = validate_nondegeneracy(joint);
  out.preconditions.push_back(cond("nondegenerate", to_tri(nd.ok), {}, nd.ok ? "" : nd.failed));
  out.preconditions.push_back(cond("A_in_(0,1]", f.A_positive && f.A_at_most_1));
  out.preconditions.push_back(cond("gamma_like_exponent_below_-1", to_tri(tail.c < -1.0), {{"c", tail.c}}));
  out.preconditions.push_back(cond("B_unbounded_right", to_tri(std::isinf(support(joint.B()).hi)), {},
                                   "a gamma-like right tail needs B unbounded above"));
  const double p1 = f.p_A_eq_1.value_or(0.0);
  std::optional<double> weighted = p1 == 0.0 ? std::optional<double>(0.0) : mgf_B_on_A_atom(joint, b, 1.0);
  const Tri w_ok = weighted ? to_tri(*weighted < 1.0) : Tri::Unknown;
  out.preconditions.push_back(
      cond("mgf_B_on_A_eq_1_below_1", w_ok, {{"E e^{bB}1{A=1}", weighted.value_or(std::nan(""))}}));
  out.preconditions.push_back(cond("log_moment_B_minus_finite", f.log_moment_B_minus_finite));
  const ConvergenceReport conv = check_convergence(joint);
  out.preconditions.push_back(cond("series_converges", to_tri(conv.verdict == Convergence::Converges),
                                   {{"E log|A|", conv.e_log_abs_A}}, conv.evidence));
  require_all("conditional-f asymptote refused", out.preconditions);

  std::vector<double> v(cfg.n_samples);
  for_each_chunk(cfg.n_samples, cfg, kSaltEf, [&](Rng& rng, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) v[i] = f_function(joint, b, draw_perpetuity(joint, cfg, rng).value);
  });
  const MeanEstimate ef = median_of_means(v);
  const double denom = 1.0 - *weighted;
  out.constant = ef.value / denom;
  out.std_err = ef.std_err / denom;
  out.error_budget = 3.0 * out.std_err;
  out.source = ConstantSource::MonteCarlo;
  return out;
}

TailPrediction beta_kernel_constant(double lambda, const ExpPlusRemainderTail& tail, const std::optional<LeftTail>& left,
                      double tol) {
  TailPrediction out;
  out.theorem = TailTheorem::BetaKernel;
  out.preconditions.push_back(cond("lambda_positive", to_tri(lambda > 0.0), {{"lambda", lambda}}));
  out.preconditions.push_back(cond("C_positive", to_tri(tail.C > 0.0), {{"C", tail.C}}));
  out.preconditions.push_back(cond("b_positive", to_tri(tail.b > 0.0), {{"b", tail.b}}));
  const bool zero = tail.remainder_is_zero || !tail.remainder;
  out.preconditions.push_back(cond("remainder_vanishes", to_tri(zero || tail.remainder_vanishes)));
  out.preconditions.push_back(cond("remainder_integrable", to_tri(zero || tail.remainder_integrable)));
  require_all("beta-kernel constant refused", out.preconditions);

  const double b = tail.b;
  double i_r = 0.0;
  double err = 0.0;
  bool converged = true;
  if (!zero) {
    auto g = [&](double y) {
      // Far out e^{by} overflows while r has already vanished.
      const double r = tail.remainder(y);
      return r == 0.0 ? 0.0 : expm1_over(b, y) * r;
    };
    const double hint = tail.remainder_rate - b;
    const auto q = hint > 0.0 ? integrate_semi_infinite(g, 0.0, tol, hint) : integrate_to_infinity(g, 0.0, tol);
    i_r = q.value;
    err += q.abs_error_estimate;
    converged = converged && q.converged;
  }
  double i_left = 0.0;
  if (left) {
    auto g = [&](double y) { return -expm1_over(-b, y) * left->mass_below_neg(y); };
    const auto q = left->decay_rate && *left->decay_rate > 0.0 ? integrate_semi_infinite(g, 0.0, tol, *left->decay_rate)
                                                               : integrate_to_infinity(g, 0.0, tol);
    i_left = q.value;
    err += q.abs_error_estimate;
    converged = converged && q.converged;
  }
  out.preconditions.push_back(cond("quadrature_converged", to_tri(converged), {{"abs_error", err}}));
  if (!converged) refuse("beta-kernel constant: quadrature did not converge", out.preconditions);

  const double cl = tail.C * lambda;
  out.constant = tail.C * std::pow(b, cl) / std::tgamma(cl + 1.0) * std::exp(lambda * (i_r - i_left));
  out.error_budget = out.constant * lambda * err;
  out.source = zero && !left ? ConstantSource::ClosedForm : ConstantSource::Quadrature;
  out.form = {1.0, cl, b};
  return out;
}

std::optional<double> beta_kernel_lambda(const Distribution& A) {
  const auto& v = A.node().v;
  if (const auto* be = std::get_if<BetaLaw>(&v); be && be->q == 1.0) return be->p;
  if (const auto* u = std::get_if<UniformLaw>(&v); u && u->lo == 0.0 && u->hi == 1.0) return 1.0;
  return std::nullopt;
}

std::optional<LeftTail> left_tail_of(const Distribution& B) {
  if (support(B).lo >= 0.0) return std::nullopt;
  LeftTail lt;
  const Distribution neg = negated(B);
  // P{B <= -y} = P{-B >= y}, equal to P{-B > y} for almost every y.
  lt.mass_below_neg = [neg](double y) {
    const auto s = survival(neg, y);
    return s ? *s : std::nan("");
  };
  const MgfDomain dom = mgf_domain(B);
  if (std::isfinite(dom.left.at) && dom.left.at < 0.0) lt.decay_rate = -dom.left.at;
  return lt;
}

CfResult perpetuity_cf(const JointInput& joint, double t, double tol) {
  std::vector<ConditionEntry> pre;
  pre.push_back(cond("A_B_independent", to_tri(joint.is_independent())));
  const auto lambda = beta_kernel_lambda(joint.A());
  pre.push_back(cond("A_is_beta_lambda_1", to_tri(lambda.has_value())));
  pre.push_back(cond("log_moment_B_finite", log_moment_finite(joint.B())));
  require_all("characteristic function refused", pre);

  if (t == 0.0) return {{1.0, 0.0}, 0.0};
  if (t < 0.0) {
    const CfResult r = perpetuity_cf(joint, -t, tol);
    return {std::conj(r.value), r.abs_error};
  }
  const Distribution& B = joint.B();
  const auto mu = mean(B);
  using cd = std::complex<double>;
  auto g = [&](double u) -> cd {
    if (u < 1e-8 && mu) return cd(0.0, *mu);
    return (charfn(B, u) - 1.0) / u;
  };
  const auto panels = static_cast<std::size_t>(std::clamp(std::ceil(t), 1.0, 256.0));
  const auto q = integrate_finite(g, 0.0, t, tol, panels);
  if (!q.converged) {
    pre.push_back(cond("quadrature_converged", Tri::False, {{"abs_error", q.abs_error_estimate}}));
    refuse("characteristic function: quadrature did not converge", pre);
  }
  const cd phi = charfn(B, t);
  const cd value = phi * std::exp(*lambda * q.value);
  return {value, std::abs(value) * *lambda * q.abs_error_estimate};
}

}  // namespace perp
