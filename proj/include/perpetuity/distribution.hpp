#pragma once

// Scalar laws used as the marginals of (A, B): an immutable expression tree of
// closed-form primitives combined by negation, shift, scaling, finite mixture
// and independent difference, plus laws given only through a survival
// function.
//
// Every structural query (atoms, support hull, MGF domain, log-moments) is
// answered symbolically from the tree. Numeric answers carry an `exact` flag
// so that callers deciding theorem hypotheses can refuse non-symbolic input.

#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "perpetuity/rng.hpp"
#include "perpetuity/tail_model.hpp"
#include "perpetuity/tribool.hpp"

namespace perp {

struct DistributionNode;

/// Shared, immutable handle to a law. Cheap to copy; safe to share across
/// threads.
class Distribution {
 public:
  explicit Distribution(std::shared_ptr<const DistributionNode> node) : node_(std::move(node)) {}
  const DistributionNode& node() const { return *node_; }

 private:
  std::shared_ptr<const DistributionNode> node_;
};

struct PointMass {
  double value;
};
struct Exponential {
  double rate;
};
struct GammaLaw {
  double shape;
  double rate;
};
struct BetaLaw {
  double p;
  double q;
};
struct UniformLaw {
  double lo;
  double hi;
};
struct Negated {
  Distribution inner;
};
struct Shifted {
  Distribution inner;
  double offset;
};
struct Scaled {
  Distribution inner;
  double factor;
};
struct MixtureComponent {
  double weight;
  Distribution law;
};
struct Mixture {
  std::vector<MixtureComponent> components;
};
/// left - right with independent parts.
struct Difference {
  Distribution left;
  Distribution right;
};

/// Named parametric survival family, kept so the law can be written back to
/// an experiment config.
struct SurvivalFamily {
  std::string name;
  std::vector<std::pair<std::string, double>> params;
  bool operator==(const SurvivalFamily&) const = default;
};

/// Quantiles x_i with -log S(x_i) = i * y_step, used to invert S.
struct InversionTable {
  double y_step = 0.0;
  std::vector<double> x;
};

/// Law given by a continuous survival function S with S(support_lo) = 1.
struct SurvivalDefined {
  std::function<double(double)> survival;
  double support_lo;
  std::optional<TailModel> tail;
  SurvivalFamily family;
  std::shared_ptr<const InversionTable> table;
  /// log S, for tilted integrands e^{sx} S(x) far in the tail where S
  /// underflows; empty means log(survival(x)).
  std::function<double(double)> log_survival;
};

using DistributionVariant = std::variant<PointMass, Exponential, GammaLaw, BetaLaw, UniformLaw, Negated,
                                         Shifted, Scaled, Mixture, Difference, SurvivalDefined>;

struct DistributionNode {
  DistributionVariant v;
};

// ---------------------------------------------------------------- factories
// All factories validate their invariants and throw std::invalid_argument.

Distribution point_mass(double value);
Distribution exponential(double rate);
Distribution gamma_law(double shape, double rate);
Distribution beta_law(double p, double q);
Distribution uniform_law(double lo, double hi);
Distribution negated(Distribution inner);
Distribution shifted(Distribution inner, double offset);
Distribution scaled(Distribution inner, double factor);
Distribution mixture(std::vector<MixtureComponent> components);
Distribution difference(Distribution left, Distribution right);
Distribution survival_defined(std::function<double(double)> survival, double support_lo,
                              std::optional<TailModel> tail = std::nullopt, SurvivalFamily family = {},
                              std::function<double(double)> log_survival = {});

/// S(x) = (1+x)^{-power} e^{-b x} on x >= 0; gamma-like with a = 1, c = -power.
Distribution poly_exp_survival(double b, double power);
/// S(x) = (1/lambda) e^{-b x} (1 - e^{-lambda x}) / (1 - e^{-x}) on x > 0;
/// requires 2b + lambda > 1. Leading term (1/lambda) e^{-b x}.
Distribution neglog_ratio_survival(double b, double lambda);
/// Rebuilds a named survival family (as written by `survival_family`).
Distribution survival_from_family(const SurvivalFamily& family);

// ------------------------------------------------------------------ queries

struct Atom {
  double value;
  double mass;
};

/// Closed hull of the support; either end may be infinite.
struct Interval {
  double lo;
  double hi;
};

struct Evaluation {
  double value = 0.0;
  double abs_error = 0.0;
  bool exact = true;
};

/// One end of the MGF domain {s : E e^{sD} < inf}. When the end is open and
/// E e^{sD} ~ const * |at - s|^{-pole_order} near it, `pole_order` is set.
struct MgfEndpoint {
  double at;
  bool closed;
  std::optional<double> pole_order;
};

struct MgfDomain {
  MgfEndpoint left;
  MgfEndpoint right;
  /// False when the domain is a conservative subset of the true one.
  bool exact = true;
  bool contains(double s) const;
};

/// Absolutely continuous piece of a law: mass `weight` spread over
/// [lo, hi] with density behaving like (x - lo)^{left_exponent} near lo and
/// (hi - x)^{right_exponent} near hi.
struct ContinuousPiece {
  double weight;
  double lo;
  double hi;
  double left_exponent;
  double right_exponent;
};

/// One draw.
double sample(const Distribution& d, Rng& rng);

/// One draw of D conditioned on D > m (requires P{D > m} > 0). Inverts the
/// survival function for survival-defined laws, uses memorylessness for
/// exponentials and falls back to rejection otherwise.
double sample_above(const Distribution& d, double m, Rng& rng);

/// All atoms with their masses (values may repeat across branches; merged).
std::vector<Atom> atoms(const Distribution& d);
double atom_mass(const Distribution& d, double v);
/// Total mass carried by atoms.
double atomic_mass(const Distribution& d);

Interval support(const Distribution& d);

/// P{D > x}. Exact for closed forms; numeric (convolution quadrature) with an
/// error bound for independent differences; nullopt when unavailable.
std::optional<Evaluation> survival_eval(const Distribution& d, double x);
std::optional<double> survival(const Distribution& d, double x);
/// log P{D > x}; finite far beyond the underflow of P{D > x} for
/// survival-defined laws that carry a log form.
std::optional<double> log_survival(const Distribution& d, double x);

/// P{D in (lo, hi)} with chosen endpoint closedness; nullopt when not
/// available in closed form.
std::optional<double> mass(const Distribution& d, double lo, bool lo_closed, double hi, bool hi_closed);

/// Density of the absolutely continuous part (weighted by its mass).
std::optional<double> continuous_density(const Distribution& d, double x);

/// Absolutely continuous pieces; nullopt when the law has a component whose
/// continuous part is not a known piece (differences, survival-defined laws).
std::optional<std::vector<ContinuousPiece>> continuous_pieces(const Distribution& d);

MgfDomain mgf_domain(const Distribution& d);

/// E e^{sD}, +inf outside the domain.
double mgf(const Distribution& d, double s);
Evaluation mgf_eval(const Distribution& d, double s);

/// E e^{itD}.
std::complex<double> charfn(const Distribution& d, double t);

/// E D when finite and computable; nullopt otherwise.
std::optional<double> mean(const Distribution& d);

/// E log|D| when symbolically available (may be -inf when P{D=0} > 0).
std::optional<double> expected_log_abs(const Distribution& d);

/// E log(1 + |D|) < inf.
Tri log_moment_finite(const Distribution& d);
/// E log(1 + D^-) < inf.
Tri log_moment_negative_part_finite(const Distribution& d);

/// True when the tree contains no survival-defined law (all values closed form).
bool is_closed_form(const Distribution& d);

/// Mixture of exponentials (rate = +inf encodes an atom at 0); nullopt when d
/// is not of that form.
struct ExpTerm {
  double weight;
  double rate;
};
std::optional<std::vector<ExpTerm>> exp_mixture_terms(const Distribution& d);

/// Right tail written as C e^{-b x} + r(x) with r decaying strictly faster.
struct LeadingExponential {
  double C;
  double b;
  /// Rate of the next-fastest exponential in r, or +inf if r vanishes for
  /// large x; 0 when unknown.
  double next_rate;
};
std::optional<LeadingExponential> leading_exponential(const Distribution& d);

/// Gamma-like or exponential-plus-remainder description of the right tail.
std::optional<TailModel> tail_model(const Distribution& d);

/// Short human-readable description for traces and reports.
std::string describe(const Distribution& d);

}  // namespace perp
