#include "perpetuity/joint.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace perp {

JointInput JointInput::independent(Distribution a, Distribution b) {
  return JointInput(std::move(a), std::move(b), Independent{});
}

JointInput JointInput::threshold(Distribution b, double zeta1, double zeta2, double q) {
  if (!(zeta1 > 0.0 && zeta1 < 1.0 && zeta2 > 0.0 && zeta2 < 1.0)) {
    throw std::invalid_argument("threshold dependence: zeta1 and zeta2 must lie in (0,1)");
  }
  if (zeta1 == zeta2) throw std::invalid_argument("threshold dependence: zeta1 must differ from zeta2");
  if (!std::isfinite(q)) throw std::invalid_argument("threshold dependence: q must be finite");
  const auto above = survival_eval(b, q);
  if (!above || !above->exact) {
    throw std::invalid_argument("threshold dependence: P{B > q} is not available in closed form");
  }
  const double p = above->value;
  Distribution a = point_mass(p > 0.5 ? zeta1 : zeta2);
  if (p > 0.0 && p < 1.0) a = mixture({{p, point_mass(zeta1)}, {1.0 - p, point_mass(zeta2)}});
  return JointInput(std::move(a), std::move(b), ThresholdDependent{zeta1, zeta2, q});
}

std::pair<double, double> sample_pair(const JointInput& joint, Rng& rng) {
  if (const auto* t = std::get_if<ThresholdDependent>(&joint.dependence())) {
    const double b = sample(joint.B(), rng);
    return {b > t->q ? t->zeta1 : t->zeta2, b};
  }
  const double a = sample(joint.A(), rng);
  return {a, sample(joint.B(), rng)};
}

StructuralFlags structural_flags(const JointInput& joint) {
  const Distribution& A = joint.A();
  const Distribution& B = joint.B();
  StructuralFlags f;
  f.p_A_eq_1 = atom_mass(A, 1.0);
  f.p_A_eq_neg1 = atom_mass(A, -1.0);
  f.p_A_in_0_1 = mass(A, 0.0, false, 1.0, false);
  f.p_A_pos = mass(A, 0.0, false, INFINITY, false);
  f.p_A_neg = mass(A, -INFINITY, false, 0.0, false);

  // Support hulls of the primitives are tight, so hull containment decides
  // these exactly.
  const Interval sa = support(A);
  f.A_bounded_by_1 = to_tri(sa.lo >= -1.0 && sa.hi <= 1.0);
  f.A_at_most_1 = to_tri(sa.hi <= 1.0);
  f.A_positive = to_tri(sa.lo > 0.0 || (sa.lo == 0.0 && atom_mass(A, 0.0) == 0.0));

  const Interval sb = support(B);
  f.B_nonneg = to_tri(sb.lo >= 0.0);
  f.B_nonpos = to_tri(sb.hi <= 0.0);
  f.mgf_B_domain = mgf_domain(B);
  f.log_moment_B_minus_finite = log_moment_negative_part_finite(B);
  return f;
}

namespace {

// Finds c with b = c (1 - a) for every atom pair, if any.
std::optional<double> constant_fixed_point(const std::vector<std::pair<double, double>>& pairs) {
  std::set<double> candidates{0.0};
  for (const auto& [a, b] : pairs) {
    if (a != 1.0) candidates.insert(b / (1.0 - a));
  }
  for (double c : candidates) {
    bool all = true;
    for (const auto& [a, b] : pairs) {
      const double lhs = b + a * c;
      if (std::abs(lhs - c) > 1e-12 * std::max(1.0, std::abs(c))) {
        all = false;
        break;
      }
    }
    if (all) return c;
  }
  return std::nullopt;
}

}  // namespace

NondegeneracyReport validate_nondegeneracy(const JointInput& joint) {
  NondegeneracyReport r;
  if (atom_mass(joint.A(), 0.0) > 0.0) {
    r.ok = false;
    r.failed = "A_nonzero";
    r.note = "P{A = 0} > 0";
    return r;
  }
  if (atom_mass(joint.B(), 0.0) >= 1.0) {
    r.ok = false;
    r.failed = "B_not_zero";
    r.note = "B = 0 almost surely";
    return r;
  }
  const bool a_atomic = atomic_mass(joint.A()) >= 1.0 - 1e-15;
  const bool b_atomic = atomic_mass(joint.B()) >= 1.0 - 1e-15;
  if (!b_atomic || (joint.is_independent() && !a_atomic)) {
    // B + A c keeps a continuous component for every c != 0, and c = 0 would
    // need B = 0 a.s.
    r.note = "continuous component rules out a constant fixed point";
    return r;
  }
  std::vector<std::pair<double, double>> pairs;
  if (const auto* t = std::get_if<ThresholdDependent>(&joint.dependence())) {
    for (const auto& b : atoms(joint.B())) pairs.emplace_back(b.value > t->q ? t->zeta1 : t->zeta2, b.value);
  } else {
    for (const auto& a : atoms(joint.A())) {
      for (const auto& b : atoms(joint.B())) pairs.emplace_back(a.value, b.value);
    }
  }
  if (const auto c = constant_fixed_point(pairs)) {
    r.ok = false;
    r.failed = "no_constant_fixed_point";
    r.c = *c;
    r.note = "B + A c = c almost surely";
  }
  return r;
}

std::optional<double> mgf_B_on_A_atom(const JointInput& joint, double s, double v) {
  if (const auto* t = std::get_if<ThresholdDependent>(&joint.dependence())) {
    if (v != t->zeta1 && v != t->zeta2) return 0.0;
    return std::nullopt;
  }
  const double p = atom_mass(joint.A(), v);
  if (p == 0.0) return 0.0;
  const Evaluation e = mgf_eval(joint.B(), s);
  if (!e.exact) return std::nullopt;
  return p * e.value;
}

std::string describe(const JointInput& joint) {
  if (const auto* t = std::get_if<ThresholdDependent>(&joint.dependence())) {
    std::string out = "B=" + describe(joint.B()) + ", A=zeta1*1{B>q}+zeta2*1{B<=q} (zeta1=";
    out += std::to_string(t->zeta1) + ", zeta2=" + std::to_string(t->zeta2) + ", q=" + std::to_string(t->q) + ")";
    return out;
  }
  return "A=" + describe(joint.A()) + ", B=" + describe(joint.B()) + " (independent)";
}

}  // namespace perp
