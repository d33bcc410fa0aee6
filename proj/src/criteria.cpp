#include "perpetuity/criteria.hpp"

#include <cmath>
#include <limits>

#include "perpetuity/simulate.hpp"

namespace perp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRelTol = 1e-12;

struct MgfAt {
  Tri finite;
  double value;  // +inf when infinite, NaN when unknown
  bool exact;
};

MgfAt mgf_at(const Distribution& B, double s) {
  const MgfDomain dom = mgf_domain(B);
  if (dom.contains(s)) {
    const Evaluation e = mgf_eval(B, s);
    if (std::isinf(e.value)) return {dom.exact ? Tri::False : Tri::Unknown, kInf, dom.exact};
    return {Tri::True, e.value, e.exact};
  }
  if (dom.exact) return {Tri::False, kInf, true};
  return {Tri::Unknown, std::nan(""), false};
}

// lhs < rhs with values within a relative 1e-12 of each other counted as equal.
Tri strictly_less(double lhs, double rhs) {
  if (std::isnan(lhs) || std::isnan(rhs)) return Tri::Unknown;
  if (std::isinf(lhs) && lhs > 0) return Tri::False;
  return to_tri(lhs < rhs - kRelTol * std::max(1.0, std::abs(rhs)));
}

ConditionEntry entry(std::string name, Tri status, std::vector<Witness> w = {}, std::string note = {}) {
  return {std::move(name), status, std::move(w), std::move(note)};
}

// Adds the shared hypotheses; returns false when one is not established.
bool add_nondegeneracy(const JointInput& joint, MomentVerdict& v) {
  const NondegeneracyReport nd = validate_nondegeneracy(joint);
  std::vector<Witness> w;
  if (nd.c) w.push_back({"c", *nd.c});
  v.condition_trace.push_back(entry("nondegenerate", to_tri(nd.ok), w, nd.ok ? nd.note : nd.failed + ": " + nd.note));
  return nd.ok;
}

bool add_convergence(const JointInput& joint, MomentVerdict& v) {
  const ConvergenceReport c = check_convergence(joint);
  Tri status = Tri::Unknown;
  if (c.verdict == Convergence::Converges && c.e_log_symbolic) status = Tri::True;
  if (c.verdict == Convergence::Diverges) status = Tri::False;
  v.condition_trace.push_back(entry("series_converges", status, {{"E log|A|", c.e_log_abs_A}}, c.evidence));
  return status == Tri::True;
}

// Common "iff" conclusion: all True -> Finite, any False -> Infinite.
Verdict iff_verdict(std::initializer_list<Tri> conds) {
  bool all_true = true;
  for (Tri t : conds) {
    if (t == Tri::False) return Verdict::Infinite;
    if (t != Tri::True) all_true = false;
  }
  return all_true ? Verdict::Finite : Verdict::Inconclusive;
}

ConditionEntry weighted_mgf_condition(const JointInput& joint, double r, const MgfAt& phi) {
  const double p1 = atom_mass(joint.A(), 1.0);
  const auto w = mgf_B_on_A_atom(joint, r, 1.0);
  if (!w) {
    // phi(r) = inf with P{A=1} > 0 makes the weighted moment infinite.
    if (phi.finite == Tri::False && p1 > 0.0) {
      return entry("mgf_B_on_A_eq_1_below_1", Tri::False, {{"E e^{rB}1{A=1}", kInf}});
    }
    return entry("mgf_B_on_A_eq_1_below_1", Tri::Unknown, {}, "E e^{rB}1{A=1} not available in closed form");
  }
  return entry("mgf_B_on_A_eq_1_below_1", strictly_less(*w, 1.0), {{"E e^{rB}1{A=1}", *w}});
}

ConditionEntry mgf_condition(const MgfAt& phi, const char* name = "mgf_B_finite", const char* label = "phi(r)") {
  return entry(name, phi.finite, {{label, phi.value}});
}

// Integrability of phi(r u) against a density piece touching a domain end.
Tri touching_end(const MgfEndpoint& end, double exponent) {
  if (end.closed) return Tri::True;
  if (!end.pole_order) return Tri::Unknown;
  return to_tri(exponent - *end.pole_order > -1.0);
}

bool is_point_mass(const Distribution& d, double* value) {
  const auto a = atoms(d);
  if (a.size() == 1 && a.front().mass >= 1.0) {
    *value = a.front().value;
    return true;
  }
  return false;
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Finite: return "Finite";
    case Verdict::Infinite: return "Infinite";
    default: return "Inconclusive";
  }
}

nlohmann::json json_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

nlohmann::json to_json(const ConditionEntry& c) {
  nlohmann::json w = nlohmann::json::object();
  for (const auto& x : c.witnesses) w[x.name] = json_number(x.value);
  nlohmann::json e = {{"condition", c.name}, {"status", std::string(to_string(c.status))}, {"witnesses", w}};
  if (!c.note.empty()) e["note"] = c.note;
  return e;
}

nlohmann::json to_json(const MomentVerdict& v) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& c : v.condition_trace) trace.push_back(to_json(c));
  nlohmann::json out = {{"verdict", to_string(v.verdict)},
                        {"theorem_used", v.theorem_used},
                        {"quantity", v.quantity},
                        {"r", v.r},
                        {"condition_trace", trace}};
  if (!v.note.empty()) out["note"] = v.note;
  return out;
}

ScaledMgfExpectation expected_mgf_of_scaled(const Distribution& A, const Distribution& B, double r) {
  ScaledMgfExpectation out;
  const MgfDomain dom = mgf_domain(B);
  double value = 0.0;
  bool value_ok = true;
  bool unknown = false;
  for (const Atom& a : atoms(A)) {
    const double s = r * a.value;
    if (dom.contains(s)) {
      const Evaluation e = mgf_eval(B, s);
      value += a.mass * e.value;
      value_ok = value_ok && e.exact;
    } else if (dom.exact) {
      out.finite = Tri::False;
      out.value = kInf;
      out.note = "atom of A at " + std::to_string(a.value) + " maps outside the MGF domain of B";
      return out;
    } else {
      unknown = true;
    }
  }
  if (atomic_mass(A) < 1.0 - 1e-15) {
    value_ok = false;
    const auto pieces = continuous_pieces(A);
    if (!pieces) {
      out.note = "continuous part of A is not a known piece";
      return out;
    }
    for (const ContinuousPiece& p : *pieces) {
      if (!(p.weight > 0.0)) continue;
      const double slo = r * p.lo;
      const double shi = r * p.hi;
      // A positive-mass part of the piece beyond the domain.
      if (slo < dom.left.at || shi > dom.right.at) {
        if (dom.exact) {
          out.finite = Tri::False;
          out.value = kInf;
          out.note = "a continuous part of rA leaves the MGF domain of B";
          return out;
        }
        unknown = true;
        continue;
      }
      if (std::isinf(p.lo) || std::isinf(p.hi)) {
        unknown = true;
        continue;
      }
      Tri ok = Tri::True;
      if (slo == dom.left.at) ok = ok && touching_end(dom.left, p.left_exponent);
      if (shi == dom.right.at) ok = ok && touching_end(dom.right, p.right_exponent);
      if (ok == Tri::False) {
        out.finite = Tri::False;
        out.value = kInf;
        out.note = "density of A does not offset the MGF pole of B at the domain end";
        return out;
      }
      if (ok == Tri::Unknown) unknown = true;
    }
  }
  if (unknown) return out;
  out.finite = Tri::True;
  if (value_ok) out.value = value;
  return out;
}

ScaledMgfExpectation expected_mgf_of_product(const Distribution& A, const Distribution& B, double r) {
  ScaledMgfExpectation out;
  const MgfDomain dom = mgf_domain(B);
  if (atomic_mass(A) >= 1.0 - 1e-15) {
    const auto at = atoms(A);
    double value = 0.0;
    bool exact = true;
    for (const auto& x : at) {
      for (const auto& y : at) {
        const double s = r * x.value * y.value;
        if (!dom.contains(s)) {
          out.finite = dom.exact ? Tri::False : Tri::Unknown;
          if (dom.exact) out.value = kInf;
          return out;
        }
        const Evaluation e = mgf_eval(B, s);
        value += x.mass * y.mass * e.value;
        exact = exact && e.exact;
      }
    }
    out.finite = Tri::True;
    if (exact) out.value = value;
    return out;
  }
  // phi is bounded on compact subsets of its domain.
  const Interval h = support(A);
  const double c[] = {h.lo * h.lo, h.lo * h.hi, h.hi * h.hi};
  const double lo = r * std::min({c[0], c[1], c[2]});
  const double hi = r * std::max({c[0], c[1], c[2]});
  if (std::isfinite(lo) && std::isfinite(hi) && dom.contains(lo) && dom.contains(hi)) {
    out.finite = Tri::True;
    return out;
  }
  out.note = "support of r A1 A2 reaches the MGF domain boundary of B";
  return out;
}

Tri support_unbounded_right(const JointInput& joint) {
  const StructuralFlags f = structural_flags(joint);
  if (f.A_positive != Tri::True) return Tri::Unknown;
  const Interval sb = support(joint.B());
  if (std::isinf(sb.hi)) return Tri::True;
  if (sb.hi <= 0.0) return Tri::False;
  return Tri::Unknown;
}

MomentVerdict exp_moment_criterion_positiveA(const JointInput& joint, double r, Tri unbounded) {
  const StructuralFlags f = structural_flags(joint);
  if (f.A_positive != Tri::True) throw DispatchError("A is not a.s. positive; use the mixed-sign criterion");
  MomentVerdict v;
  v.theorem_used = kPositiveA;
  v.quantity = "E exp(rX)";
  v.r = r;
  const bool hyp = add_nondegeneracy(joint, v) && add_convergence(joint, v);

  const MgfAt phi = mgf_at(joint.B(), r);
  const ConditionEntry c1 = entry("A_at_most_1", f.A_at_most_1, {{"sup A", support(joint.A()).hi}});
  const ConditionEntry c2 = mgf_condition(phi);
  const ConditionEntry c3 = weighted_mgf_condition(joint, r, phi);
  v.condition_trace.push_back(c1);
  v.condition_trace.push_back(c2);
  v.condition_trace.push_back(c3);
  v.condition_trace.push_back(entry("support_of_X_unbounded_right", unbounded));
  if (!hyp) {
    v.note = "hypotheses not established";
    return v;
  }
  if (c1.status == Tri::True && c2.status == Tri::True && c3.status == Tri::True) {
    v.verdict = Verdict::Finite;
    return v;
  }
  if (unbounded == Tri::True && (c1.status == Tri::False || c2.status == Tri::False || c3.status == Tri::False)) {
    v.verdict = Verdict::Infinite;
    return v;
  }
  // With A in (0,1] finiteness forces the strict weighted inequality.
  if (c1.status == Tri::True && c3.status == Tri::False) {
    v.verdict = Verdict::Infinite;
    v.note = "A in (0,1] a.s. and E e^{rB}1{A=1} >= 1";
    return v;
  }
  if (unbounded == Tri::False) {
    const MgfDomain dom = mgf_domain(joint.B());
    const Tri all_s = dom.exact ? to_tri(std::isinf(dom.right.at)) : Tri::Unknown;
    v.condition_trace.push_back(entry("mgf_B_finite_for_all_s", all_s, {}, "necessary when X is bounded above"));
    v.note = "support of X bounded above: only a necessary condition is available";
  }
  return v;
}

MomentVerdict exp_moment_criterion_mixedA(const JointInput& joint, double r) {
  const StructuralFlags f = structural_flags(joint);
  if (f.p_A_eq_neg1.value_or(0.0) > 0.0) throw DispatchError("P{A=-1} > 0; use the two-sided criterion");
  if (!(f.p_A_neg.value_or(0.0) > 0.0)) throw DispatchError("P{A<0} = 0; use the positive-A criterion");
  MomentVerdict v;
  v.theorem_used = kMixedSignA;
  v.quantity = "E exp(rX)";
  v.r = r;
  const bool hyp = add_nondegeneracy(joint, v) && add_convergence(joint, v);
  const MgfAt phi = mgf_at(joint.B(), r);
  const ConditionEntry c1 = entry("A_abs_at_most_1", f.A_bounded_by_1);
  v.condition_trace.push_back(c1);

  if (f.p_A_pos.value_or(0.0) > 0.0) {
    if (f.B_nonneg != Tri::True) {
      v.note = "A takes both signs and B is not a.s. nonnegative: no criterion is known for this case";
      return v;
    }
    const ConditionEntry c2 = mgf_condition(phi);
    const ConditionEntry c3 = weighted_mgf_condition(joint, r, phi);
    v.condition_trace.push_back(c2);
    v.condition_trace.push_back(c3);
    if (hyp) v.verdict = iff_verdict({c1.status, c2.status, c3.status});
    return v;
  }

  // A < 0 a.s.: E e^{r(B_1 + A_1 B_2)} = phi(r) E phi(rA) under independence.
  ConditionEntry c2{"mgf_of_B1_plus_A1_B2_finite", Tri::Unknown, {}, {}};
  if (!joint.is_independent()) {
    c2.note = "requires independent A and B";
  } else {
    const ScaledMgfExpectation e = expected_mgf_of_scaled(joint.A(), joint.B(), r);
    c2.status = phi.finite && e.finite;
    c2.witnesses.push_back({"phi(r)", phi.value});
    if (e.value) c2.witnesses.push_back({"E phi(rA)", *e.value});
    if (e.value && phi.finite == Tri::True) c2.witnesses.push_back({"E e^{r(B1+A1B2)}", phi.value * *e.value});
    c2.note = e.note;
  }
  v.condition_trace.push_back(c2);
  if (hyp) v.verdict = iff_verdict({c1.status, c2.status});
  return v;
}

MomentVerdict two_sided_criterion(const JointInput& joint, double r) {
  const StructuralFlags f = structural_flags(joint);
  const double p1 = f.p_A_eq_1.value_or(0.0);
  const double pm1 = f.p_A_eq_neg1.value_or(0.0);
  const double p = p1 + pm1;
  if (p >= 1.0) throw DispatchError("P{|A|=1} = 1: outside the two-sided criterion");
  MomentVerdict v;
  v.theorem_used = kAbsExpMoment;
  v.quantity = "E exp(r|X|)";
  v.r = r;
  const bool hyp = add_nondegeneracy(joint, v);

  const MgfAt plus = mgf_at(joint.B(), r);
  const MgfAt minus = mgf_at(joint.B(), -r);
  const ConditionEntry c2 = entry("mgf_abs_B_finite", plus.finite && minus.finite,
                                  {{"phi(r)", plus.value}, {"phi(-r)", minus.value}});
  if (p == 0.0) {
    const ConditionEntry c1 = entry("A_abs_below_1", f.A_bounded_by_1, {{"P{|A|=1}", 0.0}});
    v.condition_trace.push_back(c1);
    v.condition_trace.push_back(c2);
    if (hyp) v.verdict = iff_verdict({c1.status, c2.status});
    return v;
  }
  const ConditionEntry c1 = entry("A_abs_at_most_1", f.A_bounded_by_1, {{"P{|A|=1}", p}});
  v.condition_trace.push_back(c1);
  v.condition_trace.push_back(c2);

  ConditionEntry c3{"sign_flip_inequality", Tri::Unknown, {}, {}};
  const auto mm = mgf_B_on_A_atom(joint, -r, -1.0);
  const auto pm = mgf_B_on_A_atom(joint, r, -1.0);
  const auto m1 = mgf_B_on_A_atom(joint, -r, 1.0);
  const auto p1w = mgf_B_on_A_atom(joint, r, 1.0);
  if (mm && pm && m1 && p1w) {
    const double lhs = *mm * *pm;
    const double left_factor = 1.0 - *m1;
    const double right_factor = 1.0 - *p1w;
    c3.witnesses = {{"E e^{-rB}1{A=-1}", *mm}, {"E e^{rB}1{A=-1}", *pm}, {"lhs", lhs},
                    {"1-E e^{-rB}1{A=1}", left_factor}, {"1-E e^{rB}1{A=1}", right_factor}};
    const Tri factors_positive = strictly_less(0.0, left_factor) && strictly_less(0.0, right_factor);
    c3.status = factors_positive && strictly_less(lhs, left_factor * right_factor);
  } else if (c2.status == Tri::False) {
    c3.status = Tri::False;
    c3.note = "an exponential moment of B is infinite";
  } else {
    c3.note = "weighted moments not available in closed form";
  }
  v.condition_trace.push_back(c3);
  if (hyp) v.verdict = iff_verdict({c1.status, c2.status, c3.status});
  return v;
}

MomentVerdict expected_psi_criterion(const JointInput& joint, double r) {
  if (!joint.is_independent()) throw DispatchError("E psi(rA) criterion requires independent A and B");
  const StructuralFlags f = structural_flags(joint);
  const double p1 = f.p_A_eq_1.value_or(0.0);
  if (p1 >= 1.0) throw DispatchError("E psi(rA) criterion requires P{A=1} < 1");
  MomentVerdict v;
  v.theorem_used = kExpectedPsi;
  v.quantity = "E psi(rA)";
  v.r = r;
  const Tri b_not_zero = to_tri(atom_mass(joint.B(), 0.0) < 1.0);
  v.condition_trace.push_back(entry("B_not_a.s._zero", b_not_zero));

  const Interval sa = support(joint.A());
  const Distribution& A = joint.A();
  const Distribution& B = joint.B();
  const bool case_a = f.A_positive == Tri::True && f.A_at_most_1 == Tri::True;
  const bool case_b = sa.lo >= -1.0 && sa.hi <= 0.0 && atom_mass(A, -1.0) == 0.0 && atom_mass(A, 0.0) == 0.0;
  const double pm1 = f.p_A_eq_neg1.value_or(0.0);
  const bool case_c = sa.lo >= -1.0 && sa.hi <= 1.0 && atom_mass(A, 0.0) == 0.0 && pm1 > 0.0 && pm1 < 1.0;

  Tri cond = Tri::Unknown;
  if (case_a) {
    v.condition_trace.push_back(entry("A_in_(0,1]", Tri::True, {{"P{A=1}", p1}}));
    if (p1 == 0.0) {
      const ScaledMgfExpectation e = expected_mgf_of_scaled(A, B, r);
      std::vector<Witness> w;
      if (e.value) w.push_back({"E phi(rA)", *e.value});
      cond = e.finite;
      v.condition_trace.push_back(entry("E_phi_rA_finite", cond, w, e.note));
    } else {
      const MgfAt phi = mgf_at(B, r);
      const double prod = phi.exact || std::isinf(phi.value) ? phi.value * p1 : std::nan("");
      cond = strictly_less(prod, 1.0);
      v.condition_trace.push_back(entry("phi_r_times_P_A_eq_1_below_1", cond, {{"phi(r)P{A=1}", prod}}));
    }
  } else if (case_b) {
    v.condition_trace.push_back(entry("A_in_(-1,0)", Tri::True));
    double a0 = 0.0;
    if (is_point_mass(A, &a0)) {
      const double g = -a0;
      const MgfAt m1 = mgf_at(B, -r * g);
      const MgfAt m2 = mgf_at(B, r * g * g);
      cond = m1.finite && m2.finite;
      v.condition_trace.push_back(entry("phi(-r gamma)_and_phi(r gamma^2)_finite", cond,
                                        {{"phi(-r gamma)", m1.value}, {"phi(r gamma^2)", m2.value}}));
    } else if (f.B_nonneg == Tri::True) {
      const ScaledMgfExpectation e = expected_mgf_of_product(A, B, r);
      cond = e.finite;
      std::vector<Witness> w;
      if (e.value) w.push_back({"E phi(rA1A2)", *e.value});
      v.condition_trace.push_back(entry("E_phi_rA1A2_finite", cond, w, e.note));
    } else if (f.B_nonpos == Tri::True) {
      const ScaledMgfExpectation e = expected_mgf_of_scaled(A, B, r);
      cond = e.finite;
      std::vector<Witness> w;
      if (e.value) w.push_back({"E phi(rA)", *e.value});
      v.condition_trace.push_back(entry("E_phi_rA_finite", cond, w, e.note));
    } else {
      // Two-sided B: only the necessary consequences are decidable.
      const ScaledMgfExpectation e1 = expected_mgf_of_scaled(A, B, r);
      const ScaledMgfExpectation e2 = expected_mgf_of_product(A, B, r);
      const Tri nec = e1.finite && e2.finite;
      v.condition_trace.push_back(entry("E_phi_rA_and_E_phi_rA1A2_finite", nec, {},
                                        "necessary; not sufficient for two-sided B"));
      cond = nec == Tri::False ? Tri::False : Tri::Unknown;
    }
  } else if (case_c) {
    v.condition_trace.push_back(entry("abs_A_in_(0,1]_with_P{A=-1}_in_(0,1)", Tri::True, {{"P{A=-1}", pm1}}));
    const MgfAt plus = mgf_at(B, r);
    const MgfAt minus = mgf_at(B, -r);
    if (plus.finite == Tri::False || minus.finite == Tri::False) {
      cond = Tri::False;
    } else if (plus.finite == Tri::True && minus.finite == Tri::True && plus.exact && minus.exact) {
      const double lhs = minus.value * plus.value * pm1 * pm1;
      const double lf = 1.0 - minus.value * p1;
      const double rf = 1.0 - plus.value * p1;
      cond = strictly_less(0.0, lf) && strictly_less(0.0, rf) && strictly_less(lhs, lf * rf);
      v.condition_trace.push_back(entry("sign_flip_inequality", cond,
                                        {{"lhs", lhs}, {"1-phi(-r)P{A=1}", lf}, {"1-phi(r)P{A=1}", rf}}));
    }
    if (cond != Tri::True && v.condition_trace.back().name != "sign_flip_inequality") {
      v.condition_trace.push_back(entry("sign_flip_inequality", cond, {{"phi(r)", plus.value}, {"phi(-r)", minus.value}}));
    }
  } else {
    v.note = "A is outside the three supported ranges";
    return v;
  }
  if (b_not_zero == Tri::True) v.verdict = iff_verdict({cond});
  return v;
}

MomentVerdict exp_moment_verdict(const JointInput& joint, double r, Tri unbounded) {
  if (!(r > 0.0)) throw std::invalid_argument("r must be positive");
  const StructuralFlags f = structural_flags(joint);
  const double pm1 = f.p_A_eq_neg1.value_or(0.0);
  const double p1 = f.p_A_eq_1.value_or(0.0);
  if (f.A_positive == Tri::True) return exp_moment_criterion_positiveA(joint, r, unbounded);
  if (pm1 > 0.0) {
    if (p1 + pm1 >= 1.0) {
      MomentVerdict v;
      v.theorem_used = kNoTheorem;
      v.quantity = "E exp(rX)";
      v.r = r;
      v.note = "P{|A|=1} = 1: no criterion applies";
      return v;
    }
    MomentVerdict v = two_sided_criterion(joint, r);
    v.quantity = "E exp(rX)";
    v.note = "P{A=-1} > 0: finiteness of E exp(rX) and E exp(r|X|) coincide";
    return v;
  }
  if (f.p_A_neg && *f.p_A_neg > 0.0) return exp_moment_criterion_mixedA(joint, r);
  MomentVerdict v;
  v.theorem_used = kNoTheorem;
  v.quantity = "E exp(rX)";
  v.r = r;
  v.note = "sign structure of A could not be established";
  return v;
}

}  // namespace perp
