#include "perpetuity/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace perp {

namespace {

using Flat = std::map<std::string, std::string>;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool valid_key(const std::string& k) {
  if (k.empty() || k.front() == '.' || k.back() == '.' || k.find("..") != std::string::npos) return false;
  return std::all_of(k.begin(), k.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; });
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key, "expected a number, got '" + v + "'");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key, "expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(key, "expected true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  return out;
}

std::string fmt(double x) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
  return out;
}

struct VariantShape {
  std::vector<std::string> params;
  std::vector<std::string> children;
  bool components = false;
};

const std::map<std::string, VariantShape>& shapes() {
  static const std::map<std::string, VariantShape> s = {
      {"point_mass", {{"value"}, {}}},
      {"exponential", {{"rate"}, {}}},
      {"gamma", {{"rate", "shape"}, {}}},
      {"beta", {{"p", "q"}, {}}},
      {"uniform", {{"hi", "lo"}, {}}},
      {"negated", {{}, {"inner"}}},
      {"shifted", {{"offset"}, {"inner"}}},
      {"scaled", {{"factor"}, {"inner"}}},
      {"mixture", {{}, {}, true}},
      {"difference", {{}, {"left", "right"}}},
      {"poly_exp", {{"b", "power"}, {}}},
      {"neglog_ratio", {{"b", "lambda"}, {}}},
  };
  return s;
}

// Consumes every key under `prefix` (with trailing dot) from `flat`.
LawSpec parse_law(Flat& flat, const std::string& prefix, bool with_weight) {
  const std::string vkey = prefix + "variant";
  const auto it = flat.find(vkey);
  if (it == flat.end()) throw ConfigError(vkey, "missing");
  LawSpec spec;
  spec.variant = it->second;
  flat.erase(it);
  const auto sh = shapes().find(spec.variant);
  if (sh == shapes().end()) throw ConfigError(vkey, "unknown variant '" + spec.variant + "'");
  std::vector<std::string> params = sh->second.params;
  if (with_weight) params.push_back("weight");
  std::sort(params.begin(), params.end());
  for (const auto& p : params) {
    const auto f = flat.find(prefix + p);
    if (f == flat.end()) throw ConfigError(prefix + p, "missing");
    spec.params.emplace_back(p, to_double(f->first, f->second));
    flat.erase(f);
  }
  for (const auto& c : sh->second.children) spec.children.emplace_back(c, parse_law(flat, prefix + c + ".", false));
  if (sh->second.components) {
    std::set<std::size_t> idx;
    const std::string cp = prefix + "components.";
    for (const auto& [k, v] : flat) {
      if (k.rfind(cp, 0) != 0) continue;
      const std::string rest = k.substr(cp.size());
      const std::string num = rest.substr(0, rest.find('.'));
      idx.insert(static_cast<std::size_t>(to_u64(cp + num, num)));
    }
    if (idx.empty()) throw ConfigError(cp + "0.variant", "mixture needs at least one component");
    std::size_t expect = 0;
    for (std::size_t i : idx) {
      if (i != expect++) throw ConfigError(cp + std::to_string(expect - 1), "component indices must be 0, 1, 2, ...");
    }
    std::vector<std::pair<std::string, LawSpec>> comps;
    for (std::size_t i : idx) {
      comps.emplace_back("components." + std::to_string(i), parse_law(flat, cp + std::to_string(i) + ".", true));
    }
    // Keep numeric order; the serializer writes them in the same order.
    for (auto& c : comps) spec.children.push_back(std::move(c));
  }
  return spec;
}

void write_law(std::ostream& os, const LawSpec& spec, const std::string& prefix) {
  os << prefix << "variant = " << spec.variant << "\n";
  for (const auto& [k, v] : spec.params) os << prefix << k << " = " << fmt(v) << "\n";
  for (const auto& [k, c] : spec.children) write_law(os, c, prefix + k + ".");
}

double param(const LawSpec& s, const std::string& name) {
  for (const auto& [k, v] : s.params) {
    if (k == name) return v;
  }
  throw ConfigError(name, "missing parameter");
}

const LawSpec& child(const LawSpec& s, const std::string& name) {
  for (const auto& [k, v] : s.children) {
    if (k == name) return v;
  }
  throw ConfigError(name, "missing part");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  Flat flat;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno), "expected 'key = value'");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (!valid_key(key)) throw ConfigError("line " + std::to_string(lineno), "malformed key '" + key + "'");
    if (!flat.emplace(key, value).second) throw ConfigError(key, "assigned twice");
  }

  ExperimentConfig cfg;
  const bool has_joint = std::any_of(flat.begin(), flat.end(), [](const auto& kv) { return kv.first.rfind("joint.", 0) == 0; });
  auto take = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = flat.find(key);
    if (it == flat.end()) return std::nullopt;
    std::string v = it->second;
    flat.erase(it);
    return v;
  };
  if (auto v = take("joint.dependence")) cfg.dependence = *v;
  if (cfg.dependence != "independent" && cfg.dependence != "threshold") {
    throw ConfigError("joint.dependence", "expected independent or threshold, got '" + cfg.dependence + "'");
  }
  if (has_joint && cfg.dependence == "threshold") {
    for (const char* k : {"joint.zeta1", "joint.zeta2", "joint.q"}) {
      if (!flat.count(k)) throw ConfigError(k, "missing (threshold dependence)");
    }
    cfg.zeta1 = to_double("joint.zeta1", *take("joint.zeta1"));
    cfg.zeta2 = to_double("joint.zeta2", *take("joint.zeta2"));
    cfg.q = to_double("joint.q", *take("joint.q"));
  } else if (has_joint) {
    cfg.A = parse_law(flat, "joint.A.", false);
  }
  if (has_joint) cfg.B = parse_law(flat, "joint.B.", false);

  if (auto v = take("sim.n_samples")) cfg.n_samples = to_u64("sim.n_samples", *v);
  if (auto v = take("sim.seed")) cfg.seed = to_u64("sim.seed", *v);
  if (auto v = take("sim.truncation_eps")) cfg.truncation_eps = to_double("sim.truncation_eps", *v);
  if (auto v = take("sim.max_terms")) cfg.max_terms = to_u64("sim.max_terms", *v);
  if (auto v = take("sim.n_streams")) cfg.n_streams = to_u64("sim.n_streams", *v);
  if (auto v = take("sim.mode")) cfg.mode = *v;
  if (cfg.mode != "series" && cfg.mode != "iterations") {
    throw ConfigError("sim.mode", "expected series or iterations, got '" + cfg.mode + "'");
  }
  if (auto v = take("sim.iterations")) cfg.iterations = to_u64("sim.iterations", *v);
  if (auto v = take("sim.override_convergence")) cfg.override_convergence = to_bool("sim.override_convergence", *v);
  if (auto v = take("moments.r")) cfg.r = to_double("moments.r", *v);
  if (auto v = take("tail.theorem")) cfg.tail_theorem = *v;
  static const std::set<std::string> theorems = {"auto", "expected_psi", "conditional_f", "beta_kernel"};
  if (!theorems.count(cfg.tail_theorem)) throw ConfigError("tail.theorem", "unknown theorem '" + cfg.tail_theorem + "'");
  if (auto v = take("tail.b")) cfg.tail_b = to_double("tail.b", *v);
  if (auto v = take("tail.x_grid")) cfg.x_grid = to_list("tail.x_grid", *v);
  if (auto v = take("charfn.t_grid")) cfg.t_grid = to_list("charfn.t_grid", *v);
  if (auto v = take("charfn.tol")) cfg.cf_tol = to_double("charfn.tol", *v);
  if (auto v = take("validate.case")) cfg.case_id = *v;
  if (auto v = take("output.dir")) cfg.out_dir = *v;

  if (!flat.empty()) throw ConfigError(flat.begin()->first, "unknown key");
  if (cfg.n_samples == 0) throw ConfigError("sim.n_samples", "must be positive");
  if (cfg.n_streams == 0) throw ConfigError("sim.n_streams", "must be positive");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  if (cfg.B) os << "joint.dependence = " << cfg.dependence << "\n";
  if (cfg.B && cfg.dependence == "threshold") {
    os << "joint.zeta1 = " << fmt(cfg.zeta1) << "\n";
    os << "joint.zeta2 = " << fmt(cfg.zeta2) << "\n";
    os << "joint.q = " << fmt(cfg.q) << "\n";
  } else if (cfg.A) {
    write_law(os, *cfg.A, "joint.A.");
  }
  if (cfg.B) write_law(os, *cfg.B, "joint.B.");
  os << "sim.n_samples = " << cfg.n_samples << "\n";
  os << "sim.seed = " << cfg.seed << "\n";
  os << "sim.truncation_eps = " << fmt(cfg.truncation_eps) << "\n";
  os << "sim.max_terms = " << cfg.max_terms << "\n";
  os << "sim.n_streams = " << cfg.n_streams << "\n";
  os << "sim.mode = " << cfg.mode << "\n";
  os << "sim.iterations = " << cfg.iterations << "\n";
  os << "sim.override_convergence = " << (cfg.override_convergence ? "true" : "false") << "\n";
  if (cfg.r) os << "moments.r = " << fmt(*cfg.r) << "\n";
  os << "tail.theorem = " << cfg.tail_theorem << "\n";
  if (cfg.tail_b) os << "tail.b = " << fmt(*cfg.tail_b) << "\n";
  if (!cfg.x_grid.empty()) os << "tail.x_grid = " << fmt_list(cfg.x_grid) << "\n";
  if (!cfg.t_grid.empty()) os << "charfn.t_grid = " << fmt_list(cfg.t_grid) << "\n";
  os << "charfn.tol = " << fmt(cfg.cf_tol) << "\n";
  if (!cfg.case_id.empty()) os << "validate.case = " << cfg.case_id << "\n";
  os << "output.dir = " << cfg.out_dir << "\n";
  return os.str();
}

Distribution build_law(const LawSpec& s, const std::string& path) {
  try {
    const std::string& v = s.variant;
    if (v == "point_mass") return point_mass(param(s, "value"));
    if (v == "exponential") return exponential(param(s, "rate"));
    if (v == "gamma") return gamma_law(param(s, "shape"), param(s, "rate"));
    if (v == "beta") return beta_law(param(s, "p"), param(s, "q"));
    if (v == "uniform") return uniform_law(param(s, "lo"), param(s, "hi"));
    if (v == "negated") return negated(build_law(child(s, "inner"), path + ".inner"));
    if (v == "shifted") return shifted(build_law(child(s, "inner"), path + ".inner"), param(s, "offset"));
    if (v == "scaled") return scaled(build_law(child(s, "inner"), path + ".inner"), param(s, "factor"));
    if (v == "difference") {
      return difference(build_law(child(s, "left"), path + ".left"), build_law(child(s, "right"), path + ".right"));
    }
    if (v == "poly_exp") return poly_exp_survival(param(s, "b"), param(s, "power"));
    if (v == "neglog_ratio") return neglog_ratio_survival(param(s, "b"), param(s, "lambda"));
    if (v == "mixture") {
      std::vector<MixtureComponent> comps;
      for (const auto& [k, c] : s.children) comps.push_back({param(c, "weight"), build_law(c, path + "." + k)});
      return mixture(std::move(comps));
    }
    throw ConfigError(path + ".variant", "unknown variant '" + v + "'");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  ExperimentConfig c = cfg;
  c.n_streams = 1;
  c.out_dir = ".";
  return fnv1a64(serialize_config(c));
}

JointInput build_joint(const ExperimentConfig& cfg) {
  if (!cfg.B) throw ConfigError("joint.B", "missing");
  Distribution B = build_law(*cfg.B, "joint.B");
  try {
    if (cfg.dependence == "threshold") return JointInput::threshold(B, cfg.zeta1, cfg.zeta2, cfg.q);
    if (!cfg.A) throw ConfigError("joint.A", "missing");
    return JointInput::independent(build_law(*cfg.A, "joint.A"), B);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("joint", e.what());
  }
}

SimConfig sim_config(const ExperimentConfig& cfg) {
  SimConfig s;
  s.n_samples = cfg.n_samples;
  s.master_seed = cfg.seed;
  s.truncation_eps = cfg.truncation_eps;
  s.max_terms = cfg.max_terms;
  s.n_streams = cfg.n_streams;
  s.mode = cfg.mode == "iterations" ? SimMode::FixedIterations : SimMode::SeriesTruncation;
  s.iterations = cfg.iterations;
  s.override_convergence = cfg.override_convergence;
  return s;
}

}  // namespace perp
