#include "perpetuity/commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "perpetuity/asymptotics.hpp"
#include "perpetuity/config.hpp"
#include "perpetuity/criteria.hpp"
#include "perpetuity/oracle.hpp"
#include "perpetuity/simulate.hpp"

namespace perp {

namespace {

using nlohmann::json;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string num(double x) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

ExperimentConfig load(const CommandOptions& opt, bool require_file) {
  ExperimentConfig cfg;
  if (!opt.config_path.empty()) {
    cfg = load_config(opt.config_path);
  } else if (require_file) {
    throw ConfigError("--config", "an experiment config is required");
  }
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.out_dir) cfg.out_dir = *opt.out_dir;
  return cfg;
}

std::filesystem::path out_path(const ExperimentConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return std::filesystem::path(cfg.out_dir) / name;
}

void stamp(json& j, const CommandOptions& opt) {
  if (opt.no_timestamp) return;
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  j["generated_at"] = buf;
}

void emit(json j, const std::string& name, const ExperimentConfig& cfg, const CommandOptions& opt, std::ostream& out) {
  stamp(j, opt);
  const std::string text = j.dump(2) + "\n";
  std::ofstream(out_path(cfg, name)) << text;
  out << text;
}

json trace_of(const std::vector<ConditionEntry>& trace) {
  json a = json::array();
  for (const auto& c : trace) a.push_back(to_json(c));
  return a;
}

// Counts conditions not established in a refusal trace.
std::size_t misses(const json& trace) {
  if (!trace.is_array() || trace.empty()) return 1000;
  return static_cast<std::size_t>(
      std::count_if(trace.begin(), trace.end(), [](const json& c) { return c.value("status", "") != "true"; }));
}

struct Refusal {
  std::string theorem;
  std::string reason;
  json trace;
};

std::optional<TailPrediction> try_theorem(const std::string& name, const JointInput& joint, const ExperimentConfig& cfg,
                                          std::vector<Refusal>& refusals) {
  const auto tm = tail_model(joint.B());
  try {
    if (name == "beta_kernel") {
      const auto lambda = beta_kernel_lambda(joint.A());
      const auto* e = tm ? std::get_if<ExpPlusRemainderTail>(&*tm) : nullptr;
      std::vector<ConditionEntry> pre = {
          {"A_B_independent", to_tri(joint.is_independent()), {}, {}},
          {"A_is_beta_lambda_1", to_tri(lambda.has_value()), {}, {}},
          {"B_tail_exp_plus_remainder", to_tri(e != nullptr), {}, {}},
      };
      if (!joint.is_independent() || !lambda || !e) {
        refusals.push_back({name, "hypotheses not met", trace_of(pre)});
        return std::nullopt;
      }
      return beta_kernel_constant(*lambda, *e, left_tail_of(joint.B()));
    }
    if (name == "conditional_f") {
      const auto* g = tm ? std::get_if<GammaLikeTail>(&*tm) : nullptr;
      if (!g) {
        refusals.push_back({name, "right tail of B is not gamma-like",
                            trace_of({{"B_tail_gamma_like", Tri::False, {}, {}}})});
        return std::nullopt;
      }
      return conditional_f_constant(joint, *g, sim_config(cfg));
    }
    if (!tm) {
      refusals.push_back({name, "no tail model for B", trace_of({{"B_tail_model_available", Tri::False, {}, {}}})});
      return std::nullopt;
    }
    return expected_psi_constant(joint, cfg.tail_b.value_or(tail_rate(*tm)), sim_config(cfg));
  } catch (const PredictionRefused& e) {
    refusals.push_back({name, e.what(), e.trace()});
  } catch (const DispatchError& e) {
    refusals.push_back({name, e.what(), json::array()});
  }
  return std::nullopt;
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DispatchError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::domain_error& e) {
    err << "divergence: " << e.what() << "\n";
    return kExitDivergence;
  }
}

}  // namespace

int cmd_simulate(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load(opt, true);
    const JointInput joint = build_joint(cfg);
    const NondegeneracyReport nd = validate_nondegeneracy(joint);
    if (!nd.ok) {
      err << "config error: degenerate joint law (" << nd.failed << "): " << nd.note << "\n";
      return static_cast<int>(kExitConfig);
    }
    const ConvergenceReport conv = check_convergence(joint);
    if (conv.verdict == Convergence::Diverges && !cfg.override_convergence) {
      err << "divergence: E log|A| = " << num(conv.e_log_abs_A) << " >= 0, the series does not converge ("
          << conv.evidence << ")\n";
      return static_cast<int>(kExitDivergence);
    }
    const SimConfig sim = sim_config(cfg);
    const SampleBatch batch = sample_batch(joint, sim);
    const std::uint64_t hash = config_hash(cfg);
    {
      std::ofstream csv(out_path(cfg, "samples.csv"));
      write_batch_csv(csv, batch, hash);
    }
    json tail = json::array();
    for (const auto& t : empirical_tail(batch, cfg.x_grid)) {
      tail.push_back({{"x", t.x}, {"p_hat", t.p_hat}, {"std_err", t.std_err}});
    }
    json j = {{"command", "simulate"},
              {"config_hash", hex64(hash)},
              {"seed", cfg.seed},
              {"n_samples", batch.values.size()},
              {"truncation", {{"mean_terms", batch.truncation.mean_terms}, {"hit_max_terms", batch.truncation.hit_max_terms}}},
              {"convergence",
               {{"verdict", std::string(to_string(conv.verdict))}, {"E_log_abs_A", json_number(conv.e_log_abs_A)},
                {"evidence", conv.evidence}}},
              {"empirical_tail", tail},
              {"samples_file", "samples.csv"}};
    emit(j, "simulate.json", cfg, opt, out);
    return static_cast<int>(kExitOk);
  });
}

int cmd_moments(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load(opt, true);
    if (!cfg.r) throw ConfigError("moments.r", "missing");
    const JointInput joint = build_joint(cfg);
    const MomentVerdict v = exp_moment_verdict(joint, *cfg.r, support_unbounded_right(joint));
    json j = to_json(v);
    j["command"] = "moments";
    j["config_hash"] = hex64(config_hash(cfg));
    emit(j, "moments.json", cfg, opt, out);
    if (opt.strict && v.verdict == Verdict::Inconclusive) {
      err << "inconclusive verdict under --strict: " << v.note << "\n";
      return static_cast<int>(kExitStrictInconclusive);
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_tail(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load(opt, true);
    const JointInput joint = build_joint(cfg);
    std::vector<std::string> order = {"beta_kernel", "conditional_f", "expected_psi"};
    if (cfg.tail_theorem != "auto") order = {cfg.tail_theorem};
    std::vector<Refusal> refusals;
    std::optional<TailPrediction> pred;
    for (const auto& name : order) {
      pred = try_theorem(name, joint, cfg, refusals);
      if (pred) break;
    }
    if (!pred) {
      const auto nearest = std::min_element(refusals.begin(), refusals.end(), [](const Refusal& a, const Refusal& b) {
        return misses(a.trace) < misses(b.trace);
      });
      err << "no tail theorem applies";
      if (nearest != refusals.end()) {
        err << "; nearest miss: " << nearest->theorem << " (" << nearest->reason << ")\n" << nearest->trace.dump(2);
      }
      err << "\n";
      return static_cast<int>(kExitNoTheorem);
    }
    json j = {{"command", "tail"}, {"config_hash", hex64(config_hash(cfg))}, {"prediction", to_json(*pred)}};
    if (opt.verify) {
      const SampleBatch batch = sample_batch(joint, sim_config(cfg));
      std::vector<double> xs = cfg.x_grid;
      if (xs.empty()) {
        std::vector<double> v = batch.values;
        std::sort(v.begin(), v.end());
        for (double level : {1e-1, 1e-2, 1e-3, 1e-4}) {
          const auto k = static_cast<std::size_t>(level * static_cast<double>(v.size()));
          if (k > 0) xs.push_back(v[v.size() - k]);
        }
      }
      std::ofstream csv(out_path(cfg, "tail_ratio.csv"));
      csv << "x,predicted,empirical,std_err,ratio\n";
      json rows = json::array();
      for (const auto& t : empirical_tail(batch, xs)) {
        const double p = pred->predict(t.x);
        const double ratio = t.p_hat / p;
        csv << num(t.x) << ',' << num(p) << ',' << num(t.p_hat) << ',' << num(t.std_err) << ',' << num(ratio) << '\n';
        rows.push_back({{"x", t.x}, {"predicted", p}, {"empirical", t.p_hat}, {"std_err", t.std_err},
                        {"ratio", json_number(ratio)}});
      }
      j["verify"] = rows;
    }
    emit(j, "tail.json", cfg, opt, out);
    return static_cast<int>(kExitOk);
  });
}

int cmd_validate(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load(opt, false);
    const std::string id = opt.case_id.empty() ? cfg.case_id : opt.case_id;
    const auto c = find_case(id);
    if (!c) {
      err << "config error: unknown reference case '" << id << "' (known: E1..E5)\n";
      return static_cast<int>(kExitConfig);
    }
    const ComparisonReport rep = compare_empirical(*c, sim_config(cfg));
    json j = to_json(rep);
    j["command"] = "validate";
    stamp(j, opt);
    std::ofstream(out_path(cfg, "validate_" + id + ".json")) << j.dump(2) << "\n";
    write_table(out, rep);
    return static_cast<int>(rep.pass ? kExitOk : kExitValidationFail);
  });
}

int cmd_charfn(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load(opt, true);
    const JointInput joint = build_joint(cfg);
    const std::vector<double> ts = cfg.t_grid.empty() ? std::vector<double>{0.25, 0.5, 1.0, 2.0} : cfg.t_grid;
    std::vector<CfResult> values;
    try {
      for (double t : ts) values.push_back(perpetuity_cf(joint, t, cfg.cf_tol));
    } catch (const PredictionRefused& e) {
      err << "characteristic function refused: " << e.what() << "\n" << e.trace().dump(2) << "\n";
      return static_cast<int>(kExitNoTheorem);
    }
    std::ofstream csv(out_path(cfg, "charfn.csv"));
    csv << "t,re,im\n";
    json rows = json::array();
    for (std::size_t i = 0; i < ts.size(); ++i) {
      csv << num(ts[i]) << ',' << num(values[i].value.real()) << ',' << num(values[i].value.imag()) << '\n';
      rows.push_back({{"t", ts[i]}, {"re", values[i].value.real()}, {"im", values[i].value.imag()},
                      {"abs_error", values[i].abs_error}});
    }
    emit({{"command", "charfn"}, {"config_hash", hex64(config_hash(cfg))}, {"values", rows}}, "charfn.json", cfg, opt,
         out);
    return static_cast<int>(kExitOk);
  });
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulation, moment criteria and tail asymptotics for perpetuities X = AX' + B"};
  app.require_subcommand(1);
  CommandOptions opt;
  std::uint64_t seed = 0;
  std::string out_dir;
  app.add_option("--config", opt.config_path, "experiment config file");
  auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides sim.seed)");
  auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides output.dir)");
  app.add_flag("--strict", opt.strict, "exit 4 on an inconclusive moment verdict");
  app.add_flag("--verify", opt.verify, "simulate and tabulate empirical/predicted tail ratios");
  app.add_flag("--no-timestamp", opt.no_timestamp, "omit timestamps so reports are byte-reproducible");

  auto* sim = app.add_subcommand("simulate", "draw perpetuity samples");
  auto* mom = app.add_subcommand("moments", "finiteness of E exp(rX)");
  auto* tail = app.add_subcommand("tail", "tail asymptote of X");
  auto* val = app.add_subcommand("validate", "compare simulation with a reference case");
  auto* cf = app.add_subcommand("charfn", "characteristic function of X on a t-grid");
  val->add_option("case", opt.case_id, "reference case id (E1..E5)");
  for (auto* s : {sim, mom, tail, val, cf}) s->fallthrough();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (seed_opt->count()) opt.seed = seed;
  if (out_opt->count()) opt.out_dir = out_dir;
  if (sim->parsed()) return cmd_simulate(opt, out, err);
  if (mom->parsed()) return cmd_moments(opt, out, err);
  if (tail->parsed()) return cmd_tail(opt, out, err);
  if (val->parsed()) return cmd_validate(opt, out, err);
  return cmd_charfn(opt, out, err);
}

}  // namespace perp
