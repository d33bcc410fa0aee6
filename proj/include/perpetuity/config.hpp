#pragma once

// Experiment files: one `dotted.key = value` assignment per line, `#` starts a
// comment. Laws nest under joint.A / joint.B:
//
//   joint.A.variant = beta
//   joint.A.p = 2
//   joint.A.q = 1
//   joint.B.variant = mixture
//   joint.B.components.0.weight = 0.5
//   joint.B.components.0.variant = exponential
//   joint.B.components.0.rate = 1
//   ...
//
// Compound variants nest their parts under `inner`, `left`/`right` or
// `components.<i>`.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "perpetuity/joint.hpp"
#include "perpetuity/simulate.hpp"

namespace perp {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : std::runtime_error(path.empty() ? what : path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct LawSpec {
  std::string variant;
  std::vector<std::pair<std::string, double>> params;      // sorted by name
  std::vector<std::pair<std::string, LawSpec>> children;   // sorted by name
  bool operator==(const LawSpec&) const = default;
};

struct ExperimentConfig {
  std::string dependence = "independent";  // or "threshold"
  // Both absent when the file has no joint.* keys (e.g. overrides for the
  // built-in reference cases); A is also absent under threshold dependence.
  std::optional<LawSpec> A;
  std::optional<LawSpec> B;
  double zeta1 = 0.0;
  double zeta2 = 0.0;
  double q = 0.0;

  std::size_t n_samples = 100'000;
  std::uint64_t seed = 1;
  double truncation_eps = 1e-16;
  std::size_t max_terms = 1'000'000;
  std::size_t n_streams = 1;
  std::string mode = "series";  // or "iterations"
  std::size_t iterations = 0;
  bool override_convergence = false;

  std::optional<double> r;
  std::string tail_theorem = "auto";  // auto | expected_psi | conditional_f | beta_kernel
  std::optional<double> tail_b;
  std::vector<double> x_grid;
  std::vector<double> t_grid;
  double cf_tol = 1e-12;
  std::string case_id;
  std::string out_dir = ".";

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses the text of an experiment file. Throws ConfigError naming the
/// offending key (or line) on unknown keys, duplicates and malformed values.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Canonical text; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& cfg);

/// Hash of the settings that determine results; execution details
/// (n_streams, output directory) are excluded.
std::uint64_t config_hash(const ExperimentConfig& cfg);

Distribution build_law(const LawSpec& spec, const std::string& path = "law");
JointInput build_joint(const ExperimentConfig& cfg);
SimConfig sim_config(const ExperimentConfig& cfg);

}  // namespace perp
