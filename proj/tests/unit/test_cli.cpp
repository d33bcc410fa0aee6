#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "perpetuity/commands.hpp"
#include "perpetuity/config.hpp"

using namespace perp;
namespace fs = std::filesystem;

namespace {

const char* kExample1 = R"(# Beta(2,1) multiplier, unit exponential increments
joint.A.variant = beta
joint.A.p = 2
joint.A.q = 1
joint.B.variant = exponential
joint.B.rate = 1
sim.n_samples = 100000
sim.seed = 3
)";

struct Sandbox {
  fs::path dir;
  explicit Sandbox(const std::string& name) : dir(fs::temp_directory_path() / ("perp_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Sandbox() { fs::remove_all(dir); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(dir / name) << text;
    return (dir / name).string();
  }
  std::string read(const std::string& name) const {
    std::ifstream in(dir / name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
};

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "perpetuity");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t data_rows(const std::string& csv) {
  std::size_t rows = 0;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#' && line != "x") ++rows;
  }
  return rows;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("round trip") {
    const auto cfg = parse_config(std::string(kExample1) + "moments.r = 0.5\ntail.x_grid = 1, 2.5, 4\n");
    CHECK(parse_config(serialize_config(cfg)) == cfg);
    CHECK(cfg.x_grid == std::vector<double>{1.0, 2.5, 4.0});

    const auto nested = parse_config(R"(joint.A.variant = point_mass
joint.A.value = 0.5
joint.B.variant = mixture
joint.B.components.0.weight = 0.25
joint.B.components.0.variant = point_mass
joint.B.components.0.value = 0
joint.B.components.1.weight = 0.75
joint.B.components.1.variant = difference
joint.B.components.1.left.variant = exponential
joint.B.components.1.left.rate = 1
joint.B.components.1.right.variant = scaled
joint.B.components.1.right.factor = 0.1
joint.B.components.1.right.inner.variant = gamma
joint.B.components.1.right.inner.shape = 2
joint.B.components.1.right.inner.rate = 3
)");
    CHECK(parse_config(serialize_config(nested)) == nested);
    CHECK_NOTHROW(build_joint(nested));

    const auto th = parse_config(R"(joint.dependence = threshold
joint.zeta1 = 0.3
joint.zeta2 = 0.7
joint.q = 1
joint.B.variant = poly_exp
joint.B.b = 1
joint.B.power = 2
)");
    CHECK(parse_config(serialize_config(th)) == th);
    CHECK(build_joint(th).a_is_derived());
  }

  TEST_CASE("unknown and duplicate keys are rejected with their path") {
    try {
      parse_config(std::string(kExample1) + "joint.A.disttribution = beta\n");
      FAIL("accepted an unknown key");
    } catch (const ConfigError& e) {
      CHECK(e.path() == "joint.A.disttribution");
    }
    CHECK_THROWS_AS(parse_config(std::string(kExample1) + "sim.seed = 4\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("sim.n_samples = lots\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("joint.A.variant = beta\njoint.A.p = 2\njoint.B.variant = cauchy\n"), ConfigError);
  }

  TEST_CASE("hash ignores execution details") {
    auto a = parse_config(kExample1);
    auto b = a;
    b.n_streams = 8;
    b.out_dir = "/elsewhere";
    CHECK(config_hash(a) == config_hash(b));
    b.seed = 4;
    CHECK(config_hash(a) != config_hash(b));
  }
}

TEST_SUITE("cli") {
  TEST_CASE("simulate writes samples and a summary") {
    Sandbox box("simulate");
    const auto cfg = box.write("e1.cfg", kExample1);
    const auto r = run({"--config", cfg, "--out", box.dir.string(), "--no-timestamp", "simulate"});
    CHECK(r.code == kExitOk);
    CHECK(data_rows(box.read("samples.csv")) == 100000);
    const auto js = nlohmann::json::parse(box.read("simulate.json"));
    CHECK(js["n_samples"] == 100000);
    CHECK(js["truncation"]["hit_max_terms"] == 0);
    CHECK_FALSE(js.contains("generated_at"));
  }

  TEST_CASE("divergent and malformed configs") {
    Sandbox box("errors");
    const auto big = box.write("big.cfg", "joint.A.variant = point_mass\njoint.A.value = 1.5\n"
                                          "joint.B.variant = exponential\njoint.B.rate = 1\n");
    const auto r = run({"--config", big, "--out", box.dir.string(), "simulate"});
    CHECK(r.code == kExitDivergence);
    CHECK(r.err.find("E log|A|") != std::string::npos);
    CHECK(r.err.find(">= 0") != std::string::npos);

    const auto bad = box.write("bad.cfg", std::string(kExample1) + "joint.B.disttribution = exponential\n");
    const auto b = run({"--config", bad, "--out", box.dir.string(), "simulate"});
    CHECK(b.code == kExitConfig);
    CHECK(b.err.find("disttribution") != std::string::npos);

    CHECK(run({"--config", (box.dir / "missing.cfg").string(), "simulate"}).code == kExitConfig);
    CHECK(run({"--bogus-flag"}).code == kExitConfig);
  }

  TEST_CASE("moments verdicts") {
    Sandbox box("moments");
    const auto fin = box.write("fin.cfg", std::string(kExample1) + "moments.r = 0.5\n");
    auto r = run({"--config", fin, "--out", box.dir.string(), "--no-timestamp", "moments"});
    CHECK(r.code == kExitOk);
    auto js = nlohmann::json::parse(box.read("moments.json"));
    CHECK(js["verdict"] == "Finite");
    CHECK(js["theorem_used"] == "positive_A");

    const auto inf = box.write("inf.cfg", std::string(kExample1) + "moments.r = 1.5\n");
    CHECK(run({"--config", inf, "--out", box.dir.string(), "moments"}).code == kExitOk);
    CHECK(nlohmann::json::parse(box.read("moments.json"))["verdict"] == "Infinite");

    const auto open = box.write("open.cfg", R"(joint.A.variant = mixture
joint.A.components.0.weight = 0.5
joint.A.components.0.variant = point_mass
joint.A.components.0.value = 0.5
joint.A.components.1.weight = 0.5
joint.A.components.1.variant = point_mass
joint.A.components.1.value = -0.5
joint.B.variant = difference
joint.B.left.variant = exponential
joint.B.left.rate = 1
joint.B.right.variant = exponential
joint.B.right.rate = 1
moments.r = 0.5
)");
    CHECK(run({"--config", open, "--out", box.dir.string(), "moments"}).code == kExitOk);
    js = nlohmann::json::parse(box.read("moments.json"));
    CHECK(js["verdict"] == "Inconclusive");
    CHECK(js["note"].get<std::string>().find("no criterion") != std::string::npos);
    CHECK(run({"--config", open, "--out", box.dir.string(), "--strict", "moments"}).code == kExitStrictInconclusive);

    const auto nor = box.write("nor.cfg", kExample1);
    CHECK(run({"--config", nor, "--out", box.dir.string(), "moments"}).code == kExitConfig);
  }

  TEST_CASE("tail predictions") {
    Sandbox box("tail");
    const auto e1 = box.write("e1.cfg", kExample1);
    CHECK(run({"--config", e1, "--out", box.dir.string(), "--no-timestamp", "tail"}).code == kExitOk);
    auto js = nlohmann::json::parse(box.read("tail.json"))["prediction"];
    CHECK(js["theorem"] == "beta_kernel");
    CHECK(js["constant"].get<double>() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(js["form"]["c"] == 2.0);
    CHECK(js["form"]["b"] == 1.0);

    const auto half = box.write("half.cfg", "joint.A.variant = point_mass\njoint.A.value = 0.5\n"
                                            "joint.B.variant = exponential\njoint.B.rate = 1\n");
    CHECK(run({"--config", half, "--out", box.dir.string(), "tail"}).code == kExitOk);
    js = nlohmann::json::parse(box.read("tail.json"))["prediction"];
    CHECK(js["theorem"] == "expected_psi");
    CHECK(js["constant"].get<double>() == doctest::Approx(3.46275).epsilon(1e-5));

    const auto th = box.write("th.cfg", R"(joint.dependence = threshold
joint.zeta1 = 0.3
joint.zeta2 = 0.7
joint.q = 1
joint.B.variant = poly_exp
joint.B.b = 1
joint.B.power = 2
sim.n_samples = 20000
)");
    CHECK(run({"--config", th, "--out", box.dir.string(), "tail"}).code == kExitOk);
    js = nlohmann::json::parse(box.read("tail.json"))["prediction"];
    CHECK(js["theorem"] == "conditional_f");

    const auto none = box.write("none.cfg", "joint.A.variant = beta\njoint.A.p = 2\njoint.A.q = 1\n"
                                            "joint.B.variant = uniform\njoint.B.lo = 0\njoint.B.hi = 1\n");
    const auto r = run({"--config", none, "--out", box.dir.string(), "tail"});
    CHECK(r.code == kExitNoTheorem);
    CHECK(r.err.find("nearest miss") != std::string::npos);

    const auto v = box.write("v.cfg", std::string(kExample1) + "tail.x_grid = 2, 4, 6\n");
    CHECK(run({"--config", v, "--out", box.dir.string(), "--verify", "tail"}).code == kExitOk);
    const std::string csv = box.read("tail_ratio.csv");
    CHECK(csv.rfind("x,predicted,empirical,std_err,ratio\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  }

  TEST_CASE("validate") {
    Sandbox box("validate");
    auto r = run({"--out", box.dir.string(), "validate", "E9"});
    CHECK(r.code == kExitConfig);
    r = run({"--out", box.dir.string(), "--no-timestamp", "validate", "E1"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("PASS") != std::string::npos);
    const auto big = box.write("big.cfg", "sim.n_samples = 1000000\nsim.seed = 5\n");
    r = run({"--config", big, "--out", box.dir.string(), "validate", "E3"});
    CHECK(r.code == kExitOk);
    const auto js = nlohmann::json::parse(box.read("validate_E3.json"));
    CHECK(js["tail_ratios"].size() == 5);
    // A one-term truncation draws B alone, far from the reference law.
    const auto cut = box.write("cut.cfg", "sim.n_samples = 20000\nsim.max_terms = 1\n");
    CHECK(run({"--config", cut, "--out", box.dir.string(), "validate", "E1"}).code == kExitValidationFail);
  }

  TEST_CASE("charfn") {
    Sandbox box("charfn");
    const auto cfg = box.write("cf.cfg", R"(joint.A.variant = uniform
joint.A.lo = 0
joint.A.hi = 1
joint.B.variant = difference
joint.B.left.variant = exponential
joint.B.left.rate = 2
joint.B.right.variant = exponential
joint.B.right.rate = 1
charfn.t_grid = 0, 1
)");
    CHECK(run({"--config", cfg, "--out", box.dir.string(), "--no-timestamp", "charfn"}).code == kExitOk);
    const std::string csv = box.read("charfn.csv");
    CHECK(csv.rfind("t,re,im\n0,1,0\n1,0.37276995", 0) == 0);
    const auto bad = box.write("bad.cfg", "joint.A.variant = point_mass\njoint.A.value = 0.5\n"
                                          "joint.B.variant = exponential\njoint.B.rate = 1\n");
    CHECK(run({"--config", bad, "--out", box.dir.string(), "charfn"}).code == kExitNoTheorem);
  }

  TEST_CASE("identical config and seed give byte-identical reports") {
    Sandbox a("det_a"), b("det_b");
    const auto cfg = a.write("e1.cfg", std::string(kExample1) + "moments.r = 0.5\ntail.x_grid = 1, 3\n");
    for (const char* cmd : {"simulate", "moments", "tail"}) {
      INFO(cmd);
      CHECK(run({"--config", cfg, "--out", a.dir.string(), "--no-timestamp", "--seed", "11", cmd}).code == kExitOk);
      CHECK(run({"--config", cfg, "--out", b.dir.string(), "--no-timestamp", "--seed", "11", cmd}).code == kExitOk);
    }
    for (const char* f : {"samples.csv", "simulate.json", "moments.json", "tail.json"}) {
      INFO(f);
      CHECK(a.read(f) == b.read(f));
      CHECK_FALSE(a.read(f).empty());
    }
    const auto stamped = run({"--config", cfg, "--out", a.dir.string(), "moments"});
    CHECK(stamped.out.find("generated_at") != std::string::npos);
  }

  TEST_CASE("help exits cleanly") { CHECK(run({"--help"}).code == kExitOk); }
}
