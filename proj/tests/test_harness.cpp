#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rplo/harness.hpp"
#include "rplo/rng.hpp"

using namespace rplo;
using namespace rplo::harness;

TEST_SUITE_BEGIN("harness");

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("parse_config applies defaults and rejects unknown fields") {
  const ExperimentConfig cfg = parse_config(R"({"kind":"decomp","seed":9})");
  CHECK(cfg.kind == "decomp");
  CHECK(cfg.seed == 9);
  CHECK(cfg.delta == 1e-6);
  CHECK(cfg.methods.size() == 1);

  CHECK_THROWS_WITH_AS(parse_config(R"({"kind":"decomp","bogus":1})"),
                       doctest::Contains("bogus"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(R"({"eta":[]})"), doctest::Contains("eta"),
                       ConfigError);
  CHECK_THROWS_AS(parse_config("not json"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"method":{"preset":"nope"}})"), ConfigError);
}

TEST_CASE("method presets include the split-learning-rate baseline") {
  const MethodSpec lora_plus = method_preset("lora_plus", 0.01);
  CHECK(lora_plus.lr_L == doctest::Approx(16.0 * lora_plus.lr_R));
  const MethodSpec scaled = method_preset("scaled_adamw", 0.01);
  CHECK(scaled.beta1 == 0.7);
  CHECK(scaled.beta2 == 0.8);
  const MethodSpec sgd = method_preset("sgd", 0.5);
  CHECK(sgd.rule == opt::Rule::gd);
  CHECK(sgd.mode == opt::Mode::plain);
}

TEST_CASE("csv lines round trip through the schema parser") {
  RunRecord rec;
  rec.run_id = 3;
  rec.method = "scaled_gd";
  rec.kind = "decomp";
  rec.n = 50;
  rec.kappa = 10.0;
  rec.eta = 0.5;
  rec.iter = 12;
  rec.loss = 1.25e-7;
  rec.max_dist = 3.0e-4;
  rec.increment_norm = std::numeric_limits<double>::quiet_NaN();
  rec.delta_hat = std::numeric_limits<double>::infinity();
  rec.wall_ms = 0.0;
  rec.seed = 77;
  const RunRecord back = parse_csv_line(csv_line(rec));
  CHECK(back.run_id == rec.run_id);
  CHECK(back.method == rec.method);
  CHECK(back.loss == rec.loss);
  CHECK(back.max_dist == rec.max_dist);
  CHECK(std::isnan(back.increment_norm));
  CHECK(std::isinf(back.delta_hat));
  CHECK(back.seed == rec.seed);
  CHECK_THROWS_AS(parse_csv_line("1,2,3"), ConfigError);
  CHECK_THROWS_AS(parse_csv_line(csv_line(rec) + ",extra"), ConfigError);
}

TEST_CASE("identical configs produce byte-identical csv files") {
  ExperimentConfig cfg = parse_config(
      R"({"kind":"cond-sweep","seed":5,"m":12,"n":12,"r":2,"kappa":[1,4],
          "eta":[0.5],"iters":40,"method":{"preset":"scaled_gd"}})");
  const auto path_a = temp_path("rplo_det_a.csv");
  const auto path_b = temp_path("rplo_det_b.csv");
  write_csv(path_a.string(), cfg, run(cfg));
  write_csv(path_b.string(), cfg, run(cfg));
  const std::string a = read_file(path_a);
  const std::string b = read_file(path_b);
  CHECK(a == b);
  CHECK(a.find(kCsvHeader) != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(path_a.string() + ".tmp"));
  std::filesystem::remove(path_a);
  std::filesystem::remove(path_b);
}

TEST_CASE("every emitted row validates against the schema with monotone iters") {
  ExperimentConfig cfg = parse_config(
      R"({"kind":"decomp","seed":3,"m":10,"n":8,"r":2,"kappa":[5],"eta":[0.5],
          "iters":25,"method":{"preset":"scaled_gd"}})");
  const RunResult result = run(cfg);
  REQUIRE(!result.records.empty());
  std::int64_t prev_iter = -1;
  for (const RunRecord& rec : result.records) {
    const RunRecord back = parse_csv_line(csv_line(rec));
    CHECK(back.kind == "decomp");
    CHECK(rec.iter == prev_iter + 1);
    prev_iter = rec.iter;
    CHECK(rec.wall_ms == 0.0);  // timing disabled by default
  }
  // converged well before the cap
  CHECK(result.records.back().max_dist <= cfg.tol);
}

TEST_CASE("compare runs every method from the same initialization") {
  ExperimentConfig cfg = parse_config(
      R"({"kind":"compare","seed":11,"m":10,"n":10,"r":2,"kappa":[10],
          "iters":30,"methods":[{"preset":"scaled_gd","lr":0.5},
                                 {"preset":"scaled_gd","lr":0.5}]})");
  const RunResult result = run(cfg);
  std::vector<RunRecord> first, second;
  for (const RunRecord& rec : result.records)
    (rec.run_id == 0 ? first : second).push_back(rec);
  REQUIRE(first.size() == second.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(first[i].loss == second[i].loss);  // identical trajectories
    CHECK(first[i].iter == second[i].iter);
  }
  CHECK_THROWS_AS(compare({method_preset("sgd", 0.1)}, cfg), ConfigError);
}

TEST_CASE("compare shows the preconditioned speedup on an ill-conditioned target") {
  ExperimentConfig cfg = parse_config(
      R"({"kind":"compare","seed":19,"m":30,"n":30,"r":3,"kappa":[100],
          "iters":20000,"tol":1e-6,
          "methods":[{"preset":"scaled_gd","lr":0.5},{"preset":"sgd","lr":0.5}]})");
  const RunResult result = run(cfg);
  std::int64_t scaled_iters = 0, plain_iters = 0;
  for (const RunRecord& rec : result.records)
    (rec.run_id == 0 ? scaled_iters : plain_iters) = rec.iter;
  CHECK(plain_iters >= 5 * scaled_iters);
}

TEST_CASE("width-sweep and toy runs emit the documented layouts") {
  ExperimentConfig wcfg = parse_config(
      R"({"kind":"width-sweep","seed":2,"r":3,"widths":[16,32,64,128],"trials":2,
          "steps":2,"method":{"preset":"scaled_sign_adam","lr":0.1}})");
  const RunResult wres = run(wcfg);
  CHECK(wres.records.size() == 4 * 2 * 2);
  for (const auto& rec : wres.records) CHECK(rec.increment_norm >= 0.0);

  ExperimentConfig tcfg = parse_config(
      R"({"kind":"toy","seed":2,"widths":[16,32],"trials":2,"steps":3,
          "c_exponent":-1.0,"eta_scale":0.01,
          "method":{"preset":"scaled_gd","name":"toy_scaled"}})");
  const RunResult tres = run(tcfg);
  CHECK(tres.records.size() == 2 * 2 * 3 * 4);  // widths x trials x steps x quantities
  bool saw_d3 = false;
  for (const auto& rec : tres.records)
    if (rec.method == "toy_scaled:d3") saw_d3 = true;
  CHECK(saw_d3);
}

TEST_CASE("arrangement runs respect the bound in every row") {
  ExperimentConfig cfg = parse_config(
      R"({"kind":"arrangements","seed":6,"n":12,"d":3,"instances":20,"samples":3000})");
  const RunResult result = run(cfg);
  REQUIRE(result.records.size() == 20);
  for (const auto& rec : result.records) {
    CHECK(rec.loss <= rec.max_dist);  // sampled count within the bound
    if (!std::isnan(rec.increment_norm)) CHECK(rec.loss == rec.increment_norm);
  }
}

TEST_CASE("multiterm runs report measured isometry defects") {
  ExperimentConfig cfg = parse_config(
      R"({"kind":"multiterm","seed":8,"n":60,"d":6,"c":5,"r":2,"P":2,
          "kappa":[4],"eta":[0.5],"iters":10,"rho2":1e-3,"rip_trials":50})");
  const RunResult result = run(cfg);
  CHECK(result.measured.find("delta_hat=") != std::string::npos);
  CHECK(result.measured.find("cross_term_max=") != std::string::npos);
  REQUIRE(result.records.size() == 11);
  CHECK(result.records.front().delta_hat <= 0.05);
}

TEST_CASE("cli binary honors exit codes when available") {
  const char* cli = std::getenv("RPLO_CLI");
  if (cli == nullptr) return;  // only wired up under ctest
  const std::string base = std::string("\"") + cli + "\"";
  const auto out = temp_path("rplo_cli_smoke.csv");

  std::string cmd = base + " decomp --seed 4 --out " + out.string() + " --quiet";
  CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  CHECK(std::filesystem::exists(out));
  std::filesystem::remove(out);

  cmd = base + " decomp --config /nonexistent.json --quiet 2>/dev/null";
  CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 3);

  const auto bad = temp_path("rplo_bad_config.json");
  std::ofstream(bad) << R"({"kind":"decomp","bogus":true})";
  cmd = base + " decomp --config " + bad.string() + " --quiet 2>/dev/null";
  CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 2);
  std::filesystem::remove(bad);
}

TEST_SUITE_END();
