#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rplo/mat.hpp"
#include "rplo/optimizers.hpp"

namespace rplo::harness {

/// One optimizer under test. `name` tags CSV rows.
struct MethodSpec {
  std::string name = "sgd";
  opt::Rule rule = opt::Rule::gd;
  opt::Mode mode = opt::Mode::plain;
  double lr_L = 0.1;
  double lr_R = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  /// "constant" keeps lr_R fixed across a width sweep; "inv_width"
  /// scales it by (first width / width), i.e. Theta(1/n).
  std::string lr_R_scaling = "constant";
};

/// Named presets: sgd, scaled_gd, adamw, scaled_adamw,
/// scaled_adamw_processed, sign_adam, scaled_sign_adam, and lora_plus
/// (plain AdamW with the 2^4 left/right learning-rate ratio).
MethodSpec method_preset(const std::string& name, double lr);

struct ExperimentConfig {
  std::string kind;  // decomp | multiterm | cond-sweep | width-sweep | toy | arrangements | compare
  std::uint64_t seed = 0;
  std::string out = "out.csv";
  bool timing = false;
  bool quiet = false;

  Index n = 50, m = 50, d = 20, c = 20;
  Index r = 5;
  int P = 3;
  std::vector<double> kappa{10.0};
  std::vector<double> eta{0.5};
  int iters = 200;
  double tol = 1e-6;
  double delta = 1e-6;

  std::string instance = "compliant";  // multiterm: gaussian | compliant
  double rho2 = 1e-3;
  int rip_trials = 400;

  double init_scale = 0.5;  // decomp: product scale of the damped spectral init

  std::vector<double> widths{64, 128, 256, 512, 1024, 2048, 4096};
  int trials = 9;
  int steps = 2;
  double c_exponent = -1.0;
  double eta_scale = 1e-3;

  int instances = 50;   // arrangements: number of random X draws
  int samples = 10000;  // arrangements: Gaussian u draws per X

  std::vector<MethodSpec> methods{method_preset("scaled_gd", 0.5)};
};

/// Parses the JSON config text; every field is optional and falls back
/// to the defaults above. Unknown fields are a ConfigError naming the
/// field, as is any value of the wrong type.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

/// Canonical compact echo of a parsed config; embedded in the CSV header
/// so outputs are self-describing.
std::string config_echo(const ExperimentConfig& cfg);

/// One CSV row. Columns unused by an experiment kind hold NaN.
struct RunRecord {
  std::uint64_t run_id = 0;
  std::string method;
  std::string kind;
  std::int64_t n = 0;
  double kappa = 0.0;
  double eta = 0.0;
  std::int64_t iter = 0;
  double loss = 0.0;
  double max_dist = 0.0;
  double increment_norm = 0.0;
  double delta_hat = 0.0;
  double wall_ms = 0.0;
  std::uint64_t seed = 0;
};

inline constexpr const char* kCsvHeader =
    "run_id,method,kind,n,kappa,eta,iter,loss,max_dist,increment_norm,"
    "delta_hat,wall_ms,seed";

struct RunResult {
  std::vector<RunRecord> records;
  /// Extra measured quantities (e.g. multiterm delta_hat and cross-term
  /// norms), echoed as a CSV header comment.
  std::string measured;
};

/// Runs the configured experiment. Deterministic up to wall_ms, which is
/// only measured when cfg.timing is set and written as 0 otherwise.
RunResult run(const ExperimentConfig& cfg);

/// Runs every method from the identical seed-derived initialization and
/// returns the records ordered by (run index, iter).
RunResult compare(const std::vector<MethodSpec>& methods,
                  const ExperimentConfig& cfg);

std::string csv_line(const RunRecord& rec);

/// Atomically writes header comments, the fixed header row, and the
/// records (temp file + rename, so interrupted runs leave no partial file).
void write_csv(const std::string& path, const ExperimentConfig& cfg,
               const RunResult& result);

/// Round-trips one formatted CSV data line back into a record; throws
/// ConfigError on any malformed field. Used to validate the schema.
RunRecord parse_csv_line(const std::string& line);

}  // namespace rplo::harness
