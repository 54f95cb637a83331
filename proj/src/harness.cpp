#include "rplo/harness.hpp"

#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "rplo/analysis.hpp"
#include "rplo/linalg.hpp"
#include "rplo/problems.hpp"
#include "rplo/rng.hpp"

namespace rplo::harness {
namespace {

using nlohmann::json;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

opt::Rule rule_from_string(const std::string& s) {
  if (s == "gd") return opt::Rule::gd;
  if (s == "adamw") return opt::Rule::adamw;
  if (s == "sign_adam") return opt::Rule::sign_adam;
  throw ConfigError("unknown rule: " + s);
}

opt::Mode mode_from_string(const std::string& s) {
  if (s == "plain") return opt::Mode::plain;
  if (s == "scaled_raw") return opt::Mode::scaled_raw;
  if (s == "scaled_processed") return opt::Mode::scaled_processed;
  throw ConfigError("unknown mode: " + s);
}

std::string rule_to_string(opt::Rule r) {
  switch (r) {
    case opt::Rule::gd: return "gd";
    case opt::Rule::adamw: return "adamw";
    case opt::Rule::sign_adam: return "sign_adam";
  }
  return "?";
}

std::string mode_to_string(opt::Mode m) {
  switch (m) {
    case opt::Mode::plain: return "plain";
    case opt::Mode::scaled_raw: return "scaled_raw";
    case opt::Mode::scaled_processed: return "scaled_processed";
  }
  return "?";
}

std::string format_double(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw IoError("csv: float formatting failed");
  return std::string(buf, ptr);
}

template <typename Int>
std::string format_int(Int v) {
  char buf[24];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw IoError("csv: int formatting failed");
  return std::string(buf, ptr);
}

void check_label(const std::string& s) {
  if (s.find(',') != std::string::npos || s.find('\n') != std::string::npos)
    throw ConfigError("method name must not contain commas or newlines: " + s);
}

MethodSpec parse_method(const json& j) {
  MethodSpec m;
  if (j.contains("preset")) {
    m = method_preset(j.at("preset").get<std::string>(),
                      j.value("lr", 0.1));
  } else {
    if (j.contains("lr")) {
      m.lr_L = j.at("lr").get<double>();
      m.lr_R = m.lr_L;
    }
  }
  for (const auto& [key, value] : j.items()) {
    if (key == "preset" || key == "lr") continue;
    if (key == "name") { m.name = value.get<std::string>(); }
    else if (key == "rule") { m.rule = rule_from_string(value.get<std::string>()); }
    else if (key == "mode") { m.mode = mode_from_string(value.get<std::string>()); }
    else if (key == "lr_L") { m.lr_L = value.get<double>(); }
    else if (key == "lr_R") { m.lr_R = value.get<double>(); }
    else if (key == "beta1") { m.beta1 = value.get<double>(); }
    else if (key == "beta2") { m.beta2 = value.get<double>(); }
    else if (key == "eps") { m.eps = value.get<double>(); }
    else if (key == "weight_decay") { m.weight_decay = value.get<double>(); }
    else if (key == "lr_R_scaling") { m.lr_R_scaling = value.get<std::string>(); }
    else throw ConfigError("unknown method field: " + key);
  }
  if (m.lr_L <= 0.0 || m.lr_R <= 0.0)
    throw ConfigError("method learning rates must be positive");
  if (m.lr_R_scaling != "constant" && m.lr_R_scaling != "inv_width")
    throw ConfigError("lr_R_scaling must be constant or inv_width");
  check_label(m.name);
  return m;
}

std::vector<double> parse_number_list(const json& value, const std::string& key) {
  std::vector<double> out;
  if (value.is_number()) {
    out.push_back(value.get<double>());
  } else if (value.is_array()) {
    for (const auto& v : value) out.push_back(v.get<double>());
  } else {
    throw ConfigError("field " + key + " must be a number or number array");
  }
  if (out.empty()) throw ConfigError("field " + key + " must be nonempty");
  return out;
}

json method_echo(const MethodSpec& m) {
  json j;
  j["name"] = m.name;
  j["rule"] = rule_to_string(m.rule);
  j["mode"] = mode_to_string(m.mode);
  j["lr_L"] = m.lr_L;
  j["lr_R"] = m.lr_R;
  j["beta1"] = m.beta1;
  j["beta2"] = m.beta2;
  j["eps"] = m.eps;
  j["weight_decay"] = m.weight_decay;
  j["lr_R_scaling"] = m.lr_R_scaling;
  return j;
}

opt::StepConfig to_step_config(const MethodSpec& m, double lr_R_override = -1.0) {
  opt::StepConfig cfg;
  cfg.lr_L = m.lr_L;
  cfg.lr_R = lr_R_override > 0.0 ? lr_R_override : m.lr_R;
  cfg.mode = m.mode;
  cfg.rule = m.rule;
  return cfg;
}

RunRecord base_record(const ExperimentConfig& cfg, std::uint64_t run_id,
                      const std::string& method) {
  RunRecord rec;
  rec.run_id = run_id;
  rec.method = method;
  rec.kind = cfg.kind;
  rec.seed = cfg.seed;
  rec.kappa = kNan;
  rec.eta = kNan;
  rec.loss = kNan;
  rec.max_dist = kNan;
  rec.increment_norm = kNan;
  rec.delta_hat = kNan;
  rec.wall_ms = 0.0;
  return rec;
}

// One method on one decomposition instance from a damped spectral start;
// also used by cond-sweep and compare.
void run_decomp_method(const ExperimentConfig& cfg,
                       const problems::DecompositionProblem& problem,
                       const FactorPair& init, const MethodSpec& method,
                       double kappa, double eta_override, std::uint64_t run_id,
                       std::vector<RunRecord>& out) {
  FactorPair pair = init;
  opt::StepConfig step = to_step_config(method);
  if (eta_override > 0.0) {
    step.lr_L = eta_override;
    step.lr_R = eta_override;
  }
  opt::AdamState state = opt::AdamState::zeros(pair.rows(), pair.cols(), pair.rank(),
                                               method.beta1, method.beta2,
                                               method.eps, method.weight_decay);
  const double norm_y = problem.Y.norm();
  const double t0 = cfg.timing ? now_ms() : 0.0;
  for (int t = 0; t <= cfg.iters; ++t) {
    const auto [loss, grad] = problems::decomp_loss_grad(problem, pair);
    RunRecord rec = base_record(cfg, run_id, method.name);
    rec.n = problem.Y.rows();
    rec.kappa = kappa;
    rec.eta = step.lr_L;
    rec.iter = t;
    rec.loss = loss;
    rec.max_dist = std::sqrt(2.0 * loss) / norm_y;  // relative reconstruction error
    rec.wall_ms = cfg.timing ? now_ms() - t0 : 0.0;
    out.push_back(rec);
    if (!std::isfinite(loss)) break;  // overflow sentinel row already emitted
    if (rec.max_dist <= cfg.tol || t == cfg.iters) break;
    switch (method.rule) {
      case opt::Rule::gd: pair = opt::gd_step(pair, grad, step); break;
      case opt::Rule::adamw: pair = opt::adamw_step(pair, grad, state, step); break;
      case opt::Rule::sign_adam: pair = opt::sign_adam_step(pair, grad, step); break;
    }
  }
}

FactorPair damped_spectral_init(const problems::DecompositionProblem& problem,
                                double product_scale, double delta) {
  auto [l, r] = linalg::best_rank_r(problem.Y, problem.r);
  const double factor_scale = std::sqrt(product_scale);
  return FactorPair{factor_scale * l, factor_scale * r, delta};
}

RunResult run_decomp_like(const ExperimentConfig& cfg) {
  RunResult result;
  std::uint64_t run_id = 0;
  for (double kappa : cfg.kappa) {
    const problems::DecompositionProblem problem = problems::make_decomposition(
        cfg.m, cfg.n, cfg.r, kappa, rng::derive_seed(cfg.seed, 17));
    const FactorPair init = damped_spectral_init(problem, cfg.init_scale, cfg.delta);
    for (double eta : cfg.eta) {
      for (const MethodSpec& method : cfg.methods) {
        run_decomp_method(cfg, problem, init, method, kappa, eta, run_id,
                          result.records);
        ++run_id;
      }
    }
  }
  return result;
}

RunResult run_multiterm(const ExperimentConfig& cfg) {
  const problems::Dims dims{cfg.n, cfg.d, cfg.c};
  const problems::MultiTermProblem problem =
      cfg.instance == "gaussian"
          ? problems::build_multiterm(dims, cfg.r, cfg.P, cfg.kappa.front(),
                                      rng::derive_seed(cfg.seed, 23))
          : problems::build_multiterm_compliant(dims, cfg.r, cfg.P,
                                                cfg.kappa.front(), cfg.rho2,
                                                rng::derive_seed(cfg.seed, 23));

  double delta_hat = 0.0;
  for (int i = 0; i < problem.P; ++i)
    delta_hat = std::max(delta_hat,
                         analysis::empirical_rip(problem.measurement(i), cfg.r,
                                                 cfg.rip_trials,
                                                 rng::derive_seed(cfg.seed, 1000 + i),
                                                 cfg.c));
  double cross = 0.0;
  for (int i = 0; i < problem.P; ++i)
    for (int j = i + 1; j < problem.P; ++j) {
      const Vec both = problem.masks[i].cwiseProduct(problem.masks[j]);
      cross = std::max(cross, linalg::spectral_norm(
                                  problem.X.transpose() * both.asDiagonal() * problem.X));
    }

  RunResult result;
  {
    std::ostringstream os;
    os << "delta_hat=" << format_double(delta_hat)
       << " cross_term_max=" << format_double(cross);
    result.measured = os.str();
  }

  const double t0 = cfg.timing ? now_ms() : 0.0;
  const auto trace = analysis::contraction_trace(problem, cfg.eta.front(), cfg.iters);
  for (std::size_t t = 0; t < trace.size(); ++t) {
    RunRecord rec = base_record(cfg, 0, "scaled_gd");
    rec.n = cfg.n;
    rec.kappa = cfg.kappa.front();
    rec.eta = cfg.eta.front();
    rec.iter = static_cast<std::int64_t>(t);
    rec.loss = trace[t].loss;
    rec.max_dist = trace[t].max_dist;
    rec.increment_norm = trace[t].product_ratio;
    rec.delta_hat = delta_hat;
    rec.wall_ms = cfg.timing ? now_ms() - t0 : 0.0;
    result.records.push_back(rec);
  }
  return result;
}

RunResult run_width_sweep(const ExperimentConfig& cfg) {
  RunResult result;
  const MethodSpec& method = cfg.methods.front();
  std::uint64_t run_id = 0;
  for (std::size_t wi = 0; wi < cfg.widths.size(); ++wi) {
    const auto width = static_cast<Index>(cfg.widths[wi]);
    double lr_R = method.lr_R;
    if (method.lr_R_scaling == "inv_width")
      lr_R = method.lr_R * cfg.widths.front() / cfg.widths[wi];
    const opt::StepConfig step = to_step_config(method, lr_R);
    for (int trial = 0; trial < cfg.trials; ++trial) {
      // paired across widths: trial k reuses the same stream at every
      // width so slope fits see matched draws
      const problems::WidthModel model = problems::WidthModel::make(
          width, cfg.r, rng::derive_seed(cfg.seed, static_cast<std::uint64_t>(trial)));
      const double t0 = cfg.timing ? now_ms() : 0.0;
      const std::vector<double> incs =
          problems::width_forward_increment(model, cfg.steps, step);
      for (std::size_t s = 0; s < incs.size(); ++s) {
        RunRecord rec = base_record(cfg, run_id, method.name);
        rec.n = width;
        rec.eta = step.lr_L;
        rec.iter = static_cast<std::int64_t>(s) + 1;
        rec.increment_norm = incs[s];
        rec.wall_ms = cfg.timing ? now_ms() - t0 : 0.0;
        result.records.push_back(rec);
      }
      ++run_id;
    }
  }
  return result;
}

RunResult run_toy(const ExperimentConfig& cfg) {
  RunResult result;
  const MethodSpec& method = cfg.methods.front();
  if (method.rule != opt::Rule::gd)
    throw ConfigError("toy: method rule must be gd");
  const bool scaled = method.mode != opt::Mode::plain;
  std::uint64_t run_id = 0;
  for (std::size_t wi = 0; wi < cfg.widths.size(); ++wi) {
    const auto width = static_cast<Index>(cfg.widths[wi]);
    for (int trial = 0; trial < cfg.trials; ++trial) {
      // paired across widths, as in the width sweep
      const problems::ToyModel model = problems::ToyModel::make(
          width, rng::derive_seed(cfg.seed, static_cast<std::uint64_t>(trial)));
      const double t0 = cfg.timing ? now_ms() : 0.0;
      const auto records =
          problems::toy_trajectory(model, cfg.steps, cfg.c_exponent, scaled,
                                   cfg.eta_scale);
      const double eta = cfg.eta_scale * std::pow(static_cast<double>(width),
                                                  cfg.c_exponent);
      for (std::size_t s = 0; s < records.size(); ++s) {
        const problems::ToyRecord& tr = records[s];
        const std::pair<const char*, double> quantities[] = {
            {":f", tr.f}, {":d1", tr.d1}, {":d2", tr.d2}, {":d3", tr.d3}};
        for (const auto& [suffix, value] : quantities) {
          RunRecord rec = base_record(cfg, run_id, method.name + suffix);
          rec.n = width;
          rec.eta = eta;
          rec.iter = static_cast<std::int64_t>(s) + 1;
          rec.increment_norm = value;
          rec.loss = 0.5 * tr.err * tr.err;
          rec.wall_ms = cfg.timing ? now_ms() - t0 : 0.0;
          result.records.push_back(rec);
        }
      }
      ++run_id;
    }
  }
  return result;
}

RunResult run_arrangements(const ExperimentConfig& cfg) {
  RunResult result;
  for (int k = 0; k < cfg.instances; ++k) {
    rng::Stream stream(rng::derive_seed(cfg.seed, static_cast<std::uint64_t>(k)),
                       0x61727278ULL);
    const Index rows = 3 + static_cast<Index>(stream.next_u64() %
                                              static_cast<std::uint64_t>(cfg.n - 2));
    const Index dim = 1 + static_cast<Index>(stream.next_u64() %
                                             static_cast<std::uint64_t>(cfg.d));
    const Mat x = stream.gaussian_mat(rows, dim);
    Index rank = 0;
    {
      const Vec s = linalg::svd(x).S;
      for (Index i = 0; i < s.size(); ++i)
        if (s(i) > 1e-12 * s(0)) ++rank;
    }
    const auto sampled = problems::arrangements(
        x, cfg.samples, rng::derive_seed(cfg.seed, 5000 + static_cast<std::uint64_t>(k)));
    RunRecord rec = base_record(cfg, static_cast<std::uint64_t>(k), "arrangements");
    rec.n = rows;
    rec.kappa = static_cast<double>(rank);
    rec.iter = 0;
    rec.loss = static_cast<double>(sampled.size());
    rec.max_dist = problems::arrangement_bound(rows, rank);
    if (dim == 2)
      rec.increment_norm =
          static_cast<double>(problems::arrangements_sweep_2d(x).size());
    result.records.push_back(rec);
  }
  return result;
}

}  // namespace

MethodSpec method_preset(const std::string& name, double lr) {
  MethodSpec m;
  m.name = name;
  m.lr_L = lr;
  m.lr_R = lr;
  if (name == "sgd") {
    m.rule = opt::Rule::gd;
    m.mode = opt::Mode::plain;
  } else if (name == "scaled_gd") {
    m.rule = opt::Rule::gd;
    m.mode = opt::Mode::scaled_raw;
  } else if (name == "adamw") {
    m.rule = opt::Rule::adamw;
    m.mode = opt::Mode::plain;
  } else if (name == "scaled_adamw") {
    m.rule = opt::Rule::adamw;
    m.mode = opt::Mode::scaled_raw;
    m.beta1 = 0.7;
    m.beta2 = 0.8;
  } else if (name == "scaled_adamw_processed") {
    m.rule = opt::Rule::adamw;
    m.mode = opt::Mode::scaled_processed;
    m.beta1 = 0.7;
    m.beta2 = 0.8;
  } else if (name == "sign_adam") {
    m.rule = opt::Rule::sign_adam;
    m.mode = opt::Mode::plain;
  } else if (name == "scaled_sign_adam") {
    m.rule = opt::Rule::sign_adam;
    m.mode = opt::Mode::scaled_processed;
  } else if (name == "lora_plus") {
    // the eta_B / eta_A = 2^4 heuristic; L plays B
    m.rule = opt::Rule::adamw;
    m.mode = opt::Mode::plain;
    m.lr_L = 16.0 * lr;
    m.lr_R = lr;
  } else {
    throw ConfigError("unknown method preset: " + name);
  }
  return m;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "kind") cfg.kind = value.get<std::string>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "out") cfg.out = value.get<std::string>();
      else if (key == "timing") cfg.timing = value.get<bool>();
      else if (key == "n") cfg.n = value.get<Index>();
      else if (key == "m") cfg.m = value.get<Index>();
      else if (key == "d") cfg.d = value.get<Index>();
      else if (key == "c") cfg.c = value.get<Index>();
      else if (key == "r") cfg.r = value.get<Index>();
      else if (key == "P") cfg.P = value.get<int>();
      else if (key == "kappa") cfg.kappa = parse_number_list(value, key);
      else if (key == "eta") cfg.eta = parse_number_list(value, key);
      else if (key == "iters") cfg.iters = value.get<int>();
      else if (key == "tol") cfg.tol = value.get<double>();
      else if (key == "delta") cfg.delta = value.get<double>();
      else if (key == "instance") cfg.instance = value.get<std::string>();
      else if (key == "rho2") cfg.rho2 = value.get<double>();
      else if (key == "rip_trials") cfg.rip_trials = value.get<int>();
      else if (key == "init_scale") cfg.init_scale = value.get<double>();
      else if (key == "widths") cfg.widths = parse_number_list(value, key);
      else if (key == "trials") cfg.trials = value.get<int>();
      else if (key == "steps") cfg.steps = value.get<int>();
      else if (key == "c_exponent") cfg.c_exponent = value.get<double>();
      else if (key == "eta_scale") cfg.eta_scale = value.get<double>();
      else if (key == "instances") cfg.instances = value.get<int>();
      else if (key == "samples") cfg.samples = value.get<int>();
      else if (key == "method") cfg.methods = {parse_method(value)};
      else if (key == "methods") {
        cfg.methods.clear();
        for (const auto& mj : value) cfg.methods.push_back(parse_method(mj));
      } else {
        throw ConfigError("unknown config field: " + key);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field has wrong type: ") + e.what());
  }
  if (cfg.methods.empty()) throw ConfigError("field methods must be nonempty");
  if (cfg.iters < 0) throw ConfigError("field iters must be >= 0");
  if (cfg.instance != "gaussian" && cfg.instance != "compliant")
    throw ConfigError("field instance must be gaussian or compliant");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string config_echo(const ExperimentConfig& cfg) {
  json j;
  j["kind"] = cfg.kind;
  j["seed"] = cfg.seed;
  j["timing"] = cfg.timing;
  j["n"] = cfg.n;
  j["m"] = cfg.m;
  j["d"] = cfg.d;
  j["c"] = cfg.c;
  j["r"] = cfg.r;
  j["P"] = cfg.P;
  j["kappa"] = cfg.kappa;
  j["eta"] = cfg.eta;
  j["iters"] = cfg.iters;
  j["tol"] = cfg.tol;
  j["delta"] = cfg.delta;
  j["instance"] = cfg.instance;
  j["rho2"] = cfg.rho2;
  j["rip_trials"] = cfg.rip_trials;
  j["init_scale"] = cfg.init_scale;
  j["widths"] = cfg.widths;
  j["trials"] = cfg.trials;
  j["steps"] = cfg.steps;
  j["c_exponent"] = cfg.c_exponent;
  j["eta_scale"] = cfg.eta_scale;
  j["instances"] = cfg.instances;
  j["samples"] = cfg.samples;
  j["methods"] = json::array();
  for (const MethodSpec& m : cfg.methods) j["methods"].push_back(method_echo(m));
  return j.dump();
}

RunResult run(const ExperimentConfig& cfg) {
  if (cfg.kind == "decomp" || cfg.kind == "cond-sweep") return run_decomp_like(cfg);
  if (cfg.kind == "multiterm") return run_multiterm(cfg);
  if (cfg.kind == "width-sweep") return run_width_sweep(cfg);
  if (cfg.kind == "toy") return run_toy(cfg);
  if (cfg.kind == "arrangements") return run_arrangements(cfg);
  if (cfg.kind == "compare") return compare(cfg.methods, cfg);
  throw ConfigError("unknown experiment kind: " + cfg.kind);
}

RunResult compare(const std::vector<MethodSpec>& methods,
                  const ExperimentConfig& cfg) {
  if (methods.size() < 2) throw ConfigError("compare: need at least 2 methods");
  RunResult result;
  const problems::DecompositionProblem problem = problems::make_decomposition(
      cfg.m, cfg.n, cfg.r, cfg.kappa.front(), rng::derive_seed(cfg.seed, 17));
  const FactorPair init = damped_spectral_init(problem, cfg.init_scale, cfg.delta);
  std::uint64_t run_id = 0;
  for (const MethodSpec& method : methods) {
    run_decomp_method(cfg, problem, init, method, cfg.kappa.front(), -1.0, run_id,
                      result.records);
    ++run_id;
  }
  return result;
}

std::string csv_line(const RunRecord& rec) {
  std::string line;
  line.reserve(160);
  line += format_int(rec.run_id);
  line += ',';
  line += rec.method;
  line += ',';
  line += rec.kind;
  line += ',';
  line += format_int(rec.n);
  line += ',';
  line += format_double(rec.kappa);
  line += ',';
  line += format_double(rec.eta);
  line += ',';
  line += format_int(rec.iter);
  line += ',';
  line += format_double(rec.loss);
  line += ',';
  line += format_double(rec.max_dist);
  line += ',';
  line += format_double(rec.increment_norm);
  line += ',';
  line += format_double(rec.delta_hat);
  line += ',';
  line += format_double(rec.wall_ms);
  line += ',';
  line += format_int(rec.seed);
  return line;
}

namespace {

double parse_double_field(const std::string& s) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("csv: malformed float field: " + s);
  return v;
}

template <typename Int>
Int parse_int_field(const std::string& s) {
  Int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("csv: malformed integer field: " + s);
  return v;
}

}  // namespace

RunRecord parse_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(current);
      current.clear();
    } else {
      current += ch;
    }
  }
  fields.push_back(current);
  if (fields.size() != 13)
    throw ConfigError("csv: expected 13 fields, got " + std::to_string(fields.size()));
  RunRecord rec;
  rec.run_id = parse_int_field<std::uint64_t>(fields[0]);
  rec.method = fields[1];
  rec.kind = fields[2];
  rec.n = parse_int_field<std::int64_t>(fields[3]);
  rec.kappa = parse_double_field(fields[4]);
  rec.eta = parse_double_field(fields[5]);
  rec.iter = parse_int_field<std::int64_t>(fields[6]);
  rec.loss = parse_double_field(fields[7]);
  rec.max_dist = parse_double_field(fields[8]);
  rec.increment_norm = parse_double_field(fields[9]);
  rec.delta_hat = parse_double_field(fields[10]);
  rec.wall_ms = parse_double_field(fields[11]);
  rec.seed = parse_int_field<std::uint64_t>(fields[12]);
  return rec;
}

void write_csv(const std::string& path, const ExperimentConfig& cfg,
               const RunResult& result) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp.string());
    out << "# rplo csv v1\n";
    out << "# config " << config_echo(cfg) << "\n";
    if (!result.measured.empty()) out << "# measured " << result.measured << "\n";
    out << kCsvHeader << "\n";
    for (const RunRecord& rec : result.records) out << csv_line(rec) << "\n";
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("rename to " + target.string() + " failed: " + ec.message());
  }
}

}  // namespace rplo::harness
