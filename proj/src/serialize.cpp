#include "rplo/serialize.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace rplo::serialize {
namespace {

using nlohmann::json;

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Mat mat_from_json(const json& j) {
  const auto rows = j.at("rows").get<Index>();
  const auto cols = j.at("cols").get<Index>();
  Mat m(rows, cols);
  const json& data = j.at("data");
  if (static_cast<Index>(data.size()) != rows)
    throw ConfigError("matrix json: row count mismatch");
  for (Index i = 0; i < rows; ++i) {
    const json& row = data[static_cast<std::size_t>(i)];
    if (static_cast<Index>(row.size()) != cols)
      throw ConfigError("matrix json: column count mismatch");
    for (Index j2 = 0; j2 < cols; ++j2)
      m(i, j2) = row[static_cast<std::size_t>(j2)].get<double>();
  }
  return m;
}

json vec_to_json(const Vec& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vec vec_from_json(const json& j) {
  Vec v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace

std::string multiterm_to_json(const problems::MultiTermProblem& p,
                              std::uint64_t seed) {
  json j;
  j["format"] = "rplo-multiterm-v1";
  j["seed"] = seed;
  j["dims"] = {{"n", p.X.rows()}, {"d", p.X.cols()}, {"c", p.Y.cols()}};
  j["r"] = p.r;
  j["P"] = p.P;
  j["X"] = mat_to_json(p.X);
  j["Y"] = mat_to_json(p.Y);
  j["masks"] = json::array();
  for (const Vec& m : p.masks) j["masks"].push_back(vec_to_json(m));
  j["W"] = json::array();
  for (const Mat& w : p.W) j["W"].push_back(mat_to_json(w));
  j["truth"] = json::array();
  for (const problems::TruthFactors& t : p.truth)
    j["truth"].push_back(json{{"L", mat_to_json(t.L)},
                              {"R", mat_to_json(t.R)},
                              {"sigma", vec_to_json(t.sigma)}});
  return j.dump();
}

problems::MultiTermProblem multiterm_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("problem json parse error: ") + e.what());
  }
  if (j.value("format", "") != "rplo-multiterm-v1")
    throw ConfigError("problem json: unexpected format tag");
  problems::MultiTermProblem p;
  p.r = j.at("r").get<Index>();
  p.P = j.at("P").get<int>();
  p.X = mat_from_json(j.at("X"));
  p.Y = mat_from_json(j.at("Y"));
  for (const auto& m : j.at("masks")) p.masks.push_back(vec_from_json(m));
  for (const auto& w : j.at("W")) p.W.push_back(mat_from_json(w));
  for (const auto& t : j.at("truth"))
    p.truth.push_back(problems::TruthFactors{mat_from_json(t.at("L")),
                                             mat_from_json(t.at("R")),
                                             vec_from_json(t.at("sigma"))});
  return p;
}

std::string decomposition_to_json(const problems::DecompositionProblem& p,
                                  std::uint64_t seed) {
  json j;
  j["format"] = "rplo-decomp-v1";
  j["seed"] = seed;
  j["r"] = p.r;
  j["Y"] = mat_to_json(p.Y);
  return j.dump();
}

problems::DecompositionProblem decomposition_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("problem json parse error: ") + e.what());
  }
  if (j.value("format", "") != "rplo-decomp-v1")
    throw ConfigError("problem json: unexpected format tag");
  return problems::DecompositionProblem{mat_from_json(j.at("Y")),
                                        j.at("r").get<Index>()};
}

void save_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

std::string load_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace rplo::serialize
