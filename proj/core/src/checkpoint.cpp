#include "herlab/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

#include "herlab/error.hpp"

namespace herlab {
namespace {

using nlohmann::json;

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd json_vector(const json& j, int expected, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != expected) {
    throw Error("checkpoint: " + what + " must be an array of " + std::to_string(expected) + " numbers");
  }
  Eigen::VectorXd v(expected);
  for (int i = 0; i < expected; ++i) v[i] = j.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

}  // namespace

std::string serialize_policy(const PolicyParams& params) {
  json j;
  j["format"] = "herlab-policy";
  j["version"] = kCheckpointVersion;
  j["token_dim"] = params.token_dim;
  j["feature_dim"] = params.feature_dim;
  json rows = json::array();
  for (Eigen::Index r = 0; r < params.scorer.rows(); ++r) {
    rows.push_back(vector_json(params.scorer.row(r).transpose()));
  }
  j["scorer"] = std::move(rows);
  json tokens = json::object();
  for (const auto& [token, v] : params.tokens) tokens[token] = vector_json(v);
  j["tokens"] = std::move(tokens);
  return j.dump() + "\n";
}

PolicyParams deserialize_policy(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format") != "herlab-policy") throw Error("checkpoint: unexpected format tag");
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw Error("checkpoint: unsupported version " + j.at("version").dump());
    }
    PolicyParams p;
    p.token_dim = j.at("token_dim").get<int>();
    p.feature_dim = j.at("feature_dim").get<int>();
    if (p.token_dim <= 0 || p.feature_dim <= 0) throw Error("checkpoint: bad dimensions");
    const json& rows = j.at("scorer");
    if (!rows.is_array() || static_cast<int>(rows.size()) != p.token_dim) {
      throw Error("checkpoint: scorer must have token_dim rows");
    }
    p.scorer.resize(p.token_dim, p.feature_dim);
    for (int r = 0; r < p.token_dim; ++r) {
      p.scorer.row(r) = json_vector(rows[static_cast<std::size_t>(r)], p.feature_dim, "scorer row").transpose();
    }
    for (const auto& [token, v] : j.at("tokens").items()) {
      p.tokens.emplace(token, json_vector(v, p.token_dim, "token '" + token + "'"));
    }
    if (!p.all_finite()) throw Error("checkpoint: non-finite parameter");
    return p;
  } catch (const json::exception& e) {
    throw Error(std::string("checkpoint: ") + e.what());
  }
}

void save_policy(const std::filesystem::path& path, const PolicyParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << serialize_policy(params);
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

PolicyParams load_policy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read checkpoint " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_policy(buffer.str());
}

}  // namespace herlab
