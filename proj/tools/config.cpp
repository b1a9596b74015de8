#include "config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace torsion_cli {

namespace {

using json = nlohmann::ordered_json;

json default_json() {
  return json{
      {"grid", {{"a", 1.0}, {"b", 1.0}, {"Nx", 50}, {"Ny", 50}}},
      {"material", {{"kappa", 0.5}, {"xi0_sq", 0.02}, {"G", 42.3}}},
      {"test", ""},
      {"phi", 1.0},
      {"angles", json::array({1.0, 0.5, 0.1, 0.005})},
      {"sigma", 1e-4},
      {"seed", 0},
      {"solver",
       {{"picard_tol", 1e-6},
        {"picard_max_iter", 200},
        {"linear_tol", 1e-10},
        {"linear_max_iter", 0}}},
      {"irekm",
       {{"n_members", 200},
        {"rho", 0.7},
        {"gamma0", 1.0},
        {"tau", 0.0},
        {"max_iter", 100},
        {"delta", 0.0}}},
      {"prior",
       {{"kappa", json::array({0.2, 0.9})},
        {"xi0_sq", json::array({0.0, 0.15})},
        {"G", json::array({42.0, 43.0})}}},
      {"jobs", 1},
      {"out", "out"},
  };
}

void assign_leaf(json& slot, const json& val, const std::string& path) {
  const bool ok = (slot.is_number() && val.is_number()) ||
                  (slot.is_string() && val.is_string()) ||
                  (slot.is_boolean() && val.is_boolean()) ||
                  (slot.is_array() && val.is_array());
  if (!ok) {
    throw ConfigError("config key " + path + " expects a " +
                      std::string(slot.type_name()) + ", got " +
                      std::string(val.type_name()));
  }
  slot = val;
}

void merge_checked(json& base, const json& patch, const std::string& prefix) {
  if (!patch.is_object()) {
    throw ConfigError("config section " +
                      (prefix.empty() ? std::string("<root>") : prefix) +
                      " must be an object");
  }
  for (const auto& [key, val] : patch.items()) {
    if (!base.contains(key)) {
      throw ConfigError("unknown config key: " + prefix + key);
    }
    if (base[key].is_object()) {
      merge_checked(base[key], val, prefix + key + ".");
    } else {
      assign_leaf(base[key], val, prefix + key);
    }
  }
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : path) {
    if (c == '.') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

void apply_override(json& base, const std::string& path,
                    const std::string& raw) {
  json* cur = &base;
  const auto parts = split_path(path);
  for (std::size_t k = 0; k + 1 < parts.size(); ++k) {
    if (!cur->contains(parts[k]) || !(*cur)[parts[k]].is_object()) {
      throw ConfigError("unknown config key: " + path);
    }
    cur = &(*cur)[parts[k]];
  }
  const std::string& leaf = parts.back();
  if (!cur->contains(leaf)) {
    throw ConfigError("unknown config key: " + path);
  }
  if ((*cur)[leaf].is_object()) {
    throw ConfigError("config key " + path + " is a section, not a value");
  }
  json val = json::parse(raw, nullptr, false);
  if (val.is_discarded()) val = raw;  // bare words are strings
  assign_leaf((*cur)[leaf], val, path);
}

double get_num(const json& j, const char* key) { return j.at(key).get<double>(); }
int get_int(const json& j, const char* key) { return j.at(key).get<int>(); }

torsion::Interval get_interval(const json& arr, const std::string& path) {
  if (!arr.is_array() || arr.size() != 2 || !arr[0].is_number() ||
      !arr[1].is_number()) {
    throw ConfigError("config key " + path + " expects [lo, hi]");
  }
  return {arr[0].get<double>(), arr[1].get<double>()};
}

std::uint64_t resolve_seed(const json& j) {
  if (!j.at("seed").is_number_integer() && !j.at("seed").is_number_unsigned()) {
    throw ConfigError("config key seed expects a nonnegative integer");
  }
  if (j.at("seed").is_number_integer() && j.at("seed").get<long long>() < 0) {
    throw ConfigError("config key seed expects a nonnegative integer");
  }
  const std::uint64_t seed = j.at("seed").get<std::uint64_t>();
  if (seed != 0) return seed;
  if (const char* env = std::getenv("TORSION_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') {
      throw ConfigError("TORSION_SEED is not a nonnegative integer: " +
                        std::string(env));
    }
    if (v != 0) return v;
  }
  return 1;
}

}  // namespace

Overrides parse_override_tokens(const std::vector<std::string>& tokens) {
  Overrides out;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const std::string& tok = tokens[k];
    if (tok.rfind("--", 0) != 0 || tok.size() <= 2) {
      throw ConfigError("expected --dotted.path overrides, got: " + tok);
    }
    const std::string body = tok.substr(2);
    const auto eq = body.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(body.substr(0, eq), body.substr(eq + 1));
    } else {
      if (k + 1 >= tokens.size()) {
        throw ConfigError("override " + tok + " is missing its value");
      }
      out.emplace_back(body, tokens[++k]);
    }
  }
  return out;
}

RunConfig load_config(const std::string& config_path,
                      const Overrides& overrides) {
  json doc = default_json();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file: " + config_path);
    json file = json::parse(in, nullptr, false);
    if (file.is_discarded()) {
      throw ConfigError("config file is not valid json: " + config_path);
    }
    merge_checked(doc, file, "");
  }
  for (const auto& [path, raw] : overrides) apply_override(doc, path, raw);

  RunConfig cfg;
  try {
    const json& g = doc.at("grid");
    cfg.grid = torsion::GridSpec{get_num(g, "a"), get_num(g, "b"),
                                 get_int(g, "Nx"), get_int(g, "Ny")};
    const json& m = doc.at("material");
    cfg.material = torsion::MaterialParams{
        get_num(m, "kappa"), get_num(m, "xi0_sq"), get_num(m, "G")};
    cfg.test = doc.at("test").get<std::string>();
    cfg.phi = get_num(doc, "phi");
    cfg.angles = doc.at("angles").get<std::vector<double>>();
    cfg.sigma = get_num(doc, "sigma");
    cfg.seed = resolve_seed(doc);

    const json& s = doc.at("solver");
    cfg.forward.tol = get_num(s, "picard_tol");
    cfg.forward.max_iter = get_int(s, "picard_max_iter");
    cfg.forward.linear_tol = get_num(s, "linear_tol");
    cfg.forward.linear_max_iter = get_int(s, "linear_max_iter");

    const json& ir = doc.at("irekm");
    cfg.irekm.n_members = get_int(ir, "n_members");
    cfg.irekm.rho = get_num(ir, "rho");
    cfg.irekm.gamma0 = get_num(ir, "gamma0");
    cfg.irekm.max_iter = get_int(ir, "max_iter");
    const double tau = get_num(ir, "tau");
    if (tau > 0.0) cfg.irekm.tau = tau;
    const double delta = get_num(ir, "delta");
    if (delta > 0.0) cfg.irekm.delta_override = delta;
    cfg.irekm.seed = cfg.seed;

    const json& p = doc.at("prior");
    cfg.prior.kappa = get_interval(p.at("kappa"), "prior.kappa");
    cfg.prior.yield_sq = get_interval(p.at("xi0_sq"), "prior.xi0_sq");
    cfg.prior.shear_modulus = get_interval(p.at("G"), "prior.G");

    cfg.jobs = get_int(doc, "jobs");
    cfg.irekm.jobs = cfg.jobs;
    cfg.out = doc.at("out").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }

  torsion::validate(cfg.grid);
  if (cfg.test != "" && cfg.test != "test1" && cfg.test != "test2") {
    throw ConfigError("config key test must be \"\", \"test1\" or \"test2\"");
  }
  if (!(cfg.sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
  if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");
  if (cfg.out.empty()) throw ConfigError("out directory must be non-empty");
  return cfg;
}

std::string config_to_json(const RunConfig& cfg) {
  json doc = default_json();
  doc["grid"] = {{"a", cfg.grid.lx},
                 {"b", cfg.grid.ly},
                 {"Nx", cfg.grid.nx},
                 {"Ny", cfg.grid.ny}};
  doc["material"] = {{"kappa", cfg.material.kappa},
                     {"xi0_sq", cfg.material.yield_stress},
                     {"G", cfg.material.shear_modulus}};
  doc["test"] = cfg.test;
  doc["phi"] = cfg.phi;
  doc["angles"] = cfg.angles;
  doc["sigma"] = cfg.sigma;
  doc["seed"] = cfg.seed;
  doc["solver"] = {{"picard_tol", cfg.forward.tol},
                   {"picard_max_iter", cfg.forward.max_iter},
                   {"linear_tol", cfg.forward.linear_tol},
                   {"linear_max_iter", cfg.forward.linear_max_iter}};
  doc["irekm"] = {{"n_members", cfg.irekm.n_members},
                  {"rho", cfg.irekm.rho},
                  {"gamma0", cfg.irekm.gamma0},
                  {"tau", cfg.irekm.tau.value_or(0.0)},
                  {"max_iter", cfg.irekm.max_iter},
                  {"delta", cfg.irekm.delta_override.value_or(0.0)}};
  doc["prior"] = {
      {"kappa", json::array({cfg.prior.kappa.lo, cfg.prior.kappa.hi})},
      {"xi0_sq", json::array({cfg.prior.yield_sq.lo, cfg.prior.yield_sq.hi})},
      {"G", json::array({cfg.prior.shear_modulus.lo, cfg.prior.shear_modulus.hi})}};
  doc["jobs"] = cfg.jobs;
  doc["out"] = cfg.out;
  return doc.dump(2) + "\n";
}

}  // namespace torsion_cli
