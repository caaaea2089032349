#pragma once
// JSON (de)serialization for magnetic systems. Two accepted shapes:
//   {"kind": "...", "params": {...}}                      named builder
//   {"potential": [...], "metric": [[...]], "dim": n}     expression strings
// Either shape may carry "scalar": "<expr>" for the scalar potential. The
// "metric" entries are the *inverse* metric components g^{jk} (the objects the
// Hamiltonian actually uses); omitting it means the identity.

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "magweyl/field_geometry.hpp"

namespace magweyl {

inline MagneticSystem system_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::usage, "field document must be a JSON object");

  MagneticSystem s;
  if (j.contains("kind")) {
    const std::string kind = j.at("kind").get<std::string>();
    const nlohmann::json params = j.value("params", nlohmann::json::object());
    if (kind == "darboux") {
      s = darboux(params.value("dim", 2), params.value("rank", 1));
    } else if (kind == "constant") {
      if (!params.contains("f"))
        throw Error(ErrorKind::usage, "constant field needs params.f (list of intensities)");
      std::vector<double> f = params.at("f").get<std::vector<double>>();
      s = constant_field(params.value("dim", static_cast<int>(2 * f.size())), f);
    } else if (kind == "model2d" || kind == "martinet2d") {
      s = model2d(params.value("nu", 2));
    } else if (kind == "nondeg4d") {
      s = nondeg4d();
    } else if (kind == "roussarie4d") {
      s = roussarie4d();
    } else {
      throw Error(ErrorKind::usage, "unknown field kind '" + kind + "'");
    }
  } else if (j.contains("potential")) {
    const auto& pot = j.at("potential");
    if (!pot.is_array() || pot.empty() || pot.size() > 4)
      throw Error(ErrorKind::usage, "potential must be a list of 1..4 expression strings");
    s.dim = j.value("dim", static_cast<int>(pot.size()));
    if (s.dim < 2 || s.dim > 4 || static_cast<size_t>(s.dim) < pot.size())
      throw Error(ErrorKind::usage, "field dimension must be 2..4 and cover the potential list");
    for (size_t k = 0; k < pot.size(); ++k) {
      s.A_src[k] = pot[k].get<std::string>();
      s.A[k] = Expr::parse(s.A_src[k]);
    }
    if (j.contains("metric")) {
      const auto& m = j.at("metric");
      if (!m.is_array() || static_cast<int>(m.size()) != s.dim)
        throw Error(ErrorKind::usage, "metric must be a dim x dim array of expression strings");
      s.identity_metric = false;
      for (int r = 0; r < s.dim; ++r) {
        if (static_cast<int>(m[r].size()) != s.dim)
          throw Error(ErrorKind::usage, "metric must be a dim x dim array of expression strings");
        for (int c = 0; c < s.dim; ++c) {
          s.ginv_src[r][c] = m[r][c].get<std::string>();
          s.ginv[r][c] = Expr::parse(s.ginv_src[r][c]);
        }
      }
    }
  } else {
    throw Error(ErrorKind::usage, "field document needs either \"kind\" or \"potential\"");
  }

  if (j.contains("mu")) {
    s.mu = j.at("mu").get<double>();
    if (!(s.mu > 0)) throw Error(ErrorKind::usage, "mu must be positive");
  }
  if (j.contains("scalar")) {
    s.V_src = j.at("scalar").get<std::string>();
    s.V = Expr::parse(s.V_src);
    s.finalized = false;  // V arrived after a builder may have finalized
  }
  s.finalize();
  return s;
}

inline nlohmann::json system_to_json(const MagneticSystem& s) {
  nlohmann::json j;
  if (!s.kind.empty()) {
    j["kind"] = s.kind;
    nlohmann::json params = nlohmann::json::object();
    if (s.kind == "darboux") {
      params["dim"] = static_cast<int>(s.kind_params.at(0));
      params["rank"] = static_cast<int>(s.kind_params.at(1));
    } else if (s.kind == "constant") {
      params["dim"] = static_cast<int>(s.kind_params.at(0));
      params["f"] = std::vector<double>(s.kind_params.begin() + 1, s.kind_params.end());
    } else if (s.kind == "model2d") {
      params["nu"] = static_cast<int>(s.kind_params.at(0));
    }
    j["params"] = params;
  } else {
    std::vector<std::string> pot;
    for (int k = 0; k < s.dim; ++k) pot.push_back(s.A_src[k].empty() ? "0" : s.A_src[k]);
    j["potential"] = pot;
    j["dim"] = s.dim;
    if (!s.identity_metric) {
      std::vector<std::vector<std::string>> m(s.dim, std::vector<std::string>(s.dim));
      for (int r = 0; r < s.dim; ++r)
        for (int c = 0; c < s.dim; ++c)
          m[r][c] = s.ginv_src[r][c].empty() ? (r == c ? "1" : "0") : s.ginv_src[r][c];
      j["metric"] = m;
    }
  }
  if (!s.V_src.empty()) j["scalar"] = s.V_src;
  if (s.mu != 1) j["mu"] = s.mu;
  return j;
}

inline MagneticSystem load_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::usage, "cannot open field file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::usage, "bad JSON in '" + path + "': " + e.what());
  }
  return system_from_json(j);
}

}  // namespace magweyl
