#pragma once

// JSON form of systems and families:
//   system: {"upper": {"dx": [[i,j,c],...], "dy": [...]}, "lower": {...}}
//   family: same layout with terms [i,j,c0,ca,cb] (coefficient c0 + ca*a + cb*b)

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "twofold/bifurcation.hpp"
#include "twofold/core.hpp"
#include "twofold/error.hpp"

namespace twofold {

namespace detail {

inline const nlohmann::json& member(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    throw Error(ErrorCode::ConfigError, where + ": missing field '" + key + "'");
  return j.at(key);
}

template <class Row>
std::vector<Row> read_rows(const nlohmann::json& arr, std::size_t width, const std::string& where,
                           Row (*make)(const nlohmann::json&)) {
  if (!arr.is_array()) throw Error(ErrorCode::ConfigError, where + ": expected an array of terms");
  std::vector<Row> out;
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const auto& t = arr[k];
    const std::string here = where + "[" + std::to_string(k) + "]";
    if (!t.is_array() || t.size() != width)
      throw Error(ErrorCode::ConfigError, here + ": expected " + std::to_string(width) + " entries");
    if (!t[0].is_number_integer() || !t[1].is_number_integer())
      throw Error(ErrorCode::ConfigError, here + ": exponents must be integers");
    for (std::size_t m = 2; m < width; ++m)
      if (!t[m].is_number()) throw Error(ErrorCode::ConfigError, here + ": coefficient must be a number");
    out.push_back(make(t));
  }
  return out;
}

inline Monomial monomial_row(const nlohmann::json& t) { return {t[0].get<int>(), t[1].get<int>(), t[2].get<double>()}; }

inline AffineTerm affine_row(const nlohmann::json& t) {
  return {t[0].get<int>(), t[1].get<int>(), t[2].get<double>(), t[3].get<double>(), t[4].get<double>()};
}

inline Poly read_poly(const nlohmann::json& j, const std::string& where) {
  try {
    return Poly(read_rows<Monomial>(j, 3, where, monomial_row));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError && std::string(e.what()).find(where) == std::string::npos)
      throw Error(ErrorCode::ConfigError, where + ": " + e.what());
    throw;
  }
}

inline nlohmann::json write_poly(const Poly& p) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& m : p.terms()) arr.push_back({m.i, m.j, m.c});
  return arr;
}

}  // namespace detail

inline FilippovSystem system_from_json(const nlohmann::json& j) {
  FilippovSystem z;
  for (const char* side : {"upper", "lower"}) {
    const auto& f = detail::member(j, side, "system");
    PolyField pf{detail::read_poly(detail::member(f, "dx", side), std::string(side) + ".dx"),
                 detail::read_poly(detail::member(f, "dy", side), std::string(side) + ".dy")};
    (std::string(side) == "upper" ? z.upper : z.lower) = pf;
  }
  return z;
}

inline nlohmann::json system_to_json(const FilippovSystem& z) {
  return {{"upper", {{"dx", detail::write_poly(z.upper.dx)}, {"dy", detail::write_poly(z.upper.dy)}}},
          {"lower", {{"dx", detail::write_poly(z.lower.dx)}, {"dy", detail::write_poly(z.lower.dy)}}}};
}

inline Family family_from_json(const nlohmann::json& j, std::string id = "template") {
  Family fam;
  fam.kind = Family::Kind::PolynomialTemplate;
  fam.id = std::move(id);
  int k = 0;
  for (const char* side : {"upper", "lower"}) {
    const auto& f = detail::member(j, side, "family");
    for (const char* comp : {"dx", "dy"}) {
      const std::string where = std::string(side) + "." + comp;
      fam.terms[k++] = detail::read_rows<AffineTerm>(detail::member(f, comp, side), 5, where, detail::affine_row);
    }
  }
  return fam;
}

/// Parses a JSON file; malformed text becomes ConfigError with the line.
inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, path + ": " + e.what());
  }
}

/// A file holding either a system ([i,j,c] terms) or a family ([i,j,c0,ca,cb]).
inline bool is_family_json(const nlohmann::json& j) {
  const auto& dx = detail::member(detail::member(j, "upper", "system"), "dx", "upper");
  return dx.is_array() && !dx.empty() && dx[0].is_array() && dx[0].size() == 5;
}

}  // namespace twofold
