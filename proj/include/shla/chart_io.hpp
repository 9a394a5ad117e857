#pragma once

#include <fstream>

#include <json.hpp>

#include "shla/leaf_form.hpp"

namespace shla {

using nlohmann::json;

inline Rational rational_from_string(const std::string& text) {
  auto slash = text.find('/');
  if (slash == std::string::npos) return Rational::from_decimal_string(text);
  return Rational(std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1)));
}

/// Chart document:
/// {"k":int, "r":int, "coords":{"y":[names],"q":[names]},
///  "periods":{name:number|null}, "omega":[[expr]], "R":[[expr]],
///  "params":{name:"p/q"}, optional "name", optional "domains":{name:[lo,hi]}}
inline ChartSpec chart_from_json(const json& doc) {
  ChartSpec c;
  try {
    c.k = doc.at("k").get<int>();
    c.r = doc.at("r").get<int>();
    if (c.k < 0 || c.r < 1) throw ChartError("chart needs k >= 0 and r >= 1");
    c.y_names = doc.at("coords").at("y").get<std::vector<std::string>>();
    c.q_names = doc.at("coords").at("q").get<std::vector<std::string>>();
    if (static_cast<int>(c.y_names.size()) != 2 * c.k)
      throw ChartError("coords.y must list 2k names");
    if (static_cast<int>(c.q_names.size()) != c.r)
      throw ChartError("coords.q must list r names");
    for (const auto& [name, value] : doc.at("periods").items()) {
      if (value.is_null())
        c.periods[name] = std::nullopt;
      else
        c.periods[name] = value.get<double>();
    }
    for (const auto& n : c.coord_names())
      if (!c.periods.count(n)) throw ChartError("periods missing coordinate '" + n + "'");
    if (doc.contains("params"))
      for (const auto& [name, value] : doc.at("params").items())
        c.params[name] = value.is_string() ? rational_from_string(value.get<std::string>())
                                           : Rational(value.get<std::int64_t>());
    std::map<std::string, Expr> bind;
    for (const auto& [pname, pval] : c.params) bind[pname] = Expr::constant(pval);
    auto parse_bound = [&](const std::string& text) {
      return parse_expr(text).substitute(bind);
    };
    for (const auto& row : doc.at("omega")) {
      c.omega.emplace_back();
      for (const auto& entry : row) c.omega.back().push_back(parse_bound(entry.get<std::string>()));
    }
    for (const auto& row : doc.at("R")) {
      c.R.emplace_back();
      for (const auto& entry : row) c.R.back().push_back(parse_bound(entry.get<std::string>()));
    }
    if (doc.contains("domains"))
      for (const auto& [name, value] : doc.at("domains").items())
        c.domains[name] = {value.at(0).get<double>(), value.at(1).get<double>()};
    if (doc.contains("name")) c.name = doc.at("name").get<std::string>();
  } catch (const json::exception& err) {
    throw ChartError(std::string("chart document does not match the schema: ") + err.what());
  }
  return c;
}

inline ChartSpec load_chart(const std::string& path, int sample_count = 64) {
  std::ifstream in(path);
  if (!in) throw ChartError("cannot open chart file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& err) {
    throw ChartError("chart file '" + path + "' is not valid JSON: " + err.what());
  }
  ChartSpec c = chart_from_json(doc);
  c.validate(sample_count);
  return c;
}

inline json chart_to_json(const ChartSpec& c) {
  json doc;
  doc["name"] = c.name;
  doc["k"] = c.k;
  doc["r"] = c.r;
  doc["coords"] = {{"y", c.y_names}, {"q", c.q_names}};
  json periods = json::object();
  for (const auto& [name, p] : c.periods) {
    if (p)
      periods[name] = *p;
    else
      periods[name] = nullptr;
  }
  doc["periods"] = periods;
  json omega = json::array();
  for (const auto& row : c.omega) {
    json jr = json::array();
    for (const auto& e : row) jr.push_back(e.str());
    omega.push_back(jr);
  }
  doc["omega"] = omega;
  json R = json::array();
  for (const auto& row : c.R) {
    json jr = json::array();
    for (const auto& e : row) jr.push_back(e.str());
    R.push_back(jr);
  }
  doc["R"] = R;
  json params = json::object();
  for (const auto& [name, v] : c.params) params[name] = v.str();
  doc["params"] = params;
  if (!c.domains.empty()) {
    json domains = json::object();
    for (const auto& [name, d] : c.domains) domains[name] = {d.first, d.second};
    doc["domains"] = domains;
  }
  return doc;
}

/// Form document: {"degree": l, "coeff": {"1": expr, "12": expr, ...}};
/// keys are concatenated 1-based leaf indices ("" for the degree-0 slot),
/// commas allowed between indices.
inline LeafForm form_from_json(const ChartSpec& chart, const json& doc) {
  int degree = 0;
  try {
    degree = doc.at("degree").get<int>();
  } catch (const json::exception& err) {
    throw ChartError(std::string("form document does not match the schema: ") + err.what());
  }
  if (degree < 0 || degree > chart.r)
    throw ChartError("form degree must lie in 0..r");
  LeafForm out(chart.r, degree);
  if (!doc.contains("coeff")) return out;
  std::map<std::string, Expr> bind;
  for (const auto& [pname, pval] : chart.params) bind[pname] = Expr::constant(pval);
  for (const auto& [key, value] : doc.at("coeff").items()) {
    Index idx;
    for (char ch : key) {
      if (ch == ',' || ch == ' ') continue;
      if (!std::isdigit(static_cast<unsigned char>(ch)))
        throw ChartError("bad coefficient key '" + key + "'");
      idx.push_back(ch - '1');
    }
    if (static_cast<int>(idx.size()) != degree)
      throw ChartError("coefficient key '" + key + "' does not match degree " +
                       std::to_string(degree));
    for (int v : idx)
      if (v < 0 || v >= chart.r) throw ChartError("coefficient key '" + key + "' out of range");
    Expr e = parse_expr(value.get<std::string>()).substitute(bind);
    int sign = permutation_sign(idx);
    if (sign == 0) throw ChartError("coefficient key '" + key + "' repeats an index");
    std::sort(idx.begin(), idx.end());
    out.set(idx, sign == 1 ? e : -e);
  }
  return out;
}

inline LeafForm load_form(const ChartSpec& chart, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ChartError("cannot open form file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& err) {
    throw ChartError("form file '" + path + "' is not valid JSON: " + err.what());
  }
  return form_from_json(chart, doc);
}

inline json form_to_json(const LeafForm& form) {
  json doc;
  doc["degree"] = form.degree();
  json coeff = json::object();
  for (std::size_t t = 0; t < form.size(); ++t) {
    const Index& idx = form.indices()[t];
    std::string key;
    for (int v : idx) key += static_cast<char>('1' + v);
    coeff[key] = form.coeff(static_cast<int>(t)).str();
  }
  doc["coeff"] = coeff;
  return doc;
}

}  // namespace shla
