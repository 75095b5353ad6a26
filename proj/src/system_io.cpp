#include "compsim/system_io.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "json.hpp"

#include "compsim/errors.hpp"

namespace compsim::io {

namespace {

using nlohmann::json;

json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

double number_at(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + " must be a number");
  return j.get<double>();
}

Vector vector_at(const json& j, std::size_t n, const std::string& where) {
  if (!j.is_array() || j.size() != n) {
    std::ostringstream msg;
    msg << where << " must be an array of " << n << " numbers";
    throw ConfigError(msg.str());
  }
  Vector v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = number_at(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

casa::CasaParams casa_params_from(const json& j, const std::string& origin) {
  if (!j.is_object()) throw ConfigError(origin + ": casa_overrides must be an object");
  casa::CasaParams p;
  const std::map<std::string, double*> fields = {
      {"b11", &p.b11}, {"b22", &p.b22}, {"b33", &p.b33}, {"b41", &p.b41},
      {"b42", &p.b42}, {"b44", &p.b44}, {"b51", &p.b51}, {"b52", &p.b52},
      {"b55", &p.b55}, {"b63", &p.b63}, {"b66", &p.b66}, {"b74", &p.b74},
      {"b75", &p.b75}, {"b76", &p.b76}, {"b77", &p.b77}, {"b78", &p.b78},
      {"b79", &p.b79}, {"b85", &p.b85}, {"b86", &p.b86}, {"b87", &p.b87},
      {"b88", &p.b88}, {"b89", &p.b89}, {"b97", &p.b97}, {"b98", &p.b98},
      {"b99", &p.b99}, {"sigma", &p.sigma}, {"t_s0", &p.t_s0},
      {"alpha", &p.alpha}, {"f1", &p.f1}, {"f2", &p.f2}, {"f3", &p.f3},
      {"rho", &p.rho}, {"xi_b", &p.xi_b}, {"s0", &p.s0},
  };
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "co2_model") {
      if (!it.value().is_string())
        throw ConfigError(origin + ": casa_overrides.co2_model must be a string");
      const std::string v = it.value().get<std::string>();
      if (v == "verbatim")
        p.co2_model = casa::Co2Model::Verbatim;
      else if (v == "logistic")
        p.co2_model = casa::Co2Model::Logistic;
      else
        throw ConfigError(origin + ": casa_overrides.co2_model must be \"verbatim\" or \"logistic\"");
      continue;
    }
    const auto f = fields.find(it.key());
    if (f == fields.end())
      throw ConfigError(origin + ": unknown casa_overrides key \"" + it.key() + "\"");
    *f->second = number_at(it.value(), origin + ": casa_overrides." + it.key());
  }
  return p;
}

core::ScalarForcing forcing_from_cell(const json& cell, const casa::CasaParams& cp,
                                      const std::string& where) {
  if (!cell.is_object() || cell.size() != 1)
    throw ConfigError(where + ": a forcing cell must be null or an object with exactly one of"
                              " \"constant\", \"table\", \"builtin\"");
  if (cell.contains("constant"))
    return core::ScalarForcing::constant(number_at(cell["constant"], where + ".constant"));
  if (cell.contains("table")) {
    const json& tab = cell["table"];
    if (!tab.is_object() || !tab.contains("t") || !tab.contains("v"))
      throw ConfigError(where + ".table must be an object with \"t\" and \"v\" arrays");
    if (!tab["t"].is_array())
      throw ConfigError(where + ".table.t must be an array");
    const std::size_t n = tab["t"].size();
    try {
      return core::ScalarForcing::table(vector_at(tab["t"], n, where + ".table.t"),
                                        vector_at(tab["v"], n, where + ".table.v"));
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  if (cell.contains("builtin")) {
    if (!cell["builtin"].is_string())
      throw ConfigError(where + ".builtin must be a string");
    const std::string name = cell["builtin"].get<std::string>();
    if (name == "casa_xi")
      return core::ScalarForcing::function(name, casa::make_xi_forcing(cp));
    if (name == "casa_npp")
      return core::ScalarForcing::function(name, casa::make_input_forcing(cp));
    if (auto fn = core::find_builtin_forcing(name))
      return core::ScalarForcing::function(name, std::move(*fn));
    throw ConfigError(where + ": unknown builtin forcing \"" + name + "\"");
  }
  throw ConfigError(where + ": a forcing cell key must be one of \"constant\", \"table\","
                            " \"builtin\"");
}

LoadedSystem parse_system(const json& j, const std::string& origin) {
  if (!j.is_object()) throw ConfigError(origin + ": a system definition must be a JSON object");
  static const char* known[] = {"dimension",     "base_matrix", "matrix_forcing",
                                "base_input",    "input_forcing", "t_min",
                                "casa_overrides", "x0",          "abar0"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError(origin + ": unknown key \"" + it.key() + "\"");
  }
  for (const char* k : {"dimension", "base_matrix", "base_input"})
    if (!j.contains(k)) throw ConfigError(origin + ": missing required key \"" + k + "\"");

  if (!j["dimension"].is_number_integer() || j["dimension"].get<long>() <= 0)
    throw ConfigError(origin + ": dimension must be a positive integer");
  const std::size_t d = j["dimension"].get<std::size_t>();

  if (!j["base_matrix"].is_array() || j["base_matrix"].size() != d)
    throw ConfigError(origin + ": base_matrix must have one row per pool");
  Matrix base(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    const Vector row = vector_at(j["base_matrix"][i],
                                 d, origin + ": base_matrix[" + std::to_string(i) + "]");
    for (std::size_t c = 0; c < d; ++c) base(i, c) = row[c];
  }

  const Vector input = vector_at(j["base_input"], d, origin + ": base_input");

  core::TimeDomain domain;
  if (j.contains("t_min") && !j["t_min"].is_null())
    domain.tau = number_at(j["t_min"], origin + ": t_min");

  casa::CasaParams cp;
  if (j.contains("casa_overrides")) cp = casa_params_from(j["casa_overrides"], origin);

  core::CompartmentalSystem system(std::move(base), input, domain);

  if (j.contains("matrix_forcing") && !j["matrix_forcing"].is_null()) {
    const json& mf = j["matrix_forcing"];
    if (!mf.is_array() || mf.size() != d)
      throw ConfigError(origin + ": matrix_forcing must have one row per pool");
    for (std::size_t i = 0; i < d; ++i) {
      if (!mf[i].is_array() || mf[i].size() != d)
        throw ConfigError(origin + ": matrix_forcing[" + std::to_string(i) +
                          "] must have one cell per pool");
      for (std::size_t c = 0; c < d; ++c) {
        if (mf[i][c].is_null()) continue;
        std::ostringstream where;
        where << origin << ": matrix_forcing[" << i << "][" << c << "]";
        system.set_matrix_forcing(i, c, forcing_from_cell(mf[i][c], cp, where.str()));
      }
    }
  }

  if (j.contains("input_forcing") && !j["input_forcing"].is_null()) {
    const json& inf = j["input_forcing"];
    if (!inf.is_array() || inf.size() != d)
      throw ConfigError(origin + ": input_forcing must have one cell per pool");
    for (std::size_t i = 0; i < d; ++i) {
      if (inf[i].is_null()) continue;
      std::ostringstream where;
      where << origin << ": input_forcing[" << i << "]";
      system.set_input_forcing(i, forcing_from_cell(inf[i], cp, where.str()));
    }
  }

  LoadedSystem loaded{std::move(system), std::nullopt, std::nullopt};
  if (j.contains("x0") && !j["x0"].is_null())
    loaded.x0 = vector_at(j["x0"], d, origin + ": x0");
  if (j.contains("abar0") && !j["abar0"].is_null())
    loaded.abar0 = vector_at(j["abar0"], d, origin + ": abar0");
  return loaded;
}

}  // namespace

LoadedSystem load_system_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read system definition file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_system_text(buffer.str(), path);
}

LoadedSystem parse_system_text(const std::string& text, const std::string& origin) {
  return parse_system(parse_json(text, origin), origin);
}

casa::CasaParams parse_casa_overrides_text(const std::string& text) {
  return casa_params_from(parse_json(text, "casa_overrides"), "casa_overrides");
}

}  // namespace compsim::io
