#include "btower/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace btower {

namespace pt = boost::property_tree;

void SettingsOverride::apply(ExperimentSettings& s) const {
  if (N) s.N = *N;
  if (k) s.k = *k;
  if (box) s.box = *box;
  if (eps_min) s.sweep.eps_min = *eps_min;
  if (eps_max) s.sweep.eps_max = *eps_max;
  if (eps_samples) s.sweep.samples = *eps_samples;
  if (grid_nodes) s.grid.min_nodes = *grid_nodes;
  if (panels_per_decade) s.grid.panels_per_decade = *panels_per_decade;
  if (degree) s.grid.degree = *degree;
  if (tol) {
    s.quad.rel_tol = *tol;
    s.quad.abs_tol = std::min(s.quad.abs_tol, *tol * 1e-2);
  }
  if (extended) s.extended = *extended;
}

SettingsOverride SettingsOverride::merged(const SettingsOverride& later) const {
  SettingsOverride m = *this;
  auto take = [](auto& dst, const auto& src) {
    if (src) dst = src;
  };
  take(m.N, later.N);
  take(m.k, later.k);
  take(m.box, later.box);
  take(m.eps_min, later.eps_min);
  take(m.eps_max, later.eps_max);
  take(m.eps_samples, later.eps_samples);
  take(m.grid_nodes, later.grid_nodes);
  take(m.panels_per_decade, later.panels_per_decade);
  take(m.degree, later.degree);
  take(m.tol, later.tol);
  take(m.extended, later.extended);
  return m;
}

ExperimentSettings RunConfig::settings_for(const std::string& name, const SettingsOverride& cli) const {
  ExperimentSettings s = default_settings(name);
  defaults.apply(s);
  if (auto it = per_experiment.find(name); it != per_experiment.end()) it->second.apply(s);
  cli.apply(s);
  validate(s);
  return s;
}

RunConfig default_campaign() {
  RunConfig c;
  c.experiments = experiment_names();
  return c;
}

namespace {

template <class T>
std::optional<T> read(const pt::ptree& section, const std::string& key, const std::string& where) {
  const auto v = section.get_optional<std::string>(key);
  if (!v) return std::nullopt;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      const std::string s = boost::algorithm::to_lower_copy(boost::algorithm::trim_copy(*v));
      if (s == "true" || s == "1" || s == "yes") return true;
      if (s == "false" || s == "0" || s == "no") return false;
      throw std::invalid_argument(s);
    } else {
      std::istringstream in(*v);
      T x;
      if (!(in >> x)) throw std::invalid_argument(*v);
      // trailing blanks only; ws may set failbit once at end of input
      in >> std::ws;
      if (!in.eof()) throw std::invalid_argument(*v);
      return x;
    }
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("[{}] {}: cannot parse '{}'", where, key, *v));
  }
}

SettingsOverride read_override(const pt::ptree& section, const std::string& where) {
  static const std::vector<std::string> known{"N",         "k",          "box",    "eps_min",
                                              "eps_max",   "eps_samples", "grid_nodes", "panels_per_decade",
                                              "degree",    "tol",        "extended"};
  for (const auto& [key, _] : section)
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError(fmt::format("[{}]: unknown key '{}'", where, key));
  SettingsOverride o;
  o.N = read<int>(section, "N", where);
  o.k = read<int>(section, "k", where);
  o.box = read<double>(section, "box", where);
  o.eps_min = read<double>(section, "eps_min", where);
  o.eps_max = read<double>(section, "eps_max", where);
  o.eps_samples = read<int>(section, "eps_samples", where);
  o.grid_nodes = read<int>(section, "grid_nodes", where);
  o.panels_per_decade = read<int>(section, "panels_per_decade", where);
  o.degree = read<int>(section, "degree", where);
  o.tol = read<double>(section, "tol", where);
  o.extended = read<bool>(section, "extended", where);
  return o;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("config line {}: {}", e.line(), e.message()));
  }
  RunConfig c = default_campaign();
  const auto& names = experiment_names();
  for (const auto& [section, body] : tree) {
    if (section == "campaign") {
      for (const auto& [key, value] : body) {
        if (key == "out") {
          c.out = boost::algorithm::trim_copy(value.data());
        } else if (key == "experiments") {
          std::vector<std::string> list;
          const std::string raw = value.data();
          boost::algorithm::split(list, raw, boost::algorithm::is_any_of(", "), boost::algorithm::token_compress_on);
          list.erase(std::remove(list.begin(), list.end(), std::string()), list.end());
          for (const auto& e : list)
            if (std::find(names.begin(), names.end(), e) == names.end())
              throw ConfigError("[campaign] experiments: unknown experiment '" + e + "'");
          c.experiments = list;
        } else {
          throw ConfigError("[campaign]: unknown key '" + key + "'");
        }
      }
    } else if (section == "defaults") {
      c.defaults = read_override(body, section);
    } else if (std::find(names.begin(), names.end(), section) != names.end()) {
      c.per_experiment[section] = read_override(body, section);
    } else if (body.empty()) {
      throw ConfigError("key '" + section + "' outside any section");
    } else {
      throw ConfigError("unknown section [" + section + "]");
    }
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

void validate(const ExperimentSettings& s) {
  if (s.N < 5 || s.N > 12) throw ConfigError(fmt::format("N = {} outside the supported range 5..12", s.N));
  if (s.k < 1 || s.k > 8) throw ConfigError(fmt::format("k = {} outside the supported range 1..8", s.k));
  if (!(s.box > 0 && s.box < 1)) throw ConfigError("box d must lie in (0,1)");
  if (!(s.sweep.eps_min > 0 && s.sweep.eps_min < s.sweep.eps_max && s.sweep.eps_max < 1))
    throw ConfigError("need 0 < eps_min < eps_max < 1");
  if (s.sweep.samples != 0 && s.sweep.samples < 4) throw ConfigError("eps_samples must be 0 (automatic) or at least 4");
  if (s.grid.min_nodes < 2 || s.grid.panels_per_decade < 1 || s.grid.degree < 4)
    throw ConfigError("grid needs nodes >= 2, panels_per_decade >= 1, degree >= 4");
  if (!(s.quad.rel_tol > 0 && s.quad.rel_tol < 1) || !(s.quad.abs_tol > 0))
    throw ConfigError("quadrature tolerances must be positive");
}

}  // namespace btower
