#include "pmfal/params.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace pmfal {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

void require(bool ok, const std::string& predicate) {
  if (!ok) throw ValidationError("parameter invariant violated: " + predicate);
}

}  // namespace

Config Config::parse_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line, section;
  while (std::getline(in, line)) {
    auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("malformed config line: '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key in config line: '" + line + "'");
    cfg.kv_[section.empty() ? key : section + "." + key] = val;
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

double Config::get_number(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("missing config key: " + key);
  try {
    size_t pos = 0;
    double v = std::stod(it->second, &pos);
    if (pos != it->second.size())
      throw ConfigError("trailing characters in value for " + key);
    return v;
  } catch (const std::invalid_argument&) {
    throw ConfigError("non-numeric value for key " + key + ": " + it->second);
  }
}

double Config::get_number(const std::string& key, double fallback) const {
  return has(key) ? get_number(key) : fallback;
}

std::string Config::get_string(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("missing config key: " + key);
  return it->second;
}

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

void MechanismParams::validate() const {
  require(R > 0 && r > 0 && R > r, "R > r > 0");
  require(l1 > 0 && l2 > 0, "l1, l2 > 0");
  require(rho > 0, "rho > 0");
  require(E > 0, "E > 0");
  require(I > 0, "I > 0");
  require(m_r > 0 && J_r > 0, "m_r, J_r > 0");
  require(m_e > 0 && J_e > 0, "m_e, J_e > 0");
  require(l_c >= 0 && l_c <= l2, "0 <= l_c <= l2");
  using std::numbers::pi;
  require(alpha[0] == 0.0 && alpha[1] == 2.0 * pi / 3.0 &&
              alpha[2] == 4.0 * pi / 3.0,
          "alpha = [0, 2pi/3, 4pi/3]");
}

MechanismParams load_params(const Config& cfg) {
  const std::string lu = cfg.get_string("units.length", "mm");
  double lscale;
  if (lu == "mm")
    lscale = 1e-3;
  else if (lu == "m")
    lscale = 1.0;
  else
    throw ConfigError("unsupported length unit: " + lu);

  MechanismParams p{};
  p.R = cfg.get_number("geometry.R") * lscale;
  p.r = cfg.get_number("geometry.r") * lscale;
  p.l1 = cfg.get_number("geometry.l1") * lscale;
  p.l2 = cfg.get_number("geometry.l2") * lscale;
  p.link_width = cfg.get_number("geometry.link_width") * lscale;
  p.link_thickness = cfg.get_number("geometry.link_thickness") * lscale;
  p.rho = cfg.get_number("material.rho");  // kg/m regardless of length unit
  p.E = cfg.get_number("material.E");      // Pa
  // In-plane bending: second moment about the thickness axis.
  p.I = cfg.has("material.I")
            ? cfg.get_number("material.I")
            : p.link_width * std::pow(p.link_thickness, 3) / 12.0;
  p.m_e = cfg.get_number("platform.m_e");
  // J_e declared in kg*mm^2 when lengths are mm.
  p.J_e = cfg.get_number("platform.J_e") * lscale * lscale;
  // Intermediate link defaults: uniform rod with the actuation-link section.
  p.m_r = cfg.get_number("intermediate.m_r", p.rho * p.l2);
  p.l_c = cfg.has("intermediate.l_c") ? cfg.get_number("intermediate.l_c") * lscale
                                      : p.l2 / 2.0;
  p.J_r = cfg.get_number("intermediate.J_r", p.m_r * p.l2 * p.l2 / 12.0);
  using std::numbers::pi;
  p.alpha = {0.0, 2.0 * pi / 3.0, 4.0 * pi / 3.0};
  p.validate();
  return p;
}

MechanismParams load_params_file(const std::string& path) {
  return load_params(Config::parse_file(path));
}

MechanismParams reference_params() {
  static const char* text = R"(
[units]
length = mm

[geometry]
R = 800
r = 289
l1 = 600
l2 = 600
link_width = 30
link_thickness = 5

[material]
rho = 0.4155
E = 7.102e10

[platform]
m_e = 0.83
J_e = 5764
)";
  return load_params(Config::parse_string(text));
}

void branch_unit_vectors(const MechanismParams& p, double q_a, int branch,
                         Vec2& u, Vec2& v) {
  const double a = p.alpha[branch] + q_a;
  u = {std::cos(a), std::sin(a)};
  v = {-std::sin(a), std::cos(a)};
}

std::array<Vec2, 3> platform_corner_positions(const MechanismParams& p,
                                              const PlatformPose& pose) {
  std::array<Vec2, 3> out;
  for (int i = 0; i < 3; ++i) {
    const double a = pose.theta + p.alpha[i];
    out[i] = {pose.x + p.r * std::cos(a), pose.y + p.r * std::sin(a)};
  }
  return out;
}

}  // namespace pmfal
