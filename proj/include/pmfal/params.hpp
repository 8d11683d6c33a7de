#pragma once

#include <Eigen/Core>
#include <array>
#include <map>
#include <string>

#include "pmfal/errors.hpp"

namespace pmfal {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Geometry, inertia and material constants of the 3-RRR mechanism with
/// flexible actuation links. All values in SI units (m, kg, Pa, rad).
struct MechanismParams {
  double R;               // base circle radius
  double r;               // platform circle radius
  double l1;              // actuation-link length
  double l2;              // intermediate-link length
  double rho;             // actuation-link mass per unit length
  double E;               // Young's modulus
  double I;               // area moment of inertia (in-plane bending)
  double link_width;      // section width
  double link_thickness;  // section thickness
  double m_r;             // intermediate-link mass
  double J_r;             // intermediate-link inertia about its COM
  double l_c;             // COM offset along intermediate link
  double m_e;             // platform mass
  double J_e;             // platform inertia
  std::array<double, 3> alpha;  // branch angles (i-1)*2*pi/3

  /// Base joint position of branch i (0-based).
  Vec2 base_point(int branch) const {
    return {R * std::cos(alpha[branch]), R * std::sin(alpha[branch])};
  }

  /// Throws ValidationError on the first violated invariant.
  void validate() const;
};

struct PlatformPose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec3 vec() const { return {x, y, theta}; }
  static PlatformPose from_vec(const Vec3& v) { return {v[0], v[1], v[2]}; }
};

/// Flat section/key -> value view of an INI-style config file.
/// Keys are "section.name"; values are kept as raw strings.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text);

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  double get_number(const std::string& key) const;
  double get_number(const std::string& key, double fallback) const;
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;

 private:
  std::map<std::string, std::string> kv_;
};

/// Builds SI mechanism parameters from a config document. Lengths may be
/// declared in mm via the [units] section; derived quantities (I, m_r, J_r,
/// l_c) are filled in from uniform-beam formulas when absent.
MechanismParams load_params(const Config& cfg);
MechanismParams load_params_file(const std::string& path);

/// Reference parameter set, for tests and tools that need no config file.
MechanismParams reference_params();

/// Unit vectors along the undeformed actuation link and its transverse
/// direction, for branch (0-based) at actuation angle q_a.
void branch_unit_vectors(const MechanismParams& p, double q_a, int branch,
                         Vec2& u, Vec2& v);

/// Platform corner positions P_Ci for a pose, one per branch.
std::array<Vec2, 3> platform_corner_positions(const MechanismParams& p,
                                              const PlatformPose& pose);

}  // namespace pmfal
