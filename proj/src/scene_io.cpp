#include "wristhap/scene_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "wristhap/csv.hpp"

namespace wristhap::io {

namespace {

json vec_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(what) + ": expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

Vec3 vec_or(const json& j, const char* key, const Vec3& fallback) {
  return j.contains(key) ? vec_from_json(j.at(key), key) : fallback;
}

void only_keys(const json& j, const char* section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(section) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError(std::string(section) + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace

json transform_to_json(const RigidTransform& x) {
  const Mat3& r = x.rotation().matrix();
  json rows = json::array();
  for (int i = 0; i < 3; ++i) rows.push_back(json::array({r(i, 0), r(i, 1), r(i, 2)}));
  return {{"from", x.from().name()}, {"to", x.to().name()}, {"rotation", rows},
          {"translation", vec_to_json(x.translation())}};
}

RigidTransform transform_from_json(const json& j) {
  try {
    only_keys(j, "transform", {"from", "to", "rotation", "axis", "angle_deg", "translation"});
    Rotation rot;
    if (j.contains("rotation")) {
      const json& rows = j.at("rotation");
      if (!rows.is_array() || rows.size() != 3) throw ConfigError("rotation: expected 3 rows");
      Mat3 m;
      for (int i = 0; i < 3; ++i) {
        const Vec3 row = vec_from_json(rows[static_cast<std::size_t>(i)], "rotation row");
        m.row(i) = row.transpose();
      }
      rot = Rotation(m);
    } else if (j.contains("axis")) {
      rot = Rotation::about_axis(vec_from_json(j.at("axis"), "axis"),
                                 j.at("angle_deg").get<double>() * std::numbers::pi / 180.0);
    }
    return {FrameId(j.at("from").get<std::string>()), FrameId(j.at("to").get<std::string>()), rot,
            vec_or(j, "translation", Vec3::Zero())};
  } catch (const json::exception& e) {
    throw ConfigError(std::string("transform: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("transform: ") + e.what());
  }
}

json tool_to_json(const CompensationModel& m) {
  return {{"mass_kg", m.tool_mass()},
          {"com_m", vec_to_json(m.com_offset())},
          {"bias_force_N", vec_to_json(m.bias().force())},
          {"bias_torque_Nm", vec_to_json(m.bias().torque())},
          {"gravity_mps2", vec_to_json(m.gravity_world())}};
}

CompensationModel tool_from_json(const json& j) {
  try {
    only_keys(j, "tool", {"mass_kg", "com_m", "bias_force_N", "bias_torque_Nm", "gravity_mps2"});
    return CompensationModel::identified(
        j.at("mass_kg").get<double>(), vec_or(j, "com_m", Vec3::Zero()),
        Wrench(vec_or(j, "bias_force_N", Vec3::Zero()), vec_or(j, "bias_torque_Nm", Vec3::Zero()), FrameId::sensor()),
        vec_or(j, "gravity_mps2", kStandardGravity));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("tool: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("tool: ") + e.what());
  }
}

json scene_to_json(const sim::Scene& s) {
  const auto& t = s.tissue;
  return {
      {"version", kSceneFormatVersion},
      {"frames", json::array({"S", "T", "B", "H", "W"})},
      {"transforms",
       {{"sensor_mount", transform_to_json(s.sensor_mount)},
        {"base_to_world", transform_to_json(s.base_to_world)},
        {"base_to_haptic", transform_to_json(s.base_to_haptic)},
        {"home_tip_pose", transform_to_json(s.home_tip_pose)}}},
      {"tissue",
       {{"shape", t.shape == sim::TissueModel::Shape::kPlane ? "plane" : "sphere"},
        {"origin_m", vec_to_json(t.origin)},
        {"normal", vec_to_json(t.normal)},
        {"radius_m", t.radius},
        {"stiffness_N_per_m", t.stiffness},
        {"damping_Ns_per_m", t.damping}}},
      {"tool", tool_to_json(s.tool)},
      {"noise",
       {{"enabled", s.noise_enabled},
        {"sigma_force_N", s.noise.sigma_force},
        {"sigma_torque_Nm", s.noise.sigma_torque},
        {"seed", s.noise.seed}}},
      {"jaw",
       {{"stroke_mm", s.jaw.stroke_mm},
        {"max_speed_mm_s", s.jaw.max_speed_mm_s},
        {"step_mm", s.jaw.step_mm},
        {"long_press_s", s.jaw.long_press_s}}},
      {"limits", {{"max_linear_m_s", s.limits.max_linear}, {"max_angular_rad_s", s.limits.max_angular}}},
  };
}

sim::Scene scene_from_json(const json& j) {
  sim::Scene s = sim::default_scene();
  try {
    only_keys(j, "scene",
              {"version", "frames", "transforms", "tissue", "tool", "noise", "jaw", "limits", "calibration"});
    if (j.contains("version") && j.at("version").get<int>() != kSceneFormatVersion) {
      throw ConfigError("scene: unsupported version " + j.at("version").dump());
    }
    if (j.contains("frames")) {
      std::vector<std::string> names = j.at("frames").get<std::vector<std::string>>();
      std::sort(names.begin(), names.end());
      if (std::adjacent_find(names.begin(), names.end()) != names.end()) {
        throw ConfigError("scene: frame labels must be unique");
      }
    }
    if (j.contains("transforms")) {
      const json& x = j.at("transforms");
      only_keys(x, "transforms", {"sensor_mount", "base_to_world", "base_to_haptic", "home_tip_pose"});
      if (x.contains("sensor_mount")) s.sensor_mount = transform_from_json(x.at("sensor_mount"));
      if (x.contains("base_to_world")) s.base_to_world = transform_from_json(x.at("base_to_world"));
      if (x.contains("base_to_haptic")) s.base_to_haptic = transform_from_json(x.at("base_to_haptic"));
      if (x.contains("home_tip_pose")) s.home_tip_pose = transform_from_json(x.at("home_tip_pose"));
    }
    if (j.contains("tissue")) {
      const json& t = j.at("tissue");
      only_keys(t, "tissue", {"shape", "origin_m", "normal", "radius_m", "stiffness_N_per_m", "damping_Ns_per_m"});
      const std::string shape = get_or<std::string>(t, "shape", "plane");
      if (shape == "plane") {
        s.tissue.shape = sim::TissueModel::Shape::kPlane;
      } else if (shape == "sphere") {
        s.tissue.shape = sim::TissueModel::Shape::kSphere;
      } else {
        throw ConfigError("tissue: unknown shape '" + shape + "'");
      }
      s.tissue.origin = vec_or(t, "origin_m", s.tissue.origin);
      s.tissue.normal = vec_or(t, "normal", s.tissue.normal);
      s.tissue.radius = get_or(t, "radius_m", s.tissue.radius);
      s.tissue.stiffness = get_or(t, "stiffness_N_per_m", s.tissue.stiffness);
      s.tissue.damping = get_or(t, "damping_Ns_per_m", s.tissue.damping);
    }
    if (j.contains("tool")) s.tool = tool_from_json(j.at("tool"));
    if (j.contains("noise")) {
      const json& n = j.at("noise");
      only_keys(n, "noise", {"enabled", "sigma_force_N", "sigma_torque_Nm", "seed"});
      s.noise_enabled = get_or(n, "enabled", s.noise_enabled);
      s.noise.sigma_force = get_or(n, "sigma_force_N", s.noise.sigma_force);
      s.noise.sigma_torque = get_or(n, "sigma_torque_Nm", s.noise.sigma_torque);
      s.noise.seed = get_or<std::uint64_t>(n, "seed", s.noise.seed);
    }
    if (j.contains("jaw")) {
      const json& jj = j.at("jaw");
      only_keys(jj, "jaw", {"stroke_mm", "max_speed_mm_s", "step_mm", "long_press_s"});
      s.jaw.stroke_mm = get_or(jj, "stroke_mm", s.jaw.stroke_mm);
      s.jaw.max_speed_mm_s = get_or(jj, "max_speed_mm_s", s.jaw.max_speed_mm_s);
      s.jaw.step_mm = get_or(jj, "step_mm", s.jaw.step_mm);
      s.jaw.long_press_s = get_or(jj, "long_press_s", s.jaw.long_press_s);
    }
    if (j.contains("limits")) {
      const json& l = j.at("limits");
      only_keys(l, "limits", {"max_linear_m_s", "max_angular_rad_s"});
      s.limits.max_linear = get_or(l, "max_linear_m_s", s.limits.max_linear);
      s.limits.max_angular = get_or(l, "max_angular_rad_s", s.limits.max_angular);
    }
    s.validate();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scene: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("scene: ") + e.what());
  } catch (const FrameMismatchError& e) {
    throw ConfigError(e.what());
  }
  return s;
}

sim::Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scene file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("scene file " + path.string() + ": " + e.what());
  }
  return scene_from_json(j);
}

void save_scene(const std::filesystem::path& path, const sim::Scene& s) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write scene file " + path.string());
  out << std::setprecision(17) << scene_to_json(s).dump(2) << '\n';
}

void write_calibration(const std::filesystem::path& path, const CalibrationResult& fit) {
  json j = scene_to_json(sim::default_scene());
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ConfigError("scene file " + path.string() + ": " + e.what());
    }
  }
  j["tool"] = tool_to_json(fit.model);
  j["calibration"] = {{"poses", fit.poses}, {"rms_residual", fit.rms_residual}, {"mass_stddev_kg", fit.mass_stddev}};
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write scene file " + path.string());
  out << j.dump(2) << '\n';
}

std::string pose_log_header() {
  return "timestamp,fx,fy,fz,tx,ty,tz,r00,r01,r02,r10,r11,r12,r20,r21,r22";
}

void write_pose_log(const std::filesystem::path& path, const std::vector<RawSensorSample>& poses) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write pose log " + path.string());
  out << pose_log_header() << '\n';
  for (const auto& p : poses) {
    CsvRow row;
    row.add(p.timestamp);
    for (int i = 0; i < 3; ++i) row.add(p.wrench.force()(i));
    for (int i = 0; i < 3; ++i) row.add(p.wrench.torque()(i));
    const Mat3& r = p.sensor_to_world.matrix();
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) row.add(r(i, k));
    out << row.str() << '\n';
  }
}

std::vector<RawSensorSample> read_pose_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open pose log " + path.string());
  std::vector<RawSensorSample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (lineno == 1 && line.rfind("timestamp", 0) == 0) continue;
    const std::vector<double> v = parse_csv_doubles(line);
    if (v.size() != 16) {
      throw ConfigError("pose log line " + std::to_string(lineno) + ": expected 16 columns, got " +
                        std::to_string(v.size()));
    }
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) r(i, k) = v[static_cast<std::size_t>(7 + 3 * i + k)];
    try {
      out.push_back({Wrench(Vec3(v[1], v[2], v[3]), Vec3(v[4], v[5], v[6]), FrameId::sensor()), v[0], Rotation(r)});
    } catch (const std::invalid_argument& e) {
      throw ConfigError("pose log line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace wristhap::io
