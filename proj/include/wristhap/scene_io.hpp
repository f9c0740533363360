#pragma once
// Scene/calibration file (JSON) and calibration pose log (CSV) formats.
// Column- and key-level schemas are documented in docs/formats.md.

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wristhap/compensation.hpp"
#include "wristhap/world.hpp"

namespace wristhap::io {

using nlohmann::json;

inline constexpr int kSceneFormatVersion = 1;

json transform_to_json(const RigidTransform& x);
/// Rotation given either as a 3x3 row-major "rotation" matrix or as
/// {"axis": [..], "angle_deg": a}; translation in metres.
RigidTransform transform_from_json(const json& j);

json tool_to_json(const CompensationModel& m);
CompensationModel tool_from_json(const json& j);

json scene_to_json(const sim::Scene& s);
/// Missing sections fall back to default_scene(). Throws ConfigError.
sim::Scene scene_from_json(const json& j);

sim::Scene load_scene(const std::filesystem::path& path);
void save_scene(const std::filesystem::path& path, const sim::Scene& s);

/// Replaces the "tool" section of the scene file at `path` (creating the
/// file from the default scene if absent) with a fitted model and records
/// the fit quality under "calibration".
void write_calibration(const std::filesystem::path& path, const CalibrationResult& fit);

/// CSV header of the pose log: timestamp, 6 wrench components, 9 rotation
/// entries (row-major, sensor->world).
std::string pose_log_header();
void write_pose_log(const std::filesystem::path& path, const std::vector<RawSensorSample>& poses);
std::vector<RawSensorSample> read_pose_log(const std::filesystem::path& path);

}  // namespace wristhap::io
