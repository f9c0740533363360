#include "wristhap/gateway/inbox.hpp"

#include <cmath>

#include "wristhap/errors.hpp"
#include "wristhap/gateway/logs.hpp"

namespace wristhap::gateway {

using nlohmann::json;

namespace {

Vec3 vec3(const json& j, const char* key) {
  if (!j.contains(key)) return Vec3::Zero();
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 3) throw ConfigError(std::string(key) + " must be an array of 3 numbers");
  Vec3 out;
  for (int k = 0; k < 3; ++k) {
    if (!v[k].is_number()) throw ConfigError(std::string(key) + " must be an array of 3 numbers");
    out[k] = v[k].get<double>();
    if (!std::isfinite(out[k])) throw ConfigError(std::string(key) + " must be finite");
  }
  return out;
}

}  // namespace

void OperatorInbox::apply(const json& cmd) {
  if (!cmd.is_object() || !cmd.contains("cmd") || !cmd.at("cmd").is_string()) {
    throw ConfigError("command must be an object with a string 'cmd'");
  }
  const std::string name = cmd.at("cmd").get<std::string>();
  if (name == "move") {
    sim::OperatorCommand m;
    m.linear = vec3(cmd, "linear");
    m.angular = vec3(cmd, "angular");
    std::lock_guard lock(mutex_);
    pending_.move = m;
  } else if (name == "jaw") {
    if (!cmd.contains("button") || !cmd.at("button").is_string()) throw ConfigError("jaw needs a string 'button'");
    const sim::JawButton b = parse_jaw_button(cmd.at("button").get<std::string>());
    std::lock_guard lock(mutex_);
    pending_.button = b;
  } else if (name == "full_open") {
    std::lock_guard lock(mutex_);
    pending_.full_open = true;
    pending_.full_close = false;
  } else if (name == "full_close") {
    std::lock_guard lock(mutex_);
    pending_.full_close = true;
    pending_.full_open = false;
  } else if (name == "start") {
    std::lock_guard lock(mutex_);
    pending_.start = true;
  } else {
    throw ConfigError("unknown command '" + name + "'");
  }
}

PendingInput OperatorInbox::take() {
  std::lock_guard lock(mutex_);
  PendingInput out = pending_;
  pending_.full_open = pending_.full_close = pending_.start = false;
  return out;
}

}  // namespace wristhap::gateway
