#pragma once
// Operator commands arriving from clients, consumed once per control tick.
// Motion and jaw button are levels (last writer wins); full open, full close
// and start are latched until the loop takes them.

#include <mutex>

#include <nlohmann/json.hpp>

#include "wristhap/jaw.hpp"
#include "wristhap/sim.hpp"

namespace wristhap::gateway {

struct PendingInput {
  sim::OperatorCommand move;
  sim::JawButton button = sim::JawButton::kReleased;
  bool full_open = false;
  bool full_close = false;
  bool start = false;
};

class OperatorInbox {
 public:
  /// Any thread. Accepts {"cmd":"move","linear":[..],"angular":[..]},
  /// {"cmd":"jaw","button":"open_pressed"}, {"cmd":"full_open"},
  /// {"cmd":"full_close"} and {"cmd":"start"}. Throws ConfigError otherwise.
  void apply(const nlohmann::json& cmd);

  /// Loop thread. Clears the latches.
  PendingInput take();

 private:
  std::mutex mutex_;
  PendingInput pending_;
};

}  // namespace wristhap::gateway
