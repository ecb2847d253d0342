#pragma once

#include <string>
#include <vector>

#include "advgen/gates.hpp"
#include "advgen/scene.hpp"

namespace advgen {

enum class ControllerKind { replay, idm, cruise, expert };

const char* to_string(ControllerKind k);
std::optional<ControllerKind> controller_from_string(const std::string& s);

struct IdmParams {
  double v0 = 0.0;     // desired speed; <= 0 means "current speed at rollout start"
  double headway = 1.5;
  double a_max = 3.0;
  double b = 4.0;      // comfortable braking
  double s0 = 2.0;     // jam distance
};

struct CruiseParams {
  double set_speed = 0.0;   // <= 0 means "current speed at rollout start"
  double brake_decel = 4.0;
  double ttc_brake = 2.0;   // seconds
};

struct ExpertControllerParams {
  double lookahead_gain = 0.8;   // pure pursuit lookahead = max(3, gain * v)
  double evade_gap = 2.0;        // m, predicted clearance that triggers evasion
  double evade_offset = 3.5;     // m, lateral shift of the evasion path
  double brake_decel = 4.0;
};

struct ControllerSpec {
  ControllerKind kind = ControllerKind::replay;
  IdmParams idm;
  CruiseParams cruise;
  ExpertControllerParams expert;
};

struct ControlAction {
  double a_long = 0.0;
  double curvature = 0.0;
};

struct ObservedVehicle {
  Vec2 pos;
  double v = 0.0;
  double theta = 0.0;
  BoxSize size;
};

struct ControlContext {
  const Polyline* reference_path = nullptr;  // logged ego path
  double desired_speed = 0.0;                // resolved v0/set speed
  double dt = 0.1;
  const DynLimits* limits = nullptr;
};

// One control step for the reactive controllers. Replay is handled by the
// rollout directly and never reaches this function.
ControlAction step_controller(const ControllerSpec& spec, const VehicleState& ego,
                              const BoxSize& ego_size, const std::vector<ObservedVehicle>& others,
                              const ControlContext& ctx);

// IDM acceleration for a given gap/approach rate; exposed for direct checks.
double idm_acceleration(const IdmParams& p, double v, double v0, double gap, double closing);

}  // namespace advgen
