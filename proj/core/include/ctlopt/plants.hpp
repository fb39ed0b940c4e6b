#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace ctlopt {

// State vectors are at most 4-dimensional; keep them on the stack.
using StateVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4, 1>;
using Mat = Eigen::MatrixXd;

struct DcMotorParams {
  double motor_constant = 0.01;  // K (N*m/A)
  double resistance = 1.0;       // R (ohm)
  double inductance = 0.5;       // L (H)
  double inertia = 0.01;         // J (kg*m^2)
  double damping = 0.1;          // b (N*m*s)
  double voltage_limit = 24.0;   // V_max (V)
};

struct BallBeamParams {
  double gravity = 9.81;       // g (m/s^2)
  double ball_radius = 0.015;  // r_ball (m)
  double ball_mass = 0.11;     // m (kg)
  double ball_inertia = 1e-5;  // J (kg*m^2)
  double damping = 0.1;        // b (N*s/m); listed with the system but absent
                               // from its equations of motion
  double input_limit = 5.0;    // theta_max (rad/s^2)
};

struct PendulumParams {
  double mass = 0.1;         // m1 (kg)
  double length = 0.5;       // L1 (m)
  double gravity = 9.81;     // g (m/s^2)
  double damping = 0.1;      // b (N*s/m)
  double torque_limit = 1.0; // tau_max (N*m)
};

struct DoublePendulumParams {
  double mass1 = 0.1;       // m1 (kg)
  double mass2 = 0.05;      // m2 (kg)
  double length1 = 0.5;     // L1 (m)
  double length2 = 0.3;     // L2 (m)
  double gravity = 9.81;    // g (m/s^2)
  double input_limit = 5.0; // u_max (N*m); no standard value, local default
};

enum class PlantId { DcMotor, BallBeam, Pendulum, DoublePendulum };

/// One of the four case-study plants: a parameterized vector field plus
/// actuator saturation and metadata used by the rest of the toolkit.
class PlantModel {
public:
  using Params = std::variant<DcMotorParams, BallBeamParams, PendulumParams,
                              DoublePendulumParams>;

  explicit PlantModel(DcMotorParams p);
  explicit PlantModel(BallBeamParams p);
  explicit PlantModel(PendulumParams p);
  explicit PlantModel(DoublePendulumParams p);

  /// Builds a plant by id ("dc_motor", "ball_beam", "pendulum",
  /// "double_pendulum") with the default parameter set.
  static PlantModel from_name(const std::string& name);

  PlantId id() const { return id_; }
  const std::string& name() const { return name_; }
  const std::string& display_name() const { return display_name_; }
  const std::string& description() const { return description_; }
  const std::string& input_name() const { return input_name_; }
  const std::vector<std::string>& state_names() const { return state_names_; }

  int state_dim() const { return static_cast<int>(state_names_.size()); }
  /// Index of the regulated output inside the state vector.
  int regulated_index() const { return regulated_index_; }
  double input_limit() const;

  const Params& params() const { return params_; }

  /// Right-hand side of the governing equations at (state, u).
  /// u must already be saturated; throws std::domain_error on non-finite input.
  StateVec derivative(const StateVec& state, double u) const;

  /// clamp(u_raw, -limit, +limit)
  double saturate(double u_raw) const;

  /// Central finite-difference Jacobians of derivative() about the
  /// zero-state, zero-input equilibrium. A is n x n, B is n x 1.
  void linearize(Mat& A, Mat& B) const;

  /// Jacobians about an arbitrary operating point.
  void linearize_at(const StateVec& x0, double u0, Mat& A, Mat& B) const;

  /// Number of physical parameters subject to parametric uncertainty
  /// (input limits excluded).
  int physical_param_count() const;

  /// Returns a copy of this plant with each physical parameter scaled by the
  /// corresponding multiplier. multipliers.size() == physical_param_count().
  PlantModel perturbed(const std::vector<double>& multipliers) const;

private:
  void init_metadata();
  void validate() const;

  PlantId id_;
  Params params_;
  std::string name_, display_name_, description_, input_name_;
  std::vector<std::string> state_names_;
  int regulated_index_ = 0;
};

}  // namespace ctlopt
