#include "ctlopt/plants.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ctlopt {

namespace {

bool all_positive(std::initializer_list<double> vals) {
  return std::all_of(vals.begin(), vals.end(),
                     [](double v) { return v > 0.0 && std::isfinite(v); });
}

}  // namespace

PlantModel::PlantModel(DcMotorParams p) : id_(PlantId::DcMotor), params_(p) {
  init_metadata();
  validate();
}
PlantModel::PlantModel(BallBeamParams p) : id_(PlantId::BallBeam), params_(p) {
  init_metadata();
  validate();
}
PlantModel::PlantModel(PendulumParams p) : id_(PlantId::Pendulum), params_(p) {
  init_metadata();
  validate();
}
PlantModel::PlantModel(DoublePendulumParams p)
    : id_(PlantId::DoublePendulum), params_(p) {
  init_metadata();
  validate();
}

PlantModel PlantModel::from_name(const std::string& name) {
  if (name == "dc_motor") return PlantModel(DcMotorParams{});
  if (name == "ball_beam") return PlantModel(BallBeamParams{});
  if (name == "pendulum") return PlantModel(PendulumParams{});
  if (name == "double_pendulum") return PlantModel(DoublePendulumParams{});
  throw std::invalid_argument("unknown plant id: " + name);
}

void PlantModel::init_metadata() {
  switch (id_) {
    case PlantId::DcMotor:
      name_ = "dc_motor";
      display_name_ = "DC Motor Position Control";
      description_ =
          "A DC motor position control system with current, angular velocity, "
          "and position states. The goal is to control the motor's angular "
          "position by applying voltage. The system includes electrical and "
          "mechanical dynamics with active control.";
      input_name_ = "voltage";
      state_names_ = {"current", "omega", "theta"};
      regulated_index_ = 2;
      break;
    case PlantId::BallBeam:
      name_ = "ball_beam";
      display_name_ = "Ball and Beam System";
      description_ =
          "A ball rolling on a beam where the control input is the angular "
          "acceleration of the beam. The goal is to stabilize the ball at a "
          "desired position along the beam.";
      input_name_ = "theta";
      state_names_ = {"r", "dr", "alpha", "dalpha"};
      regulated_index_ = 0;
      break;
    case PlantId::Pendulum:
      name_ = "pendulum";
      display_name_ = "Inverted Pendulum";
      description_ =
          "A pendulum on a cart with angle and angular velocity states. The "
          "goal is to regulate the pendulum angle to the equilibrium by "
          "applying torque.";
      input_name_ = "torque";
      state_names_ = {"theta", "dtheta"};
      regulated_index_ = 0;
      break;
    case PlantId::DoublePendulum:
      name_ = "double_pendulum";
      display_name_ = "Double Inverted Pendulum";
      description_ =
          "A double pendulum with two angles and two angular velocities. The "
          "goal is to regulate the first pendulum angle by applying torque at "
          "the first joint.";
      input_name_ = "torque";
      state_names_ = {"theta1", "dtheta1", "theta2", "dtheta2"};
      regulated_index_ = 0;
      break;
  }
}

void PlantModel::validate() const {
  bool ok = true;
  switch (id_) {
    case PlantId::DcMotor: {
      const auto& p = std::get<DcMotorParams>(params_);
      ok = all_positive({p.motor_constant, p.resistance, p.inductance,
                         p.inertia, p.damping, p.voltage_limit});
      break;
    }
    case PlantId::BallBeam: {
      const auto& p = std::get<BallBeamParams>(params_);
      ok = all_positive({p.gravity, p.ball_radius, p.ball_mass, p.ball_inertia,
                         p.damping, p.input_limit});
      break;
    }
    case PlantId::Pendulum: {
      const auto& p = std::get<PendulumParams>(params_);
      ok = all_positive(
          {p.mass, p.length, p.gravity, p.damping, p.torque_limit});
      break;
    }
    case PlantId::DoublePendulum: {
      const auto& p = std::get<DoublePendulumParams>(params_);
      ok = all_positive({p.mass1, p.mass2, p.length1, p.length2, p.gravity,
                         p.input_limit});
      break;
    }
  }
  if (!ok) throw std::invalid_argument("plant parameters must be positive");
}

double PlantModel::input_limit() const {
  switch (id_) {
    case PlantId::DcMotor:
      return std::get<DcMotorParams>(params_).voltage_limit;
    case PlantId::BallBeam:
      return std::get<BallBeamParams>(params_).input_limit;
    case PlantId::Pendulum:
      return std::get<PendulumParams>(params_).torque_limit;
    case PlantId::DoublePendulum:
      return std::get<DoublePendulumParams>(params_).input_limit;
  }
  return 0.0;
}

double PlantModel::saturate(double u_raw) const {
  const double lim = input_limit();
  return std::clamp(u_raw, -lim, lim);
}

StateVec PlantModel::derivative(const StateVec& state, double u) const {
  if (!state.allFinite() || !std::isfinite(u))
    throw std::domain_error("derivative: non-finite state or input");
  if (state.size() != state_dim())
    throw std::domain_error("derivative: state dimension mismatch");

  StateVec dx(state.size());
  switch (id_) {
    case PlantId::DcMotor: {
      const auto& p = std::get<DcMotorParams>(params_);
      const double i = state[0], omega = state[1];
      dx[0] = (u - p.resistance * i - p.motor_constant * omega) / p.inductance;
      dx[1] = (p.motor_constant * i - p.damping * omega) / p.inertia;
      dx[2] = omega;
      break;
    }
    case PlantId::BallBeam: {
      const auto& p = std::get<BallBeamParams>(params_);
      const double r = state[0], alpha = state[2], dalpha = state[3];
      const double rb2m = p.ball_radius * p.ball_radius * p.ball_mass;
      dx[0] = state[1];
      // alpha is oriented so that a positive beam angle accelerates the ball
      // toward positive r; with that orientation u = -K*x laws with positive
      // gains are the stabilizing ones.
      dx[1] = rb2m * (r * dalpha * dalpha + p.gravity * std::sin(alpha)) /
              (rb2m + p.ball_inertia);
      dx[2] = dalpha;
      // The input commands the beam's angular acceleration directly
      // (theta_max is a rad/s^2 limit).
      dx[3] = u;
      break;
    }
    case PlantId::Pendulum: {
      const auto& p = std::get<PendulumParams>(params_);
      const double theta = state[0], dtheta = state[1];
      dx[0] = dtheta;
      dx[1] = (u - p.length * p.gravity * p.mass * std::sin(theta) -
               p.damping * dtheta) /
              (p.length * p.length * p.mass);
      break;
    }
    case PlantId::DoublePendulum: {
      const auto& p = std::get<DoublePendulumParams>(params_);
      const double th1 = state[0], w1 = state[1];
      const double th2 = state[2], w2 = state[3];
      const double m1 = p.mass1, m2 = p.mass2;
      const double l1 = p.length1, l2 = p.length2, g = p.gravity;
      // C >= 2*m1 > 0 for all angles, so the denominators never vanish.
      const double c = 2.0 * m1 + m2 - m2 * std::cos(2.0 * th1 - 2.0 * th2);
      dx[0] = w1;
      dx[1] = (-2.0 * l1 * g * m1 * std::sin(th1) + 2.0 * u +
               l1 * g * m2 * std::sin(th1) +
               l1 * g * m2 * std::sin(th1 - 2.0 * th2) +
               l1 * l1 * w1 * w1 * m2 * std::sin(2.0 * th1 - 2.0 * th2) +
               2.0 * l1 * l2 * w2 * w2 * m2 * std::sin(th1 - th2)) /
              (l1 * l1 * c);
      dx[2] = w2;
      dx[3] = (2.0 * l1 * l1 * w1 * w1 * (m1 + m2) * std::sin(th1 - th2) +
               2.0 * u * std::cos(th1 - th2) -
               l1 * g * (m1 + m2) * std::sin(th2) +
               l1 * g * (m1 + m2) * std::sin(2.0 * th1 - th2) +
               l1 * l2 * w2 * w2 * m2 * std::sin(2.0 * th1 - 2.0 * th2)) /
              (l1 * l2 * c);
      break;
    }
  }
  return dx;
}

void PlantModel::linearize(Mat& A, Mat& B) const {
  StateVec x0 = StateVec::Zero(state_dim());
  linearize_at(x0, 0.0, A, B);
}

void PlantModel::linearize_at(const StateVec& x0, double u0, Mat& A,
                              Mat& B) const {
  const int n = state_dim();
  A.resize(n, n);
  B.resize(n, 1);
  auto step = [](double v) { return 1e-6 * std::max(1.0, std::abs(v)); };
  for (int j = 0; j < n; ++j) {
    const double h = step(x0[j]);
    StateVec xp = x0, xm = x0;
    xp[j] += h;
    xm[j] -= h;
    A.col(j) = (derivative(xp, u0) - derivative(xm, u0)) / (2.0 * h);
  }
  const double hu = step(u0);
  B.col(0) = (derivative(x0, u0 + hu) - derivative(x0, u0 - hu)) / (2.0 * hu);
}

int PlantModel::physical_param_count() const {
  switch (id_) {
    case PlantId::DcMotor: return 5;         // K, R, L, J, b
    case PlantId::BallBeam: return 5;        // g, r_ball, m, J, b
    case PlantId::Pendulum: return 4;        // m, L, g, b
    case PlantId::DoublePendulum: return 5;  // m1, m2, L1, L2, g
  }
  return 0;
}

PlantModel PlantModel::perturbed(const std::vector<double>& mult) const {
  if (static_cast<int>(mult.size()) != physical_param_count())
    throw std::invalid_argument("perturbed: multiplier count mismatch");
  switch (id_) {
    case PlantId::DcMotor: {
      auto p = std::get<DcMotorParams>(params_);
      p.motor_constant *= mult[0];
      p.resistance *= mult[1];
      p.inductance *= mult[2];
      p.inertia *= mult[3];
      p.damping *= mult[4];
      return PlantModel(p);
    }
    case PlantId::BallBeam: {
      auto p = std::get<BallBeamParams>(params_);
      p.gravity *= mult[0];
      p.ball_radius *= mult[1];
      p.ball_mass *= mult[2];
      p.ball_inertia *= mult[3];
      p.damping *= mult[4];
      return PlantModel(p);
    }
    case PlantId::Pendulum: {
      auto p = std::get<PendulumParams>(params_);
      p.mass *= mult[0];
      p.length *= mult[1];
      p.gravity *= mult[2];
      p.damping *= mult[3];
      return PlantModel(p);
    }
    case PlantId::DoublePendulum: {
      auto p = std::get<DoublePendulumParams>(params_);
      p.mass1 *= mult[0];
      p.mass2 *= mult[1];
      p.length1 *= mult[2];
      p.length2 *= mult[3];
      p.gravity *= mult[4];
      return PlantModel(p);
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace ctlopt
