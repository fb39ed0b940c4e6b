#include "ctlopt/scenario.hpp"

#include <cmath>
#include <stdexcept>

namespace ctlopt {

namespace {

// Stateless counter-based randomness: every value is a hash of
// (seed, stream, index), so replays are exact and order-independent.
constexpr std::uint64_t kStreamInitial = 0x11;
constexpr std::uint64_t kStreamMultiplier = 0x22;
constexpr std::uint64_t kStreamNoise = 0x33;
constexpr std::uint64_t kStreamDisturbance = 0x44;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t stream,
                  std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ (stream * 0xda942042e4dd58b5ull)) +
                    index);
}

// Uniform in [0, 1).
double to_unit(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return to_unit(mix(seed, stream, index));
}

// Standard normal via Box-Muller on two counter values.
double standard_normal(std::uint64_t seed, std::uint64_t stream,
                       std::uint64_t index) {
  const double u1 = std::max(uniform(seed, stream, 2 * index), 0x1.0p-60);
  const double u2 = uniform(seed, stream, 2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

void Scenario::validate() const {
  if (!(ic_lo <= ic_hi))
    throw std::invalid_argument("scenario: initial_condition_range lo > hi");
  if (randomness_level < 0.0 || disturbance_level < 0.0)
    throw std::invalid_argument("scenario: noise/disturbance level < 0");
  if (param_uncertainty < 0.0 || param_uncertainty >= 1.0)
    throw std::invalid_argument("scenario: param_uncertainty outside [0, 1)");
}

EpisodeDraw::EpisodeDraw(const Scenario& scenario, const PlantModel& plant,
                         std::uint64_t seed)
    : seed_(seed),
      noise_std_(scenario.randomness_level),
      disturbance_level_(scenario.disturbance_level),
      regulated_index_(plant.regulated_index()),
      state_dim_(plant.state_dim()) {
  scenario.validate();
  initial_value_ =
      scenario.ic_lo +
      (scenario.ic_hi - scenario.ic_lo) * uniform(seed_, kStreamInitial, 0);
  param_multipliers_.resize(plant.physical_param_count());
  for (std::size_t k = 0; k < param_multipliers_.size(); ++k) {
    param_multipliers_[k] =
        1.0 + scenario.param_uncertainty *
                  (2.0 * uniform(seed_, kStreamMultiplier, k) - 1.0);
  }
}

StateVec EpisodeDraw::initial_state(const PlantModel& plant) const {
  StateVec x0 = StateVec::Zero(plant.state_dim());
  x0[plant.regulated_index()] = initial_value_;
  return x0;
}

StateVec EpisodeDraw::measurement_noise(int step, const StateVec& state) const {
  if (noise_std_ == 0.0) return state;
  StateVec noisy = state;
  for (int j = 0; j < state.size(); ++j) {
    const std::uint64_t idx =
        static_cast<std::uint64_t>(step) * state_dim_ + j;
    noisy[j] += noise_std_ * standard_normal(seed_, kStreamNoise, idx);
  }
  return noisy;
}

double EpisodeDraw::actuator_disturbance(double t) const {
  if (disturbance_level_ == 0.0) return 0.0;
  const auto interval = static_cast<std::uint64_t>(t / kDisturbanceHold);
  return disturbance_level_ *
         (2.0 * uniform(seed_, kStreamDisturbance, interval) - 1.0);
}

double default_initial_condition(const PlantModel& plant) {
  return plant.id() == PlantId::BallBeam ? 1.0 : M_PI;
}

std::vector<Scenario> default_scenario_ladder(const PlantModel& plant) {
  const double ic = default_initial_condition(plant);
  const double disturbance = 0.2 * plant.input_limit();
  Scenario nominal{"I", ic, ic, 0.0, 0.0, 0.0};
  Scenario noisy{"II", ic, ic, 0.01, disturbance, 0.0};
  Scenario uncertain{"III", ic, ic, 0.0, 0.0, 0.2};
  return {nominal, noisy, uncertain};
}

}  // namespace ctlopt
