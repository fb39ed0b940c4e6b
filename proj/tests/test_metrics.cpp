#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ctlopt/metrics.hpp"

using namespace ctlopt;

namespace {

Trajectory synthetic(const std::vector<double>& e, const std::vector<double>& u,
                     double dt = 0.01) {
  Trajectory t;
  t.e = e;
  t.u = u;
  t.t.resize(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) t.t[i] = i * dt;
  t.states.resize(static_cast<Eigen::Index>(e.size()), 1);
  for (std::size_t i = 0; i < e.size(); ++i)
    t.states(static_cast<Eigen::Index>(i), 0) = -e[i];
  return t;
}

}  // namespace

TEST_CASE("identically zero error gives the all-zero metric record") {
  const std::size_t n = 1001;
  const auto m = synthetic(std::vector<double>(n, 0.0),
                           std::vector<double>(n, 0.0));
  const auto r = compute_metrics(m);
  CHECK(r.mse == 0.0);
  CHECK(r.settling_time == 0.0);
  CHECK(r.overshoot == 0.0);
  CHECK(r.zero_crossings == 0);
  CHECK(r.control_effort == 0.0);
  CHECK(r.stable);
}

TEST_CASE("exponential error matches the closed-form values") {
  // e(t) = exp(-t) on [0, 10] at dt = 0.01.
  std::vector<double> e, u;
  for (int i = 0; i <= 1000; ++i) {
    e.push_back(std::exp(-0.01 * i));
    u.push_back(0.0);
  }
  const auto r = compute_metrics(synthetic(e, u));
  // MSE -> (1 - exp(-20)) / 20 = 0.05 at dense sampling.
  CHECK(r.mse == doctest::Approx(0.05).epsilon(1e-3));
  // Settling: exp(-t) <= 0.02 from t = ln 50 = 3.912.
  CHECK(r.settling_time == doctest::Approx(std::log(50.0)).epsilon(5e-3));
  // Rise: exp(-t) <= 0.1 from t = ln 10 = 2.303.
  CHECK(r.rise_time == doctest::Approx(std::log(10.0)).epsilon(5e-3));
  CHECK(r.zero_crossings == 0);
  CHECK(r.overshoot == 0.0);
  CHECK(r.stable);
}

TEST_CASE("overshoot measures the excursion past the reference") {
  // e starts positive and dips to -0.3 of its initial value.
  std::vector<double> e{1.0, 0.5, 0.1, -0.3, -0.1, 0.0, 0.0, 0.0, 0.0, 0.0};
  std::vector<double> u(e.size(), 0.0);
  const auto r = compute_metrics(synthetic(e, u));
  CHECK(r.overshoot == doctest::Approx(30.0));

  // Sign-symmetric: a negative initial error overshooting upward.
  for (auto& x : e) x = -x;
  const auto r2 = compute_metrics(synthetic(e, u));
  CHECK(r2.overshoot == doctest::Approx(30.0));
}

TEST_CASE("zero crossing count ignores zero samples and sign-flips") {
  std::vector<double> e{1.0, 0.0, -1.0, -0.5, 0.0, 0.5, 1.0, -1.0};
  std::vector<double> u(e.size(), 0.0);
  const auto r = compute_metrics(synthetic(e, u));
  CHECK(r.zero_crossings == 3);

  std::vector<double> neg = e;
  for (auto& x : neg) x = -x;
  CHECK(compute_metrics(synthetic(neg, u)).zero_crossings == 3);

  std::vector<double> constant(50, 0.7);
  CHECK(compute_metrics(synthetic(constant, std::vector<double>(50, 0.0)))
            .zero_crossings == 0);
}

TEST_CASE("control effort is the trapezoidal integral of |u|") {
  std::vector<double> u{1.0, 1.0, 1.0, 1.0, 1.0};
  std::vector<double> e(u.size(), 0.0);
  const auto r = compute_metrics(synthetic(e, u, 0.5));
  CHECK(r.control_effort == doctest::Approx(2.0));  // |u|=1 over 2 s
}

TEST_CASE("control effort is monotone under pointwise domination") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  std::uniform_real_distribution<double> grow(1.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> u1(200), u2(200), e(200, 0.0);
    for (std::size_t i = 0; i < u1.size(); ++i) {
      u1[i] = dist(rng);
      u2[i] = u1[i] * grow(rng);
    }
    const double ce1 = compute_metrics(synthetic(e, u1)).control_effort;
    const double ce2 = compute_metrics(synthetic(e, u2)).control_effort;
    CHECK(ce1 <= ce2 + 1e-12);
  }
}

TEST_CASE("mse is time-reversal invariant but settling time is not") {
  std::vector<double> e;
  for (int i = 0; i <= 500; ++i) e.push_back(std::exp(-0.01 * i));
  std::vector<double> u(e.size(), 0.0);
  std::vector<double> rev(e.rbegin(), e.rend());

  const auto fwd = compute_metrics(synthetic(e, u));
  const auto bwd = compute_metrics(synthetic(rev, u));
  CHECK(fwd.mse == doctest::Approx(bwd.mse).epsilon(1e-12));
  CHECK(fwd.settling_time != bwd.settling_time);
}

TEST_CASE("error that never enters the band never settles") {
  std::vector<double> e(300, 0.5);
  e.front() = 1.0;
  std::vector<double> u(e.size(), 0.0);
  const auto r = compute_metrics(synthetic(e, u));
  CHECK(std::isinf(r.settling_time));
  const auto check = meets_targets(r, {0.9, 3.0, 10.0});
  CHECK_FALSE(check.settling_time);
}

TEST_CASE("settling time serializes as inf in the log rendering") {
  CHECK(format_metric(kInf, 2) == "inf");
  CHECK(format_metric(1.234, 2) == "1.23");
}

TEST_CASE("meets_targets agrees with the reference evaluations") {
  Targets targets{0.9, 3.0, 10.0};

  TrajectoryMetrics near_miss;  // reference values that just miss targets
  near_miss.mse = 0.9104;
  near_miss.settling_time = 3.79;
  near_miss.overshoot = 10.43;
  near_miss.stable = true;
  const auto c1 = meets_targets(near_miss, targets);
  CHECK_FALSE(c1.mse);
  CHECK_FALSE(c1.settling_time);
  CHECK_FALSE(c1.overshoot);

  TrajectoryMetrics bb;  // ball & beam scenario II iteration 5
  bb.mse = 0.0661;
  bb.settling_time = 4.18;
  bb.overshoot = 3.44;
  bb.stable = true;
  const auto c2 = meets_targets(bb, {0.2, 6.0, 5.0});
  CHECK(c2.mse);
  CHECK(c2.settling_time);
  CHECK(c2.overshoot);
  CHECK(c2.all());

  TrajectoryMetrics zero;
  zero.stable = true;
  zero.settling_time = 0.0;
  const auto c3 = meets_targets(zero, {0.1, 0.1, 0.1});
  CHECK(c3.all());

  CHECK_THROWS_AS(meets_targets(zero, {0.0, 1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("stability requires a small steady-state error") {
  // Bounded but far from the reference: classified unstable.
  std::vector<double> e(500, 0.96);
  e.front() = 1.0;
  std::vector<double> u(e.size(), 0.0);
  const auto r = compute_metrics(synthetic(e, u));
  CHECK_FALSE(r.stable);
  CHECK(r.ss_error == doctest::Approx(0.96));
}

TEST_CASE("diverged trajectories are never stable") {
  auto t = synthetic(std::vector<double>(100, 0.0),
                     std::vector<double>(100, 0.0));
  t.diverged = true;
  CHECK_FALSE(compute_metrics(t).stable);
}

TEST_CASE("band floor handles a zero initial error") {
  std::vector<double> e(200, 0.0);
  e[50] = 0.5;  // a bump after a zero start
  std::vector<double> u(e.size(), 0.0);
  const auto r = compute_metrics(synthetic(e, u));
  CHECK(std::isfinite(r.overshoot));
  CHECK(r.settling_time > 0.0);
}
