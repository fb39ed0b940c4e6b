#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "ctlopt/controllers.hpp"
#include "ctlopt/plants.hpp"

namespace ctlopt {

struct LqrProblem {
  Mat A;  // n x n
  Mat B;  // n x 1
  Mat Q;  // n x n, symmetric PSD
  double R = 1.0;  // > 0
};

struct CareSolution {
  Mat P;  // symmetric PSD solution of A'P + PA - P B R^-1 B' P + Q = 0
  Eigen::RowVectorXd K;  // R^-1 B' P
  double residual = 0.0; // relative Frobenius residual
  Eigen::VectorXcd closed_loop_eigenvalues;  // eig(A - B K)
};

struct UnstabilizableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Solves the continuous algebraic Riccati equation by Newton-Kleinman
/// iteration, seeded with a stabilizing gain from eigenvalue-shift pole
/// placement; falls back to the matrix-sign method when the seed fails.
/// Throws UnstabilizableError when no stabilizing solution exists.
CareSolution solve_care(const LqrProblem& problem);

/// Solves the continuous Lyapunov equation A'X + XA + C = 0.
Mat solve_lyapunov(const Mat& A, const Mat& C);

/// LQR gains for a plant: linearizes about the plant's design equilibrium and
/// wraps solve_care into an FSF ControllerSpec usable by the simulator.
///
/// The pendulum-family plants are designed about their inverted equilibrium
/// (theta = pi of the governing equations), which is the configuration the
/// reference comparison gains stabilize.
struct LqrDesign {
  CareSolution care;
  Mat A, B;
  ControllerSpec spec;  // FSF with gains K1..Kn
};
LqrDesign lqr_gains(const PlantModel& plant, const Eigen::VectorXd& q_diag,
                    double r);

/// The (A, B) pair lqr_gains designs against.
void design_matrices(const PlantModel& plant, Mat& A, Mat& B);

}  // namespace ctlopt
