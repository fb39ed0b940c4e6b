#include "ctlopt/lqr.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace ctlopt {

namespace {

double spectral_abscissa(const Mat& M) {
  Eigen::EigenSolver<Mat> es(M);
  return es.eigenvalues().real().maxCoeff();
}

// Ackermann's formula: places the closed-loop poles of (A, B) at the roots of
// the monic polynomial with the given coefficients (ascending order, degree n).
Eigen::RowVectorXd ackermann(const Mat& A, const Mat& B,
                             const Eigen::VectorXd& poly_coeffs) {
  const int n = static_cast<int>(A.rows());
  Mat ctrb(n, n);
  Mat col = B;
  for (int i = 0; i < n; ++i) {
    ctrb.col(i) = col;
    col = A * col;
  }
  Eigen::FullPivLU<Mat> lu(ctrb);
  if (!lu.isInvertible())
    throw UnstabilizableError("pole placement: pair (A, B) not controllable");

  Mat pA = Mat::Zero(n, n);
  Mat Apow = Mat::Identity(n, n);
  for (int i = 0; i <= n; ++i) {
    const double c = (i < n) ? poly_coeffs[i] : 1.0;
    pA += c * Apow;
    if (i < n) Apow = Apow * A;
  }
  Eigen::RowVectorXd en = Eigen::RowVectorXd::Zero(n);
  en[n - 1] = 1.0;
  return en * lu.solve(pA);
}

// Coefficients (ascending) of prod_i (s - roots[i]) for real roots.
Eigen::VectorXd poly_from_roots(const Eigen::VectorXd& roots) {
  const int n = static_cast<int>(roots.size());
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n + 1);
  c[0] = 1.0;
  int deg = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = deg + 1; j > 0; --j) c[j] = c[j - 1] - roots[i] * c[j];
    c[0] *= -roots[i];
    ++deg;
  }
  return c.head(n);
}

// Stabilizing seed gain: place poles at shifted reflections of the open-loop
// spectrum, all strictly in the left half plane.
Eigen::RowVectorXd stabilizing_seed(const Mat& A, const Mat& B) {
  const int n = static_cast<int>(A.rows());
  Eigen::EigenSolver<Mat> es(A);
  Eigen::VectorXd targets(n);
  for (int i = 0; i < n; ++i) {
    const auto ev = es.eigenvalues()[i];
    targets[i] = -std::max(std::abs(ev.real()), 0.5) - 0.5 * i - 0.5;
  }
  return ackermann(A, B, poly_from_roots(targets));
}

double care_residual(const LqrProblem& p, const Mat& P) {
  const Mat res = p.A.transpose() * P + P * p.A -
                  P * p.B * p.B.transpose() * P / p.R + p.Q;
  return res.norm() / std::max(1.0, P.norm());
}

Mat care_via_matrix_sign(const LqrProblem& p) {
  const int n = static_cast<int>(p.A.rows());
  Mat H(2 * n, 2 * n);
  H.topLeftCorner(n, n) = p.A;
  H.topRightCorner(n, n) = -p.B * p.B.transpose() / p.R;
  H.bottomLeftCorner(n, n) = -p.Q;
  H.bottomRightCorner(n, n) = -p.A.transpose();

  Mat Z = H;
  for (int iter = 0; iter < 200; ++iter) {
    Eigen::FullPivLU<Mat> lu(Z);
    if (!lu.isInvertible())
      throw UnstabilizableError("matrix-sign iteration became singular");
    const Mat Zinv = lu.inverse();
    // Determinant scaling accelerates convergence.
    const double mu = std::pow(std::abs(lu.determinant()), -1.0 / (2.0 * n));
    const Mat Znext = 0.5 * (mu * Z + Zinv / mu);
    const double delta = (Znext - Z).norm() / std::max(1.0, Z.norm());
    Z = Znext;
    if (delta < 1e-14) break;
  }

  // P solves [W12; W22 + I] P = -[W11 + I; W21] with W = sign(H).
  Mat M(2 * n, n), N(2 * n, n);
  M.topRows(n) = Z.topRightCorner(n, n);
  M.bottomRows(n) = Z.bottomRightCorner(n, n) + Mat::Identity(n, n);
  N.topRows(n) = Z.topLeftCorner(n, n) + Mat::Identity(n, n);
  N.bottomRows(n) = Z.bottomLeftCorner(n, n);
  return M.colPivHouseholderQr().solve(-N);
}

}  // namespace

Mat solve_lyapunov(const Mat& A, const Mat& C) {
  // Vectorized (column-major): (I kron A' + A' kron I) vec(X) = -vec(C).
  const int n = static_cast<int>(A.rows());
  const Mat At = A.transpose();
  Mat lhs = Mat::Zero(n * n, n * n);
  for (int bi = 0; bi < n; ++bi) {
    lhs.block(bi * n, bi * n, n, n) += At;
    for (int bj = 0; bj < n; ++bj)
      lhs.block(bi * n, bj * n, n, n) +=
          At(bi, bj) * Mat::Identity(n, n);
  }
  Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(C.data(), n * n);
  Eigen::VectorXd x = lhs.fullPivLu().solve(rhs);
  return Eigen::Map<const Mat>(x.data(), n, n);
}

CareSolution solve_care(const LqrProblem& problem) {
  const int n = static_cast<int>(problem.A.rows());
  if (problem.R <= 0.0) throw std::invalid_argument("solve_care: R must be > 0");
  if (problem.Q.rows() != n || problem.Q.cols() != n ||
      problem.B.rows() != n || problem.B.cols() != 1)
    throw std::invalid_argument("solve_care: dimension mismatch");

  Mat P;
  bool seeded = false;
  try {
    // Newton-Kleinman: quadratically convergent given a stabilizing gain.
    Eigen::RowVectorXd K = stabilizing_seed(problem.A, problem.B);
    if (spectral_abscissa(problem.A - problem.B * K) < 0.0) {
      seeded = true;
      for (int iter = 0; iter < 100; ++iter) {
        const Mat Acl = problem.A - problem.B * K;
        const Mat S = problem.Q + K.transpose() * problem.R * K;
        P = solve_lyapunov(Acl, S);
        P = 0.5 * (P + P.transpose());
        const Eigen::RowVectorXd Knext =
            problem.B.transpose() * P / problem.R;
        const double step = (Knext - K).norm() / std::max(1.0, K.norm());
        K = Knext;
        if (step < 1e-14) break;
      }
    }
  } catch (const UnstabilizableError&) {
    seeded = false;
  }

  if (!seeded || care_residual(problem, P) > 1e-9) {
    P = care_via_matrix_sign(problem);
    P = 0.5 * (P + P.transpose());
  }

  CareSolution sol;
  sol.P = P;
  sol.residual = care_residual(problem, P);
  if (!P.allFinite() || sol.residual > 1e-9)
    throw UnstabilizableError("CARE solver did not converge");
  sol.K = problem.B.transpose() * P / problem.R;
  Eigen::EigenSolver<Mat> es(problem.A - problem.B * sol.K);
  sol.closed_loop_eigenvalues = es.eigenvalues();
  if (es.eigenvalues().real().maxCoeff() >= 0.0)
    throw UnstabilizableError("CARE solution is not stabilizing");
  return sol;
}

void design_matrices(const PlantModel& plant, Mat& A, Mat& B) {
  switch (plant.id()) {
    case PlantId::Pendulum: {
      // Design about the inverted equilibrium (theta = pi).
      StateVec x0 = StateVec::Zero(2);
      x0[0] = M_PI;
      plant.linearize_at(x0, 0.0, A, B);
      break;
    }
    default:
      plant.linearize(A, B);
      break;
  }
}

LqrDesign lqr_gains(const PlantModel& plant, const Eigen::VectorXd& q_diag,
                    double r) {
  const int n = plant.state_dim();
  if (q_diag.size() != n)
    throw std::invalid_argument("lqr_gains: Q diagonal size mismatch");
  LqrDesign design;
  design_matrices(plant, design.A, design.B);
  LqrProblem p{design.A, design.B, q_diag.asDiagonal().toDenseMatrix(), r};
  design.care = solve_care(p);
  design.spec.kind = ControllerKind::FSF;
  for (int i = 0; i < n; ++i) {
    const std::string name = "K" + std::to_string(i + 1);
    design.spec.gains[name] = design.care.K[i];
    design.spec.ranges[name] = {design.care.K[i] - 1.0, design.care.K[i] + 1.0};
  }
  return design;
}

}  // namespace ctlopt
