#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>

namespace ccb {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Ridge-regression sufficient statistics shared by all UCB policies:
//   V = lambda*I + sum x x^T,  Y = sum w x,  theta_hat = V^{-1} Y,
//   H = sqrt(lambda)*S + sqrt(log det V - d log lambda - 2 log delta).
// Vinv and log_det_V are maintained incrementally by rank-1 updates and
// refreshed from scratch every refresh_every ingests to wash out drift.
struct RidgeState {
  int d = 0;
  Mat V;
  Mat Vinv;
  Vec Y;
  Vec theta_hat;
  double log_det_V = 0.0;
  double lambda = 1.0;
  double S = 1.0;
  double delta = 0.1;
  double H = 0.0;
  long ingest_count = 0;
  long refresh_every = 1000;  // <= 0 disables the periodic re-solve
};

RidgeState init_state(int d, double lambda, double S, double delta,
                      long refresh_every = 1000);

// One observation (x, w). A round playing k arms calls this k times.
void ingest_observation(RidgeState& state, const Vec& x, double w);

// sqrt(x^T V^{-1} x)
double mahalanobis_norm(const RidgeState& state, const Vec& x);

struct WeightBound {
  double lower = 0.0;      // max{0, center - halfwidth}
  double upper = 0.0;      // center + halfwidth
  double center = 0.0;     // theta_hat . x
  double halfwidth = 0.0;  // H * ||x||_{V^{-1}}
};

WeightBound weight_bounds(const RidgeState& state, const Vec& x);

// Column-wise bounds for a d x m feature matrix; one GEMM instead of m GEMVs.
struct BatchBounds {
  Vec center;
  Vec halfwidth;
  Vec lower;
  Vec upper;
  Vec norm2;  // ||x||^2_{V^{-1}} per column
};

BatchBounds batch_bounds(const RidgeState& state, const Mat& X);

// The regret theorems assume lambda >= L; running with lambda < L is legal,
// so this returns a warning message instead of failing.
std::optional<std::string> lambda_below_l_warning(double lambda, double L);

}  // namespace ccb
