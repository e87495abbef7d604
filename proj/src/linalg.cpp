#include "ccb/linalg.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ccb {

namespace {

double confidence_radius(const RidgeState& st) {
  const double arg =
      st.log_det_V - st.d * std::log(st.lambda) - 2.0 * std::log(st.delta);
  return std::sqrt(st.lambda) * st.S + std::sqrt(std::max(0.0, arg));
}

// Exact re-solve of Vinv and log det from the maintained V.
void refresh(RidgeState& st) {
  Eigen::LLT<Mat> llt(st.V);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("ridge state refresh: V is not positive definite");
  }
  st.Vinv = llt.solve(Mat::Identity(st.d, st.d));
  st.log_det_V =
      2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

void check_dim(const RidgeState& st, const Vec& x, const char* op) {
  if (x.size() != st.d) {
    std::ostringstream msg;
    msg << op << ": feature dimension " << x.size() << " != state dimension "
        << st.d;
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

RidgeState init_state(int d, double lambda, double S, double delta,
                      long refresh_every) {
  if (d <= 0) throw std::invalid_argument("init_state: d must be positive");
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("init_state: lambda must be > 0");
  }
  if (!(S > 0.0)) throw std::invalid_argument("init_state: S must be > 0");
  if (!(delta > 0.0) || delta > 1.0) {
    throw std::invalid_argument("init_state: delta must be in (0, 1]");
  }
  RidgeState st;
  st.d = d;
  st.V = lambda * Mat::Identity(d, d);
  st.Vinv = (1.0 / lambda) * Mat::Identity(d, d);
  st.Y = Vec::Zero(d);
  st.theta_hat = Vec::Zero(d);
  st.log_det_V = d * std::log(lambda);
  st.lambda = lambda;
  st.S = S;
  st.delta = delta;
  st.refresh_every = refresh_every;
  st.H = confidence_radius(st);
  return st;
}

void ingest_observation(RidgeState& st, const Vec& x, double w) {
  check_dim(st, x, "ingest_observation");
  if (!x.allFinite() || !std::isfinite(w)) {
    throw std::invalid_argument("ingest_observation: non-finite input");
  }
  const Vec u = st.Vinv * x;
  const double s = x.dot(u);
  st.V.noalias() += x * x.transpose();
  st.Y.noalias() += w * x;
  st.Vinv.noalias() -= (u * u.transpose()) / (1.0 + s);
  st.log_det_V += std::log1p(std::max(0.0, s));
  ++st.ingest_count;
  if (st.refresh_every > 0 && st.ingest_count % st.refresh_every == 0) {
    refresh(st);
  }
  st.theta_hat.noalias() = st.Vinv * st.Y;
  if (!st.theta_hat.allFinite() || !std::isfinite(st.log_det_V)) {
    throw std::runtime_error(
        "ingest_observation: ridge state became non-finite (ingest #" +
        std::to_string(st.ingest_count) + ")");
  }
  st.H = confidence_radius(st);
}

double mahalanobis_norm(const RidgeState& st, const Vec& x) {
  check_dim(st, x, "mahalanobis_norm");
  return std::sqrt(std::max(0.0, x.dot(st.Vinv * x)));
}

WeightBound weight_bounds(const RidgeState& st, const Vec& x) {
  check_dim(st, x, "weight_bounds");
  WeightBound wb;
  wb.center = st.theta_hat.dot(x);
  wb.halfwidth = st.H * mahalanobis_norm(st, x);
  wb.lower = std::max(0.0, wb.center - wb.halfwidth);
  wb.upper = wb.center + wb.halfwidth;
  return wb;
}

BatchBounds batch_bounds(const RidgeState& st, const Mat& X) {
  if (X.rows() != st.d) {
    throw std::invalid_argument("batch_bounds: feature rows != state dimension");
  }
  BatchBounds b;
  const Mat A = st.Vinv * X;
  b.norm2 = X.cwiseProduct(A).colwise().sum().transpose().cwiseMax(0.0);
  b.center = X.transpose() * st.theta_hat;
  b.halfwidth = st.H * b.norm2.cwiseSqrt();
  b.lower = (b.center - b.halfwidth).cwiseMax(0.0);
  b.upper = b.center + b.halfwidth;
  return b;
}

std::optional<std::string> lambda_below_l_warning(double lambda, double L) {
  if (lambda >= L) return std::nullopt;
  std::ostringstream msg;
  msg << "lambda = " << lambda << " is below the feature-norm bound L = " << L
      << "; the regret guarantees assume lambda >= L (run continues)";
  return msg.str();
}

}  // namespace ccb
