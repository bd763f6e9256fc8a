#pragma once

// Windowed body-velocity regressor with per-axis variance.
//
//   input (L x C) -> conv k5 (C->16) -> GELU -> conv k5 (16->32) -> GELU
//   -> + sinusoidal positions -> encoder block (4-head self attention,
//   post-norm residuals, feed-forward 32->64->32) -> selected rows
//   -> velocity head (32->3), log-variance head (32->3).
//
// Sequences are row-major: one row per time step. Gradients are exact
// reverse-mode derivatives written out by hand.

#include "aiio/common.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace aiio::net {

struct NetConfig {
  int window = 200;  // L
  bool use_rotor = true;
  bool four_rotor_channels = false;
  int conv1_channels = 16;
  int model_dim = 32;  // conv2 output / d_model
  int kernel = 5;
  int heads = 4;
  int ff_hidden = 64;

  /// 6 IMU channels plus 0, 1 or 4 rotor channels.
  int input_channels() const { return 6 + (use_rotor ? (four_rotor_channels ? 4 : 1) : 0); }
  void validate() const;
};

using Matrix = Eigen::MatrixXd;

/// A normalised window, L rows x input_channels() columns.
struct WindowTensor {
  Matrix data;
  Eigen::Index length() const { return data.rows(); }
  Eigen::Index channels() const { return data.cols(); }
};

struct NetParams {
  NetConfig config;

  Matrix conv1_w, conv1_b;  // (C*K x 16), (1 x 16)
  Matrix conv2_w, conv2_b;  // (16*K x D), (1 x D)
  Matrix wq, bq, wk, wv, bv, wo, bo;  // no key bias: softmax cancels it
  Matrix ln1_g, ln1_b, ln2_g, ln2_b;
  Matrix ff1_w, ff1_b, ff2_w, ff2_b;
  Matrix vel_w, vel_b;  // (D x 3), (1 x 3)
  Matrix var_w, var_b;  // log-variance head

  /// Xavier-uniform weights, unit layer-norm gains, zero biases.
  static NetParams initialize(const NetConfig& config, std::uint64_t seed);
  /// Same shapes, all zeros.
  static NetParams zeros_like(const NetParams& other);

  template <class F>
  void for_each(F&& f) {
    f("conv1.w", conv1_w); f("conv1.b", conv1_b);
    f("conv2.w", conv2_w); f("conv2.b", conv2_b);
    f("attn.wq", wq); f("attn.bq", bq);
    f("attn.wk", wk);
    f("attn.wv", wv); f("attn.bv", bv);
    f("attn.wo", wo); f("attn.bo", bo);
    f("ln1.g", ln1_g); f("ln1.b", ln1_b);
    f("ff1.w", ff1_w); f("ff1.b", ff1_b);
    f("ff2.w", ff2_w); f("ff2.b", ff2_b);
    f("ln2.g", ln2_g); f("ln2.b", ln2_b);
    f("head.vel.w", vel_w); f("head.vel.b", vel_b);
    f("head.var.w", var_w); f("head.var.b", var_b);
  }
  template <class F>
  void for_each(F&& f) const {
    const_cast<NetParams*>(this)->for_each(
        [&](const char* name, Matrix& m) { f(name, static_cast<const Matrix&>(m)); });
  }

  std::size_t parameter_count() const;
  bool all_finite() const;
  /// this += scale * other, tensor by tensor.
  void add_scaled(const NetParams& other, double scale);
  void scale(double factor);
};

/// v_hat in m/s, sigma_hat = per-axis variance in m^2/s^2 (always > 0).
struct VelocityPrediction {
  Vec3 v_hat = Vec3::Zero();
  Vec3 sigma_hat = Vec3::Ones();
};

/// L x D sinusoidal table: even columns sin, odd columns cos.
Matrix positional_encoding(int length, int dim);

/// Prediction for the last time step.
VelocityPrediction forward(const WindowTensor& w, const NetParams& p);

/// Predictions for the given rows (time indices) of the window.
std::vector<VelocityPrediction> forward_rows(const WindowTensor& w, const NetParams& p,
                                             std::span<const Eigen::Index> rows);

/// Per-axis Huber summed over axes.
double huber_loss(const Vec3& v, const Vec3& v_hat, double delta);

/// r^T diag(sigma)^-1 r + ln det diag(sigma), r = v - v_hat.
double nll_loss(const Vec3& v, const Vec3& v_hat, const Vec3& sigma_hat);

enum class LossKind { huber, nll };

/// Targets for one window. Online samples have a single target at the last
/// row; offline samples have one target per row.
struct Sample {
  WindowTensor input;
  std::vector<Eigen::Index> rows;
  std::vector<Vec3> targets;
  std::size_t end_frame = 0;  // index of the last frame in the source sequence
};

struct LossValues {
  double huber = 0.0;  // mean over predicted rows
  double nll = 0.0;
};

/// Loss of one sample (averaged over its rows) and its exact gradient with
/// respect to every parameter. `grad` is overwritten.
LossValues backward(const Sample& sample, const NetParams& p, LossKind kind, double huber_delta,
                    NetParams& grad);

/// Loss without gradient.
LossValues evaluate(const Sample& sample, const NetParams& p, double huber_delta);

}  // namespace aiio::net
