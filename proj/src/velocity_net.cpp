#include "aiio/velocity_net.hpp"

#include "aiio/rng.hpp"

#include <cmath>
#include <string>

namespace aiio::net {

namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kSqrt2OverPi = 0.79788456080286535588;
constexpr double kGeluCubic = 0.044715;

void add_bias(Matrix& m, const Matrix& bias) { m.rowwise() += bias.row(0); }

// Rows t of the result hold the K input rows centred on t (zero padded).
Matrix im2col(const Matrix& x, int kernel) {
  const Eigen::Index len = x.rows();
  const Eigen::Index ch = x.cols();
  const int pad = kernel / 2;
  Matrix patches = Matrix::Zero(len, ch * kernel);
  for (Eigen::Index t = 0; t < len; ++t) {
    for (int j = 0; j < kernel; ++j) {
      const Eigen::Index src = t + j - pad;
      if (src < 0 || src >= len) continue;
      patches.block(t, j * ch, 1, ch) = x.row(src);
    }
  }
  return patches;
}

Matrix col2im(const Matrix& d_patches, Eigen::Index ch, int kernel) {
  const Eigen::Index len = d_patches.rows();
  const int pad = kernel / 2;
  Matrix dx = Matrix::Zero(len, ch);
  for (Eigen::Index t = 0; t < len; ++t) {
    for (int j = 0; j < kernel; ++j) {
      const Eigen::Index src = t + j - pad;
      if (src < 0 || src >= len) continue;
      dx.row(src) += d_patches.block(t, j * ch, 1, ch);
    }
  }
  return dx;
}

Matrix gelu(const Matrix& x) {
  return x.unaryExpr([](double v) {
    return 0.5 * v * (1.0 + std::tanh(kSqrt2OverPi * (v + kGeluCubic * v * v * v)));
  });
}

Matrix gelu_derivative(const Matrix& x) {
  return x.unaryExpr([](double v) {
    const double th = std::tanh(kSqrt2OverPi * (v + kGeluCubic * v * v * v));
    return 0.5 * (1.0 + th) +
           0.5 * v * (1.0 - th * th) * kSqrt2OverPi * (1.0 + 3.0 * kGeluCubic * v * v);
  });
}

struct LayerNormCache {
  Matrix xhat;
  Eigen::VectorXd inv_std;
};

Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, LayerNormCache& cache) {
  const auto d = static_cast<double>(x.cols());
  cache.xhat.resize(x.rows(), x.cols());
  cache.inv_std.resize(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).sum() / d;
    const auto centred = x.row(r).array() - mean;
    const double var = centred.square().sum() / d;
    cache.inv_std(r) = 1.0 / std::sqrt(var + kLayerNormEps);
    cache.xhat.row(r) = centred * cache.inv_std(r);
  }
  Matrix y = cache.xhat.array().rowwise() * gain.row(0).array();
  add_bias(y, bias);
  return y;
}

Matrix layer_norm_backward(const Matrix& dy, const Matrix& gain, const LayerNormCache& cache,
                           Matrix& d_gain, Matrix& d_bias) {
  d_gain += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  d_bias += dy.colwise().sum();
  const Matrix dxhat = dy.array().rowwise() * gain.row(0).array();
  const auto d = static_cast<double>(dy.cols());
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double mean_g = dxhat.row(r).sum() / d;
    const double mean_gx = dxhat.row(r).dot(cache.xhat.row(r)) / d;
    dx.row(r) = cache.inv_std(r) *
                (dxhat.row(r).array() - mean_g - cache.xhat.row(r).array() * mean_gx).matrix();
  }
  return dx;
}

void softmax_rows(Matrix& s) {
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const double mx = s.row(r).maxCoeff();
    s.row(r) = (s.row(r).array() - mx).exp();
    s.row(r) /= s.row(r).sum();
  }
}

const Matrix& cached_positional_encoding(int length, int dim) {
  thread_local int cached_length = -1;
  thread_local int cached_dim = -1;
  thread_local Matrix table;
  if (cached_length != length || cached_dim != dim) {
    table = positional_encoding(length, dim);
    cached_length = length;
    cached_dim = dim;
  }
  return table;
}

struct Cache {
  Matrix patches1, pre1, h1, patches2, pre2, z;
  std::vector<Eigen::Index> rows;
  Matrix zq, q, k, v, o;
  std::vector<Matrix> attn;
  Matrix u1, n1, ff_pre, ff_h, u2, n2;
  LayerNormCache ln1, ln2;
  Matrix vel, logvar;
};

void run_forward(const WindowTensor& w, const NetParams& p, std::span<const Eigen::Index> rows,
                 Cache& c) {
  const NetConfig& cfg = p.config;
  if (w.channels() != cfg.input_channels()) {
    throw InvalidArgument("window has " + std::to_string(w.channels()) + " channels, network expects " +
                          std::to_string(cfg.input_channels()));
  }
  const Eigen::Index len = w.length();
  if (len < 1) throw InvalidArgument("empty window");

  c.patches1 = im2col(w.data, cfg.kernel);
  c.pre1 = c.patches1 * p.conv1_w;
  add_bias(c.pre1, p.conv1_b);
  c.h1 = gelu(c.pre1);
  c.patches2 = im2col(c.h1, cfg.kernel);
  c.pre2 = c.patches2 * p.conv2_w;
  add_bias(c.pre2, p.conv2_b);
  c.z = gelu(c.pre2) + cached_positional_encoding(static_cast<int>(len), cfg.model_dim);

  c.rows.assign(rows.begin(), rows.end());
  const auto m = static_cast<Eigen::Index>(c.rows.size());
  c.zq.resize(m, cfg.model_dim);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (c.rows[static_cast<std::size_t>(i)] < 0 || c.rows[static_cast<std::size_t>(i)] >= len) {
      throw InvalidArgument("requested row outside the window");
    }
    c.zq.row(i) = c.z.row(c.rows[static_cast<std::size_t>(i)]);
  }

  c.q = c.zq * p.wq;
  add_bias(c.q, p.bq);
  c.k = c.z * p.wk;
  c.v = c.z * p.wv;
  add_bias(c.v, p.bv);

  const int dh = cfg.model_dim / cfg.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  c.o.resize(m, cfg.model_dim);
  c.attn.resize(static_cast<std::size_t>(cfg.heads));
  for (int h = 0; h < cfg.heads; ++h) {
    Matrix s = scale * (c.q.middleCols(h * dh, dh) * c.k.middleCols(h * dh, dh).transpose());
    softmax_rows(s);
    c.o.middleCols(h * dh, dh) = s * c.v.middleCols(h * dh, dh);
    c.attn[static_cast<std::size_t>(h)] = std::move(s);
  }
  Matrix y = c.o * p.wo;
  add_bias(y, p.bo);
  c.u1 = c.zq + y;
  c.n1 = layer_norm(c.u1, p.ln1_g, p.ln1_b, c.ln1);

  c.ff_pre = c.n1 * p.ff1_w;
  add_bias(c.ff_pre, p.ff1_b);
  c.ff_h = gelu(c.ff_pre);
  Matrix f = c.ff_h * p.ff2_w;
  add_bias(f, p.ff2_b);
  c.u2 = c.n1 + f;
  c.n2 = layer_norm(c.u2, p.ln2_g, p.ln2_b, c.ln2);

  c.vel = c.n2 * p.vel_w;
  add_bias(c.vel, p.vel_b);
  c.logvar = c.n2 * p.var_w;
  add_bias(c.logvar, p.var_b);
}

double huber_scalar(double r, double delta) {
  const double a = std::abs(r);
  return a < delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

double huber_slope(double r, double delta) {
  if (std::abs(r) < delta) return r;
  return r > 0.0 ? delta : -delta;
}

void xavier(Matrix& m, Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-limit, limit);
  }
}

}  // namespace

void NetConfig::validate() const {
  if (window < 1) throw InvalidArgument("window length must be positive");
  if (conv1_channels < 1 || model_dim < 1 || ff_hidden < 1 || heads < 1) {
    throw InvalidArgument("layer sizes must be positive");
  }
  if (kernel < 1 || kernel % 2 == 0) throw InvalidArgument("conv kernel must be odd");
  if (model_dim % heads != 0) throw InvalidArgument("model_dim must be divisible by heads");
  if (model_dim % 2 != 0) throw InvalidArgument("model_dim must be even");
}

Matrix positional_encoding(int length, int dim) {
  Matrix pe(length, dim);
  for (int t = 0; t < length; ++t) {
    for (int i = 0; i < dim; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / dim);
      pe(t, i) = std::sin(t * freq);
      if (i + 1 < dim) pe(t, i + 1) = std::cos(t * freq);
    }
  }
  return pe;
}

NetParams NetParams::initialize(const NetConfig& config, std::uint64_t seed) {
  config.validate();
  NetParams p;
  p.config = config;
  const Eigen::Index cin = config.input_channels();
  const Eigen::Index c1 = config.conv1_channels;
  const Eigen::Index d = config.model_dim;
  const Eigen::Index k = config.kernel;
  const Eigen::Index ff = config.ff_hidden;
  Rng rng(seed);

  auto weight = [&](Matrix& m, Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in,
                    Eigen::Index fan_out) {
    m.resize(rows, cols);
    xavier(m, fan_in, fan_out, rng);
  };
  auto zeros = [](Matrix& m, Eigen::Index cols) { m = Matrix::Zero(1, cols); };

  weight(p.conv1_w, cin * k, c1, cin * k, c1 * k);
  zeros(p.conv1_b, c1);
  weight(p.conv2_w, c1 * k, d, c1 * k, d * k);
  zeros(p.conv2_b, d);
  weight(p.wq, d, d, d, d);
  zeros(p.bq, d);
  weight(p.wk, d, d, d, d);
  weight(p.wv, d, d, d, d);
  zeros(p.bv, d);
  weight(p.wo, d, d, d, d);
  zeros(p.bo, d);
  p.ln1_g = Matrix::Ones(1, d);
  zeros(p.ln1_b, d);
  weight(p.ff1_w, d, ff, d, ff);
  zeros(p.ff1_b, ff);
  weight(p.ff2_w, ff, d, ff, d);
  zeros(p.ff2_b, d);
  p.ln2_g = Matrix::Ones(1, d);
  zeros(p.ln2_b, d);
  weight(p.vel_w, d, 3, d, 3);
  zeros(p.vel_b, 3);
  weight(p.var_w, d, 3, d, 3);
  zeros(p.var_b, 3);
  return p;
}

NetParams NetParams::zeros_like(const NetParams& other) {
  NetParams z = other;
  z.for_each([](const char*, Matrix& m) { m.setZero(); });
  return z;
}

std::size_t NetParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&](const char*, const Matrix& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

bool NetParams::all_finite() const {
  bool ok = true;
  for_each([&](const char*, const Matrix& m) { ok = ok && m.allFinite(); });
  return ok;
}

void NetParams::add_scaled(const NetParams& other, double scale) {
  std::vector<const Matrix*> src;
  other.for_each([&](const char*, const Matrix& m) { src.push_back(&m); });
  std::size_t i = 0;
  for_each([&](const char*, Matrix& m) { m += scale * *src[i++]; });
}

void NetParams::scale(double factor) {
  for_each([&](const char*, Matrix& m) { m *= factor; });
}

std::vector<VelocityPrediction> forward_rows(const WindowTensor& w, const NetParams& p,
                                             std::span<const Eigen::Index> rows) {
  Cache c;
  run_forward(w, p, rows, c);
  std::vector<VelocityPrediction> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out[i].v_hat = c.vel.row(r).transpose();
    out[i].sigma_hat = c.logvar.row(r).transpose().array().exp();
  }
  return out;
}

VelocityPrediction forward(const WindowTensor& w, const NetParams& p) {
  const Eigen::Index last = w.length() - 1;
  return forward_rows(w, p, std::span<const Eigen::Index>(&last, 1)).front();
}

double huber_loss(const Vec3& v, const Vec3& v_hat, double delta) {
  if (!(delta > 0.0)) throw InvalidArgument("huber delta must be positive");
  double total = 0.0;
  for (int i = 0; i < 3; ++i) total += huber_scalar(v(i) - v_hat(i), delta);
  return total;
}

double nll_loss(const Vec3& v, const Vec3& v_hat, const Vec3& sigma_hat) {
  if (!(sigma_hat.array() > 0.0).all()) throw InvalidArgument("variances must be positive");
  const Vec3 r = v - v_hat;
  return (r.array().square() / sigma_hat.array()).sum() + sigma_hat.array().log().sum();
}

LossValues evaluate(const Sample& sample, const NetParams& p, double huber_delta) {
  const auto preds = forward_rows(sample.input, p, sample.rows);
  LossValues out;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    out.huber += huber_loss(sample.targets[i], preds[i].v_hat, huber_delta);
    out.nll += nll_loss(sample.targets[i], preds[i].v_hat, preds[i].sigma_hat);
  }
  out.huber /= static_cast<double>(preds.size());
  out.nll /= static_cast<double>(preds.size());
  return out;
}

LossValues backward(const Sample& sample, const NetParams& p, LossKind kind, double huber_delta,
                    NetParams& g) {
  if (sample.rows.size() != sample.targets.size() || sample.rows.empty()) {
    throw InvalidArgument("sample rows and targets must be non-empty and of equal size");
  }
  Cache c;
  run_forward(sample.input, p, sample.rows, c);
  const NetConfig& cfg = p.config;
  const auto m = static_cast<Eigen::Index>(sample.rows.size());
  const double inv_m = 1.0 / static_cast<double>(m);

  if (g.conv1_w.rows() != p.conv1_w.rows() || g.vel_w.size() != p.vel_w.size()) {
    g = NetParams::zeros_like(p);
  } else {
    g.config = p.config;
    g.for_each([](const char*, Matrix& t) { t.setZero(); });
  }

  // Loss and its gradient w.r.t. the two heads.
  LossValues loss;
  Matrix d_vel = Matrix::Zero(m, 3);
  Matrix d_logvar = Matrix::Zero(m, 3);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Vec3& target = sample.targets[static_cast<std::size_t>(i)];
    for (int a = 0; a < 3; ++a) {
      const double r = target(a) - c.vel(i, a);
      const double inv_var = std::exp(-c.logvar(i, a));
      loss.huber += huber_scalar(r, huber_delta);
      loss.nll += r * r * inv_var + c.logvar(i, a);
      if (kind == LossKind::huber) {
        d_vel(i, a) = -huber_slope(r, huber_delta) * inv_m;
      } else {
        d_vel(i, a) = -2.0 * r * inv_var * inv_m;
        d_logvar(i, a) = (1.0 - r * r * inv_var) * inv_m;
      }
    }
  }
  loss.huber *= inv_m;
  loss.nll *= inv_m;

  // Heads.
  g.vel_w = c.n2.transpose() * d_vel;
  g.vel_b = d_vel.colwise().sum();
  g.var_w = c.n2.transpose() * d_logvar;
  g.var_b = d_logvar.colwise().sum();
  const Matrix d_n2 = d_vel * p.vel_w.transpose() + d_logvar * p.var_w.transpose();

  // Second residual block.
  const Matrix d_u2 = layer_norm_backward(d_n2, p.ln2_g, c.ln2, g.ln2_g, g.ln2_b);
  g.ff2_w = c.ff_h.transpose() * d_u2;
  g.ff2_b = d_u2.colwise().sum();
  const Matrix d_ff_pre = (d_u2 * p.ff2_w.transpose()).cwiseProduct(gelu_derivative(c.ff_pre));
  g.ff1_w = c.n1.transpose() * d_ff_pre;
  g.ff1_b = d_ff_pre.colwise().sum();
  const Matrix d_n1 = d_u2 + d_ff_pre * p.ff1_w.transpose();

  // Attention block.
  const Matrix d_u1 = layer_norm_backward(d_n1, p.ln1_g, c.ln1, g.ln1_g, g.ln1_b);
  g.wo = c.o.transpose() * d_u1;
  g.bo = d_u1.colwise().sum();
  const Matrix d_o = d_u1 * p.wo.transpose();

  const int dh = cfg.model_dim / cfg.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const Eigen::Index len = c.z.rows();
  Matrix d_q(m, cfg.model_dim), d_k(len, cfg.model_dim), d_v(len, cfg.model_dim);
  for (int h = 0; h < cfg.heads; ++h) {
    const Matrix& a = c.attn[static_cast<std::size_t>(h)];
    const auto d_oh = d_o.middleCols(h * dh, dh);
    const Matrix d_a = d_oh * c.v.middleCols(h * dh, dh).transpose();
    d_v.middleCols(h * dh, dh) = a.transpose() * d_oh;
    const Eigen::VectorXd row_dot = (d_a.array() * a.array()).rowwise().sum();
    const Matrix d_s = scale * (a.array() * (d_a.array().colwise() - row_dot.array())).matrix();
    d_q.middleCols(h * dh, dh) = d_s * c.k.middleCols(h * dh, dh);
    d_k.middleCols(h * dh, dh) = d_s.transpose() * c.q.middleCols(h * dh, dh);
  }
  g.wq = c.zq.transpose() * d_q;
  g.bq = d_q.colwise().sum();
  g.wk = c.z.transpose() * d_k;
  g.wv = c.z.transpose() * d_v;
  g.bv = d_v.colwise().sum();

  Matrix d_z = d_k * p.wk.transpose() + d_v * p.wv.transpose();
  const Matrix d_zq = d_u1 + d_q * p.wq.transpose();
  for (Eigen::Index i = 0; i < m; ++i) d_z.row(c.rows[static_cast<std::size_t>(i)]) += d_zq.row(i);

  // Convolutional front end (positional table is constant).
  const Matrix d_pre2 = d_z.cwiseProduct(gelu_derivative(c.pre2));
  g.conv2_w = c.patches2.transpose() * d_pre2;
  g.conv2_b = d_pre2.colwise().sum();
  const Matrix d_h1 = col2im(d_pre2 * p.conv2_w.transpose(), cfg.conv1_channels, cfg.kernel);
  const Matrix d_pre1 = d_h1.cwiseProduct(gelu_derivative(c.pre1));
  g.conv1_w = c.patches1.transpose() * d_pre1;
  g.conv1_b = d_pre1.colwise().sum();
  return loss;
}

}  // namespace aiio::net
