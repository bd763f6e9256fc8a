#include "aiio/trainer.hpp"

#include "aiio/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <numeric>
#include <thread>

namespace aiio::net {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw InvalidArgument("learning rate must be non-negative");
  if (batch_size == 0) throw InvalidArgument("batch size must be positive");
  if (epochs == 0) throw InvalidArgument("epochs must be positive");
  if (!(huber_delta > 0.0)) throw InvalidArgument("huber delta must be positive");
  if (threads == 0) throw InvalidArgument("threads must be positive");
}

AdamOptimizer::AdamOptimizer(const NetParams& shape, double learning_rate, double beta1,
                             double beta2, double epsilon)
    : m_(NetParams::zeros_like(shape)),
      v_(NetParams::zeros_like(shape)),
      lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      eps_(epsilon) {}

void AdamOptimizer::step(NetParams& params, const NetParams& grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  std::vector<const Matrix*> g;
  grad.for_each([&](const char*, const Matrix& x) { g.push_back(&x); });
  std::vector<Matrix*> m, v;
  m_.for_each([&](const char*, Matrix& x) { m.push_back(&x); });
  v_.for_each([&](const char*, Matrix& x) { v.push_back(&x); });
  std::size_t i = 0;
  params.for_each([&](const char*, Matrix& p) {
    const Matrix& gi = *g[i];
    *m[i] = beta1_ * *m[i] + (1.0 - beta1_) * gi;
    *v[i] = beta2_ * *v[i] + (1.0 - beta2_) * gi.cwiseAbs2();
    p.array() -= lr_ * (m[i]->array() / c1) / ((v[i]->array() / c2).sqrt() + eps_);
    ++i;
  });
}

LossValues batch_gradient(std::span<const Sample> data, std::span<const std::size_t> batch,
                          const NetParams& params, LossKind kind, double huber_delta,
                          NetParams& grad_sum, std::size_t threads,
                          std::vector<LossValues>* per_sample) {
  grad_sum = NetParams::zeros_like(params);
  if (batch.empty()) return {};
  const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), batch.size());

  // Per-sample gradients, summed afterwards in batch order so the result
  // does not depend on the worker count.
  std::vector<NetParams> grads(batch.size());
  std::vector<LossValues> losses(batch.size());
  auto work = [&](std::size_t w) {
    const std::size_t begin = batch.size() * w / workers;
    const std::size_t end = batch.size() * (w + 1) / workers;
    for (std::size_t b = begin; b < end; ++b) {
      grads[b] = NetParams::zeros_like(params);
      losses[b] = backward(data[batch[b]], params, kind, huber_delta, grads[b]);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }

  LossValues total;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (per_sample != nullptr) (*per_sample)[batch[b]] = losses[b];
    grad_sum.add_scaled(grads[b], 1.0);
    total.huber += losses[b].huber;
    total.nll += losses[b].nll;
  }
  return total;
}

namespace {

// Per-sample losses are stored by index and summed in index order so the
// epoch value does not depend on the shuffle.
LossValues ordered_mean(const std::vector<LossValues>& per_sample) {
  LossValues mean;
  for (const auto& l : per_sample) {
    mean.huber += l.huber;
    mean.nll += l.nll;
  }
  mean.huber /= static_cast<double>(per_sample.size());
  mean.nll /= static_cast<double>(per_sample.size());
  return mean;
}

}  // namespace

TrainResult train(std::span<const Sample> data, const TrainConfig& cfg, NetParams init) {
  cfg.validate();
  if (data.empty()) throw InvalidArgument("training set is empty");

  TrainResult result;
  result.params = std::move(init);
  AdamOptimizer adam(result.params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
  Rng rng(cfg.seed * 0xA24BAED4963EE407ULL + 5);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<LossValues> per_sample(data.size());

  LossKind phase = LossKind::huber;
  double best_huber = std::numeric_limits<double>::infinity();
  std::size_t stall = 0;
  NetParams grad = NetParams::zeros_like(result.params);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, end - start);

      batch_gradient(data, batch, result.params, phase, cfg.huber_delta, grad, cfg.threads,
                     &per_sample);
      for (std::size_t idx : batch) {
        if (!std::isfinite(per_sample[idx].huber) ||
            (phase == LossKind::nll && !std::isfinite(per_sample[idx].nll))) {
          throw DivergenceDetected("non-finite training loss in epoch " + std::to_string(epoch));
        }
      }
      grad.scale(1.0 / static_cast<double>(batch.size()));
      adam.step(result.params, grad);
      if (!result.params.all_finite()) {
        throw DivergenceDetected("non-finite parameters in epoch " + std::to_string(epoch));
      }
    }

    const LossValues mean = ordered_mean(per_sample);
    result.history.push_back({epoch, mean.huber, mean.nll, phase});

    if (phase == LossKind::huber) {
      if (mean.huber < best_huber * (1.0 - cfg.min_improvement)) {
        best_huber = mean.huber;
        stall = 0;
      } else {
        ++stall;
      }
      const bool reserve_reached =
          cfg.nll_reserve_epochs > 0 && epoch + cfg.nll_reserve_epochs >= cfg.epochs;
      if (stall >= cfg.patience || reserve_reached) {
        phase = LossKind::nll;
        result.switch_epoch = epoch + 1;
      }
    }
  }
  if (result.switch_epoch > cfg.epochs) result.switch_epoch = 0;
  return result;
}

TrainResult train(std::span<const Sample> data, const TrainConfig& cfg, const NetConfig& net) {
  return train(data, cfg, NetParams::initialize(net, cfg.seed));
}

}  // namespace aiio::net
