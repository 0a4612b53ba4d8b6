#include "phm/losses.hpp"

#include <algorithm>
#include <cmath>

#include "phm/error.hpp"
#include "phm/signal.hpp"

namespace phm {
namespace {

void require_equal(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("loss: length mismatch");
}

void require_full_segment(std::size_t n, const LossConfig &cfg) {
  for (std::size_t g : cfg.segment_lengths) {
    if (g == 0) throw Error("loss: segment length must be positive");
    if (n >= g) return;
  }
  throw Error("loss: no full segment at any scale");
}

}  // namespace

double cos_sim_loss(std::span<const double> y, std::span<const double> yhat, double eps_norm) {
  require_equal(y, yhat);
  if (y.empty()) throw Error("loss: empty signal");
  const double ny = std::max(std::sqrt(energy(y)), eps_norm);
  const double nh = std::max(std::sqrt(energy(yhat)), eps_norm);
  return -dot(y, yhat) / (ny * nh);
}

std::vector<double> cos_sim_gradient(std::span<const double> y, std::span<const double> yhat,
                                     double eps_norm) {
  require_equal(y, yhat);
  const double norm_y = std::sqrt(energy(y));
  const double norm_h = std::sqrt(energy(yhat));
  const double ny = std::max(norm_y, eps_norm);
  const double nh = std::max(norm_h, eps_norm);
  const double p = dot(y, yhat);
  std::vector<double> g(y.size());
  // Below the floor the estimate norm is a constant.
  const bool radial = norm_h > eps_norm;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double v = y[i] / (ny * nh);
    if (radial) v -= p * yhat[i] / (ny * nh * nh * norm_h);
    g[i] = -v;
  }
  return g;
}

double multiscale_loss(std::span<const double> y, std::span<const double> yhat,
                       const LossConfig &cfg) {
  require_equal(y, yhat);
  require_full_segment(y.size(), cfg);
  double total = 0.0;
  for (std::size_t g : cfg.segment_lengths) {
    const std::size_t count = y.size() / g;
    if (count == 0) continue;
    double scale = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      scale += cos_sim_loss(y.subspan(i * g, g), yhat.subspan(i * g, g), cfg.eps_norm);
    }
    total += scale / static_cast<double>(count);
  }
  return total;
}

std::vector<double> multiscale_gradient(std::span<const double> y, std::span<const double> yhat,
                                        const LossConfig &cfg) {
  require_equal(y, yhat);
  require_full_segment(y.size(), cfg);
  std::vector<double> grad(y.size(), 0.0);
  for (std::size_t g : cfg.segment_lengths) {
    const std::size_t count = y.size() / g;
    if (count == 0) continue;
    const double w = 1.0 / static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i) {
      const auto part = cos_sim_gradient(y.subspan(i * g, g), yhat.subspan(i * g, g), cfg.eps_norm);
      for (std::size_t n = 0; n < g; ++n) grad[i * g + n] += w * part[n];
    }
  }
  return grad;
}

std::vector<double> pre_emphasis(std::span<const double> y, double alpha) {
  std::vector<double> out(y.size());
  for (std::size_t t = 0; t < y.size(); ++t) out[t] = t == 0 ? y[0] : y[t] - alpha * y[t - 1];
  return out;
}

std::vector<double> mu_law(std::span<const double> y, double mu) {
  if (!(mu > 0.0)) throw Error("mu_law: mu must be positive");
  const double denom = std::log1p(mu);
  std::vector<double> out(y.size());
  for (std::size_t t = 0; t < y.size(); ++t) {
    const double v = std::clamp(y[t], -1.0, 1.0);
    out[t] = std::copysign(std::log1p(mu * std::abs(v)) / denom, v);
  }
  return out;
}

double emphasized_loss(std::span<const double> y, std::span<const double> yhat,
                       const LossConfig &cfg) {
  require_equal(y, yhat);
  const auto py = pre_emphasis(y, cfg.preemph_alpha);
  const auto ph = pre_emphasis(yhat, cfg.preemph_alpha);
  return multiscale_loss(y, yhat, cfg) + multiscale_loss(py, ph, cfg) +
         multiscale_loss(mu_law(py, cfg.mu), mu_law(ph, cfg.mu), cfg);
}

std::vector<double> loss_gradient(std::span<const double> y, std::span<const double> yhat,
                                  const LossConfig &cfg) {
  require_equal(y, yhat);
  const std::size_t n = y.size();
  const auto py = pre_emphasis(y, cfg.preemph_alpha);
  const auto ph = pre_emphasis(yhat, cfg.preemph_alpha);
  auto grad = multiscale_gradient(y, yhat, cfg);
  auto g_pre = multiscale_gradient(py, ph, cfg);
  const auto g_mu = multiscale_gradient(mu_law(py, cfg.mu), mu_law(ph, cfg.mu), cfg);
  const double denom = std::log1p(cfg.mu);
  for (std::size_t t = 0; t < n; ++t) {
    const double v = ph[t];
    // Clamped region has zero slope.
    const double slope = std::abs(v) > 1.0 ? 0.0 : cfg.mu / ((1.0 + cfg.mu * std::abs(v)) * denom);
    g_pre[t] += slope * g_mu[t];
  }
  // Transpose of the pre-emphasis filter.
  for (std::size_t t = 0; t < n; ++t) {
    grad[t] += g_pre[t] - (t + 1 < n ? cfg.preemph_alpha * g_pre[t + 1] : 0.0);
  }
  return grad;
}

double final_loss(const std::map<Component, ComponentPair> &components,
                  std::span<const double> mixture, const LossConfig &cfg) {
  double total = 0.0;
  for (Component k : {Component::kDirect, Component::kReverb, Component::kNoise}) {
    const auto it = components.find(k);
    if (it == components.end()) throw Error("final_loss: missing component");
    const auto &pair = it->second;
    if (pair.target.size() != mixture.size() || pair.estimate.size() != mixture.size()) {
      throw Error("final_loss: length mismatch");
    }
    std::vector<double> rest_y(mixture.size()), rest_hat(mixture.size());
    for (std::size_t i = 0; i < mixture.size(); ++i) {
      rest_y[i] = mixture[i] - pair.target[i];
      rest_hat[i] = mixture[i] - pair.estimate[i];
    }
    total += emphasized_loss(pair.target, pair.estimate, cfg) + emphasized_loss(rest_y, rest_hat, cfg);
  }
  return total;
}

}  // namespace phm
