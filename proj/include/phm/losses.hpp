#pragma once

#include <map>
#include <span>
#include <vector>

namespace phm {

struct LossConfig {
  std::vector<std::size_t> segment_lengths{4064, 2032, 1016, 508};
  double preemph_alpha = 0.97;
  double mu = 65535.0;
  // Norm floor for silent segments.
  double eps_norm = 1e-8;
};

/// -<y, yhat> / (max(|y|, eps) * max(|yhat|, eps)).
double cos_sim_loss(std::span<const double> y, std::span<const double> yhat, double eps_norm = 1e-8);

/// Sum over scales of the mean per-segment cosine loss; trailing samples
/// that do not fill a segment are ignored, and scales with no full segment
/// are skipped.
double multiscale_loss(std::span<const double> y, std::span<const double> yhat,
                       const LossConfig &cfg = {});

std::vector<double> pre_emphasis(std::span<const double> y, double alpha);
/// Continuous mu-law companding; inputs are clamped to [-1, 1].
std::vector<double> mu_law(std::span<const double> y, double mu);

/// L(y, yhat) + L(pi(y), pi(yhat)) + L(mu(pi(y)), mu(pi(yhat))).
double emphasized_loss(std::span<const double> y, std::span<const double> yhat,
                       const LossConfig &cfg = {});

enum class Component { kDirect, kReverb, kNoise };

struct ComponentPair {
  std::vector<double> target;
  std::vector<double> estimate;
};

/// Sum over k in {d, r, n} of L+(y_k, yhat_k) + L+(x - y_k, x - yhat_k).
double final_loss(const std::map<Component, ComponentPair> &components,
                  std::span<const double> mixture, const LossConfig &cfg = {});

// Analytic gradients with respect to the estimate.
std::vector<double> cos_sim_gradient(std::span<const double> y, std::span<const double> yhat,
                                     double eps_norm = 1e-8);
std::vector<double> multiscale_gradient(std::span<const double> y, std::span<const double> yhat,
                                        const LossConfig &cfg = {});
std::vector<double> loss_gradient(std::span<const double> y, std::span<const double> yhat,
                                  const LossConfig &cfg = {});

}  // namespace phm
