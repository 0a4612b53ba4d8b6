#include "phm/mask.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace phm {
namespace {

// Large enough that sigmoid saturates to exactly 0/1 in double precision.
constexpr double kLogitCap = 700.0;
constexpr double kSoftplusZeroLogit = -800.0;
constexpr double kUlp = std::numeric_limits<double>::epsilon();

}  // namespace

void MaskLogits::validate() const {
  for (const RealGrid *g : {&z_notk, &beta_logit, &q0, &q1}) {
    require_same_shape(z_k, *g, "mask logits");
  }
  for (const RealGrid *g : {&z_k, &z_notk, &beta_logit, &q0, &q1}) {
    for (double v : g->values()) {
      if (!std::isfinite(v)) throw Error("mask logits: non-finite value");
    }
  }
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  if (x > 30.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double softplus_inverse(double y) {
  if (y <= 0.0) return kSoftplusZeroLogit;
  if (y > 30.0) return y + std::log(-std::expm1(-y));
  return std::log(std::expm1(y));
}

MagnitudeMasks magnitude_masks(const MaskLogits &logits) {
  logits.validate();
  const std::size_t T = logits.frames(), F = logits.bins();
  MagnitudeMasks out{RealGrid(T, F), RealGrid(T, F), RealGrid(T, F), RealGrid(T, F), RealGrid(T, F)};
  for (std::size_t i = 0; i < logits.z_k.size(); ++i) {
    const double gap = logits.z_k[i] - logits.z_notk[i];
    const double s_k = sigmoid(gap);
    const double s_notk = sigmoid(-gap);
    const double t = std::tanh(0.5 * gap);  // s_k - s_notk
    double excess = softplus(logits.beta_logit[i]);
    double beta = 1.0 + excess;
    const double spread = std::abs(t);
    double diff = beta * t;
    if (spread > kClipEpsilon && beta > 1.0 / spread) {
      beta = 1.0 / spread;
      excess = (1.0 - spread) / spread;
      diff = t > 0.0 ? 1.0 : -1.0;
    }
    out.beta[i] = beta;
    out.excess[i] = excess;
    out.diff[i] = diff;
    out.mag_k[i] = beta * s_k;
    out.mag_notk[i] = beta * s_notk;
  }
  return out;
}

SignGrid gumbel_sign(const RealGrid &q0, const RealGrid &q1, const GumbelConfig &cfg) {
  require_same_shape(q0, q1, "sign logits");
  if (!(cfg.temperature > 0.0)) throw Error("gumbel: temperature must be positive");
  SignGrid xi(q0.frames(), q0.bins(), 1);
  std::mt19937_64 rng(cfg.seed);
  // Open interval (0, 1) so both logs stay finite.
  std::uniform_real_distribution<double> uniform(std::nextafter(0.0, 1.0), 1.0);
  const bool stochastic = cfg.mode == GumbelMode::kStochastic;
  for (std::size_t i = 0; i < q0.size(); ++i) {
    double g0 = 0.0, g1 = 0.0;
    if (stochastic) {
      g0 = -std::log(-std::log(uniform(rng)));
      g1 = -std::log(-std::log(uniform(rng)));
    }
    const double a0 = (q0[i] + g0) / cfg.temperature;
    const double a1 = (q1[i] + g1) / cfg.temperature;
    const double m = std::max(a0, a1);
    const double e0 = std::exp(a0 - m), e1 = std::exp(a1 - m);
    const double gamma0 = e0 / (e0 + e1), gamma1 = e1 / (e0 + e1);
    xi[i] = gamma0 > gamma1 ? -1 : 1;
  }
  return xi;
}

PhaseFactors phase_factors(const MagnitudeMasks &m, const SignGrid &xi) {
  require_same_shape(m.mag_k, m.mag_notk, "magnitude masks");
  require_same_shape(m.mag_k, m.excess, "magnitude masks");
  require_same_shape(m.mag_k, m.diff, "magnitude masks");
  require_same_shape(m.mag_k, xi, "sign grid");
  const std::size_t T = m.mag_k.frames(), F = m.mag_k.bins();
  PhaseFactors out{RealGrid(T, F), RealGrid(T, F), RealGrid(T, F), RealGrid(T, F)};
  // Law of cosines with the mixture side normalized to 1, in factored form:
  //   1 - cos = (near + far - 1)(1 - near + far) / (2 near)
  //   1 + cos = (1 + near + far)(1 + near - far) / (2 near)
  // with near + far = beta and near - far = d.
  auto side = [](double near, double excess, double beta, double d, double &c, double &s) {
    if (near < kDegenerateMagnitude) {
      c = 1.0;
      s = 0.0;
      return;
    }
    const double omc = std::max(0.0, excess * (1.0 - d) / (2.0 * near));
    const double opc = std::max(0.0, (1.0 + beta) * (1.0 + d) / (2.0 * near));
    c = std::clamp(omc < opc ? 1.0 - omc : opc - 1.0, -1.0, 1.0);
    s = std::sqrt(std::min(1.0, omc * opc));
  };
  for (std::size_t i = 0; i < m.mag_k.size(); ++i) {
    const double beta = m.beta[i], excess = m.excess[i], d = m.diff[i];
    side(m.mag_k[i], excess, beta, d, out.cos_k[i], out.sin_k[i]);
    side(m.mag_notk[i], excess, beta, -d, out.cos_notk[i], out.sin_notk[i]);
  }
  return out;
}

PhaseFactors phase_factors(const RealGrid &mag_k, const RealGrid &mag_notk, const SignGrid &xi) {
  require_same_shape(mag_k, mag_notk, "magnitude masks");
  const std::size_t T = mag_k.frames(), F = mag_k.bins();
  MagnitudeMasks m{mag_k, mag_notk, RealGrid(T, F), RealGrid(T, F), RealGrid(T, F)};
  for (std::size_t i = 0; i < mag_k.size(); ++i) {
    m.beta[i] = mag_k[i] + mag_notk[i];
    m.excess[i] = m.beta[i] - 1.0;
    m.diff[i] = mag_k[i] - mag_notk[i];
  }
  return phase_factors(m, xi);
}

PhmMaskField assemble_masks(const MaskLogits &logits, const GumbelConfig &cfg) {
  auto mags = magnitude_masks(logits);
  auto xi = gumbel_sign(logits.q0, logits.q1, cfg);
  auto phase = phase_factors(mags, xi);
  const std::size_t T = logits.frames(), F = logits.bins();
  PhmMaskField field;
  field.mask_k = ComplexSpectrogram(T, F);
  field.mask_notk = ComplexSpectrogram(T, F);
  for (std::size_t i = 0; i < mags.mag_k.size(); ++i) {
    const double sign = static_cast<double>(xi[i]);
    // The complement rotates the other way so the two sides close the triangle.
    field.mask_k[i] = mags.mag_k[i] * std::complex<double>(phase.cos_k[i], sign * phase.sin_k[i]);
    field.mask_notk[i] =
        mags.mag_notk[i] * std::complex<double>(phase.cos_notk[i], -sign * phase.sin_notk[i]);
  }
  field.mag_k = std::move(mags.mag_k);
  field.mag_notk = std::move(mags.mag_notk);
  field.beta = std::move(mags.beta);
  field.xi = std::move(xi);
  field.cos_dk = std::move(phase.cos_k);
  field.sin_dk = std::move(phase.sin_k);
  field.cos_dnotk = std::move(phase.cos_notk);
  field.sin_dnotk = std::move(phase.sin_notk);
  return field;
}

namespace {
MaskLogits saturated_logits(std::size_t frames, std::size_t bins, double gap) {
  MaskLogits l(frames, bins);
  for (std::size_t i = 0; i < l.z_k.size(); ++i) {
    l.z_k[i] = gap;
    l.beta_logit[i] = kSoftplusZeroLogit;
  }
  return l;
}
}  // namespace

PhmMaskField pass_through_field(std::size_t frames, std::size_t bins) {
  return assemble_masks(saturated_logits(frames, bins, kLogitCap));
}

PhmMaskField stop_field(std::size_t frames, std::size_t bins) {
  return assemble_masks(saturated_logits(frames, bins, -kLogitCap));
}

std::pair<ComplexSpectrogram, ComplexSpectrogram> apply_mask(const ComplexSpectrogram &x,
                                                             const PhmMaskField &field) {
  require_same_shape(x, field.mask_k, "apply_mask");
  ComplexSpectrogram y_k(x.frames(), x.bins()), y_notk(x.frames(), x.bins());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y_k[i] = field.mask_k[i] * x[i];
    y_notk[i] = field.mask_notk[i] * x[i];
  }
  return {std::move(y_k), std::move(y_notk)};
}

Decomposition quadrangle_decompose(const ComplexSpectrogram &x, const PhmMaskField &field_d,
                                   const PhmMaskField &field_n) {
  require_same_shape(x, field_d.mask_k, "quadrangle direct field");
  require_same_shape(x, field_n.mask_k, "quadrangle noise field");
  Decomposition out{ComplexSpectrogram(x.frames(), x.bins()),
                    ComplexSpectrogram(x.frames(), x.bins()),
                    ComplexSpectrogram(x.frames(), x.bins())};
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.direct[i] = field_d.mask_k[i] * x[i];
    out.noise[i] = field_n.mask_k[i] * x[i];
    out.reverb[i] = x[i] - out.direct[i] - out.noise[i];
  }
  return out;
}

MaskLogits oracle_fit(const ComplexSpectrogram &x, const ComplexSpectrogram &y_target) {
  require_same_shape(x, y_target, "oracle_fit");
  MaskLogits out(x.frames(), x.bins());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::abs(x[i]) <= kDegenerateMagnitude) {
      out.z_k[i] = kLogitCap;
      out.beta_logit[i] = kSoftplusZeroLogit;
      continue;
    }
    const std::complex<double> ratio = y_target[i] / x[i];
    const double a = std::abs(ratio);
    const double b = std::abs(1.0 - ratio);
    double gap;
    if (b == 0.0) {
      gap = kLogitCap;
    } else if (a == 0.0) {
      gap = -kLogitCap;
    } else {
      gap = std::clamp(std::log(a) - std::log(b), -kLogitCap, kLogitCap);
    }
    out.z_k[i] = gap;
    out.z_notk[i] = 0.0;
    // Collinear with the mixture outside it: |a - b| = 1 puts beta exactly on
    // the clip, so request more and let the clip set it without rounding.
    const bool on_clip = std::abs(a - b) >= 1.0 - 4.0 * kUlp * (a + b);
    out.beta_logit[i] = softplus_inverse(on_clip ? 2.0 * (a + b) : a + b - 1.0);
    const bool clockwise = ratio.imag() < 0.0;
    out.q0[i] = clockwise ? 1.0 : 0.0;
    out.q1[i] = clockwise ? 0.0 : 1.0;
  }
  return out;
}

SignalBuffer remix(const SignalBuffer &y_d, const SignalBuffer &y_r, double reverb_gain_db) {
  if (y_d.size() != y_r.size()) throw Error("remix: length mismatch");
  if (reverb_gain_db == kSuppressReverb) return y_d;
  const double gain = std::pow(10.0, reverb_gain_db / 20.0);
  std::vector<double> out(y_d.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = y_d[i] + gain * y_r[i];
  return SignalBuffer(std::move(out));
}

}  // namespace phm
