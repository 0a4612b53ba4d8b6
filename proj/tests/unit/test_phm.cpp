#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "phm/mask.hpp"

using namespace phm;
using cplx = std::complex<double>;

namespace {

MaskLogits single(double gap, double beta_logit, double q0 = 0.0, double q1 = 1.0) {
  MaskLogits l(1, 1);
  l.z_k[0] = gap;
  l.z_notk[0] = 0.0;
  l.beta_logit[0] = beta_logit;
  l.q0[0] = q0;
  l.q1[0] = q1;
  return l;
}

MaskLogits random_logits(std::size_t frames, std::size_t bins, std::uint64_t seed, double spread = 6.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-spread, spread);
  MaskLogits l(frames, bins);
  for (auto *g : {&l.z_k, &l.z_notk, &l.beta_logit, &l.q0, &l.q1}) {
    for (auto &v : g->values()) v = u(rng);
  }
  return l;
}

RealGrid grid1(double v) { return RealGrid(1, 1, v); }

}  // namespace

TEST_CASE("sigmoid and softplus are stable") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(sigmoid(-800.0) == 0.0);
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(softplus(1000.0) == doctest::Approx(1000.0));
  CHECK(softplus(-1000.0) == 0.0);
  for (double y : {1e-12, 1e-3, 0.5, 2.0, 40.0}) CHECK(softplus(softplus_inverse(y)) == doctest::Approx(y).epsilon(1e-12));
  CHECK(softplus(softplus_inverse(0.0)) == 0.0);
}

TEST_CASE("magnitude masks: worked values") {
  SUBCASE("balanced") {
    const auto m = magnitude_masks(single(0.0, 0.0));
    CHECK(m.beta[0] == doctest::Approx(1.0 + std::log(2.0)));
    CHECK(m.beta[0] == doctest::Approx(1.6931).epsilon(1e-4));
    CHECK(m.mag_k[0] == doctest::Approx(0.8466).epsilon(1e-4));
    CHECK(m.mag_notk[0] == doctest::Approx(m.mag_k[0]));
  }
  SUBCASE("clip bound") {
    const auto m = magnitude_masks(single(std::log(9.0), softplus_inverse(2.0)));
    CHECK(m.beta[0] == doctest::Approx(1.25));
    CHECK(m.mag_k[0] == doctest::Approx(1.125));
    CHECK(m.mag_notk[0] == doctest::Approx(0.125));
  }
  SUBCASE("saturated gap forces beta to one") {
    const auto m = magnitude_masks(single(700.0, 5.0));
    CHECK(m.beta[0] == doctest::Approx(1.0));
    CHECK(m.mag_k[0] == doctest::Approx(1.0));
    CHECK(m.mag_notk[0] == doctest::Approx(0.0));
  }
  SUBCASE("non-finite logits are rejected") {
    auto l = single(0.0, 0.0);
    l.q1[0] = INFINITY;
    CHECK_THROWS_AS(magnitude_masks(l), Error);
  }
}

TEST_CASE("magnitude invariants over random logits") {
  const auto m = magnitude_masks(random_logits(40, 50, 3, 20.0));
  for (std::size_t i = 0; i < m.beta.size(); ++i) {
    CHECK(m.beta[i] >= 1.0);
    CHECK(std::abs(m.mag_k[i] + m.mag_notk[i] - m.beta[i]) <= 1e-12 * m.beta[i]);
    CHECK(std::abs(m.mag_k[i] - m.mag_notk[i]) <= 1.0 + 1e-9);
    CHECK(m.mag_k[i] >= 0.0);
    CHECK(m.mag_notk[i] >= 0.0);
  }
}

TEST_CASE("gumbel sign") {
  GumbelConfig det;
  CHECK(gumbel_sign(grid1(2.0), grid1(1.0), det)[0] == -1);
  CHECK(gumbel_sign(grid1(1.0), grid1(2.0), det)[0] == 1);
  CHECK(gumbel_sign(grid1(0.5), grid1(0.5), det)[0] == 1);
  GumbelConfig bad;
  bad.temperature = 0.0;
  CHECK_THROWS_AS(gumbel_sign(grid1(0), grid1(0), bad), Error);

  GumbelConfig sto;
  sto.mode = GumbelMode::kStochastic;
  sto.seed = 1234;
  RealGrid zeros(100, 1000, 0.0);
  const auto xi = gumbel_sign(zeros, zeros, sto);
  std::size_t negatives = 0;
  for (int v : xi.values()) negatives += v == -1;
  const double frac = double(negatives) / double(xi.size());
  CHECK(frac >= 0.49);
  CHECK(frac <= 0.51);
  CHECK(gumbel_sign(zeros, zeros, sto).values() == xi.values());
}

TEST_CASE("phase factors: triangles with known angles") {
  SignGrid plus(1, 1, 1);
  SUBCASE("equilateral") {
    const auto p = phase_factors(grid1(1.0), grid1(1.0), plus);
    CHECK(p.cos_k[0] == doctest::Approx(0.5));
    CHECK(p.cos_notk[0] == doctest::Approx(0.5));
    const cplx sum = std::polar(1.0, std::numbers::pi / 3) + std::polar(1.0, -std::numbers::pi / 3);
    CHECK(std::abs(sum - 1.0) < 1e-12);
    CHECK(std::abs(cplx(p.cos_k[0], p.sin_k[0]) + cplx(p.cos_notk[0], -p.sin_notk[0]) - 1.0) < 1e-12);
  }
  SUBCASE("3-4-5") {
    const auto p = phase_factors(grid1(0.6), grid1(0.8), plus);
    CHECK(p.cos_k[0] == doctest::Approx(0.6));
    CHECK(p.cos_notk[0] == doctest::Approx(0.8));
    const cplx sum = 0.6 * cplx(p.cos_k[0], p.sin_k[0]) + 0.8 * cplx(p.cos_notk[0], -p.sin_notk[0]);
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
  SUBCASE("collinear and degenerate") {
    const auto p = phase_factors(grid1(1.0), grid1(0.0), plus);
    CHECK(p.cos_k[0] == doctest::Approx(1.0));
    CHECK(p.sin_k[0] == doctest::Approx(0.0));
    CHECK(p.cos_notk[0] == 1.0);
    CHECK(p.sin_notk[0] == 0.0);
  }
}

TEST_CASE("assembled masks") {
  SUBCASE("sigma one half, beta two") {
    const auto f = assemble_masks(single(0.0, softplus_inverse(1.0)));
    CHECK(f.mag_k[0] == doctest::Approx(1.0));
    CHECK(std::abs(f.mask_k[0] - std::polar(1.0, std::numbers::pi / 3)) < 1e-12);
    CHECK(std::abs(f.mask_notk[0] - std::polar(1.0, -std::numbers::pi / 3)) < 1e-12);
    CHECK(std::abs(f.mask_k[0] + f.mask_notk[0] - 1.0) < 1e-12);
    const auto [yk, ynk] = apply_mask(ComplexSpectrogram(1, 1, 1.0), f);
    CHECK(std::abs(yk[0] - std::polar(1.0, std::numbers::pi / 3)) < 1e-12);
    CHECK(std::abs(ynk[0] - std::polar(1.0, -std::numbers::pi / 3)) < 1e-12);
  }
  SUBCASE("full assignment") {
    const auto f = assemble_masks(single(700.0, 0.0));
    CHECK(std::abs(f.mask_k[0] - 1.0) < 1e-12);
    CHECK(std::abs(f.mask_notk[0]) < 1e-12);
  }
  SUBCASE("negating the sign conjugates both masks") {
    const auto l = random_logits(8, 9, 17);
    auto flipped = l;
    std::swap(flipped.q0, flipped.q1);
    const auto a = assemble_masks(l), b = assemble_masks(flipped);
    for (std::size_t i = 0; i < a.mask_k.size(); ++i) {
      if (l.q0[i] == l.q1[i]) continue;
      CHECK(std::abs(a.mask_k[i] - std::conj(b.mask_k[i])) < 1e-12);
      CHECK(std::abs(a.mask_notk[i] - std::conj(b.mask_notk[i])) < 1e-12);
      CHECK(a.mag_k[i] == b.mag_k[i]);
    }
  }
  SUBCASE("closure fuzz") {
    const auto f = assemble_masks(random_logits(100, 100, 99, 15.0));
    double worst = 0.0;
    for (std::size_t i = 0; i < f.mask_k.size(); ++i) worst = std::max(worst, std::abs(f.mask_k[i] + f.mask_notk[i] - 1.0));
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("pass-through and stop fields") {
  const auto pass = pass_through_field(3, 4), stop = stop_field(3, 4);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(pass.mask_k[i] == cplx(1.0, 0.0));
    CHECK(std::abs(stop.mask_k[i]) < 1e-300);
    CHECK(std::abs(stop.mask_notk[i] - 1.0) < 1e-15);
  }
}

TEST_CASE("apply_mask closure and shape errors") {
  const auto f = assemble_masks(random_logits(20, 30, 5));
  ComplexSpectrogram x(20, 30);
  const auto re = oracle::randn(600, 1), im = oracle::randn(600, 2);
  double xmax = 0;
  for (std::size_t i = 0; i < 600; ++i) {
    x[i] = {re[i], im[i]};
    xmax = std::max(xmax, std::abs(x[i]));
  }
  const auto [yk, ynk] = apply_mask(x, f);
  double worst = 0;
  for (std::size_t i = 0; i < 600; ++i) worst = std::max(worst, std::abs(yk[i] + ynk[i] - x[i]));
  CHECK(worst < 1e-6 * xmax);
  CHECK_THROWS_WITH_AS(apply_mask(ComplexSpectrogram(2, 2), f), doctest::Contains("shape mismatch"), Error);
  const auto [pk, pn] = apply_mask(x, pass_through_field(20, 30));
  CHECK(pk.values() == x.values());
  for (const auto &v : pn.values()) CHECK(std::abs(v) < 1e-300);
}

TEST_CASE("quadrangle decomposition") {
  ComplexSpectrogram x(4, 5);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = {std::sin(i + 1.0), std::cos(3.0 * i)};
  const auto trivial = quadrangle_decompose(x, pass_through_field(4, 5), stop_field(4, 5));
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(trivial.direct[i] == x[i]);
    CHECK(std::abs(trivial.reverb[i]) < 1e-15);
    CHECK(std::abs(trivial.noise[i]) < 1e-15);
  }
  const auto parts = quadrangle_decompose(x, assemble_masks(random_logits(4, 5, 1)), assemble_masks(random_logits(4, 5, 2)));
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(parts.reverb[i] == x[i] - parts.direct[i] - parts.noise[i]);
  }
  CHECK_THROWS_AS(quadrangle_decompose(x, pass_through_field(4, 4), stop_field(4, 5)), Error);
}

TEST_CASE("oracle_fit inverts the mask construction") {
  SUBCASE("identity target") {
    ComplexSpectrogram x(1, 1, cplx(0.3, -0.4));
    const auto f = assemble_masks(oracle_fit(x, x));
    CHECK(std::abs(f.mask_k[0] * x[0] - x[0]) < 1e-6 * std::abs(x[0]));
  }
  SUBCASE("half target is collinear") {
    ComplexSpectrogram x(1, 1, cplx(0.3, -0.4)), y(1, 1, cplx(0.15, -0.2));
    const auto l = oracle_fit(x, y);
    const auto f = assemble_masks(l);
    CHECK(sigmoid(l.z_k[0] - l.z_notk[0]) == doctest::Approx(0.5));
    CHECK(f.beta[0] == doctest::Approx(1.0));
    CHECK(f.cos_dk[0] == doctest::Approx(1.0));
    CHECK(std::abs(f.mask_k[0] - 0.5) < 1e-12);
  }
  SUBCASE("random targets, including degenerate ones") {
    const std::size_t n = 4000;
    ComplexSpectrogram x(40, 100), y(40, 100);
    const auto a = oracle::randn(4 * n, 21);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = {a[4 * i], a[4 * i + 1]};
      y[i] = cplx(a[4 * i + 2], a[4 * i + 3]) * (i % 7 == 0 ? 50.0 : 1.0);
      if (i % 11 == 0) y[i] = -3.7 * x[i];           // collinear outside
      if (i % 13 == 0) y[i] = 0.25 * x[i];           // collinear inside
      if (i % 17 == 0) y[i] = 0.0;                   // empty target
      if (i % 19 == 0) x[i] = {1e-3, 0.0}, y[i] = {250.0, 0.0};  // real, large ratio
    }
    x[5] = 0.0;  // degenerate mixture bin falls back to pass-through
    const auto [yk, ynk] = apply_mask(x, assemble_masks(oracle_fit(x, y)));
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(x[i]) <= kDegenerateMagnitude) {
        CHECK(std::abs(yk[i]) == 0.0);
        continue;
      }
      const double rel = std::abs(yk[i] - y[i]) / std::max(std::abs(y[i]), std::abs(x[i]));
      CHECK(rel < 1e-6);
    }
  }
}

TEST_CASE("remix") {
  const SignalBuffer d({1.0, 2.0}), r({10.0, -10.0});
  const auto m15 = remix(d, r, -15.0);
  CHECK(m15[0] == doctest::Approx(1.0 + 1.7782794 ));
  CHECK(remix(d, r, 0.0)[1] == -8.0);
  CHECK(remix(d, r, kSuppressReverb).samples() == d.samples());
  CHECK_THROWS_AS(remix(d, SignalBuffer({1.0}), 0.0), Error);
}
