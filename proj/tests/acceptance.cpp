// One PASS/FAIL line per acceptance criterion, each with its runtime limit.
// Exit status is non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.hpp"

namespace gw = gaborwave;
using gw::Complex;
using gw::ComplexTensor;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs <= limit_s;
  const bool pass = o.pass && in_time;
  failures += !pass;
  std::printf("%s %-28s %s; %.2f s (limit %.0f s)%s\n", pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs,
              limit_s, in_time ? "" : " TIME EXCEEDED");
  std::fflush(stdout);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

ComplexTensor raw_for(const gw::Cutoffs& c) {
  const auto [a, b] = gw::raw_from_cutoffs(c);
  return ComplexTensor({1, 2}, {a, b});
}

gw::RunReport run_toy(gw::FilterFamily family, std::uint64_t seed) {
  const auto task = gw::default_task();
  const auto data = gw::generate_synthetic(task, 2000, 500, 500, seed);
  gw::TrainConfig cfg;
  cfg.seed = seed;
  gw::Model m = gw::build_model(gw::toy_graph(task.chunk_length, task.n_classes()), family, seed);
  return gw::train(m, data, cfg, task);
}

}  // namespace

int main() {
  constexpr double pi = std::numbers::pi;

  criterion("uncertainty-equality", 1.0, [] {
    const gw::Cutoffs c{0.1, 0.2};
    const auto g = gw::localization_and_spread(gw::sample_gabor(c, 129), 4096);
    const auto s = gw::localization_and_spread(gw::sample_sinc(c, 129, true), 4096);
    const double ratio = g.product / gw::kUncertaintyBound;
    return Outcome{std::abs(ratio - 1.0) <= 0.05 && s.product > g.product,
                   "gabor/bound=" + num(ratio) + " sinc=" + num(s.product) + " gabor=" + num(g.product)};
  });

  criterion("minus-3dB-calibration", 1.0, [] {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(0.0, 0.5);
    const double target = std::pow(10.0, -3.0 / 20.0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      double a = u(rng), b = u(rng);
      if (a > b) std::swap(a, b);
      if (!(a > 0.0 && b > a)) {
        --i;
        continue;
      }
      const std::vector<double> edges{a, b};
      for (double v : gw::gabor_frequency_response({a, b}, edges)) worst = std::max(worst, std::abs(v - target));
    }
    return Outcome{worst <= 1e-12, "max |G(edge) - 10^(-3/20)| = " + num(worst)};
  });

  criterion("real-pair-convolution", 5.0, [] {
    std::mt19937_64 rng(102);
    std::uniform_real_distribution<double> lo(0.01, 0.3), bw(0.02, 0.15);
    std::uniform_int_distribution<int> len(60, 400), half_taps(2, 30);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const double f1 = lo(rng);
      const gw::Cutoffs c{f1, std::min(0.5, f1 + bw(rng))};
      const auto taps = static_cast<std::size_t>(2 * half_taps(rng) + 1);
      const auto T = static_cast<std::size_t>(len(rng));
      const auto x = gw::testing::random_reals(T, rng);
      gw::Tape tape;
      ComplexTensor xt({1, 1, T});
      for (std::size_t t = 0; t < T; ++t) xt[t] = x[t];
      const ComplexTensor raw = raw_for(c);
      const auto& y = gw::value_of(gw::front_end_forward({1, taps, gw::FilterFamily::GaborComplex},
                                                         tape.constant(raw), tape.constant(xt)));
      const auto k = gw::sample_gabor(gw::learnable_cutoffs(raw[0].real(), raw[1].real()), taps);
      std::vector<double> ge(taps), go(taps);
      for (std::size_t j = 0; j < taps; ++j) {
        ge[j] = k.coeffs[j].real();
        go[j] = k.coeffs[j].imag();
      }
      const auto re = gw::testing::real_convolve(x, ge), im = gw::testing::real_convolve(x, go);
      double scale = 0.0, err = 0.0;
      for (std::size_t t = 0; t < re.size(); ++t) {
        scale = std::max(scale, std::abs(Complex(re[t], im[t])));
        err = std::max(err, std::abs(y[t] - Complex(re[t], im[t])));
      }
      worst = std::max(worst, err / scale);
    }
    return Outcome{worst <= 1e-10, "max relative deviation " + num(worst) + " over 20 cases"};
  });

  criterion("analytic-signal", 5.0, [pi] {
    std::mt19937_64 rng(103);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> bw(0.01, 0.06);
    const std::size_t N = 2048, taps = 129;
    double worst = 0.0;
    for (int i = 0; i < 8; ++i) {
      const double b = bw(rng);
      std::uniform_real_distribution<double> centre(3.0 * b, 0.5 - 3.0 * b);
      const double f0 = centre(rng);
      ComplexTensor xt({1, 1, N + taps - 1});
      for (auto& v : xt.data()) v = noise(rng);
      gw::Tape tape;
      const auto& y = gw::value_of(gw::front_end_forward({1, taps, gw::FilterFamily::GaborComplex},
                                                         tape.constant(raw_for({f0 - b / 2, f0 + b / 2})),
                                                         tape.constant(xt)));
      std::vector<Complex> w(N);
      for (std::size_t t = 0; t < N; ++t) {
        w[t] = y[t] * (0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(t) / static_cast<double>(N)));
      }
      const auto Y = gw::testing::naive_dft(w);
      double neg = 0.0, total = 0.0;
      for (std::size_t k = 0; k < N; ++k) {
        total += std::norm(Y[k]);
        if (2 * k > N) neg += std::norm(Y[k]);
      }
      worst = std::max(worst, neg / total);
    }
    return Outcome{worst < 1e-3, "max negative-frequency energy fraction " + num(worst) + " over 8 filters"};
  });

  criterion("gradient-suite", 60.0, [] {
    using gw::testing::op_gradient_error;
    using gw::testing::random_tensor;
    using gw::Var;
    double unit = 0.0;
    std::string unit_worst;
    auto check = [&](const std::string& name, const std::vector<gw::testing::CheckInput>& in,
                     const gw::testing::OpBuilder& op, std::uint64_t seed) {
      const double e = op_gradient_error(in, op, seed);
      if (e > unit) {
        unit = e;
        unit_worst = name;
      }
    };
    for (std::uint64_t s = 0; s < 10; ++s) {
      std::mt19937_64 rng(200 + s);
      check("mul", {{random_tensor({6}, rng)}, {random_tensor({6}, rng)}}, [](auto& v) { return gw::mul(v[0], v[1]); }, s);
      check("add", {{random_tensor({6}, rng)}, {random_tensor({6}, rng)}}, [](auto& v) { return gw::add(v[0], v[1]); }, s);
      check("sub", {{random_tensor({6}, rng)}, {random_tensor({6}, rng)}}, [](auto& v) { return gw::sub(v[0], v[1]); }, s);
      check("scale", {{random_tensor({6}, rng)}}, [](auto& v) { return gw::scale(v[0], Complex(0.3, -1.2)); }, s);
      check("abs2", {{random_tensor({6}, rng)}}, [](auto& v) { return gw::abs2(v[0]); }, s);
      check("modulus", {{random_tensor({6}, rng)}}, [](auto& v) { return gw::modulus(v[0]); }, s);
      check("conv1d", {{random_tensor({2, 3, 20}, rng)}, {random_tensor({4, 3, 5}, rng)}},
            [](auto& v) { return gw::conv1d(v[0], v[1], 2); }, s);
      check("linear", {{random_tensor({3, 5}, rng)}, {random_tensor({4, 5}, rng)}, {random_tensor({4}, rng)}},
            [](auto& v) { return gw::linear(v[0], v[1], v[2]); }, s);
      check("crelu", {{random_tensor({3, 5}, rng)}}, [](auto& v) { return gw::crelu(v[0]); }, s);
      check("layer_norm", {{random_tensor({2, 3, 5}, rng)}, {random_tensor({3}, rng, true), true}},
            [](auto& v) { return gw::complex_layer_norm(v[0], v[1]); }, s);
      check("batch_norm", {{random_tensor({6, 4}, rng)}, {random_tensor({4}, rng, true), true}},
            [](auto& v) {
              static gw::NormStats stats;
              stats = gw::NormStats(4);
              return gw::complex_batch_norm(v[0], v[1], stats, gw::Mode::Train);
            },
            s);
      check("maxpool", {{random_tensor({2, 2, 9}, rng)}}, [](auto& v) { return gw::magnitude_maxpool(v[0], 3); }, s);
      check("dropout", {{random_tensor({4, 6}, rng)}},
            [s](auto& v) {
              std::mt19937_64 d(s);
              return gw::dropout(v[0], 0.4, gw::Mode::Train, d);
            },
            s);
      const std::vector<int> labels{0, 2, 1};
      check("head_cross_entropy", {{random_tensor({3, 3}, rng)}},
            [&labels](auto& v) { return gw::head_cross_entropy(v[0], labels); }, s);
      std::uniform_real_distribution<double> r1(0.02, 0.15), r2(0.02, 0.1);
      const ComplexTensor raw({2, 2}, {r1(rng), r2(rng), r1(rng), r2(rng)});
      for (auto fam : {gw::FilterFamily::Sinc, gw::FilterFamily::GaborReal, gw::FilterFamily::GaborComplex}) {
        check(std::string("filterbank/") + std::string(gw::to_string(fam)), {{raw, true}},
              [fam](auto& v) { return gw::sample_bank(gw::cutoffs_from_raw(v[0]), fam, 21); }, s);
      }
    }
    double e2e = 0.0;
    for (auto fam : {gw::FilterFamily::Sinc, gw::FilterFamily::GaborReal, gw::FilterFamily::GaborComplex}) {
      for (std::uint64_t s = 1; s <= 3; ++s) {
        e2e = std::max(e2e, gw::network_gradcheck(gw::gradcheck_graph(), fam, s).max_relative_error);
      }
    }
    return Outcome{unit <= 1e-4 && e2e <= 1e-3,
                   "unit ops max " + num(unit) + " (" + unit_worst + "), end-to-end max " + num(e2e)};
  });

  criterion("learning-experiment", 600.0, [] {
    const auto task = gw::default_task();
    const auto rep = run_toy(gw::FilterFamily::GaborComplex, 1);
    double best = 0.0;
    std::size_t reached = 0;
    for (const auto& e : rep.epochs) {
      if (e.valid_acc >= 0.95 && best < 0.95) reached = e.epoch + 1;
      best = std::max(best, e.valid_acc);
    }
    std::size_t covered = 0;
    std::ostringstream bands;
    for (const auto& b : task.bands) {
      const double lo = b.f1 * task.sample_rate, hi = b.f2 * task.sample_rate;
      bool hit = false;
      for (const auto& [f1, f2] : rep.cutoffs_hz) hit = hit || (f1 < hi && lo < f2);
      covered += hit;
    }
    for (const auto& [f1, f2] : rep.cutoffs_hz) bands << " [" << num(f1) << "," << num(f2) << "]";
    return Outcome{best >= 0.95 && covered == task.bands.size(),
                   "best valid_acc " + num(best) + (reached ? " at epoch " + std::to_string(reached) : "") +
                       ", class bands overlapped " + std::to_string(covered) + "/3, cutoffs Hz" + bands.str()};
  });

  criterion("real-complex-parity", 1800.0, [] {
    double worst = 0.0;
    std::ostringstream os;
    for (std::uint64_t seed : {11, 12, 13}) {
      const double r = run_toy(gw::FilterFamily::GaborReal, seed).test_accuracy;
      const double c = run_toy(gw::FilterFamily::GaborComplex, seed).test_accuracy;
      worst = std::max(worst, std::abs(r - c));
      os << " seed " << seed << ": real " << num(r) << " complex " << num(c) << ";";
    }
    return Outcome{worst <= 0.03, "max gap " + num(worst) + ";" + os.str()};
  });

  criterion("wide-band-composition", 1.0, [] {
    const gw::Cutoffs target{0.05, 0.25};
    const auto comp = gw::compose_wide_band(target, 4, 129, 512);
    const double step = comp.grid[1] - comp.grid[0];
    const double summed = gw::band_minimum(comp.grid, comp.summed_response, target.f1 + step, target.f2 - step);
    const double single = gw::band_minimum(comp.grid, comp.single_response, target.f1 + step, target.f2 - step);
    return Outcome{summed > single, "pass-band min summed " + num(summed) + " vs single " + num(single)};
  });

  criterion("full-size-shape", 30.0, [] {
    const auto g = gw::full_size_graph();
    const auto stages = gw::shape_check(g);
    gw::Model m = gw::build_model(g, gw::FilterFamily::GaborComplex, 1);
    std::mt19937_64 rng(104);
    const ComplexTensor x = gw::testing::random_tensor({2, 1, g.input_length}, rng, true);
    gw::Tape tape;
    const auto& logits = gw::value_of(m.forward(tape, x, gw::Mode::Eval, rng));
    bool finite = true;
    for (auto v : logits.data()) finite = finite && std::isfinite(v.real()) && std::isfinite(v.imag());
    std::ostringstream os;
    for (const auto& s : stages) os << ' ' << s.name << gw::shape_string(s.shape);
    return Outcome{finite && logits.shape() == gw::Shape({2, g.n_classes}),
                   "logits " + gw::shape_string(logits.shape()) + ";" + os.str()};
  });

  std::printf("%s: %d failing criteria\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
