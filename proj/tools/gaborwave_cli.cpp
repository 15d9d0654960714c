#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gaborwave/gaborwave.hpp"

namespace gw = gaborwave;

namespace {

// Bad arguments detected after parsing; reported like a parse error.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FilterArgs {
  std::string family = "gabor-complex";
  std::optional<double> f1, f2, f1_hz, f2_hz;
  double sr = 16000.0;
  std::size_t taps = 129;
  bool no_window = false;

  void add_to(CLI::App* app, bool with_family = true) {
    if (with_family) {
      app->add_option("--family", family, "sinc | gabor-real | gabor-complex")->capture_default_str();
    }
    auto* o1 = app->add_option("--f1", f1, "lower cutoff, cycles/sample");
    auto* o2 = app->add_option("--f2", f2, "upper cutoff, cycles/sample");
    auto* h1 = app->add_option("--f1-hz", f1_hz, "lower cutoff in Hz");
    auto* h2 = app->add_option("--f2-hz", f2_hz, "upper cutoff in Hz");
    o1->excludes(h1);
    o2->excludes(h2);
    app->add_option("--sr", sr, "sample rate in Hz")->capture_default_str();
    app->add_option("--taps", taps, "odd number of taps")->capture_default_str();
    app->add_flag("--no-window", no_window, "disable the Hamming window on sinc kernels");
  }

  gw::Cutoffs cutoffs() const {
    if (!(sr > 0.0)) throw UsageError("--sr must be positive");
    const auto pick = [&](const std::optional<double>& norm, const std::optional<double>& hz, const char* name) {
      if (norm) return *norm;
      if (hz) return *hz / sr;
      throw UsageError(std::string("missing ") + name + " (give --" + name + " or --" + name + "-hz)");
    };
    const gw::Cutoffs c{pick(f1, f1_hz, "f1"), pick(f2, f2_hz, "f2")};
    if (!c.valid()) throw UsageError("cutoffs must satisfy 0 < f1 < f2 <= 0.5 cycles/sample");
    if (taps < 3 || taps % 2 == 0) throw UsageError("--taps must be odd and >= 3");
    return c;
  }

  gw::FilterFamily parsed_family() const {
    try {
      return gw::parse_family(family);
    } catch (const gw::ParameterError& e) {
      throw UsageError(e.what());
    }
  }
};

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  return os;
}

void finish(std::ofstream& os, const std::string& path) {
  os.flush();
  if (!os) throw std::runtime_error("write to '" + path + "' failed");
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
  if (flag) return *flag;
  if (const char* env = std::getenv("GABORWAVE_SEED")) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("GABORWAVE_SEED is not an unsigned integer: '") + env + "'");
  }
  return fallback;
}

std::vector<double> read_pcm16(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UsageError("cannot read '" + path + "'");
  std::vector<double> out;
  unsigned char b[2];
  while (is.read(reinterpret_cast<char*>(b), 2)) {
    const auto v = static_cast<std::int16_t>(static_cast<std::uint16_t>(b[0] | (b[1] << 8)));
    out.push_back(static_cast<double>(v) / 32768.0);
  }
  return out;
}

// ---------------------------------------------------------------------------

struct RespondArgs {
  FilterArgs filter;
  std::string out, freq_out, convolve, conv_out;
  std::size_t points = 512;
};

int run_respond(const RespondArgs& a) {
  const auto c = a.filter.cutoffs();
  const auto family = a.filter.parsed_family();
  if (a.points < 2) throw UsageError("--points must be >= 2");
  if (a.convolve.empty() != a.conv_out.empty()) throw UsageError("--convolve and --conv-out go together");
  const auto s = gw::sample_filter(family, c, a.filter.taps, !a.filter.no_window);

  auto os = open_out(a.out);
  gw::write_impulse_csv(os, s, a.filter.sr);
  finish(os, a.out);

  const std::size_t n = 2 * (a.points - 1);
  const auto spectrum = gw::kernel_spectrum(s, n);
  std::vector<double> freqs(a.points), mag(a.points);
  std::size_t peak = 0;
  for (std::size_t k = 0; k < a.points; ++k) {
    freqs[k] = static_cast<double>(k) / static_cast<double>(n);
    mag[k] = std::abs(spectrum[k]);
    if (mag[k] > mag[peak]) peak = k;
  }
  if (!a.freq_out.empty()) {
    auto fs = open_out(a.freq_out);
    gw::write_response_csv(fs, freqs, mag, a.filter.sr);
    finish(fs, a.freq_out);
  }
  std::cout << "peak_hz=" << gw::fmt9(freqs[peak] * a.filter.sr) << " peak_magnitude=" << gw::fmt9(mag[peak]) << '\n';

  if (!a.convolve.empty()) {
    const auto x = read_pcm16(a.convolve);
    if (x.size() < s.taps()) throw UsageError("--convolve input shorter than the kernel");
    gw::ComplexTensor xt({1, 1, x.size()});
    for (std::size_t i = 0; i < x.size(); ++i) xt[i] = x[i];
    const auto y = gw::complex_conv1d(xt, s.coeffs.reshaped({1, 1, s.taps()}), 1);
    auto cs = open_out(a.conv_out);
    cs << "index,re,im\n";
    for (std::size_t i = 0; i < y.size(); ++i) {
      cs << i << ',' << gw::fmt9(y[i].real()) << ',' << gw::fmt9(y[i].imag()) << '\n';
    }
    finish(cs, a.conv_out);
  }
  return 0;
}

struct AnalyzeArgs {
  FilterArgs filter;
  std::size_t dft_size = 4096;
};

int run_analyze(const AnalyzeArgs& a) {
  const auto c = a.filter.cutoffs();
  const auto s = gw::sample_filter(a.filter.parsed_family(), c, a.filter.taps, !a.filter.no_window);
  if (a.dft_size < 8 * s.taps()) throw UsageError("--dft-size must be at least 8 * taps");
  const auto r = gw::localization_and_spread(s, a.dft_size);
  std::cout << "family=" << gw::to_string(s.family) << '\n'
            << "e_time=" << gw::fmt9(r.e_time) << '\n'
            << "e_freq=" << gw::fmt9(r.e_freq) << '\n'
            << "v_time=" << gw::fmt9(r.v_time) << '\n'
            << "v_freq=" << gw::fmt9(r.v_freq) << '\n'
            << "product=" << gw::fmt9(r.product) << '\n'
            << "bound=" << gw::fmt9(gw::kUncertaintyBound) << '\n'
            << "ratio=" << gw::fmt9(r.product / gw::kUncertaintyBound) << '\n';
  return 0;
}

struct ComposeArgs {
  FilterArgs filter;
  std::size_t n_sub = 4;
  std::size_t points = 512;
  std::string out;
};

int run_compose(const ComposeArgs& a) {
  const auto target = a.filter.cutoffs();
  if (a.n_sub < 1) throw UsageError("--n-sub must be >= 1");
  if (a.points < 2) throw UsageError("--points must be >= 2");
  const auto comp = gw::compose_wide_band(target, a.n_sub, a.filter.taps, a.points);
  auto os = open_out(a.out);
  os << "freq,single,summed";
  for (std::size_t i = 0; i < comp.sub_bands.size(); ++i) os << ",sub" << i;
  os << '\n';
  std::vector<std::vector<double>> subs;
  for (const auto& sb : comp.sub_bands) subs.push_back(gw::gabor_frequency_response(sb, comp.grid));
  for (std::size_t k = 0; k < comp.grid.size(); ++k) {
    os << gw::fmt9(comp.grid[k] * a.filter.sr) << ',' << gw::fmt9(comp.single_response[k]) << ','
       << gw::fmt9(comp.summed_response[k]);
    for (const auto& r : subs) os << ',' << gw::fmt9(r[k]);
    os << '\n';
  }
  finish(os, a.out);
  const double step = comp.grid[1] - comp.grid[0];
  const double lo = target.f1 + step, hi = target.f2 - step;
  std::cout << "single_min=" << gw::fmt9(gw::band_minimum(comp.grid, comp.single_response, lo, hi)) << '\n'
            << "summed_min=" << gw::fmt9(gw::band_minimum(comp.grid, comp.summed_response, lo, hi)) << '\n';
  return 0;
}

struct GradcheckArgs {
  std::optional<std::uint64_t> seed;
  std::string family = "gabor-complex";
  double tolerance = 1e-3;
};

int run_gradcheck(const GradcheckArgs& a) {
  gw::FilterFamily family;
  try {
    family = gw::parse_family(a.family);
  } catch (const gw::ParameterError& e) {
    throw UsageError(e.what());
  }
  const auto seed = resolve_seed(a.seed, 1);
  const auto r = gw::network_gradcheck(gw::gradcheck_graph(), family, seed);
  std::cout << "seed=" << seed << " coordinates=" << r.coordinates
            << " max_relative_error=" << gw::fmt9(r.max_relative_error) << " worst=" << r.worst << '\n';
  return r.max_relative_error < a.tolerance ? 0 : 2;
}

struct TrainArgs {
  std::string config, report, cutoffs, checkpoint;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

int run_train(const TrainArgs& a) {
  std::ifstream is(a.config);
  if (!is) throw UsageError("cannot read config '" + a.config + "'");
  gw::ExperimentConfig cfg;
  try {
    cfg = gw::load_experiment_config(is);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  cfg.train.seed = resolve_seed(a.seed, cfg.train.seed);
  // Open every output before the run so a bad path fails fast.
  auto report_os = open_out(a.report);
  auto cutoff_os = open_out(a.cutoffs);
  std::optional<std::ofstream> ckpt_os;
  if (!a.checkpoint.empty()) ckpt_os = open_out(a.checkpoint);

  const auto data = gw::generate_synthetic(cfg.task, cfg.n_train, cfg.n_valid, cfg.n_test, cfg.train.seed);
  gw::Model model = gw::build_model(cfg.graph, cfg.family, cfg.train.seed);
  const auto report = gw::train(model, data, cfg.train, cfg.task);
  if (!a.quiet) {
    for (const auto& e : report.epochs) {
      std::cerr << "epoch " << e.epoch << " train_loss=" << gw::fmt9(e.train_loss)
                << " valid_loss=" << gw::fmt9(e.valid_loss) << " valid_acc=" << gw::fmt9(e.valid_acc)
                << " lr=" << gw::fmt9(e.lr) << '\n';
    }
  }
  gw::write_run_report(report_os, report);
  finish(report_os, a.report);
  gw::write_cutoffs_csv(cutoff_os, report.cutoffs_hz);
  finish(cutoff_os, a.cutoffs);
  if (ckpt_os) {
    gw::save_checkpoint(*ckpt_os, model);
    finish(*ckpt_os, a.checkpoint);
  }
  std::cout << "test_accuracy=" << gw::fmt9(report.test_accuracy) << '\n';
  return 0;
}

struct InitBankArgs {
  std::size_t n_filters = 128;
  double sr = 16000.0;
  std::string out;
};

int run_init_bank(const InitBankArgs& a) {
  if (a.n_filters < 1) throw UsageError("--n-filters must be >= 1");
  if (!(a.sr > 60.0)) throw UsageError("--sr must exceed 60 Hz");
  std::vector<std::pair<double, double>> hz;
  for (const auto& c : gw::init_cutoffs_mel(a.n_filters, a.sr)) hz.emplace_back(c.f1 * a.sr, c.f2 * a.sr);
  auto os = open_out(a.out);
  gw::write_cutoffs_csv(os, hz);
  finish(os, a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parametric Gabor and sinc filterbanks with a complex-valued network"};
  app.name("gaborwave");
  app.require_subcommand(1);

  RespondArgs respond;
  auto* rc = app.add_subcommand("respond", "Write a filter's impulse response and magnitude response as CSV");
  respond.filter.add_to(rc);
  rc->add_option("--out", respond.out, "impulse response CSV")->required();
  rc->add_option("--freq-out", respond.freq_out, "magnitude response CSV");
  rc->add_option("--points", respond.points, "frequency points on [0, sr/2]")->capture_default_str();
  rc->add_option("--convolve", respond.convolve, "raw 16-bit little-endian mono input")->check(CLI::ExistingFile);
  rc->add_option("--conv-out", respond.conv_out, "CSV of the filtered input");

  AnalyzeArgs analyze;
  auto* ac = app.add_subcommand("analyze", "Time and frequency spread of a filter and their product");
  analyze.filter.add_to(ac);
  ac->add_option("--dft-size", analyze.dft_size, "DFT length for the frequency moments")->capture_default_str();

  ComposeArgs compose;
  auto* cc = app.add_subcommand("compose", "Tile Gabor sub-bands over a wide band and compare responses");
  compose.filter.add_to(cc, false);
  cc->add_option("--n-sub", compose.n_sub, "number of sub-bands")->capture_default_str();
  cc->add_option("--points", compose.points, "grid points on [0, sr/2]")->capture_default_str();
  cc->add_option("--out", compose.out, "response CSV")->required();

  GradcheckArgs gradcheck;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of every gradient in a toy network");
  gc->add_option("--seed", gradcheck.seed, "seed (default: $GABORWAVE_SEED, then 1)");
  gc->add_option("--family", gradcheck.family, "front-end family")->capture_default_str();
  gc->add_option("--tolerance", gradcheck.tolerance, "maximum accepted relative error")->capture_default_str();

  TrainArgs train;
  auto* tc = app.add_subcommand("train", "Train on the synthetic band task described by an INI file");
  tc->add_option("--config", train.config, "INI experiment file")->required()->check(CLI::ExistingFile);
  tc->add_option("--seed", train.seed, "seed (default: $GABORWAVE_SEED, then the config's [train] seed)");
  tc->add_option("--report", train.report, "run report JSON")->required();
  tc->add_option("--cutoffs", train.cutoffs, "learned cutoffs CSV")->required();
  tc->add_option("--checkpoint", train.checkpoint, "binary checkpoint");
  tc->add_flag("--quiet", train.quiet, "no per-epoch progress on stderr");

  InitBankArgs init_bank;
  auto* ic = app.add_subcommand("init-bank", "Write the mel-spaced initial cutoffs as CSV");
  ic->add_option("--n-filters", init_bank.n_filters, "number of filters")->capture_default_str();
  ic->add_option("--sr", init_bank.sr, "sample rate in Hz")->capture_default_str();
  ic->add_option("--out", init_bank.out, "cutoffs CSV")->required();

  auto usage = [&](const std::string& reason, const CLI::App* sub) {
    std::cerr << "error: " << reason << "\n\n" << (sub ? sub : &app)->help();
    return 1;
  };
  auto active = [&]() -> const CLI::App* {
    for (const auto* s : app.get_subcommands()) return s;
    return nullptr;
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return usage(e.what(), active());
  }

  try {
    if (rc->parsed()) return run_respond(respond);
    if (ac->parsed()) return run_analyze(analyze);
    if (cc->parsed()) return run_compose(compose);
    if (gc->parsed()) return run_gradcheck(gradcheck);
    if (tc->parsed()) return run_train(train);
    if (ic->parsed()) return run_init_bank(init_bank);
  } catch (const UsageError& e) {
    return usage(e.what(), active());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return usage("no subcommand", nullptr);
}
