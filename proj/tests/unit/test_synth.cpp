#include <doctest.h>
#include <gsl/gsl_integration.h>
#include <gsl/gsl_sf_bessel.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>

#include "mclab/core/errors.hpp"
#include "mclab/core/ltransform.hpp"
#include "mclab/core/spectrum.hpp"
#include "mclab/synth/ar2.hpp"
#include "mclab/synth/frame_io.hpp"
#include "mclab/synth/measure.hpp"
#include "mclab/synth/shot_noise.hpp"
#include "mclab/synth/spectral.hpp"

using namespace mclab;
using namespace mclab::synth;

namespace {

MCParams desk_params() {
  MCParams p;
  p.z0 = 2.0;
  p.sigma_z = 0.4;
  p.sigma_r = 1.0;
  p.sigma_theta = 0.4;
  return p;
}

GridSpec small_grid(int n = 32) {
  GridSpec g;
  g.nx = n;
  g.ny = n;
  g.ppd = 16.0;
  g.fps = 50.0;
  return g;
}

std::vector<char> file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("mclab_test_synth_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("grid validation and frequency bins") {
  GridSpec g = small_grid();
  CHECK_NOTHROW(g.validate());
  g.nx = 48;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g = small_grid();
  g.delta = 0.3 / g.fps;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g.delta = 0.25 / g.fps;
  CHECK(g.substeps() == 4);

  CHECK(fft_freq(0, 8, 16.0) == 0.0);
  CHECK(fft_freq(3, 8, 16.0) == 6.0);
  CHECK(fft_freq(4, 8, 16.0) == -8.0);
  CHECK(fft_freq(7, 8, 16.0) == -2.0);
  CHECK_FALSE(g.retained(0, 0));
  CHECK_FALSE(g.retained(16, 3));
  CHECK_FALSE(g.retained(3, 16));
  CHECK(g.retained(15, 17));
  CHECK(g.max_radius() == doctest::Approx(std::hypot(7.5, 7.5)));
}

TEST_CASE("stability boundary of the critically damped recursion") {
  // Independent check: the impulse response decays below 1e-3 of its peak for a
  // stable ratio and grows for an unstable one.
  for (double x : {0.05, 0.5, 0.8}) {
    const Ar2Mode m = Ar2Mode::critically_damped(1.0, x);
    CHECK(m.spectral_radius() < 1.0);
    const auto r = impulse_response(m, 4000);
    CHECK(std::abs(r.back()) < 1e-3 * *std::max_element(r.begin(), r.end()));
  }
  for (double x : {0.85, 1.0}) {
    const Ar2Mode m = Ar2Mode::critically_damped(1.0, x);
    CHECK(m.spectral_radius() >= 1.0);
    const auto r = impulse_response(m, 4000);
    CHECK(std::abs(r.back()) > 0.5);
  }
  CHECK(Ar2Mode::critically_damped(1.0, kMaxStepRatio - 1e-9).spectral_radius() < 1.0);
  CHECK(Ar2Mode::critically_damped(1.0, kMaxStepRatio + 1e-9).spectral_radius() > 1.0);
}

TEST_CASE("unstable delta is rejected with the admissible bound") {
  const MCParams p = desk_params();
  GridSpec g = small_grid();
  g.delta = 0.0;  // 20 ms against nu_min of about 14 ms
  const double limit = max_stable_delta(p, g);
  CHECK(g.step() > limit);
  try {
    Ar2Synth s(p, g, 1);
    FAIL("expected a stability error");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("maximum admissible delta") != std::string::npos);
    std::ostringstream v;
    v << limit;
    CHECK(msg.find(v.str()) != std::string::npos);
  }
  // delta = nu_min exactly (unit ratio) is still unstable.
  GridSpec at_nu = g;
  const double nu_min = min_relaxation_time(p, g);
  at_nu.fps = 1.0 / nu_min;
  CHECK_THROWS_AS(Ar2Synth(p, at_nu, 1), ConfigError);

  const GridSpec autod = with_auto_delta(p, g, 0.5);
  CHECK(autod.step() <= 0.5 * nu_min * (1 + 1e-12));
  CHECK_NOTHROW(Ar2Synth(p, autod, 1));
}

TEST_CASE("impulse response follows t exp(-t / nu)") {
  const double nu = 1.0;
  const double delta = nu / 100;
  const Ar2Mode m = Ar2Mode::critically_damped(nu, delta);
  const auto r = impulse_response(m, 1500);
  // r[l] is the state at t = (l + 1) delta; the continuous Green function is t e^{-t/nu} / delta.
  double worst = 0.0;
  for (std::size_t l = 0; l < r.size(); ++l) {
    const double t = (l + 1) * delta;
    const double expected = t * std::exp(-t / nu) / delta;
    if (t > 5 * nu) break;
    worst = std::max(worst, std::abs(r[l] - expected) / expected);
  }
  CHECK(worst < 0.02);
}

TEST_CASE("AR stream is deterministic, Hermitian and silent at DC") {
  const MCParams p = desk_params();
  const GridSpec g = with_auto_delta(p, small_grid(), 0.5);
  Ar2Synth a(p, g, 42);
  Ar2Synth b(p, g, 42);
  Ar2Synth c(p, g, 43);
  CHECK(a.mode(0, 0).gain == 0.0);
  CHECK(a.mode(g.nx / 2, 1).gain == 0.0);
  CHECK(a.mode(1, 0).gain > 0.0);
  a.warm_up(200);
  b.warm_up(200);
  c.warm_up(200);
  for (int t = 0; t < 20; ++t) {
    const auto fa = a.step();
    const auto fb = b.step();
    const auto fc = c.step();
    CHECK(std::memcmp(fa.data(), fb.data(), fa.size() * sizeof(double)) == 0);
    CHECK(fa != fc);
    CHECK(a.last_imag_residue() < 1e-8);
    double mean = 0.0;
    for (double v : fa) mean += v;
    CHECK(std::abs(mean / fa.size()) < 1e-12);
  }
}

TEST_CASE("warm-up defaults and degenerate states") {
  const MCParams p = desk_params();
  const GridSpec g = with_auto_delta(p, small_grid(), 0.5);
  Ar2Synth s(p, g, 7);
  const double nu_max = max_relaxation_time(p, g);
  CHECK(s.default_warmup_steps() == static_cast<std::uint64_t>(std::ceil(10 * nu_max / g.step())));

  s.warm_up(0);
  CHECK(s.steps_taken() == 0);
  CHECK(s.spectral_value(1, 0) == Complex{});

  Ar2Synth silent(p, g, 7, SynthOptions{0.0, 1.0});
  silent.warm_up(50);
  for (int t = 0; t < 5; ++t) {
    for (double v : silent.step()) CHECK(v == 0.0);
  }
}

TEST_CASE("variance is stationary after warm-up and matches the recursion's law") {
  const MCParams p = desk_params();
  const GridSpec g = with_auto_delta(p, small_grid(), 0.5);
  double var_a = 0.0;
  double var_b = 0.0;
  double analytic = 0.0;
  const int seeds = 20;
  for (int seed = 0; seed < seeds; ++seed) {
    Ar2Synth s(p, g, 100 + seed);
    analytic = s.stationary_pixel_variance();
    s.warm_up();
    const auto first = s.step();
    for (int t = 0; t < 99; ++t) s.step();
    const auto later = s.step();
    for (double v : first) var_a += v * v;
    for (double v : later) var_b += v * v;
  }
  var_a /= seeds * g.nx * g.ny;
  var_b /= seeds * g.nx * g.ny;
  CHECK(std::abs(var_a - var_b) / var_a < 0.1);
  CHECK(std::abs(var_a - analytic) / analytic < 0.1);

  // Stationary start: no warm-up needed.
  double var_s = 0.0;
  for (int seed = 0; seed < seeds; ++seed) {
    Ar2Synth s(p, g, 500 + seed);
    s.start_stationary();
    for (double v : s.step()) var_s += v * v;
  }
  var_s /= seeds * g.nx * g.ny;
  CHECK(std::abs(var_s - analytic) / analytic < 0.1);
}

TEST_CASE("stream variance approaches the continuous field's variance as delta shrinks") {
  // Continuous pixel variance: sum over bins of int S dtau / L^2 with
  // int h(u / sigma_r) d tau = |xi| sigma_r pi / 2.
  const MCParams p = desk_params();
  const GridSpec base = small_grid();
  const double area = (base.nx / base.ppd) * (base.ny / base.ppd);
  double continuous = 0.0;
  for (int ky = 0; ky < base.ny; ++ky) {
    for (int kx = 0; kx < base.nx; ++kx) {
      if (!base.retained(kx, ky)) continue;
      const FreqPoint f{{base.freq_x(kx), base.freq_y(ky)}, 0.0};
      const double rho = f.radius();
      continuous += eval_fz(rho, p) * eval_ftheta(f.angle(), p) / rho * p.sigma_r * kPi / 2 / area;
    }
  }
  double previous_gap = 1e300;
  for (double ratio : {0.4, 0.1, 0.02}) {
    const Ar2Synth s(p, with_auto_delta(p, base, ratio), 1);
    const double gap = std::abs(s.stationary_pixel_variance() - continuous) / continuous;
    CHECK(gap < previous_gap);
    previous_gap = gap;
  }
  CHECK(previous_gap < 0.03);
}

TEST_CASE("per-bin autocorrelation matches the critically damped kernel") {
  MCParams p = desk_params();
  GridSpec g = small_grid(16);
  g = with_auto_delta(p, g, 0.1);
  Ar2Synth s(p, g, 11);
  s.start_stationary();
  const int kx = 2;
  const int ky = 1;
  std::vector<Complex> series;
  const int n = 40000;
  series.reserve(n);
  for (int i = 0; i < n; ++i) {
    s.advance();
    series.push_back(s.spectral_value(kx, ky));
  }
  const double nu = s.nu(kx, ky);
  const int max_lag = static_cast<int>(5 * nu / g.step());
  const auto acf = sample_autocorrelation(series, max_lag);
  double worst = 0.0;
  for (int k = 0; k <= max_lag; ++k) {
    worst = std::max(worst, std::abs(acf[k] - spde_autocorrelation(k * g.step(), nu)));
  }
  CHECK(worst < 0.08);
}

TEST_CASE("v0 translates consecutive frames by v0 / fps") {
  MCParams p = desk_params();
  p.sigma_r = 0.1;
  p.v0 = {5.0, 0.0};
  p.theta0 = 0.0;
  GridSpec g = small_grid(64);
  g = with_auto_delta(p, g, 0.5);
  Ar2Synth s(p, g, 3);
  s.start_stationary();
  const auto f1 = s.step();
  const auto f2 = s.step();

  FftPlan plan({g.ny, g.nx}, FftPlan::Direction::forward);
  auto spectrum = [&](const std::vector<double>& f) {
    for (std::size_t i = 0; i < f.size(); ++i) plan[i] = Complex{f[i], 0.0};
    plan.execute();
    return std::vector<Complex>(plan.data(), plan.data() + plan.size());
  };
  const auto a = spectrum(f1);
  const auto b = spectrum(f2);
  // Continuous cross-correlation peak along x (degrees), by dense search.
  double best_d = 0.0;
  double best = -1e300;
  for (double d = 0.0; d <= 0.3; d += 1e-4) {
    double score = 0.0;
    for (int ky = 0; ky < g.ny; ++ky) {
      for (int kx = 0; kx < g.nx; ++kx) {
        const std::size_t i = static_cast<std::size_t>(ky) * g.nx + kx;
        score += (b[i] * std::conj(a[i]) * std::polar(1.0, 2 * kPi * g.freq_x(kx) * d)).real();
      }
    }
    if (score > best) {
      best = score;
      best_d = d;
    }
  }
  const double expected = p.v0[0] / g.fps;
  CHECK(std::abs(best_d - expected) / expected < 0.1);
}

TEST_CASE("spectral synthesis: realness, zero spectrum, flat white spectrum") {
  const MCParams p = desk_params();
  const GridSpec g = small_grid(16);
  const auto zero = synth_spectral([](const FreqPoint&) { return 0.0; }, p, g, 16, 1);
  for (double v : zero.data) CHECK(v == 0.0);

  std::vector<FrameStack> white;
  for (int seed = 0; seed < 40; ++seed) {
    white.push_back(synth_spectral([](const FreqPoint&) { return 2.0; }, p, g, 16, seed));
  }
  const Spectrum3 est = periodogram(white);
  double sum = 0.0;
  int count = 0;
  for (int kt = 0; kt < 16; ++kt) {
    if (kt == 8) continue;
    for (int ky = 0; ky < 16; ++ky) {
      for (int kx = 0; kx < 16; ++kx) {
        if (!g.retained(kx, ky)) continue;
        sum += est.at(kt, ky, kx);
        ++count;
        CHECK(est.at(kt, ky, kx) < 2.0 * 3.0);  // chi-square(80)/40 tail is far below 3x the mean
      }
    }
  }
  CHECK(sum / count == doctest::Approx(2.0).epsilon(0.02));

  const auto mc = synth_spectral(p, g, 16, 5);
  double energy = 0.0;
  for (double v : mc.data) energy += v * v;
  CHECK(energy > 0.0);
}

TEST_CASE("periodogram of a cosine has two points at +-(xi0, tau0)") {
  GridSpec g = small_grid(16);
  FrameStack s(g, MCParams{}, 0, 16);
  const int kx0 = 3;
  const int ky0 = 2;
  const int kt0 = 5;
  for (int t = 0; t < 16; ++t) {
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) {
        s.at(t, y, x) = std::cos(2 * kPi * (kx0 * x + ky0 * y + kt0 * t) / 16.0);
      }
    }
  }
  const Spectrum3 est = periodogram(std::span(&s, 1));
  double total = 0.0;
  for (double v : est.power) total += v;
  const double a = est.at(kt0, ky0, kx0);
  const double b = est.at(16 - kt0, 16 - ky0, 16 - kx0);
  CHECK(a == doctest::Approx(b));
  CHECK((a + b) / total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("AR stream and spectral synthesis match the analytic spectrum (desk scale)") {
  MCParams p = desk_params();
  p.v0 = {1.0, 0.5};
  const GridSpec g = with_auto_delta(p, small_grid(32), 0.5);
  const int nt = 64;
  const int seeds = 24;
  std::vector<FrameStack> ar;
  std::vector<FrameStack> sp;
  const SpectralSynth reference(p, g, nt);
  for (int seed = 0; seed < seeds; ++seed) {
    ar.push_back(synth_stream(p, g, nt, 1000 + seed, true));
    sp.push_back(reference.sample(2000 + seed));
  }
  const Spectrum3 ref = analytic_spectrum(p, g, nt, RadialKind::spde_exact);
  // Periodogram bins are exponential: relative L2 noise is about 1/sqrt(seeds) = 0.2.
  CHECK(relative_l2_on_band(periodogram(sp), ref) < 0.3);
  CHECK(relative_l2_on_band(periodogram(ar), ref) < 0.3);

  // A perturbed recursion is detected at the same sample size.
  std::vector<FrameStack> bad;
  for (int seed = 0; seed < seeds; ++seed) {
    bad.push_back(synth_stream(p, g, nt, 1000 + seed, true, SynthOptions{1.0, 0.6}));
  }
  CHECK(relative_l2_on_band(periodogram(bad), ref) > 0.3);
}

TEST_CASE("von Mises sampler moments") {
  std::mt19937_64 rng(5);
  for (double kappa : {0.5, 3.65, 40.0}) {
    double c = 0.0;
    double c2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double x = sample_von_mises(rng, kappa);
      c += std::cos(x);
      c2 += std::cos(2 * x);
    }
    const double i0 = gsl_sf_bessel_I0(kappa);
    CHECK(c / n == doctest::Approx(gsl_sf_bessel_I1(kappa) / i0).epsilon(0.01));
    CHECK(std::abs(c2 / n - gsl_sf_bessel_In(2, kappa) / i0) < 0.01);
  }
}

TEST_CASE("radial speed sampler follows the normalized profiles") {
  MCParams p;
  p.sigma_r = 2.0;
  std::mt19937_64 rng(9);
  const int n = 200000;
  int below_g = 0;
  int below_s = 0;
  for (int i = 0; i < n; ++i) {
    below_g += sample_radial_speed(rng, p, RadialKind::gaussian) < p.sigma_r;
    below_s += sample_radial_speed(rng, p, RadialKind::spde_exact) < p.sigma_r;
  }
  CHECK(below_g / double(n) == doctest::Approx(std::erf(1 / std::sqrt(2.0))).epsilon(0.01));

  gsl_integration_workspace* ws = gsl_integration_workspace_alloc(1000);
  gsl_function f;
  f.function = [](double u, void*) { return linv_h(u); };
  f.params = nullptr;
  double mass_below = 0.0;
  double err = 0.0;
  gsl_integration_qags(&f, 0.0, 1.0, 1e-13, 1e-12, 1000, ws, &mass_below, &err);
  gsl_integration_workspace_free(ws);
  CHECK(below_s / double(n) == doctest::Approx(mass_below / (kPi / 4)).epsilon(0.01));
}

TEST_CASE("shot noise: unit-free variance and kurtosis 3 + 1.5 / lambda") {
  const MCParams p = desk_params();
  const GridSpec g = small_grid(16);
  for (double lambda : {1.0, 100.0}) {
    std::vector<double> samples;
    for (int seed = 0; seed < 3000; ++seed) {
      const FrameStack s = shot_noise_sample(p, g, lambda, 1, seed);
      samples.push_back(s.at(0, 3, 5));
    }
    double var = 0.0;
    for (double v : samples) var += v * v;
    var /= samples.size();
    CHECK(var == doctest::Approx(0.5).epsilon(0.08));
    CHECK(raw_kurtosis(samples) == doctest::Approx(3.0 + 1.5 / lambda).epsilon(0.12));
  }
}

TEST_CASE("measurement helpers") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  std::vector<double> x(200000);
  for (double& v : x) v = normal(rng);
  CHECK(raw_kurtosis(x) == doctest::Approx(3.0).epsilon(0.03));

  std::vector<std::complex<double>> series(50000);
  std::complex<double> state{};
  for (auto& s : series) {
    state = 0.9 * state + std::complex<double>(normal(rng), normal(rng));
    s = state;
  }
  const auto acf = sample_autocorrelation(series, 5);
  for (int k = 0; k <= 5; ++k) CHECK(acf[k] == doctest::Approx(std::pow(0.9, k)).epsilon(0.03));

  FrameStack white(small_grid(32), MCParams{}, 0, 20);
  for (double& v : white.data) v = normal(rng);
  const auto cov = spatial_covariance(std::span(&white, 1), 2);
  CHECK(cov[12] == doctest::Approx(1.0).epsilon(0.03));
  for (std::size_t k = 0; k < cov.size(); ++k) {
    if (k != 12) CHECK(std::abs(cov[k]) < 0.03);
  }
}

TEST_CASE("frame files: raw and PNG agree and are byte-reproducible") {
  const MCParams p = desk_params();
  const GridSpec g = with_auto_delta(p, small_grid(32), 0.5);
  const FrameStack s1 = synth_stream(p, g, 6, 77);
  const FrameStack s2 = synth_stream(p, g, 6, 77);
  const Quantization q{sample_sigma(s1)};

  const auto dir = scratch_dir("io");
  write_png_frames(dir / "a", s1, q);
  write_png_frames(dir / "b", s2, q);
  write_mcraw(dir / "a.mcraw", s1, q);
  write_mcraw(dir / "b.mcraw", s2, q);
  CHECK(file_bytes(dir / "a.mcraw") == file_bytes(dir / "b.mcraw"));
  CHECK(file_bytes(dir / "a.mcraw.json") == file_bytes(dir / "b.mcraw.json"));
  CHECK(file_bytes(dir / "a" / "meta.json") == file_bytes(dir / "b" / "meta.json"));
  for (int t = 0; t < 6; ++t) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04d.png", t);
    CHECK(file_bytes(dir / "a" / name) == file_bytes(dir / "b" / name));
  }

  const RawStack raw = read_mcraw(dir / "a.mcraw");
  CHECK(raw.quantization == q);
  CHECK(raw.stack.grid == g);
  CHECK(raw.stack.seed == 77);
  for (std::size_t i = 0; i < s1.data.size(); ++i) CHECK(raw.stack.data[i] == static_cast<float>(s1.data[i]));

  const auto from_raw = quantize(raw.stack, raw.quantization);
  std::vector<std::uint8_t> from_png;
  for (int t = 0; t < 6; ++t) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04d.png", t);
    const GrayImage img = read_png_gray(dir / "a" / name);
    CHECK(img.width == g.nx);
    CHECK(img.height == g.ny);
    from_png.insert(from_png.end(), img.pixels.begin(), img.pixels.end());
  }
  CHECK(from_png == from_raw);

  std::filesystem::resize_file(dir / "a.mcraw", 100);
  CHECK_THROWS_AS(read_mcraw(dir / "a.mcraw"), ParseError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("quantization mapping") {
  const Quantization q{2.0};
  CHECK(quantize_sample(0.0, q) == 128);
  CHECK(quantize_sample(2.0, q) == 176);
  CHECK(quantize_sample(-2.0, q) == 80);
  CHECK(quantize_sample(100.0, q) == 255);
  CHECK(quantize_sample(-100.0, q) == 0);
}
