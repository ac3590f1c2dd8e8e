#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>

#include "doctest.h"
#include "osmose/pipeline.hpp"
#include "test_util.hpp"

using namespace osmose;

namespace {

PipelineConfig small_config() {
  PipelineConfig cfg;
  cfg.tau = 50.0;
  cfg.final_time = 500.0;
  cfg.epsilon = 0.05;
  cfg.sigma = 0.5;
  cfg.scales = {2.0, 3.0};
  cfg.seed = 4;
  return cfg;
}

double max_rel_diff(const ImageBuffer& a, const ImageBuffer& b) {
  double m = 0.0;
  for (size_t k = 0; k < a.data().size(); ++k)
    m = std::max(m, std::abs(a.data()[k] - b.data()[k]) / std::abs(b.data()[k]));
  return m;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("empty mask: the pipeline is the identity") {
  std::mt19937_64 rng(101);
  const ScalarField f = testutil::smooth_random_field(48, 48, 0.1, 0.9, 2.0, rng);
  const ImageBuffer img = testutil::to_image(f);
  const MaskField mask(48, 48);

  PipelineConfig cfg = small_config();
  const PipelineResult res = run_shadow_removal(img, mask, cfg);

  const ImageBuffer lifted = lift_positive(img, cfg.lift_offset);
  CHECK(max_rel_diff(res.output, lifted) < 1e-6);
}

TEST_CASE("anisotropic mode with epsilon 1 equals isotropic mode") {
  std::mt19937_64 rng(103);
  ScalarField f = testutil::stripes(40, 40, 30.0, 10.0);
  f = testutil::apply_shadow(f, 20, 0.5);
  const ImageBuffer img = testutil::to_image(f);
  const MaskField mask = testutil::band_mask(40, 40, 20, 5);

  PipelineConfig cfg = small_config();
  cfg.epsilon = 1.0;
  cfg.mode = OsmosisMode::anisotropic;
  const PipelineResult aniso = run_shadow_removal(img, mask, cfg);
  cfg.mode = OsmosisMode::isotropic;
  const PipelineResult iso = run_shadow_removal(img, mask, cfg);

  for (size_t k = 0; k < aniso.output.data().size(); ++k)
    CHECK(testutil::near(aniso.output.data()[k], iso.output.data()[k], 1e-9));
}

TEST_CASE("determinism: identical config and seed give identical bytes") {
  std::mt19937_64 rng(107);
  ScalarField f = testutil::stripes(32, 32, 50.0, 8.0);
  f = testutil::apply_shadow(f, 16, 0.45);
  const ImageBuffer img = testutil::to_image(f);
  const MaskField mask = testutil::band_mask(32, 32, 16, 5);

  const PipelineConfig cfg = small_config();
  const PipelineResult a = run_shadow_removal(img, mask, cfg);
  const PipelineResult b = run_shadow_removal(img, mask, cfg);
  REQUIRE(a.output.data().size() == b.output.data().size());
  CHECK(std::memcmp(a.output.data().data(), b.output.data().data(),
                    a.output.data().size() * sizeof(double)) == 0);

  const std::string pa = testutil::temp_path("det_a.png"), pb = testutil::temp_path("det_b.png");
  save_image(a.output, pa);
  save_image(b.output, pb);
  CHECK(read_file(pa) == read_file(pb));
  std::remove(pa.c_str());
  std::remove(pb.c_str());
}

TEST_CASE("per-channel means survive the full pipeline") {
  std::mt19937_64 rng(109);
  ImageBuffer img(24, 24, 3);
  for (int c = 0; c < 3; ++c)
    img.set_channel(c, testutil::smooth_random_field(24, 24, 0.1, 0.8, 1.5, rng));
  const MaskField mask = testutil::band_mask(24, 24, 12, 3);

  PipelineConfig cfg = small_config();
  cfg.validate = true;
  const PipelineResult res = run_shadow_removal(img, mask, cfg);

  const ImageBuffer lifted = lift_positive(img, cfg.lift_offset);
  for (int c = 0; c < 3; ++c) {
    double sum_in = 0.0, sum_out = 0.0;
    for (int i = 0; i < 24; ++i)
      for (int j = 0; j < 24; ++j) {
        sum_in += lifted.at(i, j, c);
        sum_out += res.output.at(i, j, c);
      }
    CHECK(sum_out / 576.0 == doctest::Approx(sum_in / 576.0).epsilon(1e-10));
  }
  REQUIRE(res.reports.size() == 3);
  for (const auto& rep : res.reports) {
    CHECK(rep.scc_count == 1);
    CHECK(rep.min_off_diagonal >= 0.0);
  }
  REQUIRE(res.traces.size() == 3);
  for (const auto& t : res.traces)
    for (double m : t.min_value) CHECK(m > 0.0);
}

TEST_CASE("synthetic shadow removal: anisotropic beats isotropic on the band") {
  ScalarField gt = testutil::stripes(96, 96, 65.0, 16.0);
  ScalarField f = testutil::apply_shadow(gt, 48, 0.4);
  const ImageBuffer img = testutil::to_image(f);
  const MaskField band = testutil::band_mask(96, 96, 48, 7);

  PipelineConfig cfg;
  cfg.tau = 100.0;
  cfg.final_time = 10000.0;
  cfg.epsilon = 0.05;
  cfg.sigma = 0.5;
  cfg.scales = {5.0, 10.0, 15.0};
  cfg.seed = 11;

  const PipelineResult aniso = run_shadow_removal(img, band, cfg);
  cfg.mode = OsmosisMode::isotropic;
  const PipelineResult iso = run_shadow_removal(img, band, cfg);

  // Steady-state target: the shadow-free image rescaled to the conserved mean.
  const ImageBuffer lifted = lift_positive(img, cfg.lift_offset);
  ScalarField target(96, 96);
  double mean_f = 0.0, mean_gt = 0.0;
  for (int i = 0; i < 96; ++i)
    for (int j = 0; j < 96; ++j) {
      mean_f += lifted.at(i, j, 0);
      mean_gt += gt.at(i, j) + cfg.lift_offset;
    }
  const double c = mean_f / mean_gt;
  for (int i = 0; i < 96; ++i)
    for (int j = 0; j < 96; ++j) target.at(i, j) = c * (gt.at(i, j) + cfg.lift_offset);

  auto rmse_on = [&](const ImageBuffer& out, bool on_band) {
    double s = 0.0;
    size_t n = 0;
    for (int i = 0; i < 96; ++i)
      for (int j = 0; j < 96; ++j)
        if ((band.at(i, j) != 0) == on_band) {
          const double d = out.at(i, j, 0) - target.at(i, j);
          s += d * d;
          ++n;
        }
    return std::sqrt(s / static_cast<double>(n));
  };

  const double aniso_band = rmse_on(aniso.output, true);
  const double iso_band = rmse_on(iso.output, true);
  const double aniso_off = rmse_on(aniso.output, false);
  CHECK(aniso_band < iso_band);
  CHECK(aniso_off < 0.02 * 0.7);  // dynamic range of the stripe pattern
}

TEST_CASE("render_theta_map") {
  const int n = 24;
  ImageBuffer base(n, n, 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) base.at(i, j, 0) = (i + j) % 2 ? 0.25 : 0.75;

  SUBCASE("constant angle paints a uniform hue on the band") {
    const ScalarField theta(n, n, 0.0);
    const MaskField band = testutil::band_mask(n, n, 12, 5);
    const std::string path = testutil::temp_path("theta_const.png");
    render_theta_map(theta, band, base, path);
    const ImageBuffer back = load_image(path);
    REQUIRE(back.channels() == 3);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (band.at(i, j)) {
          CHECK(back.at(i, j, 0) == doctest::Approx(1.0));
          CHECK(back.at(i, j, 1) == doctest::Approx(0.0));
          CHECK(back.at(i, j, 2) == doctest::Approx(0.0));
        }
    std::remove(path.c_str());
  }
  SUBCASE("angle ramp sweeps the hue wheel") {
    ScalarField theta(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) theta.at(i, j) = testutil::kPi * j / n;
    const MaskField all(n, n, 1);
    const std::string path = testutil::temp_path("theta_ramp.png");
    render_theta_map(theta, all, base, path);
    const ImageBuffer back = load_image(path);
    // the sweep passes through saturated red, green and blue
    bool saw_green = false, saw_blue = false;
    for (int j = 0; j < n; ++j) {
      if (back.at(4, j, 1) > 0.9 && back.at(4, j, 0) < 0.2) saw_green = true;
      if (back.at(4, j, 2) > 0.9 && back.at(4, j, 1) < 0.2) saw_blue = true;
    }
    CHECK(back.at(4, 0, 0) == doctest::Approx(1.0));
    CHECK(saw_green);
    CHECK(saw_blue);
    std::remove(path.c_str());
  }
  SUBCASE("empty mask reproduces the greyscale input") {
    const ScalarField theta(n, n, 1.0);
    const MaskField none(n, n);
    const std::string path = testutil::temp_path("theta_none.png");
    render_theta_map(theta, none, base, path);
    const ImageBuffer back = load_image(path);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int ch = 0; ch < 3; ++ch)
          CHECK(back.at(i, j, ch) == doctest::Approx(base.at(i, j, 0)).epsilon(0.5 / 255.0));
    std::remove(path.c_str());
  }
}

TEST_CASE("config validation errors carry the stage tag") {
  const ImageBuffer img = testutil::to_image(ScalarField(8, 8, 0.5));

  SUBCASE("mask dimension mismatch") {
    try {
      run_shadow_removal(img, MaskField(9, 9), small_config());
      FAIL("expected an exception");
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find("[mask]") != std::string::npos);
    }
  }
  SUBCASE("bad epsilon") {
    PipelineConfig cfg = small_config();
    cfg.epsilon = 1.5;
    CHECK_THROWS(run_shadow_removal(img, MaskField(8, 8), cfg));
  }
  SUBCASE("empty scales in anisotropic mode") {
    PipelineConfig cfg = small_config();
    cfg.scales.clear();
    CHECK_THROWS(run_shadow_removal(img, MaskField(8, 8), cfg));
  }
  SUBCASE("missing input file") {
    PipelineConfig cfg = small_config();
    cfg.input_path = "definitely_not_here.png";
    cfg.mask_path = "also_missing.png";
    cfg.output_path = "out.png";
    try {
      run_shadow_removal(cfg);
      FAIL("expected an exception");
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find("[load]") != std::string::npos);
    }
  }
}
