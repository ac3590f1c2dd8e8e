#include "osmose/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "osmose/anisotropy.hpp"
#include "osmose/generator.hpp"

namespace osmose {

namespace {

[[noreturn]] void fail(const std::string& stage, const std::string& what) {
  throw std::runtime_error("[" + stage + "] " + what);
}

void check_config(const PipelineConfig& cfg) {
  if (!(cfg.tau > 0.0) || cfg.final_time < cfg.tau)
    fail("config", "need final time T >= tau > 0");
  if (!(cfg.epsilon > 0.0 && cfg.epsilon <= 1.0)) fail("config", "epsilon must be in (0,1]");
  if (cfg.mode == OsmosisMode::anisotropic && cfg.scales.empty())
    fail("config", "anisotropic mode needs a nonempty scale list");
  if (!(cfg.lift_offset > 0.0)) fail("config", "lift offset must be > 0");
  if (cfg.dilate_radius < 0) fail("config", "dilation radius must be >= 0");
}

struct ChannelOutcome {
  ScalarField result;
  GeneratorReport report;
  EvolutionTrace trace;
  std::string error;
};

void process_channel(const ScalarField& channel, const WeightField& weights, const MaskField& mask,
                     const PipelineConfig& cfg, int steps, bool want_report, ChannelOutcome& out) {
  try {
    const SparseOperator a = assemble(channel, weights, mask);
    if (want_report) out.report = validate_generator(a);
    StepperConfig sc;
    sc.tau = cfg.tau;
    sc.max_steps = steps;
    sc.steady_tol = cfg.steady_tol;
    auto [u, trace] = evolve(a, channel.data(), sc);
    out.trace = std::move(trace);
    out.result = ScalarField(channel.rows(), channel.cols());
    out.result.data() = std::move(u);
  } catch (const std::exception& e) {
    out.error = e.what();
  }
}

}  // namespace

PipelineResult run_shadow_removal(const ImageBuffer& image, const MaskField& mask,
                                  const PipelineConfig& cfg) {
  check_config(cfg);
  if (!mask.same_shape(image.rows(), image.cols()))
    fail("mask", "mask dimensions do not match the image");

  const MaskField band = cfg.dilate_radius > 0 ? dilate_mask(mask, cfg.dilate_radius) : mask;
  const ImageBuffer lifted = lift_positive(image, cfg.lift_offset);

  PipelineResult res;
  WeightField weights;
  if (cfg.mode == OsmosisMode::anisotropic) {
    try {
      res.theta = estimate_directions(lifted, band, cfg.scales, cfg.sigma, cfg.seed);
    } catch (const std::exception& e) {
      fail("directions", e.what());
    }
    try {
      weights = build_weight_field(res.theta, cfg.epsilon, band);
    } catch (const std::exception& e) {
      fail("weights", e.what());
    }
  } else {
    weights = identity_weights(image.rows(), image.cols());
  }

  const int steps = std::max(1, static_cast<int>(std::lround(cfg.final_time / cfg.tau)));
  const int channels = lifted.channels();
  std::vector<ChannelOutcome> outcomes(channels);
  {
    std::vector<std::thread> workers;
    for (int c = 0; c < channels; ++c) {
      const ScalarField chan = lifted.channel(c);
      workers.emplace_back(process_channel, chan, std::cref(weights), std::cref(band),
                           std::cref(cfg), steps, cfg.validate, std::ref(outcomes[c]));
    }
    for (auto& t : workers) t.join();
  }

  res.output = ImageBuffer(image.rows(), image.cols(), channels);
  res.output.set_lift_offset(lifted.lift_offset());
  for (int c = 0; c < channels; ++c) {
    if (!outcomes[c].error.empty()) fail("evolve", outcomes[c].error);
    res.output.set_channel(c, outcomes[c].result);
    res.traces.push_back(std::move(outcomes[c].trace));
    if (cfg.validate) res.reports.push_back(outcomes[c].report);
  }
  return res;
}

PipelineResult run_shadow_removal(const PipelineConfig& cfg) {
  ImageBuffer image;
  try {
    image = load_image(cfg.input_path);
  } catch (const std::exception& e) {
    fail("load", e.what());
  }
  MaskField mask;
  try {
    mask = load_mask(cfg.mask_path, cfg.mask_threshold);
  } catch (const std::exception& e) {
    fail("mask", e.what());
  }

  PipelineResult res = run_shadow_removal(image, mask, cfg);

  try {
    if (!cfg.output_path.empty()) save_image(res.output, cfg.output_path);
  } catch (const std::exception& e) {
    fail("save", e.what());
  }
  if (!cfg.theta_map_path.empty() && cfg.mode == OsmosisMode::anisotropic) {
    const MaskField band = cfg.dilate_radius > 0 ? dilate_mask(mask, cfg.dilate_radius) : mask;
    render_theta_map(res.theta, band, image, cfg.theta_map_path);
  }
  if (!cfg.trace_path.empty()) {
    std::ofstream out(cfg.trace_path);
    if (!out) fail("save", "cannot open trace file " + cfg.trace_path);
    out << "channel,step,mean,min,residual\n";
    for (size_t c = 0; c < res.traces.size(); ++c) {
      const EvolutionTrace& t = res.traces[c];
      for (size_t k = 0; k < t.mean.size(); ++k) {
        out << c << ',' << k << ',' << t.mean[k] << ',' << t.min_value[k] << ','
            << (k == 0 ? 0.0 : t.residual[k - 1]) << '\n';
      }
    }
  }
  return res;
}

void render_theta_map(const ScalarField& theta, const MaskField& mask, const ImageBuffer& base,
                      const std::string& path) {
  if (!mask.same_shape(theta.rows(), theta.cols()))
    throw std::runtime_error("[theta-map] mask dimensions do not match the field");

  ImageBuffer out(theta.rows(), theta.cols(), 3);
  for (int i = 0; i < theta.rows(); ++i) {
    for (int j = 0; j < theta.cols(); ++j) {
      double r, g, b;
      if (mask.at(i, j)) {
        double t = std::fmod(theta.at(i, j), M_PI);
        if (t < 0.0) t += M_PI;
        const double hue = 6.0 * t / M_PI;  // hue wheel over [0, pi)
        const int sector = static_cast<int>(hue) % 6;
        const double f = hue - std::floor(hue);
        switch (sector) {
          case 0: r = 1.0; g = f; b = 0.0; break;
          case 1: r = 1.0 - f; g = 1.0; b = 0.0; break;
          case 2: r = 0.0; g = 1.0; b = f; break;
          case 3: r = 0.0; g = 1.0 - f; b = 1.0; break;
          case 4: r = f; g = 0.0; b = 1.0; break;
          default: r = 1.0; g = 0.0; b = 1.0 - f; break;
        }
      } else {
        double grey = 0.0;
        for (int c = 0; c < base.channels(); ++c) grey += base.at(i, j, c);
        grey /= base.channels();
        r = g = b = grey;
      }
      out.at(i, j, 0) = r;
      out.at(i, j, 1) = g;
      out.at(i, j, 2) = b;
    }
  }
  save_image(out, path);
}

}  // namespace osmose
