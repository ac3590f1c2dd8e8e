#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "osmose/expm.hpp"
#include "osmose/image.hpp"
#include "osmose/structure.hpp"

namespace osmose {

enum class OsmosisMode { isotropic, anisotropic };

struct PipelineConfig {
  std::string input_path;
  std::string mask_path;
  std::string output_path;
  OsmosisMode mode = OsmosisMode::anisotropic;

  double tau = 100.0;
  double final_time = 10000.0;  // K = round(T / tau) steps
  double epsilon = 0.05;
  double sigma = 0.5;
  std::vector<double> scales{5.0, 10.0, 15.0};
  std::uint64_t seed = 0;
  double lift_offset = 1.0 / 255.0;
  double mask_threshold = 0.5;
  int dilate_radius = 0;
  double steady_tol = 1e-8;

  std::string theta_map_path;  // optional orientation debug image
  std::string trace_path;      // optional CSV of the evolution diagnostics
  bool validate = false;       // emit the generator report
};

struct PipelineResult {
  ImageBuffer output;                   // still lifted; save_image undoes it
  ScalarField theta;                    // empty in isotropic mode
  std::vector<GeneratorReport> reports; // one per channel when validate is set
  std::vector<EvolutionTrace> traces;   // one per channel
};

/// Full shadow-removal run on in-memory data: estimate directions, build the
/// weight field, assemble and evolve each channel. The input image must not
/// be lifted yet; the configured lift is applied here.
PipelineResult run_shadow_removal(const ImageBuffer& image, const MaskField& mask,
                                  const PipelineConfig& cfg);

/// File-based entry point used by the CLI; loads, runs, and writes all
/// configured outputs. Errors carry the failing stage in the message.
PipelineResult run_shadow_removal(const PipelineConfig& cfg);

/// Orientation debug rendering: hue encodes theta mod pi on the masked band,
/// the unmasked part shows the greyscale input.
void render_theta_map(const ScalarField& theta, const MaskField& mask, const ImageBuffer& base,
                      const std::string& path);

}  // namespace osmose
