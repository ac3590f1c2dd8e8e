#pragma once

#include <string>

#include "osmose/core.hpp"

namespace osmose {

/// Multi-channel raster with real intensities. Data layout is row-major with
/// interleaved channels: value(i, j, c) = data[(i*cols + j)*channels + c].
/// After lift_positive every stored intensity is strictly positive and the
/// applied offset is remembered so that save_image can undo it.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int rows, int cols, int channels, double fill = 0.0);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int channels() const { return channels_; }
  double lift_offset() const { return lift_offset_; }
  void set_lift_offset(double o) { lift_offset_ = o; }

  double& at(int i, int j, int c) {
    return data_[(static_cast<size_t>(i) * cols_ + j) * channels_ + c];
  }
  double at(int i, int j, int c) const {
    return data_[(static_cast<size_t>(i) * cols_ + j) * channels_ + c];
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  ScalarField channel(int c) const;
  void set_channel(int c, const ScalarField& f);

  double mean() const;
  double min_value() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  int channels_ = 0;
  double lift_offset_ = 0.0;
  std::vector<double> data_;
};

/// Reads an 8- or 16-bit PNG/PGM/PPM raster, scaled to [0,1].
ImageBuffer load_image(const std::string& path);

/// Undoes the lift offset, clamps to [0,1], quantises to 8 bits and writes the
/// file. PNG by default; .pgm/.ppm paths get the matching binary format.
void save_image(const ImageBuffer& img, const std::string& path);

/// Adds a strictly positive offset to every intensity and records it.
ImageBuffer lift_positive(const ImageBuffer& img, double offset);

/// Threshold a raster into a binary mask: 1 where grey value >= threshold.
MaskField load_mask(const std::string& path, double threshold);
MaskField mask_from_image(const ImageBuffer& img, double threshold);

/// Morphological dilation with a (2*radius+1)^2 square structuring element.
MaskField dilate_mask(const MaskField& mask, int radius);

}  // namespace osmose
