#include "osmose/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

namespace osmose {

ImageBuffer::ImageBuffer(int rows, int cols, int channels, double fill)
    : rows_(rows),
      cols_(cols),
      channels_(channels),
      data_(static_cast<size_t>(rows) * cols * channels, fill) {
  if (rows < 2 || cols < 2) throw std::invalid_argument("ImageBuffer: needs at least 2x2 pixels");
  if (channels != 1 && channels != 3) throw std::invalid_argument("ImageBuffer: channels must be 1 or 3");
}

ScalarField ImageBuffer::channel(int c) const {
  if (c < 0 || c >= channels_) throw std::out_of_range("ImageBuffer::channel");
  ScalarField f(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) f.at(i, j) = at(i, j, c);
  return f;
}

void ImageBuffer::set_channel(int c, const ScalarField& f) {
  if (c < 0 || c >= channels_) throw std::out_of_range("ImageBuffer::set_channel");
  if (!f.same_shape(rows_, cols_)) throw std::invalid_argument("ImageBuffer::set_channel: shape mismatch");
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) at(i, j, c) = f.at(i, j);
}

double ImageBuffer::mean() const {
  double s = 0.0;
  for (double v : data_) s += v;
  return s / static_cast<double>(data_.size());
}

double ImageBuffer::min_value() const {
  double m = data_.empty() ? 0.0 : data_[0];
  for (double v : data_) m = std::min(m, v);
  return m;
}

namespace {

std::string lower_ext(const std::string& path) {
  auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return ext;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

ImageBuffer load_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open image file: " + path);

  png_byte header[8];
  if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8) != 0)
    throw std::runtime_error("not a PNG file: " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("libpng: read struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("libpng: info struct allocation failed");
  }
  std::vector<png_bytep> row_ptrs;
  std::vector<png_byte> pixels;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("PNG decode error: " + path);
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);

  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  if (bit_depth == 16) png_set_swap(png);  // libpng delivers big-endian 16-bit
  png_read_update_info(png, info);

  const int channels = png_get_channels(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (channels != 1 && channels != 3)
    throw std::runtime_error("unsupported PNG channel count in " + path);
  if (depth != 8 && depth != 16) throw std::runtime_error("unsupported PNG bit depth in " + path);

  const size_t stride = png_get_rowbytes(png, info);
  pixels.resize(stride * height);
  row_ptrs.resize(height);
  for (png_uint_32 i = 0; i < height; ++i) row_ptrs[i] = pixels.data() + i * stride;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  ImageBuffer img(static_cast<int>(height), static_cast<int>(width), channels);
  const double denom = depth == 8 ? 255.0 : 65535.0;
  for (png_uint_32 i = 0; i < height; ++i) {
    const png_byte* row = pixels.data() + i * stride;
    for (png_uint_32 j = 0; j < width; ++j) {
      for (int c = 0; c < channels; ++c) {
        double v;
        if (depth == 8) {
          v = row[j * channels + c];
        } else {
          const png_byte* p = row + (j * channels + c) * 2;
          v = static_cast<double>(p[0] | (p[1] << 8));
        }
        img.at(static_cast<int>(i), static_cast<int>(j), c) = v / denom;
      }
    }
  }
  return img;
}

void save_png(const ImageBuffer& img, const std::string& path, const std::vector<png_byte>& bytes) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot open output file: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("libpng: write struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("libpng: info struct allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("PNG encode error: " + path);
  }
  png_init_io(png, fp.get());
  const int color = img.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, img.cols(), img.rows(), 8, color, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const size_t stride = static_cast<size_t>(img.cols()) * img.channels();
  for (int i = 0; i < img.rows(); ++i)
    png_write_row(png, const_cast<png_bytep>(bytes.data() + i * stride));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Binary PGM (P5) / PPM (P6) with maxval 255 or 65535.
ImageBuffer load_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image file: " + path);

  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P6") throw std::runtime_error("unsupported PNM magic in " + path);
  const int channels = magic == "P6" ? 3 : 1;

  auto next_int = [&in, &path]() {
    // Skip whitespace and '#' comment lines between header tokens.
    while (true) {
      int ch = in.peek();
      if (ch == '#') {
        std::string line;
        std::getline(in, line);
      } else if (std::isspace(ch)) {
        in.get();
      } else {
        break;
      }
    }
    long v = -1;
    in >> v;
    if (!in || v < 0) throw std::runtime_error("bad PNM header in " + path);
    return v;
  };

  const long width = next_int();
  const long height = next_int();
  const long maxval = next_int();
  if (maxval != 255 && maxval != 65535)
    throw std::runtime_error("unsupported PNM bit depth in " + path);
  in.get();  // single whitespace byte before the raster

  const size_t n = static_cast<size_t>(width) * height * channels;
  const int bytes_per = maxval == 255 ? 1 : 2;
  std::vector<unsigned char> raw(n * bytes_per);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<size_t>(in.gcount()) != raw.size())
    throw std::runtime_error("truncated PNM raster in " + path);

  ImageBuffer img(static_cast<int>(height), static_cast<int>(width), channels);
  for (size_t k = 0; k < n; ++k) {
    double v;
    if (bytes_per == 1) {
      v = raw[k] / 255.0;
    } else {
      v = ((raw[2 * k] << 8) | raw[2 * k + 1]) / 65535.0;  // PNM 16-bit is big-endian
    }
    img.data()[k] = v;
  }
  return img;
}

void save_pnm(const ImageBuffer& img, const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << (img.channels() == 3 ? "P6" : "P5") << "\n"
      << img.cols() << " " << img.rows() << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

ImageBuffer load_image(const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == "pgm" || ext == "ppm" || ext == "pnm") return load_pnm(path);
  return load_png(path);
}

void save_image(const ImageBuffer& img, const std::string& path) {
  // Undo the lift, clamp to the displayable range, quantise to 8 bits.
  std::vector<unsigned char> bytes(img.data().size());
  for (size_t k = 0; k < bytes.size(); ++k) {
    double v = img.data()[k] - img.lift_offset();
    v = std::clamp(v, 0.0, 1.0);
    bytes[k] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  const std::string ext = lower_ext(path);
  if (ext == "pgm" || ext == "ppm" || ext == "pnm") {
    save_pnm(img, path, bytes);
  } else {
    save_png(img, path, bytes);
  }
}

ImageBuffer lift_positive(const ImageBuffer& img, double offset) {
  if (!(offset > 0.0)) throw std::invalid_argument("lift_positive: offset must be > 0");
  ImageBuffer out = img;
  for (double& v : out.data()) v += offset;
  out.set_lift_offset(img.lift_offset() + offset);
  return out;
}

MaskField mask_from_image(const ImageBuffer& img, double threshold) {
  MaskField mask(img.rows(), img.cols());
  for (int i = 0; i < img.rows(); ++i) {
    for (int j = 0; j < img.cols(); ++j) {
      double grey = 0.0;
      for (int c = 0; c < img.channels(); ++c) grey += img.at(i, j, c);
      grey /= img.channels();
      mask.at(i, j) = grey >= threshold ? 1 : 0;
    }
  }
  return mask;
}

MaskField load_mask(const std::string& path, double threshold) {
  return mask_from_image(load_image(path), threshold);
}

MaskField dilate_mask(const MaskField& mask, int radius) {
  if (radius < 0) throw std::invalid_argument("dilate_mask: radius must be >= 0");
  if (radius == 0) return mask;
  MaskField out(mask.rows(), mask.cols());
  for (int i = 0; i < mask.rows(); ++i) {
    for (int j = 0; j < mask.cols(); ++j) {
      if (!mask.at(i, j)) continue;
      const int i0 = std::max(0, i - radius), i1 = std::min(mask.rows() - 1, i + radius);
      const int j0 = std::max(0, j - radius), j1 = std::min(mask.cols() - 1, j + radius);
      for (int ii = i0; ii <= i1; ++ii)
        for (int jj = j0; jj <= j1; ++jj) out.at(ii, jj) = 1;
    }
  }
  return out;
}

}  // namespace osmose
