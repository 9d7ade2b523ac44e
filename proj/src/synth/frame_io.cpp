#include "mclab/synth/frame_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include "mclab/core/errors.hpp"
#include "mclab/core/params_json.hpp"

namespace mclab::synth {
namespace {

using FilePtr = std::unique_ptr<std::FILE, int (*)(std::FILE*)>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode), &std::fclose);
  if (!f) throw IoError("cannot open '" + path.string() + "': " + std::strerror(errno));
  return f;
}

std::string sidecar_path(const std::filesystem::path& path) { return path.string() + ".json"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
}

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

}  // namespace

std::uint8_t quantize_sample(double value, const Quantization& q) {
  const double v = static_cast<float>(value);
  const double level = std::nearbyint(q.offset + q.gain * v / q.sigma_i);
  return static_cast<std::uint8_t>(std::clamp(level, 0.0, 255.0));
}

std::vector<std::uint8_t> quantize(const FrameStack& stack, const Quantization& q) {
  if (!(q.sigma_i > 0.0)) throw ConfigError("quantize: sigma_i must be > 0");
  std::vector<std::uint8_t> out(stack.data.size());
  std::transform(stack.data.begin(), stack.data.end(), out.begin(),
                 [&q](double v) { return quantize_sample(v, q); });
  return out;
}

double sample_sigma(const FrameStack& stack) {
  double sum = 0.0;
  for (double v : stack.data) sum += v * v;
  return stack.data.empty() ? 0.0 : std::sqrt(sum / static_cast<double>(stack.data.size()));
}

nlohmann::json stack_metadata(const FrameStack& stack, const Quantization& q) {
  return {{"grid", grid_to_json(stack.grid)},
          {"params", params_to_json(stack.params)},
          {"seed", stack.seed},
          {"n_frames", stack.n_frames},
          {"width", stack.grid.nx},
          {"height", stack.grid.ny},
          {"fps", stack.grid.fps},
          {"quantization", {{"sigma_i", q.sigma_i}, {"gain", q.gain}, {"offset", q.offset}}}};
}

void write_png_gray(const std::filesystem::path& path, int width, int height,
                    std::span<const std::uint8_t> pixels) {
  if (pixels.size() != static_cast<std::size_t>(width) * height) {
    throw ConfigError("write_png_gray: pixel buffer does not match width x height");
  }
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng: cannot allocate write structures");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng: failed writing '" + path.string() + "'");
  }
  png_init_io(png, f.get());
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, pixels.data() + static_cast<std::size_t>(y) * width);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

GrayImage read_png_gray(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng: cannot allocate read structures");
  }
  GrayImage img;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError("libpng: '" + path.string() + "' is not a readable PNG");
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY || png_get_bit_depth(png, info) != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError("'" + path.string() + "' is not an 8-bit grayscale PNG");
  }
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  for (int y = 0; y < img.height; ++y) {
    png_read_row(png, img.pixels.data() + static_cast<std::size_t>(y) * img.width, nullptr);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png_frames(const std::filesystem::path& dir, const FrameStack& stack, const Quantization& q) {
  std::filesystem::create_directories(dir);
  const std::vector<std::uint8_t> bytes = quantize(stack, q);
  nlohmann::json meta = stack_metadata(stack, q);
  nlohmann::json names = nlohmann::json::array();
  for (int t = 0; t < stack.n_frames; ++t) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04d.png", t);
    write_png_gray(dir / name, stack.grid.nx, stack.grid.ny,
                   std::span(bytes).subspan(t * stack.frame_size(), stack.frame_size()));
    names.push_back(name);
  }
  meta["frames"] = names;
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

void write_mcraw(const std::filesystem::path& path, const FrameStack& stack, const Quantization& q) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::vector<std::uint32_t> words(stack.data.size());
  for (std::size_t i = 0; i < stack.data.size(); ++i) {
    words[i] = to_little_endian(std::bit_cast<std::uint32_t>(static_cast<float>(stack.data[i])));
  }
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(words.data()),
              static_cast<std::streamsize>(words.size() * sizeof(std::uint32_t)));
    if (!out) throw IoError("short write to '" + path.string() + "'");
  }
  nlohmann::json meta = stack_metadata(stack, q);
  meta["dtype"] = "float32le";
  write_text(sidecar_path(path), meta.dump(2) + "\n");
}

RawStack read_mcraw(const std::filesystem::path& path) {
  nlohmann::json meta;
  {
    std::ifstream in(sidecar_path(path));
    if (!in) throw IoError("cannot open sidecar '" + sidecar_path(path) + "'");
    try {
      meta = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("malformed sidecar '" + sidecar_path(path) + "': " + e.what());
    }
  }
  RawStack out;
  try {
    if (meta.value("dtype", "") != "float32le") throw ParseError("sidecar dtype must be float32le");
    const GridSpec grid = grid_from_json(meta.at("grid"));
    const MCParams params = params_from_json(meta.at("params"));
    out.stack = FrameStack(grid, params, meta.at("seed").get<std::uint64_t>(), meta.at("n_frames").get<int>());
    const auto& q = meta.at("quantization");
    out.quantization = {q.at("sigma_i").get<double>(), q.at("gain").get<double>(), q.at("offset").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed sidecar '" + sidecar_path(path) + "': " + e.what());
  }

  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes != out.stack.data.size() * sizeof(float)) {
    throw ParseError("'" + path.string() + "' has " + std::to_string(bytes) + " bytes, sidecar implies " +
                     std::to_string(out.stack.data.size() * sizeof(float)));
  }
  in.seekg(0);
  std::vector<std::uint32_t> words(out.stack.data.size());
  in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(bytes));
  for (std::size_t i = 0; i < words.size(); ++i) {
    out.stack.data[i] = std::bit_cast<float>(to_little_endian(words[i]));
  }
  return out;
}

}  // namespace mclab::synth
