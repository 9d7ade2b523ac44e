#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mclab/synth/frames.hpp"

namespace mclab::synth {

/// Display mapping u8 = clamp(round(offset + gain * I / sigma_i), 0, 255).
struct Quantization {
  double sigma_i = 1.0;
  double gain = 48.0;
  double offset = 128.0;

  friend bool operator==(const Quantization&, const Quantization&) = default;
};

/// Quantizes one sample after rounding it to float32, so raw and PNG
/// outputs of the same stack decode to identical bytes.
std::uint8_t quantize_sample(double value, const Quantization& q);

/// Whole stack, frame-major then row-major.
std::vector<std::uint8_t> quantize(const FrameStack& stack, const Quantization& q);

/// Root mean square of every sample (the zero-mean standard deviation).
double sample_sigma(const FrameStack& stack);

/// grid, params, seed, shape and quantization constants.
nlohmann::json stack_metadata(const FrameStack& stack, const Quantization& q);

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

void write_png_gray(const std::filesystem::path& path, int width, int height,
                    std::span<const std::uint8_t> pixels);
GrayImage read_png_gray(const std::filesystem::path& path);

/// Writes frame_0000.png ... and meta.json into `dir` (created if needed).
void write_png_frames(const std::filesystem::path& dir, const FrameStack& stack, const Quantization& q);

/// Raw little-endian float32 samples at `path` plus `<path>.json` sidecar.
void write_mcraw(const std::filesystem::path& path, const FrameStack& stack, const Quantization& q);

struct RawStack {
  FrameStack stack;
  Quantization quantization;
};

/// Reads a stack written by write_mcraw. Throws ParseError on malformed sidecars or size mismatch.
RawStack read_mcraw(const std::filesystem::path& path);

}  // namespace mclab::synth
