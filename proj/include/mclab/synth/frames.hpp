#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mclab/core/params.hpp"
#include "mclab/synth/grid.hpp"

namespace mclab::synth {

/// A movie of `n_frames` real frames, stored frame-major then row-major.
struct FrameStack {
  GridSpec grid;
  MCParams params;
  std::uint64_t seed = 0;
  int n_frames = 0;
  std::vector<double> data;

  FrameStack() = default;
  FrameStack(const GridSpec& g, const MCParams& p, std::uint64_t s, int frames)
      : grid(g), params(p), seed(s), n_frames(frames),
        data(static_cast<std::size_t>(frames) * g.nx * g.ny, 0.0) {}

  [[nodiscard]] std::size_t frame_size() const { return static_cast<std::size_t>(grid.nx) * grid.ny; }

  std::span<double> frame(int t) { return {data.data() + t * frame_size(), frame_size()}; }
  [[nodiscard]] std::span<const double> frame(int t) const {
    return {data.data() + t * frame_size(), frame_size()};
  }

  double& at(int t, int y, int x) { return data[t * frame_size() + static_cast<std::size_t>(y) * grid.nx + x]; }
  [[nodiscard]] double at(int t, int y, int x) const {
    return data[t * frame_size() + static_cast<std::size_t>(y) * grid.nx + x];
  }
};

}  // namespace mclab::synth
