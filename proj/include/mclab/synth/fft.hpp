#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <vector>

namespace mclab::synth {

using Complex = std::complex<double>;

/// In-place complex FFT plan over a fixed buffer, 1 to 3 dimensions, row-major.
///
/// Plans use FFTW_ESTIMATE so the algorithm choice (and hence every output
/// bit) does not depend on timing measurements. Planning is serialized
/// through a process-wide mutex; execution is thread-safe per plan.
/// Neither direction is normalized.
class FftPlan {
 public:
  enum class Direction { forward, backward };

  FftPlan(std::vector<int> dims, Direction dir);
  ~FftPlan();
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  FftPlan(FftPlan&& other) noexcept;
  FftPlan& operator=(FftPlan&& other) noexcept;

  [[nodiscard]] std::size_t size() const { return size_; }
  Complex* data() { return buffer_; }
  const Complex* data() const { return buffer_; }
  Complex& operator[](std::size_t i) { return buffer_[i]; }

  void execute();

 private:
  void release();

  std::size_t size_ = 0;
  Complex* buffer_ = nullptr;
  fftw_plan plan_ = nullptr;
};

}  // namespace mclab::synth
