#include "mclab/synth/fft.hpp"

#include <mutex>
#include <numeric>
#include <utility>

#include "mclab/core/errors.hpp"

namespace mclab::synth {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

FftPlan::FftPlan(std::vector<int> dims, Direction dir) {
  if (dims.empty() || dims.size() > 3) throw ConfigError("FftPlan: need 1 to 3 dimensions");
  size_ = std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                          [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
  std::lock_guard lock(planner_mutex());
  buffer_ = reinterpret_cast<Complex*>(fftw_alloc_complex(size_));
  auto* raw = reinterpret_cast<fftw_complex*>(buffer_);
  plan_ = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), raw, raw,
                        dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
  if (!plan_) {
    fftw_free(buffer_);
    buffer_ = nullptr;
    throw NumericalError("FftPlan: FFTW could not create a plan");
  }
  std::fill(buffer_, buffer_ + size_, Complex{});
}

FftPlan::~FftPlan() { release(); }

FftPlan::FftPlan(FftPlan&& other) noexcept
    : size_(std::exchange(other.size_, 0)),
      buffer_(std::exchange(other.buffer_, nullptr)),
      plan_(std::exchange(other.plan_, nullptr)) {}

FftPlan& FftPlan::operator=(FftPlan&& other) noexcept {
  if (this != &other) {
    release();
    size_ = std::exchange(other.size_, 0);
    buffer_ = std::exchange(other.buffer_, nullptr);
    plan_ = std::exchange(other.plan_, nullptr);
  }
  return *this;
}

void FftPlan::release() {
  if (!plan_ && !buffer_) return;
  std::lock_guard lock(planner_mutex());
  if (plan_) fftw_destroy_plan(plan_);
  if (buffer_) fftw_free(buffer_);
  plan_ = nullptr;
  buffer_ = nullptr;
}

void FftPlan::execute() { fftw_execute(plan_); }

}  // namespace mclab::synth
