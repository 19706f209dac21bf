#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>
#include <vector>

namespace slitscan::detail {

namespace {

class PlanCache {
public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_)
      fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t n, FftSign sign) {
    const std::lock_guard lock(mutex_);
    const auto key = std::make_pair(n, static_cast<int>(sign));
    if (auto it = plans_.find(key); it != plans_.end())
      return it->second;
    std::vector<Complex> scratch(n);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    // FFTW_ESTIMATE keeps planning deterministic and leaves the buffer alone.
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, static_cast<int>(sign),
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

private:
  std::mutex mutex_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

} // namespace

void fft_inplace(std::span<Complex> data, FftSign sign) {
  if (data.empty())
    return;
  fftw_plan plan = cache().get(data.size(), sign);
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, buf, buf);
}

} // namespace slitscan::detail
