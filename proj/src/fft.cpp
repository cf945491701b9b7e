#include "scns/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace scns::fft {
namespace {

// FFTW planning is not thread-safe; execution with fftw_execute_dft is.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int dim, int n, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto key = std::make_tuple(dim, n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::size_t total = 1;
    int dims[3] = {n, n, n};
    for (int a = 0; a < dim; ++a) total *= static_cast<std::size_t>(n);
    std::vector<fftw_complex> in(total), out(total);
    fftw_plan plan =
        fftw_plan_dft(dim, dims, in.data(), out.data(), sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

void execute(const TorusGrid& grid, int sign, const cplx* in, cplx* out) {
  fftw_plan plan = PlanCache::instance().get(grid.dim, grid.n, sign);
  // fftw_complex is layout-compatible with std::complex<double>.
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

}  // namespace

void forward_complex(const TorusGrid& grid, std::span<const cplx> in, std::span<cplx> out) {
  execute(grid, FFTW_FORWARD, in.data(), out.data());
  const double scale = 1.0 / static_cast<double>(grid.size());
  for (auto& c : out) c *= scale;
}

void inverse_complex(const TorusGrid& grid, std::span<const cplx> in, std::span<cplx> out) {
  execute(grid, FFTW_BACKWARD, in.data(), out.data());
}

void forward(const TorusGrid& grid, std::span<const double> samples, std::span<cplx> modes) {
  std::vector<cplx> buffer(samples.begin(), samples.end());
  forward_complex(grid, buffer, modes);
}

void inverse(const TorusGrid& grid, std::span<const cplx> modes, std::span<double> samples) {
  std::vector<cplx> buffer(modes.size());
  inverse_complex(grid, modes, buffer);
  for (std::size_t i = 0; i < buffer.size(); ++i) samples[i] = buffer[i].real();
}

}  // namespace scns::fft
