#include "fairlime/parallel.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fairlime/error.hpp"

namespace fairlime {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

double kernel_weight(double squared_distance, double width) {
  const double w = std::exp(-squared_distance / (width * width));
  return std::max(w, std::numeric_limits<double>::min());
}

namespace {

double standardized_sq_distance(std::span<const double> z, std::span<const double> center,
                                std::span<const double> scale) {
  double d2 = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double u = (z[j] - center[j]) / scale[j];
    d2 += u * u;
  }
  return d2;
}

}  // namespace

void score_rows(const BlackBoxModel& model, const Matrix& samples, std::span<double> out,
                Execution exec) {
  if (out.size() != samples.rows()) throw data_error("score_rows: output size mismatch");
  if (samples.rows() > 0 && samples.cols() != model.n_features())
    throw data_error("score_rows: model expects " + std::to_string(model.n_features()) +
                     " features, samples have " + std::to_string(samples.cols()));
  const auto n = static_cast<long long>(samples.rows());
  if (exec == Execution::serial) {
    for (long long i = 0; i < n; ++i) out[i] = model.score(samples.row(i));
    return;
  }
  // Exceptions cannot cross the parallel region; the first one is rethrown.
  std::exception_ptr failure;
  std::mutex failure_mutex;
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < n; ++i) {
    try {
      out[i] = model.score(samples.row(i));
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

void kernel_weights(const Matrix& samples, std::span<const double> center,
                    std::span<const double> scale, double width, std::span<double> out,
                    Execution exec) {
  if (out.size() != samples.rows()) throw data_error("kernel_weights: output size mismatch");
  if (center.size() != samples.cols() || scale.size() != samples.cols())
    throw data_error("kernel_weights: dimension mismatch");
  const auto n = static_cast<long long>(samples.rows());
  if (exec == Execution::serial) {
    for (long long i = 0; i < n; ++i)
      out[i] = kernel_weight(standardized_sq_distance(samples.row(i), center, scale), width);
    return;
  }
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < n; ++i)
    out[i] = kernel_weight(standardized_sq_distance(samples.row(i), center, scale), width);
}

}  // namespace fairlime
