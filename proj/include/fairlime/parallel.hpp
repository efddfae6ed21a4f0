#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <vector>

#include "fairlime/blackbox.hpp"
#include "fairlime/matrix.hpp"

namespace fairlime {

/// Every parallel kernel has a serial twin. Both variants write each output
/// slot independently, so their results are bit-identical; the serial one
/// is kept as the test reference and benchmark baseline.
enum class Execution { serial, parallel };

int max_threads();

/// out[i] = model.score(samples.row(i))
void score_rows(const BlackBoxModel& model, const Matrix& samples, std::span<double> out,
                Execution exec = Execution::parallel);

/// out[i] = exp(-||(samples.row(i) - center) / scale||^2 / width^2), floored
/// at the smallest positive normal double so weights never reach zero.
void kernel_weights(const Matrix& samples, std::span<const double> center,
                    std::span<const double> scale, double width, std::span<double> out,
                    Execution exec = Execution::parallel);

double kernel_weight(double squared_distance, double width);

/// Runs body(i) for i in [0, n). Iterations must touch disjoint state.
template <class Body>
void for_each_index(std::size_t n, Body&& body, Execution exec = Execution::parallel) {
  if (exec == Execution::serial) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  // Exceptions cannot leave an OpenMP region; the first one is rethrown.
  const auto count = static_cast<long long>(n);
  std::exception_ptr failure;
  std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace fairlime
