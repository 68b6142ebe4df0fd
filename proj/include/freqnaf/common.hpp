#pragma once

#include <stdexcept>
#include <string>

namespace freqnaf {

/// Malformed input: bad shapes, out-of-range arguments, invalid files.
/// The CLI maps this to exit code 2.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values or a solver that cannot proceed. CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// How a kernel runs. `serial` is the reference implementation and the
/// strict-deterministic mode: every accumulation happens in one fixed order.
/// `parallel` uses OpenMP; scatter kernels accumulate into per-thread
/// buffers merged in thread order, so results are reproducible for a fixed
/// thread count. `parallel_atomic` uses atomic adds for scatters and is
/// not reproducible bit-for-bit.
enum class Exec { serial, parallel, parallel_atomic };

/// Process-wide default used by the CLI and by callers that don't pass an
/// explicit policy.
Exec default_exec();
void set_default_exec(Exec exec);

/// Sets the OpenMP thread count; n <= 0 keeps the runtime default.
void set_thread_count(int n);
int thread_count();

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InputError(what);
}

}  // namespace freqnaf
