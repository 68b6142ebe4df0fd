#include "freqnaf/common.hpp"

#include <atomic>

#include <omp.h>

namespace freqnaf {
namespace {
std::atomic<Exec> g_exec{Exec::parallel};
}  // namespace

Exec default_exec() { return g_exec.load(); }
void set_default_exec(Exec exec) { g_exec.store(exec); }

void set_thread_count(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int thread_count() { return omp_get_max_threads(); }

}  // namespace freqnaf
