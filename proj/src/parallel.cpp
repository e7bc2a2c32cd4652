#include "sts/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace sts {

namespace {

std::atomic<int> g_override{0};

}  // namespace

int thread_count() {
  if (const int forced = g_override.load(); forced > 0) return forced;
  if (const char* env = std::getenv("STS_THREADS"); env != nullptr && *env != '\0') {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
      // malformed values fall back to auto
    }
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void set_thread_count(int threads) { g_override.store(threads > 0 ? threads : 0); }

}  // namespace sts
