#include "demand/parallel.hpp"

#include <thread>

#ifdef DEMAND_HAVE_OPENMP
#include <omp.h>
#endif

namespace demand {

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

int worker_count() noexcept {
#ifdef DEMAND_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_worker_count(int n) noexcept {
#ifdef DEMAND_HAVE_OPENMP
  if (n <= 0) n = int(std::thread::hardware_concurrency());
  omp_set_num_threads(n > 0 ? n : 1);
#else
  (void)n;
#endif
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t salt) noexcept {
  return splitmix64(splitmix64(root) ^ (salt + 0x632be59bd9b4e019ULL));
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view salt) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : salt) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return derive_seed(root, h);
}

}  // namespace demand
