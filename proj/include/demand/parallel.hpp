#pragma once

#include <cstdint>
#include <string_view>

namespace demand {

/// Selects between the OpenMP kernel and its serial reference loop.
enum class Execution { Serial, Parallel };

/// Number of OpenMP workers used by parallel kernels (1 without OpenMP).
int worker_count() noexcept;
/// n <= 0 restores the runtime default.
void set_worker_count(int n) noexcept;

/// Deterministic seed splitting so grid cells can be reproduced in isolation.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t salt) noexcept;
std::uint64_t derive_seed(std::uint64_t root, std::string_view salt) noexcept;

}  // namespace demand
