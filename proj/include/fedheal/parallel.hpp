#pragma once

#include <cstddef>
#include <functional>

namespace fedheal {

/// Environment variable capping worker threads for client training and
/// experiment grids.
inline constexpr const char* kMaxWorkersEnv = "FEDHEAL_MAX_WORKERS";

/// Worker count to use when a caller asks for 0 ("auto"): the value of
/// FEDHEAL_MAX_WORKERS if set to a positive integer, otherwise
/// std::thread::hardware_concurrency().
std::size_t default_worker_count();

/// Runs body(0) ... body(count - 1) on up to `workers` threads (0 = auto).
/// Indices are claimed dynamically, so `body` must not depend on which
/// thread runs it. The first exception thrown by any call is rethrown after
/// all threads have joined.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& body);

}  // namespace fedheal
