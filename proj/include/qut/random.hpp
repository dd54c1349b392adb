#pragma once

#include <cstdint>
#include <functional>
#include <random>

namespace qut {

using Engine = std::mt19937_64;

/// Engine for substream `stream` of `seed`. Substreams are derived from the
/// (seed, stream) pair alone, so results never depend on which worker runs
/// which draw.
Engine stream_engine(std::uint64_t seed, std::uint64_t stream);

/// Child seed for a named sub-task; used to give independent components
/// (designs, noise, splits) their own families of substreams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

/// Default worker count: QUT_WORKERS if set, otherwise hardware concurrency.
int default_workers();

/// Runs body(i) for i in [0, count) on up to `workers` threads. Each index is
/// executed exactly once; the first exception thrown is rethrown here.
void parallel_for(std::size_t count, int workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace qut
