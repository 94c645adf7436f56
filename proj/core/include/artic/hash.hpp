#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace artic {

// FNV-1a, used for run-log input fingerprints and for deriving
// per-item RNG streams in parallel loops.
std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t fnv1a64_file(const std::string& path);

// splitmix64 step; maps a seed and an item index to an independent
// stream seed so parallel loops stay deterministic for any job count.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace artic
