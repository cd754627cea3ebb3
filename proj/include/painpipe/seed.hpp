#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace painpipe {

/// 64-bit FNV-1a of a byte string. Stable across platforms and builds.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Folds a sequence of integers into one well-mixed seed.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts);

/// Seed of the per-frame random stream used for augmentation:
/// hash(global_seed, subject, sequence, frame, epoch).
std::uint64_t frame_seed(std::uint64_t global_seed, std::string_view subject,
                         std::string_view sequence, int frame_index, int epoch = 0);

}  // namespace painpipe
