#include "painpipe/seed.hpp"

namespace painpipe {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = mix64(base);
    for (auto p : parts) h = mix64(h ^ mix64(p));
    return h;
}

std::uint64_t frame_seed(std::uint64_t global_seed, std::string_view subject,
                         std::string_view sequence, int frame_index, int epoch) {
    return derive_seed(global_seed, {fnv1a64(subject), fnv1a64(sequence),
                                     static_cast<std::uint64_t>(frame_index),
                                     static_cast<std::uint64_t>(epoch)});
}

}  // namespace painpipe
