#pragma once

#include <cstdint>

#include "kcover/geometry.hpp"

namespace kcover {

// Counter-based generator: value number c of stream s under seed is
// splitmix64(seed ^ splitmix64(s) + c * golden). Any implementation of the
// same formula reproduces the same numbers.
enum class Stream : std::uint64_t { init = 1, jitter = 2, restart = 3 };

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class StreamRng {
public:
    // `sub` separates repeated uses of one stream (restart number, cycle).
    StreamRng(std::uint64_t seed, Stream stream, std::uint64_t sub = 0)
        : key_(seed ^ splitmix64(static_cast<std::uint64_t>(stream) * 0x100000001b3ULL + sub)) {}

    std::uint64_t next() { return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * counter_++); }
    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Uniform point in a box.
inline Point2 uniform_in(StreamRng& rng, const BoundingBox& box) {
    const double x = rng.uniform(box.lo.x, box.hi.x);
    const double y = rng.uniform(box.lo.y, box.hi.y);
    return {x, y};
}

// Uniform point in a convex polygon by rejection from its bounding box.
inline Point2 uniform_in(StreamRng& rng, const ConvexPolygon& poly) {
    const BoundingBox b = poly.bounds();
    for (;;) {
        const Point2 p = uniform_in(rng, b);
        if (poly.contains(p)) return p;
    }
}

}  // namespace kcover
