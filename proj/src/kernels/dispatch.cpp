#include <atomic>
#include <cassert>
#include <stdexcept>

#include "kcover/kernels.hpp"

namespace kcover::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(KCOVER_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

std::atomic<Isa>& active_slot() {
    static std::atomic<Isa> slot{detected_isa()};
    return slot;
}

}  // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
    }
    return "unknown";
}

Isa detected_isa() { return cpu_has_avx2() ? Isa::avx2 : Isa::scalar; }

Isa active_isa() { return active_slot().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
    if (isa == Isa::avx2 && !cpu_has_avx2()) throw std::invalid_argument("CPU does not support AVX2");
    active_slot().store(isa, std::memory_order_relaxed);
}

void squared_distances(std::span<const double> xs, std::span<const double> ys, Point2 p, std::span<double> out) {
    assert(xs.size() == ys.size() && out.size() == xs.size());
#ifdef KCOVER_HAVE_AVX2_KERNELS
    if (active_isa() == Isa::avx2) {
        avx2::squared_distances(xs.data(), ys.data(), p.x, p.y, out.data(), xs.size());
        return;
    }
#endif
    scalar::squared_distances(xs.data(), ys.data(), p.x, p.y, out.data(), xs.size());
}

double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
#ifdef KCOVER_HAVE_AVX2_KERNELS
    if (active_isa() == Isa::avx2) return avx2::dot(a.data(), b.data(), a.size());
#endif
    return scalar::dot(a.data(), b.data(), a.size());
}

void min_inplace(std::span<double> out, std::span<const double> v) {
    assert(out.size() == v.size());
#ifdef KCOVER_HAVE_AVX2_KERNELS
    if (active_isa() == Isa::avx2) {
        avx2::min_inplace(out.data(), v.data(), out.size());
        return;
    }
#endif
    scalar::min_inplace(out.data(), v.data(), out.size());
}

}  // namespace kcover::kernels
