#include "cqte/vec_impl.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace cqte::vec {

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Lane detect_lane() {
    if (const char* env = std::getenv("CQTE_SIMD")) {
        if (std::strcmp(env, "scalar") == 0) return Lane::scalar;
        if (std::strcmp(env, "avx2") == 0) {
            if (!cpu_has_avx2())
                throw std::runtime_error("CQTE_SIMD=avx2 requested but CPU lacks AVX2/FMA");
            return Lane::avx2;
        }
        throw std::runtime_error(std::string("unknown CQTE_SIMD value: ") + env);
    }
    return cpu_has_avx2() ? Lane::avx2 : Lane::scalar;
}

} // namespace

bool lane_available(Lane lane) {
    return lane == Lane::scalar || cpu_has_avx2();
}

Lane active_lane() {
    static const Lane lane = detect_lane();
    return lane;
}

const char* lane_name(Lane lane) {
    return lane == Lane::avx2 ? "avx2" : "scalar";
}

const Ops& ops_for(Lane lane) {
    if (lane == Lane::scalar) return scalar_ops();
#if defined(__x86_64__)
    if (!cpu_has_avx2()) throw std::runtime_error("AVX2 lane unavailable on this CPU");
    return avx2_ops();
#else
    throw std::runtime_error("AVX2 lane unavailable on this architecture");
#endif
}

const Ops& ops() {
    static const Ops& table = ops_for(active_lane());
    return table;
}

} // namespace cqte::vec
