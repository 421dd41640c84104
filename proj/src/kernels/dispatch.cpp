#include "zz/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>

namespace zz::kernels {

namespace {

Isa initial_isa()
{
    if (const char* env = std::getenv("ZZ_ISA"); env != nullptr && std::string_view(env) == "scalar")
        return Isa::Scalar;
    return supported(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<Isa>& current()
{
    static std::atomic<Isa> isa{initial_isa()};
    return isa;
}

}  // namespace

bool supported(Isa isa)
{
    switch (isa) {
    case Isa::Scalar:
        return true;
    case Isa::Avx2:
#if defined(ZZ_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
        return false;
#endif
    }
    return false;
}

const char* name(Isa isa)
{
    switch (isa) {
    case Isa::Scalar:
        return "scalar";
    case Isa::Avx2:
        return "avx2";
    }
    return "unknown";
}

const Table& table(Isa isa)
{
    if (!supported(isa))
        throw std::runtime_error(std::string("kernel ISA not supported on this CPU: ") + name(isa));
    switch (isa) {
    case Isa::Avx2:
#if defined(ZZ_HAVE_AVX2)
        return avx2::table();
#endif
    case Isa::Scalar:
        break;
    }
    return scalar::table();
}

const Table& active()
{
#if defined(ZZ_HAVE_AVX2)
    if (current().load(std::memory_order_relaxed) == Isa::Avx2)
        return avx2::table();
#endif
    return scalar::table();
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa)
{
    if (!supported(isa))
        throw std::runtime_error(std::string("kernel ISA not supported on this CPU: ") + name(isa));
    current().store(isa, std::memory_order_relaxed);
}

}  // namespace zz::kernels
