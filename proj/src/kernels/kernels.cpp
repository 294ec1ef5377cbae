#include <cstdlib>
#include <string>

#include "covbreak/kernels.hpp"

// Backend selection. Default: the fastest supported variant, overridable via
// the COVBREAK_KERNEL environment variable or set_backend().

namespace covbreak::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const Ops* ops_for(Backend b) {
#if defined(__x86_64__) || defined(__i386__)
    if (b == Backend::avx2) return &avx2_ops;
#endif
    (void)b;
    return &scalar_ops;
}

struct Selection {
    Backend backend;
    const Ops* ops;
};

Selection initial_selection() {
    Backend b = cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
    if (const char* env = std::getenv("COVBREAK_KERNEL")) {
        const std::string want(env);
        if (want == "scalar") {
            b = Backend::scalar;
        } else if (want == "avx2" && cpu_has_avx2()) {
            b = Backend::avx2;
        }
        // Unknown or unsupported values fall through to the detected default.
    }
    return {b, ops_for(b)};
}

Selection& selection() {
    static Selection s = initial_selection();
    return s;
}

}  // namespace

const Ops& active() { return *selection().ops; }

Backend active_backend() { return selection().backend; }

bool backend_supported(Backend b) {
    switch (b) {
        case Backend::scalar: return true;
        case Backend::avx2: return cpu_has_avx2();
    }
    return false;
}

bool set_backend(Backend b) {
    if (!backend_supported(b)) return false;
    selection() = {b, ops_for(b)};
    return true;
}

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
    }
    return "unknown";
}

}  // namespace covbreak::kernels
