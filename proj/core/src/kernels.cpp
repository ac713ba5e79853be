#include "fpca/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace fpca::smoother {

KernelSpec KernelSpec::make(KernelFamily family) {
    switch (family) {
        case KernelFamily::Epanechnikov:
            return {family, 1.0 / 5.0, 3.0 / 5.0};
        case KernelFamily::Uniform:
            return {family, 1.0 / 3.0, 1.0 / 2.0};
        case KernelFamily::Quartic:
            return {family, 1.0 / 7.0, 5.0 / 7.0};
    }
    throw std::invalid_argument("KernelSpec: unknown family");
}

double kernel_eval(const KernelSpec& kernel, double u) {
    const double a = std::abs(u);
    if (a > 1.0) return 0.0;
    switch (kernel.family) {
        case KernelFamily::Epanechnikov:
            return 0.75 * (1.0 - u * u);
        case KernelFamily::Uniform:
            return 0.5;
        case KernelFamily::Quartic: {
            const double w = 1.0 - u * u;
            return (15.0 / 16.0) * w * w;
        }
    }
    return 0.0;
}

std::string kernel_name(KernelFamily family) {
    switch (family) {
        case KernelFamily::Epanechnikov: return "epanechnikov";
        case KernelFamily::Uniform: return "uniform";
        case KernelFamily::Quartic: return "quartic";
    }
    return "unknown";
}

KernelFamily kernel_from_name(const std::string& name) {
    if (name == "epanechnikov") return KernelFamily::Epanechnikov;
    if (name == "uniform") return KernelFamily::Uniform;
    if (name == "quartic") return KernelFamily::Quartic;
    throw std::invalid_argument("unknown kernel family: " + name);
}

} // namespace fpca::smoother
