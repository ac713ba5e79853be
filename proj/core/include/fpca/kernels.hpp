#pragma once

#include <string>

namespace fpca::smoother {

enum class KernelFamily { Epanechnikov, Uniform, Quartic };

// A symmetric probability density supported on [-1,1] together with the two
// moments the theory needs: sigma_K^2 = int u^2 K(u) du and ||K||^2 = int K^2.
struct KernelSpec {
    KernelFamily family = KernelFamily::Epanechnikov;
    double sigma_K2 = 0.2;
    double norm2 = 0.6;

    static KernelSpec make(KernelFamily family);
    static KernelSpec epanechnikov() { return make(KernelFamily::Epanechnikov); }
    static KernelSpec uniform() { return make(KernelFamily::Uniform); }
    static KernelSpec quartic() { return make(KernelFamily::Quartic); }
};

double kernel_eval(const KernelSpec& kernel, double u);

std::string kernel_name(KernelFamily family);
KernelFamily kernel_from_name(const std::string& name);

} // namespace fpca::smoother
