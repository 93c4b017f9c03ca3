#pragma once

#include <cstddef>
#include <vector>

#include "flowprice/grid.hpp"

namespace flowprice {

// Running composite trapezoid: out[k] = integral of f from node 0 to node k.
inline std::vector<double> cum_trapezoid(const std::vector<double>& f, double dt) {
    std::vector<double> out(f.size(), 0.0);
    for (std::size_t k = 1; k < f.size(); ++k)
        out[k] = out[k - 1] + 0.5 * dt * (f[k - 1] + f[k]);
    return out;
}

inline SampledPath cum_trapezoid(const SampledPath& f) {
    return SampledPath(f.grid, cum_trapezoid(f.values, f.grid.dt));
}

inline double trapezoid(const std::vector<double>& f, double dt) {
    if (f.size() < 2) return 0.0;
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t k = 1; k + 1 < f.size(); ++k) s += f[k];
    return s * dt;
}

// Memory kernel integral m[k] = \int_0^{t_k} (t_k - u) f(u) du, evaluated as a
// second running trapezoid pass over the running integral of f.
inline std::vector<double> cum_kernel_trapezoid(const std::vector<double>& f, double dt) {
    return cum_trapezoid(cum_trapezoid(f, dt), dt);
}

}  // namespace flowprice
