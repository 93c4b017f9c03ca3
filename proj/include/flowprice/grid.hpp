#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "flowprice/errors.hpp"

namespace flowprice {

// Uniform time grid t_k = t0 + k*dt, k = 0..n_steps.
struct TimeGrid {
    double t0 = 0.0;
    double dt = 0.0;
    std::size_t n_steps = 0;

    TimeGrid() = default;
    TimeGrid(double t0, double dt, std::size_t n_steps) : t0(t0), dt(dt), n_steps(n_steps) {
        if (!(dt > 0.0) || !std::isfinite(dt) || !std::isfinite(t0))
            throw InvalidParameterError("TimeGrid: dt must be finite and > 0");
        if (n_steps < 1) throw InvalidParameterError("TimeGrid: n_steps must be >= 1");
    }

    static TimeGrid over(double t0, double t1, std::size_t n_steps) {
        if (!(t1 > t0)) throw InvalidParameterError("TimeGrid: t1 must exceed t0");
        return TimeGrid(t0, (t1 - t0) / static_cast<double>(n_steps), n_steps);
    }

    std::size_t n_nodes() const { return n_steps + 1; }
    double node(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
    double t_end() const { return node(n_steps); }

    bool covers(double a, double b, double rel_tol = 1e-9) const {
        const double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
        return t0 <= a + rel_tol * scale && t_end() >= b - rel_tol * scale;
    }

    bool same_as(const TimeGrid& o, double rel_tol = 1e-9) const {
        const double scale = std::max(1.0, std::fabs(t_end()));
        return n_steps == o.n_steps && std::fabs(t0 - o.t0) <= rel_tol * scale &&
               std::fabs(dt - o.dt) <= rel_tol * scale;
    }
};

// Real-valued function sampled on a uniform grid; one value per node.
struct SampledPath {
    TimeGrid grid;
    std::vector<double> values;

    SampledPath() = default;
    SampledPath(TimeGrid g, std::vector<double> v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.n_nodes())
            throw InvalidParameterError("SampledPath: values must have n_steps + 1 entries");
        for (double x : values)
            if (!std::isfinite(x)) throw InvalidParameterError("SampledPath: non-finite value");
    }

    static SampledPath constant(TimeGrid g, double c) {
        return SampledPath(g, std::vector<double>(g.n_nodes(), c));
    }

    static SampledPath sample(TimeGrid g, const std::function<double(double)>& f) {
        std::vector<double> v(g.n_nodes());
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = f(g.node(k));
        return SampledPath(g, std::move(v));
    }

    std::size_t size() const { return values.size(); }
    double front() const { return values.front(); }
    double back() const { return values.back(); }
    double operator[](std::size_t k) const { return values[k]; }
    double& operator[](std::size_t k) { return values[k]; }

    // Linear interpolation between neighbouring nodes; t clamped to grid range
    // within a small tolerance, out-of-range otherwise rejected.
    double at(double t) const {
        const double scale = std::max(1.0, std::fabs(grid.t_end()));
        if (t < grid.t0 - 1e-9 * scale || t > grid.t_end() + 1e-9 * scale)
            throw DomainError("SampledPath::at: t outside grid range");
        double s = (t - grid.t0) / grid.dt;
        if (s <= 0.0) return values.front();
        if (s >= static_cast<double>(grid.n_steps)) return values.back();
        const auto k = static_cast<std::size_t>(s);
        const double w = s - static_cast<double>(k);
        return values[k] + w * (values[k + 1] - values[k]);
    }
};

}  // namespace flowprice
