#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "flowprice/errors.hpp"
#include "flowprice/grid.hpp"
#include "flowprice/mfg.hpp"
#include "flowprice/params.hpp"
#include "flowprice/quad.hpp"

namespace flowprice {

// Microstructural impact kernel xi_t, constant in the backward argument u.
// scaled_alpha_over_N expands to the constant path xi ~ alpha / N.
struct MicroKernel {
    enum class Form { constant_over_u, scaled_alpha_over_N };
    Form form = Form::scaled_alpha_over_N;
    SampledPath values;  // used when form == constant_over_u

    static MicroKernel alpha_over_n() { return MicroKernel{}; }
    static MicroKernel constant(SampledPath path) {
        return MicroKernel{Form::constant_over_u, std::move(path)};
    }

    std::vector<double> sample_on(const TimeGrid& grid, double alpha, int N) const {
        switch (form) {
            case Form::scaled_alpha_over_N:
                return std::vector<double>(grid.n_nodes(), alpha / static_cast<double>(N));
            case Form::constant_over_u: {
                if (values.size() < 2 || !values.grid.covers(grid.t0, grid.t_end()))
                    throw DomainError("MicroKernel: values path does not cover the grid");
                std::vector<double> out(grid.n_nodes());
                for (std::size_t k = 0; k < out.size(); ++k) out[k] = values.at(grid.node(k));
                return out;
            }
        }
        throw UnsupportedRegimeError("MicroKernel: kernel form not reducible");
    }
};

struct FinitePopParams {
    ModelParams base;
    int N = 1;
    double alpha = 0.0;  // permanent-impact slope
    MicroKernel xi;
    double E_N0 = 0.0;  // initial average inventory

    void validate() const {
        base.validate();
        if (N < 1) throw InvalidParameterError("FinitePopParams: N must be >= 1");
        if (!(alpha >= 0.0) || !std::isfinite(alpha))
            throw InvalidParameterError("FinitePopParams: alpha must be finite and >= 0");
        if (!std::isfinite(E_N0)) throw InvalidParameterError("FinitePopParams: non-finite E_N0");
    }

    std::vector<std::string> warnings() const {
        auto w = base.warnings();
        if (!(base.A > alpha / (2.0 * N)))
            w.push_back("A <= alpha/(2N): payoff concavity is not guaranteed");
        return w;
    }
};

// Closed-form solution of 2 kappa E'' + alpha (1 - 1/N) E' - 2 phi E = 0 on the
// exponential basis, with E(0) = E_N0 and kappa E'(T) + terminal_A E(T) = 0.
struct MeanInventorySolution {
    bool repeated_root = false;
    double r1 = 0.0, r2 = 0.0;  // characteristic roots (equal when repeated)
    double c1 = 0.0, c2 = 0.0;

    double at(double t) const {
        if (repeated_root) return (c1 + c2 * t) * std::exp(r1 * t);
        return c1 * std::exp(r1 * t) + c2 * std::exp(r2 * t);
    }
    double deriv(double t) const {
        if (repeated_root) return (c2 + r1 * (c1 + c2 * t)) * std::exp(r1 * t);
        return c1 * r1 * std::exp(r1 * t) + c2 * r2 * std::exp(r2 * t);
    }
    double second_deriv(double t) const {
        if (repeated_root) return (2.0 * r1 * c2 + r1 * r1 * (c1 + c2 * t)) * std::exp(r1 * t);
        return c1 * r1 * r1 * std::exp(r1 * t) + c2 * r2 * r2 * std::exp(r2 * t);
    }
    // bound on |E'''| over [0, T], used to scale quadrature tolerances
    double third_deriv_bound(double T) const {
        const double g1 = std::fabs(c1) * std::fabs(r1 * r1 * r1) *
                          std::max(1.0, std::exp(r1 * T));
        if (repeated_root)
            return g1 + std::fabs(c2) * (std::fabs(r1 * r1 * r1) * T + 3.0 * r1 * r1) *
                            std::max(1.0, std::exp(r1 * T));
        return g1 + std::fabs(c2) * std::fabs(r2 * r2 * r2) * std::max(1.0, std::exp(r2 * T));
    }
};

// terminal_A lets callers impose a different terminal boundary coefficient;
// the default reproduces kappa E'(T) + A E(T) = 0.
inline MeanInventorySolution solve_mean_inventory_ode(const FinitePopParams& params,
                                                      double terminal_A) {
    params.validate();
    const double kappa = params.base.kappa;
    const double phi = params.base.phi;
    const double T = params.base.T;
    const double eta = params.alpha * (1.0 - 1.0 / static_cast<double>(params.N));

    const double disc = eta * eta + 16.0 * kappa * phi;
    if (disc < 0.0)
        throw UnsupportedRegimeError("mean_inventory_bvp: complex characteristic roots");
    const double sq = std::sqrt(disc);
    MeanInventorySolution sol;
    sol.r1 = (-eta + sq) / (4.0 * kappa);
    sol.r2 = (-eta - sq) / (4.0 * kappa);
    sol.repeated_root = std::fabs(sol.r1 - sol.r2) < 1e-10 * std::max(std::fabs(sol.r1), 1.0);

    if (sol.repeated_root) {
        const double r = 0.5 * (sol.r1 + sol.r2);
        sol.r1 = sol.r2 = r;
        sol.c1 = params.E_N0;
        const double num = -(kappa * r + terminal_A) * sol.c1;
        const double den = kappa + (kappa * r + terminal_A) * T;
        if (std::fabs(den) < 1e-14 * std::max(1.0, std::fabs(kappa)))
            throw DegenerateParameterError("mean_inventory_bvp: singular boundary system");
        sol.c2 = num / den;
        return sol;
    }

    // c1 + c2 = E_N0
    // (kappa r1 + A) e^{r1 T} c1 + (kappa r2 + A) e^{r2 T} c2 = 0
    const double b1 = (kappa * sol.r1 + terminal_A) * std::exp(sol.r1 * T);
    const double b2 = (kappa * sol.r2 + terminal_A) * std::exp(sol.r2 * T);
    const double det = b2 - b1;
    if (std::fabs(det) < 1e-14 * std::max({std::fabs(b1), std::fabs(b2), 1e-300}))
        throw DegenerateParameterError("mean_inventory_bvp: singular boundary system");
    sol.c1 = params.E_N0 * b2 / det;
    sol.c2 = -params.E_N0 * b1 / det;
    return sol;
}

inline MeanInventorySolution solve_mean_inventory_ode(const FinitePopParams& params) {
    return solve_mean_inventory_ode(params, params.base.A);
}

// Mean inventory of the N-player game, sampled on a uniform grid over [0, T].
inline SampledPath mean_inventory_bvp(const FinitePopParams& params, std::size_t n_steps = 2000) {
    const MeanInventorySolution sol = solve_mean_inventory_ode(params);
    const TimeGrid grid = TimeGrid::over(0.0, params.base.T, n_steps);
    return SampledPath::sample(grid, [&](double t) { return sol.at(t); });
}

// Expected finite-population price split into its additive terms. Martingale
// and noise contributions are identically zero here: each starts at zero, so
// their expectations vanish.
struct FinitePriceDecomposition {
    SampledPath total;
    SampledPath term_inertia;  //  2 phi \int_0^t E_{N,0} du
    SampledPath term_memory;   // -2 phi \int_0^t (t-u) Lambda du
    SampledPath term_instant;  //  2 kappa (Lambda_t - Lambda_0)
    SampledPath term_micro;    // -\int_0^t xi_u Lambda_u du
    SampledPath term_noise;    //  \int_0^t eps_u du, zero in expectation
};

inline FinitePriceDecomposition expected_formed_price(const FinitePopParams& params,
                                                      const SampledPath& flow, double p0) {
    params.validate();
    if (flow.size() < 2) throw DomainError("expected_formed_price: empty flow path");
    const TimeGrid grid = flow.grid;
    const double phi = params.base.phi;
    const double kappa = params.base.kappa;

    const std::vector<double> xi = params.xi.sample_on(grid, params.alpha, params.N);
    std::vector<double> xl(grid.n_nodes());
    for (std::size_t k = 0; k < xl.size(); ++k) xl[k] = xi[k] * flow[k];

    const std::vector<double> memory = cum_kernel_trapezoid(flow.values, grid.dt);
    const std::vector<double> micro = cum_trapezoid(xl, grid.dt);

    const std::size_t n = grid.n_nodes();
    std::vector<double> inertia(n), mem(n), inst(n), mic(n), noise(n, 0.0), total(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double tau = static_cast<double>(k) * grid.dt;
        inertia[k] = 2.0 * phi * params.E_N0 * tau;
        mem[k] = -2.0 * phi * memory[k];
        inst[k] = 2.0 * kappa * (flow[k] - flow[0]);
        mic[k] = -micro[k];
        total[k] = p0 + inertia[k] + mem[k] + inst[k] + mic[k] + noise[k];
    }
    return FinitePriceDecomposition{
        SampledPath(grid, std::move(total)),   SampledPath(grid, std::move(inertia)),
        SampledPath(grid, std::move(mem)),     SampledPath(grid, std::move(inst)),
        SampledPath(grid, std::move(mic)),     SampledPath(grid, std::move(noise))};
}

// Permanent-impact reduction: with xi = alpha/N, sigma^i = 0 and
// Lambda = -E_N', the expected price collapses to p0 + alpha (E_N(t) - E_N(0)).
// The decomposition route is recomputed and checked against the closed form.
inline SampledPath permanent_impact_sanity(const FinitePopParams& params, double p0,
                                           std::size_t n_steps = 4000) {
    FinitePopParams p = params;
    p.xi = MicroKernel::alpha_over_n();
    const MeanInventorySolution sol = solve_mean_inventory_ode(p);
    const TimeGrid grid = TimeGrid::over(0.0, p.base.T, n_steps);

    const SampledPath flow =
        SampledPath::sample(grid, [&](double t) { return -sol.deriv(t); });
    const FinitePriceDecomposition dec = expected_formed_price(p, flow, p0);

    std::vector<double> price(grid.n_nodes());
    const double e0 = sol.at(0.0);
    double max_diff = 0.0;
    for (std::size_t k = 0; k < price.size(); ++k) {
        price[k] = p0 + p.alpha * (sol.at(grid.node(k)) - e0);
        max_diff = std::max(max_diff, std::fabs(dec.total[k] - price[k]));
    }

    // composite-trapezoid error scale for the memory/micro integrals
    const double d3 = sol.third_deriv_bound(p.base.T);
    const double quad_scale =
        grid.dt * grid.dt * p.base.T * (2.0 * p.base.phi * (p.base.T + 1.0) + p.alpha) *
        (d3 + 1.0);
    const double tol = std::max(1e-9 * std::max(1.0, std::fabs(p0)), 10.0 * quad_scale);
    if (max_diff > tol)
        throw Error("permanent_impact_sanity: decomposition disagrees with the closed form");
    return SampledPath(grid, std::move(price));
}

// Sup-norm gap between the expected N-player price and the mean-field price on
// a fixed limit flow, per population size.
struct ConvergencePoint {
    int N;
    double sup_error;
};

inline std::vector<ConvergencePoint> convergence_errors(
    const FinitePopParams& base, const std::vector<int>& Ns,
    const std::function<SampledPath(int)>& flow_family, const SampledPath& limit_flow,
    double p0) {
    if (Ns.empty()) throw DomainError("convergence_errors: empty list of population sizes");
    const SampledPath p_limit = formed_price(base.base, limit_flow, p0);

    std::vector<ConvergencePoint> out;
    out.reserve(Ns.size());
    for (int n_pop : Ns) {
        FinitePopParams p = base;
        p.N = n_pop;
        p.xi = MicroKernel::alpha_over_n();
        const SampledPath flow = flow_family(n_pop);
        if (!flow.grid.same_as(limit_flow.grid))
            throw DomainError("convergence_errors: flow grids differ from the limit flow");
        const FinitePriceDecomposition dec = expected_formed_price(p, flow, p0);
        double e = 0.0;
        for (std::size_t k = 0; k < dec.total.size(); ++k)
            e = std::max(e, std::fabs(dec.total[k] - p_limit[k]));
        out.push_back({n_pop, e});
    }
    return out;
}

inline std::function<SampledPath(int)> fixed_flow_family(SampledPath flow) {
    return [flow = std::move(flow)](int) { return flow; };
}

}  // namespace flowprice
