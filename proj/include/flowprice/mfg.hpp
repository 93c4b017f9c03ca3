#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "flowprice/errors.hpp"
#include "flowprice/grid.hpp"
#include "flowprice/params.hpp"
#include "flowprice/quad.hpp"

namespace flowprice {

// Time-dependent coefficients of the quadratic value function
// V(t,q) = theta0(t) + theta1(t) q + theta2(t) q^2.
struct ThetaCoefficients {
    SampledPath theta0;
    SampledPath theta1;
    SampledPath theta2;
};

// Mean-field summary of the population: mean inventory E, mean marginal value
// Pi = theta1 + 2 theta2 E, and the market supply rate Lambda = -E'.
struct MeanFieldState {
    SampledPath E;
    SampledPath Pi;
    SampledPath Lambda;
};

// Riccati coefficient theta2 in closed form. The tanh form is used for
// phi > 0: it is regular at A = sqrt(kappa*phi), where the textbook constant
// c = (sqrt(kappa*phi)+A)/(sqrt(kappa*phi)-A) blows up. phi = 0 uses the exact
// rational limit of the same solution.
inline double theta2_at(const ModelParams& params, double t) {
    params.validate();
    if (params.phi < 0.0)
        throw UnsupportedRegimeError("theta2_at: phi < 0 gives a complex Riccati rate");
    const double tol = 1e-9 * std::max(1.0, params.T);
    if (t < -tol || t > params.T + tol)
        throw DomainError("theta2_at: t outside [0, T]");
    const double tau = std::max(0.0, params.T - t);
    if (params.phi == 0.0) {
        // theta2' = -theta2^2 / kappa, theta2(T) = -A
        return -params.A * params.kappa / (params.kappa + params.A * tau);
    }
    const double s = std::sqrt(params.kappa * params.phi);
    const double gamma = std::sqrt(params.phi / params.kappa);
    const double th = std::tanh(gamma * tau);
    return -s * (params.A + s * th) / (s + params.A * th);
}

namespace detail {

// One backward RK4 step of y' = f(t, y) from (t, y) to t - dt.
template <typename F>
double rk4_back(const F& f, double t, double y, double dt) {
    const double h = -dt;
    const double k1 = f(t, y);
    const double k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
    const double k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
    const double k4 = f(t + h, y + h * k3);
    return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

template <typename F>
double rk4_fwd(const F& f, double t, double y, double dt) {
    const double k1 = f(t, y);
    const double k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1);
    const double k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2);
    const double k4 = f(t + dt, y + dt * k3);
    return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline void require_covers_horizon(const ModelParams& params, const SampledPath& path,
                                   const char* who) {
    if (path.size() < 2) throw DomainError(std::string(who) + ": empty path");
    if (!path.grid.covers(0.0, params.T))
        throw DomainError(std::string(who) + ": grid does not cover [0, T]");
}

}  // namespace detail

// Solves the theta system on the price grid:
//   theta2 from the closed form,
//   theta1' = -(theta2/kappa)(theta1 - p), theta1(T) = p(T), backward RK4,
//   theta0' = -(theta1-p)^2/(4 kappa) - 2 sigma^2 theta2, theta0(T) = 0,
//   integrated backward with the trapezoid rule.
// Terminal conditions hold exactly at the last node.
inline ThetaCoefficients solve_thetas(const ModelParams& params, const SampledPath& price) {
    params.validate();
    detail::require_covers_horizon(params, price, "solve_thetas");

    const TimeGrid grid = price.grid;
    const std::size_t n = grid.n_steps;
    std::vector<double> th2(n + 1), th1(n + 1), th0(n + 1);

    for (std::size_t k = 0; k < n; ++k) th2[k] = theta2_at(params, grid.node(k));
    th2[n] = -params.A;

    const auto rhs1 = [&](double t, double y) {
        return -(theta2_at(params, t) / params.kappa) * (y - price.at(t));
    };
    th1[n] = price[n];
    for (std::size_t k = n; k-- > 0;)
        th1[k] = detail::rk4_back(rhs1, grid.node(k + 1), th1[k + 1], grid.dt);

    const auto integrand0 = [&](std::size_t k) {
        const double d = th1[k] - price[k];
        return d * d / (4.0 * params.kappa) + 2.0 * params.sigma * params.sigma * th2[k];
    };
    th0[n] = 0.0;
    for (std::size_t k = n; k-- > 0;)
        th0[k] = th0[k + 1] + 0.5 * grid.dt * (integrand0(k) + integrand0(k + 1));

    return ThetaCoefficients{SampledPath(grid, std::move(th0)), SampledPath(grid, std::move(th1)),
                             SampledPath(grid, std::move(th2))};
}

inline double value_function(const ThetaCoefficients& thetas, double t, double q) {
    return thetas.theta0.at(t) + thetas.theta1.at(t) * q + thetas.theta2.at(t) * q * q;
}

// Optimal feedback turnover rate nu*(t, q) = (theta1 - p)/(2 kappa) + theta2 q / kappa.
inline double optimal_rate(const ModelParams& params, const ThetaCoefficients& thetas,
                           const SampledPath& price, double t, double q) {
    params.validate();
    return (thetas.theta1.at(t) - price.at(t)) / (2.0 * params.kappa) +
           thetas.theta2.at(t) * q / params.kappa;
}

// Given a price path, produces the mean-field response: mean inventory E from
// E' = (theta1 + 2 theta2 E - p)/(2 kappa), E(0) = E0 (forward RK4), then
// Pi = theta1 + 2 theta2 E and Lambda = -E' read off the right-hand side.
inline MeanFieldState induced_order_flow(const ModelParams& params, const SampledPath& price) {
    const ThetaCoefficients thetas = solve_thetas(params, price);
    const TimeGrid grid = price.grid;
    const std::size_t n = grid.n_steps;

    const auto rhs = [&](double t, double e) {
        return (thetas.theta1.at(t) + 2.0 * theta2_at(params, t) * e - price.at(t)) /
               (2.0 * params.kappa);
    };
    std::vector<double> e(n + 1), pi(n + 1), lam(n + 1);
    e[0] = params.E0;
    for (std::size_t k = 0; k < n; ++k) e[k + 1] = detail::rk4_fwd(rhs, grid.node(k), e[k], grid.dt);
    for (std::size_t k = 0; k <= n; ++k) {
        pi[k] = thetas.theta1[k] + 2.0 * thetas.theta2[k] * e[k];
        lam[k] = -(pi[k] - price[k]) / (2.0 * params.kappa);
    }
    return MeanFieldState{SampledPath(grid, std::move(e)), SampledPath(grid, std::move(pi)),
                          SampledPath(grid, std::move(lam))};
}

// Formed price as a functional of the realized order flow:
//   p(t) = p0 + 2 phi E0 t - 2 phi \int_0^t (t-u) Lambda(u) du
//        + 2 kappa (Lambda(t) - Lambda(0)).
// The memory integral is two running trapezoid passes over Lambda.
inline SampledPath formed_price(const ModelParams& params, const SampledPath& flow, double p0) {
    params.validate();
    if (flow.size() < 2) throw DomainError("formed_price: empty flow path");
    if (!std::isfinite(p0)) throw InvalidParameterError("formed_price: non-finite p0");

    const TimeGrid grid = flow.grid;
    const std::vector<double> memory = cum_kernel_trapezoid(flow.values, grid.dt);
    std::vector<double> p(grid.n_nodes());
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double tau = static_cast<double>(k) * grid.dt;
        p[k] = p0 + 2.0 * params.phi * params.E0 * tau - 2.0 * params.phi * memory[k] +
               2.0 * params.kappa * (flow[k] - flow[0]);
    }
    return SampledPath(grid, std::move(p));
}

// Order flow consistent with a constant price, in closed form. Equals the
// exp-of-integral solution Lambda0 * exp(\int_0^t g) of kappa Lambda'' = phi
// Lambda with Lambda(0) = Lambda0, Lambda'(0) = phi E0 / kappa wherever that
// representation is defined.
inline double constant_price_flow_at(const ModelParams& params, double lambda0, double t) {
    params.validate();
    if (!(params.phi > 0.0))
        throw UnsupportedRegimeError("constant_price_flow: requires phi > 0");
    const double a = lambda0 * std::sqrt(params.kappa);
    const double b = std::sqrt(params.phi) * params.E0;
    if (std::fabs(a - b) <= 1e-12 * std::max({std::fabs(a), std::fabs(b), 1e-300}))
        throw DegenerateParameterError(
            "constant_price_flow: Lambda0*sqrt(kappa) - sqrt(phi)*E0 vanishes");
    const double gamma = std::sqrt(params.phi / params.kappa);
    return lambda0 * std::cosh(gamma * t) +
           (b / std::sqrt(params.kappa)) * std::sinh(gamma * t);
}

inline SampledPath constant_price_flow(const ModelParams& params, double lambda0,
                                       std::size_t n_steps) {
    const TimeGrid grid = TimeGrid::over(0.0, params.T, n_steps);
    return SampledPath::sample(
        grid, [&](double t) { return constant_price_flow_at(params, lambda0, t); });
}

// Residual of the compatibility condition: with p defined from the flow via
// formed_price and E integrated from E' = -Lambda,
//   r(t) = [theta1 + 2 theta2 E](t)
//        - [p0 + 2 phi E0 t - 2 phi \int_0^t (t-u) Lambda du - 2 kappa Lambda(0)].
// Equilibrium-consistent flows drive r to the discretization floor.
inline SampledPath compatibility_residual(const ModelParams& params, const SampledPath& flow,
                                          double p0) {
    const SampledPath price = formed_price(params, flow, p0);
    const ThetaCoefficients thetas = solve_thetas(params, price);
    const TimeGrid grid = flow.grid;

    const std::vector<double> flow_int = cum_trapezoid(flow.values, grid.dt);
    const std::vector<double> memory = cum_trapezoid(flow_int, grid.dt);
    std::vector<double> r(grid.n_nodes());
    for (std::size_t k = 0; k < r.size(); ++k) {
        const double tau = static_cast<double>(k) * grid.dt;
        const double mean_inventory = params.E0 - flow_int[k];
        const double lhs = thetas.theta1[k] + 2.0 * thetas.theta2[k] * mean_inventory;
        const double rhs = p0 + 2.0 * params.phi * params.E0 * tau -
                           2.0 * params.phi * memory[k] - 2.0 * params.kappa * flow[0];
        r[k] = lhs - rhs;
    }
    return SampledPath(grid, std::move(r));
}

// Analytic sensitivities of the formed price at time t for a fixed flow.
struct PriceSlopes {
    double dp_dkappa;
    double dp_dE0;
    double dp_dphi;
};

inline PriceSlopes comparative_statics(const ModelParams& params, const SampledPath& flow,
                                       double t) {
    params.validate();
    if (flow.size() < 2) throw DomainError("comparative_statics: empty flow path");
    const SampledPath memory(flow.grid, cum_kernel_trapezoid(flow.values, flow.grid.dt));
    const double tau = t - flow.grid.t0;
    PriceSlopes s{};
    s.dp_dkappa = 2.0 * (flow.at(t) - flow[0]);
    s.dp_dE0 = 2.0 * params.phi * tau;
    s.dp_dphi = 2.0 * params.E0 * tau - 2.0 * memory.at(t);
    return s;
}

}  // namespace flowprice
