#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "flowprice/errors.hpp"
#include "flowprice/finite_pop.hpp"
#include "flowprice/grid.hpp"
#include "flowprice/mfg.hpp"
#include "flowprice/params.hpp"
#include "flowprice/quad.hpp"
#include "flowprice/rng.hpp"

namespace flowprice {

struct SimConfig {
    std::uint64_t seed = 0;
    std::size_t n_paths = 1;
    TimeGrid grid;

    void validate() const {
        if (n_paths < 1) throw ConfigurationError("SimConfig: n_paths must be >= 1");
        if (grid.n_steps < 1) throw ConfigurationError("SimConfig: grid is empty");
    }
};

// Initial inventory distribution: const:v, normal:mean:sd, uniform:a:b.
struct InitialDist {
    enum class Kind { constant, normal, uniform };
    Kind kind = Kind::constant;
    double a = 0.0;
    double b = 0.0;

    static InitialDist constant(double v) { return {Kind::constant, v, 0.0}; }
    static InitialDist normal(double mean, double sd) { return {Kind::normal, mean, sd}; }
    static InitialDist uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }

    void validate() const {
        if (!std::isfinite(a) || !std::isfinite(b))
            throw ConfigurationError("InitialDist: non-finite parameter");
        if (kind == Kind::normal && b < 0.0)
            throw ConfigurationError("InitialDist: negative standard deviation");
        if (kind == Kind::uniform && !(b >= a))
            throw ConfigurationError("InitialDist: empty uniform range");
    }

    double sample(Xoshiro256pp& rng) const {
        switch (kind) {
            case Kind::constant: return a;
            case Kind::normal: return a + b * rng.next_gaussian();
            case Kind::uniform: return a + (b - a) * rng.next_double();
        }
        throw ConfigurationError("InitialDist: invalid sampler spec");
    }
};

struct Policy {
    enum class Kind { zero, feedback_optimal, rate_table };
    Kind kind = Kind::zero;
    SampledPath table;  // deterministic rate nu(t) when kind == rate_table

    static Policy zero() { return Policy{}; }
    static Policy feedback() { return Policy{Kind::feedback_optimal, {}}; }
    static Policy rates(SampledPath nu) { return Policy{Kind::rate_table, std::move(nu)}; }
};

// Population sample paths, row-major n_paths x (n_steps + 1); noise holds the
// raw Brownian increments (n_paths x n_steps) actually consumed.
struct ParticleEnsemble {
    TimeGrid grid;
    std::size_t n_paths = 0;
    std::vector<double> inventories;
    std::vector<double> cash;
    std::vector<double> controls;
    std::vector<double> noise;

    std::size_t n_nodes() const { return grid.n_nodes(); }
    double q(std::size_t path, std::size_t k) const { return inventories[path * n_nodes() + k]; }
    double c(std::size_t path, std::size_t k) const { return cash[path * n_nodes() + k]; }
    double nu(std::size_t path, std::size_t k) const { return controls[path * n_nodes() + k]; }
    double dW(std::size_t path, std::size_t k) const { return noise[path * grid.n_steps + k]; }
    double wealth(std::size_t path, std::size_t k, const SampledPath& price) const {
        return c(path, k) + q(path, k) * price[k];
    }
};

// Euler-Maruyama simulation of the inventory/cash dynamics under the chosen
// policy. Each path draws from an independent stream derived from
// (seed, path index); sigma = 0 consumes no randomness beyond q0 sampling.
inline ParticleEnsemble simulate_population(const ModelParams& params, const SampledPath& price,
                                            const Policy& policy, const SimConfig& cfg,
                                            const InitialDist& q0_sampler) {
    params.validate();
    cfg.validate();
    q0_sampler.validate();
    if (!price.grid.same_as(cfg.grid))
        throw DomainError("simulate_population: price not on the simulation grid");
    if (policy.kind == Policy::Kind::rate_table && !policy.table.grid.same_as(cfg.grid))
        throw ConfigurationError("simulate_population: rate table not on the simulation grid");

    ThetaCoefficients thetas;
    if (policy.kind == Policy::Kind::feedback_optimal) thetas = solve_thetas(params, price);

    const std::size_t n = cfg.grid.n_steps;
    const std::size_t nn = n + 1;
    ParticleEnsemble ens;
    ens.grid = cfg.grid;
    ens.n_paths = cfg.n_paths;
    ens.inventories.assign(cfg.n_paths * nn, 0.0);
    ens.cash.assign(cfg.n_paths * nn, 0.0);
    ens.controls.assign(cfg.n_paths * nn, 0.0);
    ens.noise.assign(cfg.n_paths * n, 0.0);

    const double dt = cfg.grid.dt;
    const double sqrt_dt = std::sqrt(dt);
    for (std::size_t i = 0; i < cfg.n_paths; ++i) {
        Xoshiro256pp rng = Xoshiro256pp::stream(cfg.seed, i);
        double* q = &ens.inventories[i * nn];
        double* c = &ens.cash[i * nn];
        double* v = &ens.controls[i * nn];
        double* w = &ens.noise[i * n];

        q[0] = q0_sampler.sample(rng);
        c[0] = 0.0;
        for (std::size_t k = 0; k <= n; ++k) {
            switch (policy.kind) {
                case Policy::Kind::zero: v[k] = 0.0; break;
                case Policy::Kind::feedback_optimal:
                    v[k] = (thetas.theta1[k] - price[k]) / (2.0 * params.kappa) +
                           thetas.theta2[k] * q[k] / params.kappa;
                    break;
                case Policy::Kind::rate_table: v[k] = policy.table[k]; break;
            }
            if (k == n) break;
            w[k] = params.sigma > 0.0 ? sqrt_dt * rng.next_gaussian() : 0.0;
            q[k + 1] = q[k] + v[k] * dt + params.sigma * w[k];
            c[k + 1] = c[k] - (price[k] + params.kappa * v[k]) * v[k] * dt;
        }
    }
    return ens;
}

struct PayoffEstimate {
    double mean;
    double std_error;
    std::size_t n_paths;
};

// Sample-mean payoff under Eq. J = E[q_T (p_T - A q_T) - \int (kappa nu^2 +
// phi q^2 + nu p) dt], running cost by the trapezoid rule on node values.
inline PayoffEstimate estimate_payoff(const ModelParams& params, const SampledPath& price,
                                      const ParticleEnsemble& ens) {
    params.validate();
    if (!price.grid.same_as(ens.grid))
        throw DomainError("estimate_payoff: price grid does not match the ensemble");

    const std::size_t n = ens.grid.n_steps;
    const double dt = ens.grid.dt;
    std::vector<double> payoff(ens.n_paths);
    for (std::size_t i = 0; i < ens.n_paths; ++i) {
        double run = 0.0;
        for (std::size_t k = 0; k <= n; ++k) {
            const double weight = (k == 0 || k == n) ? 0.5 : 1.0;
            const double nu = ens.nu(i, k);
            const double q = ens.q(i, k);
            run += weight * (params.kappa * nu * nu + params.phi * q * q + nu * price[k]);
        }
        const double qT = ens.q(i, n);
        payoff[i] = qT * (price[n] - params.A * qT) - run * dt;
    }

    double mean = 0.0;
    for (double j : payoff) mean += j;
    mean /= static_cast<double>(ens.n_paths);
    double var = 0.0;
    for (double j : payoff) var += (j - mean) * (j - mean);
    const double std_error =
        ens.n_paths > 1
            ? std::sqrt(var / static_cast<double>(ens.n_paths - 1)) /
                  std::sqrt(static_cast<double>(ens.n_paths))
            : 0.0;
    return {mean, std_error, ens.n_paths};
}

// Market-clearing residual (1/N) sum_i nu_{i,k} + Lambda_k per node.
inline SampledPath clearing_residual(const ParticleEnsemble& ens, const SampledPath& flow) {
    if (!flow.grid.same_as(ens.grid))
        throw DomainError("clearing_residual: flow grid does not match the ensemble");
    std::vector<double> r(ens.n_nodes(), 0.0);
    for (std::size_t k = 0; k < r.size(); ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < ens.n_paths; ++i) s += ens.nu(i, k);
        r[k] = s / static_cast<double>(ens.n_paths) + flow[k];
    }
    return SampledPath(ens.grid, std::move(r));
}

// Discrete quadratic-variation ratio QV(p)/QV(Lambda); approaches 4 kappa^2
// when p is driven by the flow through the formed-price recursion.
inline double qv_ratio(const SampledPath& p_path, const SampledPath& lambda_path) {
    if (!p_path.grid.same_as(lambda_path.grid))
        throw DomainError("qv_ratio: paths on different grids");
    auto qv = [](const SampledPath& x) {
        double s = 0.0;
        for (std::size_t k = 1; k < x.size(); ++k) {
            const double d = x[k] - x[k - 1];
            s += d * d;
        }
        return s;
    };
    const double qv_lambda = qv(lambda_path);
    if (qv_lambda == 0.0) throw UndefinedRatioError("qv_ratio: flow has zero quadratic variation");
    return qv(p_path) / qv_lambda;
}

// ---- Nash-optimality (Gateaux) residuals -----------------------------------

// Linear permanent price impact: p_t(nu) = ptilde_t + (alpha/N) sum_j q^j_t.
struct LinearImpactPrice {
    SampledPath ptilde;
};

// Deterministic per-agent control path with its initial inventory.
struct AgentControls {
    double q0 = 0.0;
    SampledPath rate;
};

namespace detail {

// Payoff of one agent under the linear-impact price map, sigma^i = 0.
// Inventories are trapezoid integrals of the rates, so the payoff is an exact
// quadratic polynomial in any control perturbation.
inline double linear_impact_payoff(const FinitePopParams& params, const LinearImpactPrice& map,
                                   const std::vector<AgentControls>& agents, std::size_t agent) {
    const TimeGrid grid = map.ptilde.grid;
    const std::size_t n = grid.n_steps;
    const double dt = grid.dt;
    const double inv_n = 1.0 / static_cast<double>(params.N);

    std::vector<double> sum_q(n + 1, 0.0);
    std::vector<double> q_i;
    for (std::size_t j = 0; j < agents.size(); ++j) {
        std::vector<double> q = cum_trapezoid(agents[j].rate.values, dt);
        for (std::size_t k = 0; k <= n; ++k) {
            q[k] += agents[j].q0;
            sum_q[k] += q[k];
        }
        if (j == agent) q_i = std::move(q);
    }

    double run = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
        const double weight = (k == 0 || k == n) ? 0.5 : 1.0;
        const double p = map.ptilde[k] + params.alpha * inv_n * sum_q[k];
        const double nu = agents[agent].rate[k];
        run += weight * (params.base.kappa * nu * nu + params.base.phi * q_i[k] * q_i[k] +
                         nu * p);
    }
    const double pT = map.ptilde[n] + params.alpha * inv_n * sum_q[n];
    return q_i[n] * (pT - params.base.A * q_i[n]) - run * dt;
}

}  // namespace detail

// Directional derivative of agent i's payoff along `direction`, estimated by
// forward differences over eps_ladder and extrapolated with two-point
// Richardson, which is exact here since the payoff is quadratic in eps.
inline double gateaux_residual(const FinitePopParams& params, const LinearImpactPrice& price_map,
                               const std::vector<AgentControls>& candidate,
                               const SampledPath& direction, std::size_t agent,
                               const std::vector<double>& eps_ladder) {
    params.validate();
    if (eps_ladder.size() < 2)
        throw ConfigurationError("gateaux_residual: eps ladder needs at least two levels");
    if (agent >= candidate.size()) throw DomainError("gateaux_residual: agent index out of range");
    if (static_cast<std::size_t>(params.N) != candidate.size())
        throw ConfigurationError("gateaux_residual: candidate size must equal N");
    const TimeGrid grid = price_map.ptilde.grid;
    if (!direction.grid.same_as(grid))
        throw DomainError("gateaux_residual: direction not on the price grid");
    for (const auto& a : candidate)
        if (!a.rate.grid.same_as(grid))
            throw DomainError("gateaux_residual: candidate rates not on the price grid");

    const double j0 = detail::linear_impact_payoff(params, price_map, candidate, agent);
    auto fd = [&](double eps) {
        std::vector<AgentControls> bumped = candidate;
        for (std::size_t k = 0; k < bumped[agent].rate.size(); ++k)
            bumped[agent].rate[k] += eps * direction[k];
        return (detail::linear_impact_payoff(params, price_map, bumped, agent) - j0) / eps;
    };

    const double e1 = eps_ladder[eps_ladder.size() - 2];
    const double e2 = eps_ladder[eps_ladder.size() - 1];
    if (!(e1 != e2) || e1 == 0.0 || e2 == 0.0)
        throw ConfigurationError("gateaux_residual: ladder levels must be distinct and nonzero");
    const double r1 = fd(e1);
    const double r2 = fd(e2);
    return (e1 * r2 - e2 * r1) / (e1 - e2);
}

// Symmetric candidate: every agent starts at E_N0 and trades the slope of the
// mean-inventory solution. The terminal boundary coefficient is the
// first-order-condition value A - alpha/(2N), which is what makes the Gateaux
// derivative vanish in every direction.
inline std::vector<AgentControls> symmetric_equilibrium_candidate(const FinitePopParams& params,
                                                                  const TimeGrid& grid) {
    const double a_eff = params.base.A - params.alpha / (2.0 * static_cast<double>(params.N));
    const MeanInventorySolution sol = solve_mean_inventory_ode(params, a_eff);
    const SampledPath rate =
        SampledPath::sample(grid, [&](double t) { return sol.deriv(t); });
    return std::vector<AgentControls>(static_cast<std::size_t>(params.N),
                                      AgentControls{params.E_N0, rate});
}

}  // namespace flowprice
