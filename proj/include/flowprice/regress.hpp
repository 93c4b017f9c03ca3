#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "flowprice/errors.hpp"
#include "flowprice/quad.hpp"

namespace flowprice {

struct DesignMatrix {
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;
    std::vector<double> target;

    std::size_t n_rows() const { return columns.empty() ? 0 : columns.front().size(); }
    std::size_t n_cols() const { return columns.size(); }
};

// Regression covariates of the formed-price model over one window:
//   S0 = 1, S1 = t_k, S2 = \int_{T_i}^{t_k} Lambda(u) (t_k - u) du,
//   S3 = Lambda(t_k), and optionally S4 = \int_{T_i}^{t_k} Lambda(u) du.
// S2 is assembled as t_k * I0_k - I1_k from running trapezoids of Lambda and
// u * Lambda, which is the exact factorization of the trapezoid on the kernel.
inline DesignMatrix build_covariates(const std::vector<double>& lambda,
                                     const std::vector<double>& times, bool include_s4) {
    if (lambda.size() < 2) throw DomainError("build_covariates: need at least 2 points");
    if (lambda.size() != times.size())
        throw DomainError("build_covariates: lambda and times lengths differ");
    const std::size_t n = lambda.size();
    const double dt = times[1] - times[0];
    if (!(dt > 0.0)) throw DomainError("build_covariates: times must be increasing");

    std::vector<double> u_lambda(n);
    for (std::size_t k = 0; k < n; ++k) u_lambda[k] = times[k] * lambda[k];
    const std::vector<double> i0 = cum_trapezoid(lambda, dt);
    const std::vector<double> i1 = cum_trapezoid(u_lambda, dt);

    DesignMatrix X;
    X.names = {"S0", "S1", "S2", "S3"};
    X.columns.assign(4, std::vector<double>(n));
    for (std::size_t k = 0; k < n; ++k) {
        X.columns[0][k] = 1.0;
        X.columns[1][k] = times[k];
        X.columns[2][k] = times[k] * i0[k] - i1[k];
        X.columns[3][k] = lambda[k];
    }
    if (include_s4) {
        X.names.push_back("S4");
        X.columns.push_back(i0);
    }
    return X;
}

struct RegressionFit {
    std::vector<double> coeffs;
    std::vector<double> std_errors;  // 0 for columns flagged collinear
    std::vector<double> residuals;
    std::vector<bool> collinear;
    double r2 = 0.0;
    double adj_r2 = 0.0;
    std::size_t n = 0;  // observations
    std::size_t p = 0;  // regressors, intercept included
    bool degenerate_target = false;
};

namespace detail {

constexpr double kCollinearityRatio = 1e-10;

// Least squares via column-pivoted Householder QR. Columns whose pivoted
// diagonal falls below kCollinearityRatio of the leading one get coefficient 0
// and a collinearity flag.
inline RegressionFit qr_least_squares(const DesignMatrix& X) {
    const std::size_t n = X.n_rows();
    const std::size_t p = X.n_cols();
    if (p == 0 || n == 0) throw DomainError("ols_fit: empty design");
    if (X.target.size() != n) throw DomainError("ols_fit: target length mismatch");
    if (n <= p) throw DomainError("ols_fit: underdetermined system (n <= p)");
    for (const auto& col : X.columns) {
        if (col.size() != n) throw DomainError("ols_fit: ragged design matrix");
        for (double v : col)
            if (!std::isfinite(v)) throw DomainError("ols_fit: non-finite design entry");
    }
    for (double v : X.target)
        if (!std::isfinite(v)) throw DomainError("ols_fit: non-finite target entry");

    std::vector<std::vector<double>> a = X.columns;  // column-major working copy
    std::vector<double> qty = X.target;
    std::vector<std::size_t> perm(p);
    std::iota(perm.begin(), perm.end(), 0);

    auto tail_norm2 = [&](std::size_t col, std::size_t from) {
        double s = 0.0;
        for (std::size_t i = from; i < n; ++i) s += a[col][i] * a[col][i];
        return s;
    };

    std::vector<double> diag(p, 0.0);
    std::size_t rank = p;
    for (std::size_t j = 0; j < p; ++j) {
        std::size_t best = j;
        double best_norm = tail_norm2(j, j);
        for (std::size_t c = j + 1; c < p; ++c) {
            const double nm = tail_norm2(c, j);
            if (nm > best_norm) {
                best = c;
                best_norm = nm;
            }
        }
        if (best != j) {
            std::swap(a[best], a[j]);
            std::swap(perm[best], perm[j]);
        }

        double alpha = std::sqrt(best_norm);
        if (a[j][j] > 0.0) alpha = -alpha;
        diag[j] = alpha;
        if (j == 0 || std::fabs(alpha) >= kCollinearityRatio * std::fabs(diag[0])) {
            // Householder vector v = x - alpha e_j, stored in place below the diagonal
            std::vector<double> v(n - j);
            v[0] = a[j][j] - alpha;
            for (std::size_t i = j + 1; i < n; ++i) v[i - j] = a[j][i];
            const double vn2 = best_norm - 2.0 * alpha * a[j][j] + alpha * alpha;
            if (vn2 > 0.0) {
                for (std::size_t c = j + 1; c < p; ++c) {
                    double dot = 0.0;
                    for (std::size_t i = j; i < n; ++i) dot += v[i - j] * a[c][i];
                    const double f = 2.0 * dot / vn2;
                    for (std::size_t i = j; i < n; ++i) a[c][i] -= f * v[i - j];
                }
                double dot = 0.0;
                for (std::size_t i = j; i < n; ++i) dot += v[i - j] * qty[i];
                const double f = 2.0 * dot / vn2;
                for (std::size_t i = j; i < n; ++i) qty[i] -= f * v[i - j];
            }
            a[j][j] = alpha;
            for (std::size_t i = j + 1; i < n; ++i) a[j][i] = 0.0;
        } else {
            rank = j;
            break;
        }
    }

    RegressionFit fit;
    fit.n = n;
    fit.p = p;
    fit.coeffs.assign(p, 0.0);
    fit.std_errors.assign(p, 0.0);
    fit.collinear.assign(p, false);
    for (std::size_t j = rank; j < p; ++j) fit.collinear[perm[j]] = true;

    // back-substitute R beta = Q^T y over the leading rank block
    std::vector<double> beta(rank, 0.0);
    for (std::size_t j = rank; j-- > 0;) {
        double s = qty[j];
        for (std::size_t c = j + 1; c < rank; ++c) s -= a[c][j] * beta[c];
        beta[j] = s / a[j][j];
    }
    for (std::size_t j = 0; j < rank; ++j) fit.coeffs[perm[j]] = beta[j];

    fit.residuals.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double yhat = 0.0;
        for (std::size_t c = 0; c < p; ++c) yhat += X.columns[c][i] * fit.coeffs[c];
        fit.residuals[i] = X.target[i] - yhat;
    }

    double mean_y = 0.0;
    for (double y : X.target) mean_y += y;
    mean_y /= static_cast<double>(n);
    double sst = 0.0, ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sst += (X.target[i] - mean_y) * (X.target[i] - mean_y);
        ssr += fit.residuals[i] * fit.residuals[i];
    }
    if (sst == 0.0) {
        fit.degenerate_target = true;
        fit.r2 = 0.0;
    } else {
        fit.r2 = 1.0 - ssr / sst;
    }
    fit.adj_r2 = 1.0 - (1.0 - fit.r2) * static_cast<double>(n - 1) / static_cast<double>(n - p);

    // standard errors from s^2 diag((R^T R)^{-1}); R^{-1} built column by
    // column via back substitution, diag entries are its squared row norms
    if (n > rank) {
        const double s2 = ssr / static_cast<double>(n - rank);
        std::vector<std::vector<double>> rinv(rank, std::vector<double>(rank, 0.0));
        for (std::size_t c = 0; c < rank; ++c) {
            rinv[c][c] = 1.0 / a[c][c];
            for (std::size_t r = c; r-- > 0;) {
                double s = 0.0;
                for (std::size_t k2 = r + 1; k2 <= c; ++k2) s -= a[k2][r] * rinv[c][k2];
                rinv[c][r] = s / a[r][r];
            }
        }
        for (std::size_t j = 0; j < rank; ++j) {
            double var = 0.0;
            for (std::size_t c = j; c < rank; ++c) var += rinv[c][j] * rinv[c][j];
            fit.std_errors[perm[j]] = std::sqrt(s2 * var);
        }
    }
    return fit;
}

}  // namespace detail

inline RegressionFit ols_fit(const DesignMatrix& X) { return detail::qr_least_squares(X); }

enum class BenchmarkMetric { TI, OFI };

// Price-difference benchmark: Delta p_k = b0 + b1 * metric_k over k = 1..n-1.
inline RegressionFit benchmark_fit(const std::vector<double>& metric,
                                   const std::vector<double>& midprice, BenchmarkMetric) {
    if (metric.size() != midprice.size())
        throw DomainError("benchmark_fit: series lengths differ");
    if (metric.size() < 2) throw DomainError("benchmark_fit: need at least 2 points");
    const std::size_t m = metric.size() - 1;
    DesignMatrix X;
    X.names = {"b0", "b1"};
    X.columns.assign(2, std::vector<double>(m));
    X.target.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        X.columns[0][k] = 1.0;
        X.columns[1][k] = metric[k + 1];
        X.target[k] = midprice[k + 1] - midprice[k];
    }
    return ols_fit(X);
}

struct AdfResult {
    double statistic = 0.0;
    std::size_t lags = 0;
    std::size_t n = 0;  // regression observations
    double critical_value_5pct = 0.0;
    bool reject_5pct = false;
};

namespace detail {

// 5% critical values of the Dickey-Fuller distribution for the regression with
// constant and linear trend; -3.43 at n = 250 per the tabulated value.
inline double adf_critical_5pct(std::size_t n) {
    if (n >= 200 && n <= 300) return -3.43;
    static const std::pair<double, double> table[] = {
        {25.0, -3.60}, {50.0, -3.50}, {100.0, -3.45}, {250.0, -3.43}, {500.0, -3.42}};
    const double asymptotic = -3.41;
    const double x = static_cast<double>(n);
    if (x <= table[0].first) return table[0].second;
    for (std::size_t i = 1; i < std::size(table); ++i) {
        if (x <= table[i].first) {
            const double w = (x - table[i - 1].first) / (table[i].first - table[i - 1].first);
            return table[i - 1].second + w * (table[i].second - table[i - 1].second);
        }
    }
    // beyond the table, interpolate to the asymptote in 1/n
    return asymptotic + (table[4].second - asymptotic) * (table[4].first / x);
}

}  // namespace detail

// Augmented Dickey-Fuller unit-root test on a series: regresses
// Delta y_t on {1, t, y_{t-1}, Delta y_{t-1} .. Delta y_{t-lags}} and reports
// the t-ratio of the y_{t-1} coefficient. The trend term matches the
// tabulated -3.43 critical value at n = 250.
inline AdfResult adf_test(const std::vector<double>& series, std::size_t lags = 0) {
    if (series.size() <= lags + 10) throw DomainError("adf_test: series too short");
    const std::size_t n_rows = series.size() - 1 - lags;

    DesignMatrix X;
    X.names = {"const", "trend", "y_lag1"};
    for (std::size_t j = 1; j <= lags; ++j) X.names.push_back("dlag" + std::to_string(j));
    X.columns.assign(3 + lags, std::vector<double>(n_rows));
    X.target.resize(n_rows);
    for (std::size_t r = 0; r < n_rows; ++r) {
        const std::size_t t = r + lags + 1;
        X.columns[0][r] = 1.0;
        X.columns[1][r] = static_cast<double>(t);
        X.columns[2][r] = series[t - 1];
        for (std::size_t j = 1; j <= lags; ++j)
            X.columns[2 + j][r] = series[t - j] - series[t - j - 1];
        X.target[r] = series[t] - series[t - 1];
    }

    const RegressionFit fit = ols_fit(X);
    if (fit.collinear[2] || fit.std_errors[2] == 0.0)
        throw DomainError("adf_test: zero-variance regressor");
    AdfResult res;
    res.statistic = fit.coeffs[2] / fit.std_errors[2];
    res.lags = lags;
    res.n = n_rows;
    res.critical_value_5pct = detail::adf_critical_5pct(n_rows);
    res.reject_5pct = res.statistic < res.critical_value_5pct;
    return res;
}

struct RelDiffResult {
    std::vector<double> series;
    double mean = 0.0;
};

// Squared relative difference ((p_model - p) / p)^2 per point and its mean.
inline RelDiffResult squared_rel_diff(const std::vector<double>& model,
                                      const std::vector<double>& midprice) {
    if (model.size() != midprice.size())
        throw DomainError("squared_rel_diff: series lengths differ");
    if (model.empty()) throw DomainError("squared_rel_diff: empty series");
    RelDiffResult out;
    out.series.resize(model.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < model.size(); ++k) {
        if (midprice[k] == 0.0)
            throw DomainError("squared_rel_diff: zero midprice at index " + std::to_string(k));
        const double d = (model[k] - midprice[k]) / midprice[k];
        out.series[k] = d * d;
        sum += d * d;
    }
    out.mean = sum / static_cast<double>(model.size());
    return out;
}

// One fitted window, tagged for aggregation.
struct FitRecord {
    std::string stock;
    std::string model;  // mfg_ti, mfg_ofi, fin_ti, fin_ofi, bench_ti, bench_ofi
    std::string day;
    std::size_t window = 0;
    RegressionFit fit;
    AdfResult adf;
    bool has_adf = false;
};

struct SummaryRow {
    std::string stock;
    std::string model;
    std::size_t n_fits = 0;
    std::vector<double> coeff_mean;
    std::vector<double> coeff_std;
    double r2_mean = 0.0, r2_std = 0.0;
    double adj_r2_mean = 0.0, adj_r2_std = 0.0;
    double adf_mean = 0.0, adf_std = 0.0;
};

namespace detail {

inline void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
    mean = 0.0;
    sd = 0.0;
    if (xs.empty()) return;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    sd = std::sqrt(var / static_cast<double>(xs.size() - 1));
}

}  // namespace detail

// Per-stock per-model mean and sample standard deviation across all windows
// and days, in canonical (stock, model, day, window) order.
inline std::vector<SummaryRow> aggregate_report(std::vector<FitRecord> fits) {
    if (fits.empty()) throw DomainError("aggregate_report: empty fit collection");
    std::sort(fits.begin(), fits.end(), [](const FitRecord& a, const FitRecord& b) {
        return std::tie(a.stock, a.model, a.day, a.window) <
               std::tie(b.stock, b.model, b.day, b.window);
    });

    std::vector<SummaryRow> rows;
    std::size_t i = 0;
    while (i < fits.size()) {
        std::size_t j = i;
        while (j < fits.size() && fits[j].stock == fits[i].stock &&
               fits[j].model == fits[i].model)
            ++j;

        const std::size_t n_coeffs = fits[i].fit.coeffs.size();
        std::vector<std::vector<double>> coeffs(n_coeffs);
        std::vector<double> r2s, adj_r2s, adfs;
        for (std::size_t k = i; k < j; ++k) {
            if (fits[k].fit.coeffs.size() != n_coeffs)
                throw DomainError("aggregate_report: inconsistent coefficient counts in group");
            for (std::size_t c = 0; c < n_coeffs; ++c) coeffs[c].push_back(fits[k].fit.coeffs[c]);
            r2s.push_back(fits[k].fit.r2);
            adj_r2s.push_back(fits[k].fit.adj_r2);
            if (fits[k].has_adf) adfs.push_back(fits[k].adf.statistic);
        }

        SummaryRow row;
        row.stock = fits[i].stock;
        row.model = fits[i].model;
        row.n_fits = j - i;
        row.coeff_mean.resize(n_coeffs);
        row.coeff_std.resize(n_coeffs);
        for (std::size_t c = 0; c < n_coeffs; ++c)
            detail::mean_std(coeffs[c], row.coeff_mean[c], row.coeff_std[c]);
        detail::mean_std(r2s, row.r2_mean, row.r2_std);
        detail::mean_std(adj_r2s, row.adj_r2_mean, row.adj_r2_std);
        detail::mean_std(adfs, row.adf_mean, row.adf_std);
        rows.push_back(std::move(row));
        i = j;
    }
    return rows;
}

}  // namespace flowprice
