#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "flowprice/errors.hpp"

namespace flowprice {

using TimestampNs = std::int64_t;
constexpr TimestampNs kNsPerSecond = 1'000'000'000;

enum class TradeSide { buy_market, sell_market };

struct TradeEvent {
    TimestampNs ts = 0;
    double price = 0.0;
    double volume = 0.0;  // > 0
    TradeSide side = TradeSide::buy_market;
};

struct BookSnapshot {
    TimestampNs ts = 0;
    double bid_px = 0.0;
    double bid_qty = 0.0;
    double ask_px = 0.0;
    double ask_qty = 0.0;
};

// Trading-day partition: n_windows windows of window_len, each cut into
// n_buckets subintervals. Bucket k of window i is the half-open interval
// (t_{i,k}, t_{i,k+1}]; series points are indexed k = 0..n_buckets-1.
struct WindowGrid {
    TimestampNs day_start = 0;
    TimestampNs window_len = 0;
    TimestampNs subinterval = 0;
    std::size_t n_windows = 0;
    std::size_t n_buckets = 0;

    TimestampNs window_start(std::size_t i) const {
        return day_start + static_cast<TimestampNs>(i) * window_len;
    }
    TimestampNs window_end(std::size_t i) const { return window_start(i) + window_len; }
    TimestampNs node(std::size_t i, std::size_t k) const {
        return window_start(i) + static_cast<TimestampNs>(k) * subinterval;
    }
    // node time in seconds since day_start, for regression covariates
    double node_seconds(std::size_t i, std::size_t k) const {
        return static_cast<double>(node(i, k) - day_start) / static_cast<double>(kNsPerSecond);
    }
    void check_window(std::size_t i) const {
        if (i >= n_windows) throw DomainError("window index out of range");
    }
};

inline WindowGrid build_windows(TimestampNs day_start, TimestampNs day_len,
                                TimestampNs window_len, TimestampNs subinterval) {
    if (day_len <= 0 || window_len <= 0 || subinterval <= 0)
        throw ConfigurationError("build_windows: durations must be positive");
    if (day_len % window_len != 0)
        throw ConfigurationError("build_windows: window length must divide the day length");
    if (window_len % subinterval != 0)
        throw ConfigurationError("build_windows: subinterval must divide the window length");
    WindowGrid g;
    g.day_start = day_start;
    g.window_len = window_len;
    g.subinterval = subinterval;
    g.n_windows = static_cast<std::size_t>(day_len / window_len);
    g.n_buckets = static_cast<std::size_t>(window_len / subinterval);
    return g;
}

namespace detail {

// Bucket index within window i for a timestamp, honouring the left-open
// right-closed convention; returns -1 when ts falls outside the window.
inline long bucket_of(const WindowGrid& grid, std::size_t window, TimestampNs ts) {
    const TimestampNs offset = ts - grid.window_start(window);
    if (offset <= 0 || offset > grid.window_len) return -1;
    return static_cast<long>((offset - 1) / grid.subinterval);
}

inline bool integral_value(double v) {
    return std::floor(v) == v && std::fabs(v) < 9.0e15;
}

}  // namespace detail

// Trade Imbalance per bucket: signed sum of market-order volumes, buys minus
// sells. Integral volumes are accumulated in 64-bit integers.
inline std::vector<double> trade_imbalance(const std::vector<TradeEvent>& events,
                                           const WindowGrid& grid, std::size_t window) {
    grid.check_window(window);
    std::vector<std::int64_t> exact(grid.n_buckets, 0);
    std::vector<double> approx(grid.n_buckets, 0.0);
    bool all_integral = true;

    const TimestampNs lo = grid.window_start(window);
    const TimestampNs hi = grid.window_end(window);
    auto first = std::lower_bound(events.begin(), events.end(), lo,
                                  [](const TradeEvent& e, TimestampNs t) { return e.ts <= t; });
    for (auto it = first; it != events.end() && it->ts <= hi; ++it) {
        const long k = detail::bucket_of(grid, window, it->ts);
        if (k < 0) continue;
        const double signed_vol = it->side == TradeSide::buy_market ? it->volume : -it->volume;
        approx[static_cast<std::size_t>(k)] += signed_vol;
        if (all_integral && detail::integral_value(it->volume))
            exact[static_cast<std::size_t>(k)] += static_cast<std::int64_t>(signed_vol);
        else
            all_integral = false;
    }
    if (all_integral)
        for (std::size_t k = 0; k < approx.size(); ++k)
            approx[k] = static_cast<double>(exact[k]);
    return approx;
}

// Top-of-book contribution of one snapshot transition.
inline double ofi_contribution(const BookSnapshot& prev, const BookSnapshot& cur) {
    double e = 0.0;
    if (cur.bid_px >= prev.bid_px) e += cur.bid_qty;
    if (cur.bid_px <= prev.bid_px) e -= prev.bid_qty;
    if (cur.ask_px <= prev.ask_px) e -= cur.ask_qty;
    if (cur.ask_px >= prev.ask_px) e += prev.ask_qty;
    return e;
}

// Order Flow Imbalance per bucket: sum of e_n over snapshot pairs whose later
// timestamp lands in the bucket. Requires a snapshot at or before the window
// start to seed the previous state.
inline std::vector<double> ofi_series(const std::vector<BookSnapshot>& snapshots,
                                      const WindowGrid& grid, std::size_t window) {
    grid.check_window(window);
    const TimestampNs lo = grid.window_start(window);
    const TimestampNs hi = grid.window_end(window);

    auto after_lo =
        std::lower_bound(snapshots.begin(), snapshots.end(), lo,
                         [](const BookSnapshot& s, TimestampNs t) { return s.ts <= t; });
    if (after_lo == snapshots.begin())
        throw MissingSeedError("ofi_series: no snapshot at or before the window start");
    auto it = after_lo - 1;  // seed

    std::vector<double> out(grid.n_buckets, 0.0);
    for (auto cur = it + 1; cur != snapshots.end() && cur->ts <= hi; ++cur) {
        const long k = detail::bucket_of(grid, window, cur->ts);
        if (k >= 0) out[static_cast<std::size_t>(k)] += ofi_contribution(*it, *cur);
        it = cur;
    }
    return out;
}

// Market supply rate is the additive opposite of the order-flow metric.
inline std::vector<double> lambda_series(const std::vector<double>& metric) {
    std::vector<double> out(metric.size());
    for (std::size_t k = 0; k < metric.size(); ++k) out[k] = -metric[k];
    return out;
}

// Midprice sampled at the window's series nodes t_{i,k}, k = 0..n_buckets-1,
// from the last snapshot at or before each node.
inline std::vector<double> sample_midprice(const std::vector<BookSnapshot>& snapshots,
                                           const WindowGrid& grid, std::size_t window) {
    grid.check_window(window);
    std::vector<double> out(grid.n_buckets, 0.0);
    auto it = snapshots.begin();
    const BookSnapshot* last = nullptr;
    for (std::size_t k = 0; k < grid.n_buckets; ++k) {
        const TimestampNs node = grid.node(window, k);
        while (it != snapshots.end() && it->ts <= node) {
            last = &*it;
            ++it;
        }
        if (last == nullptr)
            throw MissingSeedError("sample_midprice: no snapshot at or before a series node");
        out[k] = 0.5 * (last->bid_px + last->ask_px);
    }
    return out;
}

}  // namespace flowprice
