#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "flowprice/errors.hpp"
#include "flowprice/orderflow.hpp"

namespace flowprice {

struct IngestOptions {
    bool skip_bad = false;  // downgrade bad rows to counted skips
};

struct IngestStats {
    std::size_t rows = 0;
    std::size_t skipped = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.push_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    }
    return out;
}

inline std::optional<double> parse_double(std::string_view s) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
        return std::nullopt;
    return v;
}

inline bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
}

// days since 1970-01-01 for a civil date (Gregorian, proleptic)
inline std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

// ISO-8601 timestamp (UTC): YYYY-MM-DD[T ]HH:MM:SS[.fraction][Z]
inline std::optional<TimestampNs> parse_iso8601(std::string_view s) {
    auto num = [&](std::size_t pos, std::size_t len, int& out) {
        if (pos + len > s.size()) return false;
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
            v = v * 10 + (s[i] - '0');
        }
        out = v;
        return true;
    };
    int Y, M, D, h, m, sec;
    if (s.size() < 19) return std::nullopt;
    if (!num(0, 4, Y) || s[4] != '-' || !num(5, 2, M) || s[7] != '-' || !num(8, 2, D))
        return std::nullopt;
    if (s[10] != 'T' && s[10] != ' ') return std::nullopt;
    if (!num(11, 2, h) || s[13] != ':' || !num(14, 2, m) || s[16] != ':' || !num(17, 2, sec))
        return std::nullopt;
    if (M < 1 || M > 12 || D < 1 || D > 31 || h > 23 || m > 59 || sec > 60) return std::nullopt;

    std::int64_t frac_ns = 0;
    std::size_t pos = 19;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        std::int64_t scale = 100'000'000;
        std::size_t digits = 0;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
            if (digits < 9) {
                frac_ns += scale * (s[pos] - '0');
                scale /= 10;
            }
            ++digits;
            ++pos;
        }
        if (digits == 0) return std::nullopt;
    }
    if (pos < s.size() && (s[pos] == 'Z' || s[pos] == 'z')) ++pos;
    if (pos != s.size()) return std::nullopt;

    const std::int64_t days = days_from_civil(Y, M, D);
    return (((days * 24 + h) * 60 + m) * 60 + sec) * kNsPerSecond + frac_ns;
}

enum class TsFormat { unknown, nanoseconds, iso8601 };

inline std::optional<TimestampNs> parse_ts(std::string_view s, TsFormat& fmt) {
    if (fmt == TsFormat::unknown) fmt = all_digits(s) ? TsFormat::nanoseconds : TsFormat::iso8601;
    if (fmt == TsFormat::nanoseconds) {
        if (!all_digits(s)) return std::nullopt;
        std::int64_t v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
        return v;
    }
    return parse_iso8601(s);
}

[[noreturn]] inline void bad_row(const std::string& path, long row, const std::string& what) {
    throw DataValidationError(path + ": row " + std::to_string(row) + ": " + what, row);
}

}  // namespace detail

// Trades CSV: header `ts,price,volume,side`, side in {B, S}. Timestamps are
// ISO-8601 or integer nanoseconds, detected from the first data row and then
// required to stay consistent. Rows failing validation abort with the row
// number unless opts.skip_bad downgrades them to counted skips.
inline std::vector<TradeEvent> read_trades_csv(const std::string& path,
                                               const IngestOptions& opts = {},
                                               IngestStats* stats = nullptr) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("cannot open trades file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataValidationError(path + ": empty file", 0);
    {
        auto h = detail::split_csv(line);
        if (h.size() != 4 || h[0] != "ts" || h[1] != "price" || h[2] != "volume" || h[3] != "side")
            detail::bad_row(path, 1, "expected header ts,price,volume,side");
    }

    std::vector<TradeEvent> out;
    detail::TsFormat fmt = detail::TsFormat::unknown;
    long row = 1;
    IngestStats local;
    while (std::getline(in, line)) {
        ++row;
        if (detail::trim(line).empty()) continue;
        ++local.rows;
        const auto f = detail::split_csv(line);
        auto reject = [&](const std::string& what) {
            if (!opts.skip_bad) detail::bad_row(path, row, what);
            ++local.skipped;
        };
        if (f.size() != 4) {
            reject("expected 4 fields");
            continue;
        }
        const auto ts = detail::parse_ts(f[0], fmt);
        const auto price = detail::parse_double(f[1]);
        const auto volume = detail::parse_double(f[2]);
        if (!ts) {
            reject("bad timestamp");
            continue;
        }
        if (!price) {
            reject("bad price");
            continue;
        }
        if (!volume || !(*volume > 0.0)) {
            reject("volume must be > 0");
            continue;
        }
        TradeSide side;
        if (f[3] == "B")
            side = TradeSide::buy_market;
        else if (f[3] == "S")
            side = TradeSide::sell_market;
        else {
            reject("side must be B or S");
            continue;
        }
        out.push_back(TradeEvent{*ts, *price, *volume, side});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const TradeEvent& a, const TradeEvent& b) { return a.ts < b.ts; });
    if (stats) *stats = local;
    return out;
}

// Book CSV: header `ts,bid_px,bid_qty,ask_px,ask_qty`. Missing fields and
// crossed books (bid above ask) are rejected per row.
inline std::vector<BookSnapshot> read_book_csv(const std::string& path,
                                               const IngestOptions& opts = {},
                                               IngestStats* stats = nullptr) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("cannot open book file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataValidationError(path + ": empty file", 0);
    {
        auto h = detail::split_csv(line);
        if (h.size() != 5 || h[0] != "ts" || h[1] != "bid_px" || h[2] != "bid_qty" ||
            h[3] != "ask_px" || h[4] != "ask_qty")
            detail::bad_row(path, 1, "expected header ts,bid_px,bid_qty,ask_px,ask_qty");
    }

    std::vector<BookSnapshot> out;
    detail::TsFormat fmt = detail::TsFormat::unknown;
    long row = 1;
    IngestStats local;
    while (std::getline(in, line)) {
        ++row;
        if (detail::trim(line).empty()) continue;
        ++local.rows;
        const auto f = detail::split_csv(line);
        auto reject = [&](const std::string& what) {
            if (!opts.skip_bad) detail::bad_row(path, row, what);
            ++local.skipped;
        };
        if (f.size() != 5) {
            reject("expected 5 fields");
            continue;
        }
        const auto ts = detail::parse_ts(f[0], fmt);
        const auto bid_px = detail::parse_double(f[1]);
        const auto bid_qty = detail::parse_double(f[2]);
        const auto ask_px = detail::parse_double(f[3]);
        const auto ask_qty = detail::parse_double(f[4]);
        if (!ts) {
            reject("bad timestamp");
            continue;
        }
        if (!bid_px || !bid_qty || !ask_px || !ask_qty) {
            reject("missing or malformed quote field");
            continue;
        }
        if (*bid_qty < 0.0 || *ask_qty < 0.0) {
            reject("negative quantity");
            continue;
        }
        if (*bid_px > *ask_px) {
            reject("crossed book");
            continue;
        }
        out.push_back(BookSnapshot{*ts, *bid_px, *bid_qty, *ask_px, *ask_qty});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const BookSnapshot& a, const BookSnapshot& b) { return a.ts < b.ts; });
    if (stats) *stats = local;
    return out;
}

}  // namespace flowprice
