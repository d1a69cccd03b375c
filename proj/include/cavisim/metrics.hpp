#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "cavisim/distance.hpp"
#include "cavisim/errors.hpp"
#include "cavisim/volume.hpp"

namespace cavisim {

/// Dice overlap 2|a&b| / (|a|+|b|). Two empty masks are in perfect
/// agreement about the absence of foreground, so that case returns
/// `empty_value` (1.0 unless configured otherwise).
inline double dice(const BinaryMask& a, const BinaryMask& b, double empty_value = 1.0) {
    require_same_grid(a.grid, b.grid, "dice");
    std::size_t na = 0, nb = 0, overlap = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        na += (a[i] != 0);
        nb += (b[i] != 0);
        overlap += (a[i] != 0 && b[i] != 0);
    }
    if (na + nb == 0)
        return empty_value;
    return 2.0 * static_cast<double>(overlap) / static_cast<double>(na + nb);
}

/// Mean of the raters' signed distance fields (negative inside). Exposed so
/// callers can inspect the consensus before thresholding.
inline ScalarVolume mean_signed_distance(const std::vector<BinaryMask>& raters) {
    if (raters.size() < 2)
        throw invalid_parameter("consensus requires at least two masks");
    for (std::size_t r = 1; r < raters.size(); ++r)
        require_same_grid(raters[0].grid, raters[r].grid, "consensus");
    std::vector<double> acc(raters[0].size(), 0.0);
    for (const BinaryMask& mask : raters) {
        const ScalarVolume d = signed_distance(mask);
        for (std::size_t i = 0; i < acc.size(); ++i)
            acc[i] += d[i];
    }
    ScalarVolume out(raters[0].grid);
    const auto n = static_cast<double>(raters.size());
    for (std::size_t i = 0; i < acc.size(); ++i)
        out[i] = static_cast<float>(acc[i] / n);
    return out;
}

/// Shape-based consensus of binary labels: a voxel is foreground iff the
/// mean of the per-rater signed distances is <= 0 (ties inclusive).
inline BinaryMask sba_consensus(const std::vector<BinaryMask>& raters) {
    const ScalarVolume mean = mean_signed_distance(raters);
    BinaryMask out(mean.grid);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = (mean[i] <= 0.0f) ? 1 : 0;
    return out;
}

enum class TestMethod {
    automatic, ///< exact when n*m <= 400, otherwise normal approximation
    exact,
    normal,
};

struct TestOptions {
    double alpha = 0.05;
    int comparisons = 1; ///< Bonferroni divisor applied to alpha
    TestMethod method = TestMethod::automatic;
};

struct TestResult {
    double u = 0.0;              ///< U statistic of the first sample
    double p_value = 1.0;        ///< one-tailed, alternative: first sample greater
    double adjusted_alpha = 0.0; ///< alpha / comparisons
    bool reject = false;
    bool exact = false; ///< which p-value path was taken
};

inline double bonferroni(double alpha, int comparisons) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw invalid_parameter("alpha must be in (0, 1)");
    if (comparisons < 1)
        throw invalid_parameter("comparison count must be >= 1");
    return alpha / comparisons;
}

namespace detail {

// Midranks of the pooled samples, doubled so ties stay integral.
inline std::vector<std::int64_t> doubled_midranks(const std::vector<double>& pooled_sorted) {
    const std::size_t n = pooled_sorted.size();
    std::vector<std::int64_t> out(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && pooled_sorted[j] == pooled_sorted[i])
            ++j;
        // ranks i+1 .. j (1-based); midrank = (i+1+j)/2, doubled = i+1+j
        const std::int64_t doubled = static_cast<std::int64_t>(i) + 1 + static_cast<std::int64_t>(j);
        for (std::size_t k = i; k < j; ++k)
            out[k] = doubled;
        i = j;
    }
    return out;
}

// Exact null distribution by dynamic programming: the number of ways to pick
// n of the pooled doubled midranks with each possible doubled rank sum. This
// enumerates all C(n+m, n) group assignments, ties included.
inline double exact_upper_tail(const std::vector<std::int64_t>& doubled_ranks, std::size_t n,
                               std::int64_t doubled_rank_sum_observed) {
    const std::size_t total = doubled_ranks.size();
    std::int64_t max_sum = 0;
    for (std::int64_t r : doubled_ranks)
        max_sum += r;

    // ways[c][s] = #subsets of size c with doubled rank sum s
    std::vector<std::vector<std::uint64_t>> ways(
        n + 1, std::vector<std::uint64_t>(static_cast<std::size_t>(max_sum) + 1, 0));
    ways[0][0] = 1;
    for (std::size_t item = 0; item < total; ++item) {
        const auto r = static_cast<std::size_t>(doubled_ranks[item]);
        const std::size_t cmax = std::min(n, item + 1);
        for (std::size_t c = cmax; c >= 1; --c) {
            auto& row = ways[c];
            const auto& prev = ways[c - 1];
            for (std::size_t s = static_cast<std::size_t>(max_sum); s >= r; --s)
                row[s] += prev[s - r];
        }
    }

    std::uint64_t at_or_above = 0, all = 0;
    for (std::size_t s = 0; s <= static_cast<std::size_t>(max_sum); ++s) {
        all += ways[n][s];
        if (static_cast<std::int64_t>(s) >= doubled_rank_sum_observed)
            at_or_above += ways[n][s];
    }
    return static_cast<double>(at_or_above) / static_cast<double>(all);
}

inline double normal_upper_tail(double u, std::size_t n, std::size_t m,
                                const std::vector<std::int64_t>& doubled_ranks) {
    const double nn = static_cast<double>(n), mm = static_cast<double>(m);
    const double big_n = nn + mm;
    const double mean_u = nn * mm / 2.0;

    // Tie correction: sum over tie groups of (t^3 - t).
    double tie_term = 0.0;
    std::size_t i = 0;
    while (i < doubled_ranks.size()) {
        std::size_t j = i;
        while (j < doubled_ranks.size() && doubled_ranks[j] == doubled_ranks[i])
            ++j;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    const double var_u =
        nn * mm / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
    if (var_u <= 0.0)
        return u >= mean_u ? 1.0 : 0.0; // every pooled value tied
    const double z = (u - mean_u - 0.5) / std::sqrt(var_u); // continuity corrected
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

} // namespace detail

/// One-tailed Mann-Whitney U test of the alternative "x is stochastically
/// greater than y". The caller chooses the direction by argument order. Ranks
/// use midranks for ties; the exact p-value enumerates all group assignments
/// and is used when n*m <= 400, with a tie- and continuity-corrected normal
/// approximation beyond that.
inline TestResult mann_whitney_one_tailed(const std::vector<double>& x,
                                          const std::vector<double>& y,
                                          const TestOptions& options = {}) {
    if (x.empty() || y.empty())
        throw invalid_parameter("both samples must be nonempty");
    const std::size_t n = x.size(), m = y.size();

    std::vector<std::pair<double, int>> pooled;
    pooled.reserve(n + m);
    for (double v : x)
        pooled.emplace_back(v, 0);
    for (double v : y)
        pooled.emplace_back(v, 1);
    std::sort(pooled.begin(), pooled.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<double> values(pooled.size());
    for (std::size_t i = 0; i < pooled.size(); ++i)
        values[i] = pooled[i].first;
    const std::vector<std::int64_t> doubled_ranks = detail::doubled_midranks(values);

    std::int64_t doubled_rank_sum_x = 0;
    for (std::size_t i = 0; i < pooled.size(); ++i)
        if (pooled[i].second == 0)
            doubled_rank_sum_x += doubled_ranks[i];

    // U = R_x - n(n+1)/2, computed from the doubled sums so ties stay exact.
    const std::int64_t doubled_u =
        doubled_rank_sum_x - static_cast<std::int64_t>(n) * (static_cast<std::int64_t>(n) + 1);

    TestResult result;
    result.u = static_cast<double>(doubled_u) / 2.0;
    const bool use_exact = options.method == TestMethod::exact ||
                           (options.method == TestMethod::automatic && n * m <= 400);
    if (options.method == TestMethod::exact && n * m > 10000)
        throw invalid_parameter("exact rank-test enumeration is infeasible for n*m > 10000");
    if (use_exact) {
        result.exact = true;
        result.p_value = detail::exact_upper_tail(doubled_ranks, n, doubled_rank_sum_x);
    } else {
        result.exact = false;
        result.p_value = detail::normal_upper_tail(result.u, n, m, doubled_ranks);
    }
    result.adjusted_alpha = bonferroni(options.alpha, options.comparisons);
    result.reject = result.p_value < result.adjusted_alpha;
    return result;
}

struct MedianIqr {
    double median = 0.0;
    double iqr = 0.0;
};

/// Linear-interpolation quantile (the common "type 7" convention) at
/// fraction q of sorted data.
inline double quantile_type7(const std::vector<double>& sorted, double q) {
    const std::size_t n = sorted.size();
    if (n == 1)
        return sorted[0];
    const double h = q * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline MedianIqr median_iqr(std::vector<double> values) {
    if (values.empty())
        throw invalid_parameter("median/IQR of an empty sample");
    std::sort(values.begin(), values.end());
    return MedianIqr{quantile_type7(values, 0.5),
                     quantile_type7(values, 0.75) - quantile_type7(values, 0.25)};
}

} // namespace cavisim
