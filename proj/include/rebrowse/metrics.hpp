#pragma once
// Evaluation statistics: binary confusion counts, the 4-class confusion
// matrix with a none-truth row, correlation/error summaries and exact time
// aggregation.

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rebrowse/domain_features.hpp"
#include "rebrowse/types.hpp"

namespace rebrowse {

struct BinaryMetrics {
    int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    double precision = 0.0, recall = 0.0, f1 = 0.0, accuracy = 0.0;

    void add(bool predicted, bool truth) {
        if (predicted && truth) ++tp;
        else if (predicted && !truth) ++fp;
        else if (!predicted && truth) ++fn;
        else ++tn;
    }

    void finish() {
        precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        f1 = (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        int64_t total = tp + fp + tn + fn;
        accuracy = total > 0 ? static_cast<double>(tp + tn) / static_cast<double>(total) : 0.0;
    }

    void merge(const BinaryMetrics& other) {
        tp += other.tp;
        fp += other.fp;
        tn += other.tn;
        fn += other.fn;
    }
};

enum class MetricScope { kInSession, kAllSeconds };

// Aligned per-second sequences; in_session flags select the in-session scope.
inline BinaryMetrics binary_metrics(std::span<const uint8_t> predictions,
                                    std::span<const uint8_t> truth,
                                    std::span<const uint8_t> in_session,
                                    MetricScope scope) {
    if (predictions.size() != truth.size() || truth.size() != in_session.size())
        throw std::invalid_argument("binary_metrics: sequences must be aligned");
    BinaryMetrics m;
    for (size_t i = 0; i < predictions.size(); ++i) {
        if (scope == MetricScope::kInSession && !in_session[i]) continue;
        m.add(predictions[i] != 0, truth[i] != 0);
    }
    m.finish();
    return m;
}

// Truth rows current/next/past1/past2/none; predicted columns the 4 classes.
struct ConfusionMatrix4 {
    int64_t counts[5][4] = {};

    void add(DomainClass truth, DomainClass predicted) {
        counts[static_cast<size_t>(truth)][static_cast<size_t>(predicted)] += 1;
    }
    int64_t total() const {
        int64_t n = 0;
        for (const auto& row : counts)
            for (int64_t c : row) n += c;
        return n;
    }
    int64_t row_sum(DomainClass truth) const {
        int64_t n = 0;
        for (int64_t c : counts[static_cast<size_t>(truth)]) n += c;
        return n;
    }
    int64_t diagonal() const {
        int64_t n = 0;
        for (int i = 0; i < 4; ++i) n += counts[i][i];
        return n;
    }
};

// Fraction of truth-active seconds where the predicted domain matches.
// A second predicted inactive (empty domain) counts as a miss.
inline double domain_accuracy(const SecondGrid& predicted, const SecondGrid& truth) {
    int64_t active = 0, correct = 0;
    for (int64_t s = truth.origin_second(); s < truth.end_second(); ++s) {
        if (!truth.active(s)) continue;
        ++active;
        if (predicted.active(s) && predicted.domain(s) == truth.domain(s)) ++correct;
    }
    return active > 0 ? static_cast<double>(correct) / static_cast<double>(active) : 0.0;
}

// Squared Pearson correlation of (actual, predicted). Needs >= 2 pairs and
// non-zero actual variance; a constant prediction yields 0.
inline double r_squared(std::span<const std::pair<double, double>> pairs) {
    size_t n = pairs.size();
    if (n < 2) throw std::invalid_argument("r_squared: need at least 2 pairs");
    double mean_a = 0.0, mean_p = 0.0;
    for (const auto& [a, p] : pairs) {
        mean_a += a;
        mean_p += p;
    }
    mean_a /= static_cast<double>(n);
    mean_p /= static_cast<double>(n);
    double cov = 0.0, var_a = 0.0, var_p = 0.0;
    for (const auto& [a, p] : pairs) {
        cov += (a - mean_a) * (p - mean_p);
        var_a += (a - mean_a) * (a - mean_a);
        var_p += (p - mean_p) * (p - mean_p);
    }
    if (var_a == 0.0) throw std::invalid_argument("r_squared: actual values are constant");
    if (var_p == 0.0) return 0.0;
    double r = cov / std::sqrt(var_a * var_p);
    return r * r;
}

// Coefficient of determination about the identity line y = x; secondary
// report column next to the Pearson-based value.
inline double r_squared_identity(std::span<const std::pair<double, double>> pairs) {
    if (pairs.size() < 2) throw std::invalid_argument("r_squared_identity: need at least 2 pairs");
    double mean_a = 0.0;
    for (const auto& [a, p] : pairs) mean_a += a;
    mean_a /= static_cast<double>(pairs.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (const auto& [a, p] : pairs) {
        ss_res += (a - p) * (a - p);
        ss_tot += (a - mean_a) * (a - mean_a);
    }
    if (ss_tot == 0.0) throw std::invalid_argument("r_squared_identity: actual values are constant");
    return 1.0 - ss_res / ss_tot;
}

enum class ErrorMode { kOnline, kPerDomain };

struct NormalizedErrors {
    std::vector<double> per_user;
    double mean = 0.0;
    double stddev = 0.0;  // population

    void finish() {
        if (per_user.empty()) return;
        double sum = 0.0;
        for (double v : per_user) sum += v;
        mean = sum / static_cast<double>(per_user.size());
        double sq = 0.0;
        for (double v : per_user) sq += (v - mean) * (v - mean);
        stddev = std::sqrt(sq / static_cast<double>(per_user.size()));
    }
};

// Online mode: |actual - predicted| / actual per user.
inline double normalized_abs_error_online(double actual, double predicted) {
    if (actual <= 0.0)
        throw std::invalid_argument("normalized_abs_error: actual total must be > 0");
    return std::abs(actual - predicted) / actual;
}

// Per-domain mode: sum of per-domain absolute errors over total actual time.
// The map carries (actual, predicted) per domain; domains absent on one side
// enter with 0.
inline double normalized_abs_error_per_domain(
    const std::map<std::string, std::pair<double, double>>& per_domain) {
    double total_actual = 0.0, err = 0.0;
    for (const auto& [domain, ap] : per_domain) {
        total_actual += ap.first;
        err += std::abs(ap.first - ap.second);
    }
    if (total_actual <= 0.0)
        throw std::invalid_argument("normalized_abs_error: actual total must be > 0");
    return err / total_actual;
}

// Exact integer second totals for one grid.
struct TimeTotals {
    int64_t online_seconds = 0;
    std::map<std::string, int64_t> per_domain;  // ordered for stable output
};

inline TimeTotals aggregate_time(const SecondGrid& grid) {
    TimeTotals totals;
    for (int64_t s = grid.origin_second(); s < grid.end_second(); ++s) {
        if (!grid.active(s)) continue;
        ++totals.online_seconds;
        ++totals.per_domain[std::string(grid.domain(s))];
    }
    return totals;
}

}  // namespace rebrowse
