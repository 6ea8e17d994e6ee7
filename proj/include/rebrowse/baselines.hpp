#pragma once
// The four heuristic comparators: per-user constant activity, fixed-threshold
// activity with its training sweep, most-recent-domain, and the per-user
// top-domain constant.

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rebrowse/activity.hpp"
#include "rebrowse/domain_features.hpp"
#include "rebrowse/history.hpp"
#include "rebrowse/metrics.hpp"
#include "rebrowse/types.hpp"

namespace rebrowse {

// Whichever per-user constant (active everywhere in-session, or inactive
// everywhere) matches the calibration grid better; ties go to active.
inline bool majority_activity_baseline(const SecondGrid& calibration_grid,
                                       const std::vector<Session>& calibration_sessions) {
    int64_t in_session = 0, active = 0;
    for (const auto& sess : calibration_sessions) {
        for (int64_t s = sess.start_second; s <= sess.end_second; ++s) {
            ++in_session;
            if (calibration_grid.active(s)) ++active;
        }
    }
    return 2 * active >= in_session;
}

// Second s is predicted active iff some history event landed in the trailing
// m minutes: exists visit with  s - 60m < visit_second <= s.
class ThresholdActiveBaseline {
  public:
    ThresholdActiveBaseline(const UserHistory& history, int minutes)
        : window_(static_cast<int64_t>(minutes) * 60) {
        seconds_.reserve(history.size());
        for (size_t i = 0; i < history.size(); ++i)
            seconds_.push_back(history.visit_second(i));
    }

    bool active(int64_t s) const {
        auto it = std::upper_bound(seconds_.begin(), seconds_.end(), s);
        if (it == seconds_.begin()) return false;
        return *std::prev(it) > s - window_;
    }

  private:
    std::vector<int64_t> seconds_;
    int64_t window_ = 0;
};

struct SweepInput {
    const SecondGrid* truth = nullptr;
    const UserHistory* history = nullptr;
};

inline BinaryMetrics threshold_in_session_metrics(const std::vector<SweepInput>& users,
                                                  int minutes) {
    BinaryMetrics pooled;
    for (const auto& u : users) {
        ThresholdActiveBaseline baseline(*u.history, minutes);
        for (const auto& sess : sessions(*u.truth)) {
            for (int64_t s = sess.start_second; s <= sess.end_second; ++s)
                pooled.add(baseline.active(s), u.truth->active(s));
        }
    }
    pooled.finish();
    return pooled;
}

// Picks the minute threshold in [1, max_minutes] maximizing pooled in-session
// F1 on the training users; ties go to the smaller threshold.
inline int sweep_threshold(const std::vector<SweepInput>& users, int max_minutes = 10) {
    int best_m = 1;
    double best_f1 = -1.0;
    for (int m = 1; m <= max_minutes; ++m) {
        double f1 = threshold_in_session_metrics(users, m).f1;
        if (f1 > best_f1) {
            best_f1 = f1;
            best_m = m;
        }
    }
    return best_m;
}

// Same contract as candidates(): needs at least one visit at or before s.
inline std::string most_recent_domain_baseline(int64_t s, const UserHistory& history) {
    return candidates(s, history).current.domain;
}

// The domain with the most truth-active time in the calibration grid; ties
// lexicographic; empty string when the grid has no active seconds.
inline std::string top_domain_baseline(const SecondGrid& calibration_grid) {
    std::map<std::string, int64_t> time_per_domain;
    for (int64_t s = calibration_grid.origin_second(); s < calibration_grid.end_second(); ++s)
        if (calibration_grid.active(s))
            ++time_per_domain[std::string(calibration_grid.domain(s))];
    std::string best;
    int64_t best_time = -1;
    for (const auto& [domain, t] : time_per_domain) {
        if (t > best_time) {  // map order makes ties lexicographic
            best_time = t;
            best = domain;
        }
    }
    return best;
}

}  // namespace rebrowse
