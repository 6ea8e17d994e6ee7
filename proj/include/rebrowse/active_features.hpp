#pragma once
// Feature rows for the binary browser-active classifier.
//
// Layout (width 48):
//   [0]      log gap between previous and next history event
//   [1]      log time since the previous history event
//   [2]      log time until the next history event
//   [3..22]  previous-event domain one-hot (vocabulary order, OTHER = zeros)
//   [23..42] next-event domain one-hot
//   [43..47] productivity level of the previous event's domain
//
// Durations are whole seconds floored at 1 before the natural log; a missing
// previous/next event contributes ln(86400) and an all-zero domain one-hot.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "rebrowse/activity.hpp"
#include "rebrowse/feature_matrix.hpp"
#include "rebrowse/history.hpp"
#include "rebrowse/types.hpp"

namespace rebrowse {

constexpr int kActiveFeatureWidth = 48;

inline double log_duration_seconds(int64_t seconds) {
    return std::log(static_cast<double>(seconds < 1 ? 1 : seconds));
}

inline double missing_event_log_duration() {
    return std::log(static_cast<double>(kMissingEventSentinelSeconds));
}

struct ActiveFeatureRow {
    double log_gap_prev_next = 0.0;
    double log_since_prev = 0.0;
    double log_until_next = 0.0;
    std::array<uint8_t, DomainVocabulary::kDefaultSize> prev_domain_onehot{};
    std::array<uint8_t, DomainVocabulary::kDefaultSize> next_domain_onehot{};
    std::array<uint8_t, kProductivityLevels> productivity_onehot{};

    std::array<float, kActiveFeatureWidth> to_floats() const {
        std::array<float, kActiveFeatureWidth> out{};
        out[0] = static_cast<float>(log_gap_prev_next);
        out[1] = static_cast<float>(log_since_prev);
        out[2] = static_cast<float>(log_until_next);
        int c = 3;
        for (uint8_t b : prev_domain_onehot) out[static_cast<size_t>(c++)] = b;
        for (uint8_t b : next_domain_onehot) out[static_cast<size_t>(c++)] = b;
        for (uint8_t b : productivity_onehot) out[static_cast<size_t>(c++)] = b;
        return out;
    }
};

inline std::vector<bool> active_feature_binary_mask() {
    std::vector<bool> mask(kActiveFeatureWidth, true);
    mask[0] = mask[1] = mask[2] = false;
    return mask;
}

// "Previous" is the last visit at or before s (inclusive); "next" is the
// first visit strictly after s. Depends only on the history and the lookup
// tables, never on ground truth.
inline ActiveFeatureRow featurize_active(int64_t s, const UserHistory& history,
                                         const DomainVocabulary& vocabulary,
                                         const ProductivityMap& productivity) {
    ActiveFeatureRow row;
    int64_t prev = history.last_at_or_before(s);
    int64_t next = history.first_after(s);
    bool has_prev = prev >= 0;
    bool has_next = next < static_cast<int64_t>(history.size());

    if (has_prev)
        row.log_since_prev = log_duration_seconds(s - history.visit_second(static_cast<size_t>(prev)));
    else
        row.log_since_prev = missing_event_log_duration();

    if (has_next)
        row.log_until_next = log_duration_seconds(history.visit_second(static_cast<size_t>(next)) - s);
    else
        row.log_until_next = missing_event_log_duration();

    if (has_prev && has_next)
        row.log_gap_prev_next = log_duration_seconds(
            history.visit_second(static_cast<size_t>(next)) -
            history.visit_second(static_cast<size_t>(prev)));
    else
        row.log_gap_prev_next = missing_event_log_duration();

    ProductivityLevel level = ProductivityLevel::kNeutral;
    if (has_prev) {
        const auto& v = history.visits()[static_cast<size_t>(prev)];
        int idx = vocabulary.index_of(v.domain);
        if (idx >= 0 && idx < DomainVocabulary::kDefaultSize)
            row.prev_domain_onehot[static_cast<size_t>(idx)] = 1;
        level = productivity.level_of(v.domain);
    }
    row.productivity_onehot[static_cast<size_t>(level)] = 1;

    if (has_next) {
        const auto& v = history.visits()[static_cast<size_t>(next)];
        int idx = vocabulary.index_of(v.domain);
        if (idx >= 0 && idx < DomainVocabulary::kDefaultSize)
            row.next_domain_onehot[static_cast<size_t>(idx)] = 1;
    }
    return row;
}

inline bool label_active(int64_t s, const SecondGrid& truth) {
    return truth.active(s);
}

struct UserDataset {
    std::string user_id;
    const SecondGrid* truth = nullptr;
    const UserHistory* history = nullptr;
};

struct ActiveDataset {
    FeatureMatrix features{kActiveFeatureWidth, active_feature_binary_mask()};
    std::vector<int32_t> labels;  // 0 inactive, 1 active
};

// One row per in-session second per user, ordered by (user position, second).
// Callers pass users sorted by id; sessions come from each user's truth grid.
inline ActiveDataset build_active_dataset(const std::vector<UserDataset>& users,
                                          const DomainVocabulary& vocabulary,
                                          const ProductivityMap& productivity) {
    ActiveDataset ds;
    int64_t total = 0;
    std::vector<std::vector<Session>> per_user;
    per_user.reserve(users.size());
    for (const auto& u : users) {
        if (u.truth == nullptr) throw DataError("user " + u.user_id + " missing activity data");
        if (u.history == nullptr) throw DataError("user " + u.user_id + " missing history");
        per_user.push_back(sessions(*u.truth));
        total += total_in_session_seconds(per_user.back());
    }
    ds.features.reserve(total);
    ds.labels.reserve(static_cast<size_t>(total));
    for (size_t i = 0; i < users.size(); ++i) {
        for (const auto& sess : per_user[i]) {
            for (int64_t s = sess.start_second; s <= sess.end_second; ++s) {
                ActiveFeatureRow row = featurize_active(s, *users[i].history,
                                                        vocabulary, productivity);
                auto f = row.to_floats();
                ds.features.append_row(f);
                ds.labels.push_back(label_active(s, *users[i].truth) ? 1 : 0);
            }
        }
    }
    return ds;
}

}  // namespace rebrowse
