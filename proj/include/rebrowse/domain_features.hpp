#pragma once
// Focused-domain classification: candidate construction, labeling with the
// fixed precedence, and the 97-wide feature rows.
//
// Candidates at second s:
//   current (C)  most recent visit at or before s          (always present)
//   next    (N)  first visit strictly after s
//   past1  (P1)  most recent visit before C whose domain differs from C
//   past2  (P2)  most recent visit before P1 whose domain is neither C nor P1
//
// Layout (width 97):
//   [0]      log gap between t(current) and t(next)
//   [1]      log time since t(current)
//   [2]      log time until t(next)
//   [3]      log time since t(past1)
//   [4]      log time since t(past2)
//   [5]      visits since t(past1)
//   [6]      visits since t(past2)
//   [7..10]  20-minute "follows a different domain" counts for N, C, P1, P2
//   [11..13] referrer of N equals visit id of C / P1 / P2
//   [14..93] domain one-hots for C, N, P1, P2 (20 each)
//   [94..96] N same domain as C / P1 / P2

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "rebrowse/active_features.hpp"
#include "rebrowse/feature_matrix.hpp"
#include "rebrowse/forest.hpp"
#include "rebrowse/history.hpp"
#include "rebrowse/types.hpp"

namespace rebrowse {

enum class DomainClass : int32_t {
    kCurrent = 0,
    kNext = 1,
    kPast1 = 2,
    kPast2 = 3,
    kNone = 4,  // truth matches no candidate; never a prediction
};

inline std::string_view to_token(DomainClass c) {
    switch (c) {
        case DomainClass::kCurrent: return "current";
        case DomainClass::kNext: return "next";
        case DomainClass::kPast1: return "past1";
        case DomainClass::kPast2: return "past2";
        case DomainClass::kNone: return "none";
    }
    return "none";
}

struct Candidate {
    std::string domain;
    int64_t visit_index = -1;  // into UserHistory::visits()
    int64_t visit_id = 0;
    int64_t visit_second = 0;
};

struct CandidateSet {
    Candidate current;
    std::optional<Candidate> next;
    std::optional<Candidate> past1;
    std::optional<Candidate> past2;
    int64_t visits_since_past1 = 0;  // visits strictly after past1's, up to current
    int64_t visits_since_past2 = 0;
    bool ref_next_eq_current = false;
    bool ref_next_eq_past1 = false;
    bool ref_next_eq_past2 = false;

    const Candidate* of(DomainClass c) const {
        switch (c) {
            case DomainClass::kCurrent: return &current;
            case DomainClass::kNext: return next ? &*next : nullptr;
            case DomainClass::kPast1: return past1 ? &*past1 : nullptr;
            case DomainClass::kPast2: return past2 ? &*past2 : nullptr;
            case DomainClass::kNone: return nullptr;
        }
        return nullptr;
    }
};

// Requires at least one visit at or before s.
inline CandidateSet candidates(int64_t s, const UserHistory& history) {
    int64_t c_idx = history.last_at_or_before(s);
    if (c_idx < 0)
        throw DataError("candidates queried before the first history visit");

    auto make = [&history](int64_t idx) {
        const HistoryVisit& v = history.visits()[static_cast<size_t>(idx)];
        return Candidate{v.domain, idx, v.visit_id, history.visit_second(static_cast<size_t>(idx))};
    };

    CandidateSet set;
    set.current = make(c_idx);

    int64_t n_idx = history.first_after(s);
    if (n_idx < static_cast<int64_t>(history.size())) set.next = make(n_idx);

    int64_t p1_idx = history.prev_different_domain(c_idx);
    if (p1_idx >= 0) {
        set.past1 = make(p1_idx);
        set.visits_since_past1 = c_idx - p1_idx;

        // Each jump lands on a different domain than the position it left, so
        // every index between jumps is excluded anyway; no candidate is skipped.
        int64_t p2_idx = history.prev_different_domain(p1_idx);
        while (p2_idx >= 0) {
            const std::string& d = history.visits()[static_cast<size_t>(p2_idx)].domain;
            if (d != set.current.domain && d != set.past1->domain) break;
            p2_idx = history.prev_different_domain(p2_idx);
        }
        if (p2_idx >= 0) {
            set.past2 = make(p2_idx);
            set.visits_since_past2 = c_idx - p2_idx;
        }
    }

    if (set.next && set.next->visit_index >= 0) {
        const HistoryVisit& nv = history.visits()[static_cast<size_t>(set.next->visit_index)];
        if (nv.referring_visit_id) {
            int64_t ref = *nv.referring_visit_id;
            set.ref_next_eq_current = (ref == set.current.visit_id);
            set.ref_next_eq_past1 = set.past1 && ref == set.past1->visit_id;
            set.ref_next_eq_past2 = set.past2 && ref == set.past2->visit_id;
        }
    }
    return set;
}

// First candidate in fixed precedence whose domain equals the truth; kNone
// means the sample is excluded from training and an automatic miss in
// evaluation.
inline DomainClass label_domain(std::string_view truth_domain, const CandidateSet& set) {
    if (set.current.domain == truth_domain) return DomainClass::kCurrent;
    if (set.next && set.next->domain == truth_domain) return DomainClass::kNext;
    if (set.past1 && set.past1->domain == truth_domain) return DomainClass::kPast1;
    if (set.past2 && set.past2->domain == truth_domain) return DomainClass::kPast2;
    return DomainClass::kNone;
}

constexpr int kDomainFeatureWidth = 97;
constexpr int64_t kBackgroundWindowSeconds = 20 * 60;

struct DomainFeatureRow {
    std::array<double, 7> numerics{};       // gaps, sinces, visit counts
    std::array<double, 4> follow_counts{};  // N, C, P1, P2
    std::array<uint8_t, 3> referrer{};      // N's referrer is C / P1 / P2
    std::array<uint8_t, 80> domain_onehots{};
    std::array<uint8_t, 3> overlap{};       // N == C / P1 / P2

    std::array<float, kDomainFeatureWidth> to_floats() const {
        std::array<float, kDomainFeatureWidth> out{};
        int c = 0;
        for (double v : numerics) out[static_cast<size_t>(c++)] = static_cast<float>(v);
        for (double v : follow_counts) out[static_cast<size_t>(c++)] = static_cast<float>(v);
        for (uint8_t b : referrer) out[static_cast<size_t>(c++)] = b;
        for (uint8_t b : domain_onehots) out[static_cast<size_t>(c++)] = b;
        for (uint8_t b : overlap) out[static_cast<size_t>(c++)] = b;
        return out;
    }
};

inline std::vector<bool> domain_feature_binary_mask() {
    std::vector<bool> mask(kDomainFeatureWidth, true);
    for (int c = 0; c < 11; ++c) mask[static_cast<size_t>(c)] = false;
    return mask;
}

namespace detail {

// Count of visit pairs (v[i-1], v[i]) with v[i] in [s-window, s] by second,
// domain(v[i]) == domain and domain(v[i-1]) != domain. The predecessor may
// precede the window.
inline int64_t follows_other_domain_count(const UserHistory& history, int64_t s,
                                          std::string_view domain,
                                          int64_t window = kBackgroundWindowSeconds) {
    int64_t hi = history.last_at_or_before(s);
    int64_t count = 0;
    for (int64_t i = hi; i >= 1; --i) {
        if (history.visit_second(static_cast<size_t>(i)) < s - window) break;
        if (history.visits()[static_cast<size_t>(i)].domain == domain &&
            history.visits()[static_cast<size_t>(i - 1)].domain != domain)
            ++count;
    }
    return count;
}

}  // namespace detail

inline DomainFeatureRow featurize_domain(int64_t s, const UserHistory& history,
                                         const CandidateSet& set,
                                         const DomainVocabulary& vocabulary) {
    DomainFeatureRow row;
    const double missing = missing_event_log_duration();

    const Candidate& c = set.current;
    row.numerics[1] = log_duration_seconds(s - c.visit_second);
    if (set.next) {
        row.numerics[0] = log_duration_seconds(set.next->visit_second - c.visit_second);
        row.numerics[2] = log_duration_seconds(set.next->visit_second - s);
    } else {
        row.numerics[0] = missing;
        row.numerics[2] = missing;
    }
    row.numerics[3] = set.past1 ? log_duration_seconds(s - set.past1->visit_second) : missing;
    row.numerics[4] = set.past2 ? log_duration_seconds(s - set.past2->visit_second) : missing;
    row.numerics[5] = static_cast<double>(set.visits_since_past1);
    row.numerics[6] = static_cast<double>(set.visits_since_past2);

    const DomainClass follow_order[4] = {DomainClass::kNext, DomainClass::kCurrent,
                                         DomainClass::kPast1, DomainClass::kPast2};
    for (int i = 0; i < 4; ++i) {
        const Candidate* cand = set.of(follow_order[i]);
        row.follow_counts[static_cast<size_t>(i)] =
            cand ? static_cast<double>(
                       detail::follows_other_domain_count(history, s, cand->domain))
                 : 0.0;
    }

    row.referrer[0] = set.ref_next_eq_current ? 1 : 0;
    row.referrer[1] = set.ref_next_eq_past1 ? 1 : 0;
    row.referrer[2] = set.ref_next_eq_past2 ? 1 : 0;

    const DomainClass onehot_order[4] = {DomainClass::kCurrent, DomainClass::kNext,
                                         DomainClass::kPast1, DomainClass::kPast2};
    for (int i = 0; i < 4; ++i) {
        const Candidate* cand = set.of(onehot_order[i]);
        if (!cand) continue;
        int idx = vocabulary.index_of(cand->domain);
        if (idx >= 0 && idx < DomainVocabulary::kDefaultSize)
            row.domain_onehots[static_cast<size_t>(i * DomainVocabulary::kDefaultSize + idx)] = 1;
    }

    if (set.next) {
        row.overlap[0] = set.next->domain == set.current.domain ? 1 : 0;
        row.overlap[1] = set.past1 && set.next->domain == set.past1->domain ? 1 : 0;
        row.overlap[2] = set.past2 && set.next->domain == set.past2->domain ? 1 : 0;
    }
    return row;
}

struct DomainDataset {
    FeatureMatrix features{kDomainFeatureWidth, domain_feature_binary_mask()};
    std::vector<int32_t> labels;  // DomainClass 0..3
    int64_t skipped_none = 0;     // truth-active seconds matching no candidate
    int64_t skipped_pre_history = 0;
};

// One row per truth-active second with a usable label, ordered by
// (user position, second).
inline DomainDataset build_domain_dataset(const std::vector<UserDataset>& users,
                                          const DomainVocabulary& vocabulary) {
    DomainDataset ds;
    for (const auto& u : users) {
        if (u.truth == nullptr) throw DataError("user " + u.user_id + " missing activity data");
        if (u.history == nullptr) throw DataError("user " + u.user_id + " missing history");
        const SecondGrid& truth = *u.truth;
        for (int64_t s = truth.origin_second(); s < truth.end_second(); ++s) {
            if (!truth.active(s)) continue;
            if (u.history->last_at_or_before(s) < 0) {
                ++ds.skipped_pre_history;
                continue;
            }
            CandidateSet set = candidates(s, *u.history);
            DomainClass label = label_domain(truth.domain(s), set);
            if (label == DomainClass::kNone) {
                ++ds.skipped_none;
                continue;
            }
            DomainFeatureRow row = featurize_domain(s, *u.history, set, vocabulary);
            auto f = row.to_floats();
            ds.features.append_row(f);
            ds.labels.push_back(static_cast<int32_t>(label));
        }
    }
    return ds;
}

// Applies the domain classifier to every active second of the given activity
// prediction. Seconds before the first history visit stay inactive (there is
// no candidate to name); a predicted class whose candidate is absent falls
// back to current.
inline SecondGrid reconstruct_domain_grid(const SecondGrid& predicted_active,
                                          const UserHistory& history,
                                          const Forest& domain_forest,
                                          const DomainVocabulary& vocabulary) {
    SecondGrid out(predicted_active.user_id(), predicted_active.origin_second(),
                   predicted_active.length());
    for (int64_t s = predicted_active.origin_second(); s < predicted_active.end_second(); ++s) {
        if (!predicted_active.active(s)) continue;
        if (history.last_at_or_before(s) < 0) continue;
        CandidateSet set = candidates(s, history);
        DomainFeatureRow row = featurize_domain(s, history, set, vocabulary);
        auto f = row.to_floats();
        auto cls = static_cast<DomainClass>(domain_forest.predict(f));
        const Candidate* cand = set.of(cls);
        if (cand == nullptr) cand = &set.current;
        out.set_active(s, cand->domain);
    }
    return out;
}

}  // namespace rebrowse
