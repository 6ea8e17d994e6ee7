#pragma once
// Browser-history ingest: NDJSON export parsing, frame-navigation filtering,
// training-set vocabularies and the productivity map.
//
// History Export Format: one JSON object per line with fields
//   user_id (string), visit_id (int), referring_visit_id (int or null),
//   url (string), visit_time_ms (int), transition (token).

#include <algorithm>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "rebrowse/types.hpp"
#include "rebrowse/url.hpp"

namespace rebrowse {

namespace detail {

inline HistoryVisit visit_from_json(const nlohmann::json& j, size_t line_no) {
    auto fail = [line_no](const std::string& what) -> DataError {
        return DataError("history line " + std::to_string(line_no) + ": " + what);
    };
    if (!j.is_object()) throw fail("record is not an object");
    HistoryVisit v;
    try {
        v.user_id = j.at("user_id").get<std::string>();
        v.visit_id = j.at("visit_id").get<int64_t>();
        if (j.contains("referring_visit_id") && !j.at("referring_visit_id").is_null())
            v.referring_visit_id = j.at("referring_visit_id").get<int64_t>();
        v.url = j.at("url").get<std::string>();
        v.visit_time_ms = j.at("visit_time_ms").get<int64_t>();
        auto t = transition_from_token(j.at("transition").get<std::string>());
        if (!t) throw fail("unknown transition token '" +
                           j.at("transition").get<std::string>() + "'");
        v.transition = *t;
    } catch (const nlohmann::json::exception& e) {
        throw fail(e.what());
    }
    if (v.url.empty()) throw fail("empty url");
    if (v.visit_time_ms < 0) throw fail("negative visit_time_ms");
    v.domain = extract_domain(v.url);
    return v;
}

inline void sort_visits(std::vector<HistoryVisit>& visits) {
    std::stable_sort(visits.begin(), visits.end(),
                     [](const HistoryVisit& a, const HistoryVisit& b) {
                         if (a.visit_time_ms != b.visit_time_ms)
                             return a.visit_time_ms < b.visit_time_ms;
                         return a.visit_id < b.visit_id;
                     });
}

inline void check_unique_ids(const std::vector<HistoryVisit>& visits) {
    std::unordered_set<int64_t> seen;
    seen.reserve(visits.size());
    for (const auto& v : visits) {
        if (!seen.insert(v.visit_id).second)
            throw DataError("duplicate visit_id " + std::to_string(v.visit_id) +
                            " for user " + v.user_id);
    }
}

}  // namespace detail

// Parses every record, keeps the ones belonging to user_id, sorts ascending
// by visit time and checks visit_id uniqueness.
inline std::vector<HistoryVisit> parse_history(std::istream& in,
                                               std::string_view user_id) {
    std::vector<HistoryVisit> visits;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw DataError("history line " + std::to_string(line_no) +
                            ": not valid JSON");
        HistoryVisit v = detail::visit_from_json(j, line_no);
        if (v.user_id == user_id) visits.push_back(std::move(v));
    }
    detail::sort_visits(visits);
    detail::check_unique_ids(visits);
    return visits;
}

inline std::vector<HistoryVisit> parse_history(const std::string& text,
                                               std::string_view user_id) {
    std::istringstream in(text);
    return parse_history(in, user_id);
}

// Whole-file variant: visits grouped per user, each group sorted and checked.
inline std::map<std::string, std::vector<HistoryVisit>> parse_history_all(std::istream& in) {
    std::map<std::string, std::vector<HistoryVisit>> by_user;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw DataError("history line " + std::to_string(line_no) +
                            ": not valid JSON");
        HistoryVisit v = detail::visit_from_json(j, line_no);
        by_user[v.user_id].push_back(std::move(v));
    }
    for (auto& [user, visits] : by_user) {
        detail::sort_visits(visits);
        detail::check_unique_ids(visits);
    }
    return by_user;
}

inline std::string serialize_history(const std::vector<HistoryVisit>& visits) {
    std::string out;
    for (const auto& v : visits) {
        nlohmann::json j;
        j["user_id"] = v.user_id;
        j["visit_id"] = v.visit_id;
        if (v.referring_visit_id)
            j["referring_visit_id"] = *v.referring_visit_id;
        else
            j["referring_visit_id"] = nullptr;
        j["url"] = v.url;
        j["visit_time_ms"] = v.visit_time_ms;
        j["transition"] = std::string(to_token(v.transition));
        out += j.dump();
        out += '\n';
    }
    return out;
}

// Drops frame navigations; order preserved, idempotent.
inline std::vector<HistoryVisit> filter_frame_navigations(std::vector<HistoryVisit> visits) {
    std::erase_if(visits, [](const HistoryVisit& v) {
        return v.transition == Transition::kAutoSubframe ||
               v.transition == Transition::kManualSubframe;
    });
    return visits;
}

// Top-K domains by visit count over the training split; ties lexicographic,
// short corpora padded to exactly K with reserved placeholder names.
inline DomainVocabulary compute_top_domains(const std::vector<HistoryVisit>& training_visits,
                                            int k = DomainVocabulary::kDefaultSize) {
    std::map<std::string, int64_t> counts;  // ordered map gives the tie-break
    for (const auto& v : training_visits) ++counts[v.domain];

    std::vector<std::pair<std::string, int64_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    std::vector<std::string> domains;
    domains.reserve(static_cast<size_t>(k));
    for (const auto& [domain, n] : ranked) {
        if (static_cast<int>(domains.size()) == k) break;
        domains.push_back(domain);
    }
    for (int i = static_cast<int>(domains.size()); i < k; ++i)
        domains.push_back("<pad-" + std::to_string(i) + ">");
    return DomainVocabulary(std::move(domains));
}

// Two-column CSV "domain,level"; unknown level tokens are an error.
inline ProductivityMap load_productivity_map(std::istream& in) {
    ProductivityMap map;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw DataError("productivity line " + std::to_string(line_no) +
                            ": expected 'domain,level'");
        std::string domain = detail::ascii_lower(line.substr(0, comma));
        std::string token = line.substr(comma + 1);
        auto level = productivity_from_token(token);
        if (!level)
            throw DataError("productivity line " + std::to_string(line_no) +
                            ": unknown level token '" + token + "'");
        map.set(std::move(domain), *level);
    }
    return map;
}

inline ProductivityMap load_productivity_map(const std::string& text) {
    std::istringstream in(text);
    return load_productivity_map(in);
}

// ---------------------------------------------------------------------------
// Indexed per-user view used by the featurizers: filtered, sorted visits plus
// the lookup structures the per-second queries need.

class UserHistory {
  public:
    UserHistory() = default;

    // Takes raw parsed visits; filters frames and sorts.
    static UserHistory build(std::vector<HistoryVisit> visits) {
        UserHistory h;
        h.visits_ = filter_frame_navigations(std::move(visits));
        detail::sort_visits(h.visits_);
        size_t n = h.visits_.size();
        h.seconds_.resize(n);
        h.prev_diff_.assign(n, -1);
        for (size_t i = 0; i < n; ++i) {
            h.seconds_[i] = h.visits_[i].second();
            h.id_to_index_[h.visits_[i].visit_id] = static_cast<int64_t>(i);
            if (i > 0) {
                h.prev_diff_[i] = (h.visits_[i - 1].domain != h.visits_[i].domain)
                                      ? static_cast<int64_t>(i - 1)
                                      : h.prev_diff_[i - 1];
            }
        }
        return h;
    }

    const std::vector<HistoryVisit>& visits() const { return visits_; }
    bool empty() const { return visits_.empty(); }
    size_t size() const { return visits_.size(); }
    int64_t visit_second(size_t i) const { return seconds_[i]; }

    // Index of the last visit whose second is <= s, or -1.
    int64_t last_at_or_before(int64_t s) const {
        auto it = std::upper_bound(seconds_.begin(), seconds_.end(), s);
        return static_cast<int64_t>(it - seconds_.begin()) - 1;
    }

    // Index of the first visit whose second is > s, or size() if none.
    int64_t first_after(int64_t s) const {
        auto it = std::upper_bound(seconds_.begin(), seconds_.end(), s);
        return static_cast<int64_t>(it - seconds_.begin());
    }

    // Nearest earlier index whose domain differs from visit i's, or -1.
    int64_t prev_different_domain(int64_t i) const {
        return prev_diff_[static_cast<size_t>(i)];
    }

    int64_t index_of_visit_id(int64_t visit_id) const {
        auto it = id_to_index_.find(visit_id);
        return it == id_to_index_.end() ? -1 : it->second;
    }

  private:
    std::vector<HistoryVisit> visits_;
    std::vector<int64_t> seconds_;
    std::vector<int64_t> prev_diff_;
    std::unordered_map<int64_t, int64_t> id_to_index_;
};

}  // namespace rebrowse
