#pragma once
// Ground-truth activity ingest: span construction, the per-second active
// grid, and sessionization.
//
// Activity Log Format: one JSON object per line with fields
//   user_id (string), time_ms (int), kind (token), url (string, required for
//   tab_focus and navigation).

#include <algorithm>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rebrowse/types.hpp"
#include "rebrowse/url.hpp"

namespace rebrowse {

namespace detail {

inline ActivityEvent event_from_json(const nlohmann::json& j, size_t line_no) {
    auto fail = [line_no](const std::string& what) -> DataError {
        return DataError("activity line " + std::to_string(line_no) + ": " + what);
    };
    if (!j.is_object()) throw fail("record is not an object");
    ActivityEvent e;
    try {
        e.user_id = j.at("user_id").get<std::string>();
        e.time_ms = j.at("time_ms").get<int64_t>();
        auto k = activity_kind_from_token(j.at("kind").get<std::string>());
        if (!k) throw fail("unknown kind token '" + j.at("kind").get<std::string>() + "'");
        e.kind = *k;
        if (j.contains("url") && !j.at("url").is_null())
            e.url = j.at("url").get<std::string>();
    } catch (const nlohmann::json::exception& ex) {
        throw fail(ex.what());
    }
    if (e.time_ms < 0) throw fail("negative time_ms");
    if ((e.kind == ActivityKind::kTabFocus || e.kind == ActivityKind::kNavigation) &&
        (!e.url || e.url->empty()))
        throw fail("url required for tab_focus/navigation");
    return e;
}

inline void sort_events(std::vector<ActivityEvent>& events) {
    std::stable_sort(events.begin(), events.end(),
                     [](const ActivityEvent& a, const ActivityEvent& b) {
                         return a.time_ms < b.time_ms;
                     });
}

}  // namespace detail

inline std::vector<ActivityEvent> parse_activity_log(std::istream& in,
                                                     std::string_view user_id) {
    std::vector<ActivityEvent> events;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw DataError("activity line " + std::to_string(line_no) +
                            ": not valid JSON");
        ActivityEvent e = detail::event_from_json(j, line_no);
        if (e.user_id == user_id) events.push_back(std::move(e));
    }
    detail::sort_events(events);
    return events;
}

inline std::vector<ActivityEvent> parse_activity_log(const std::string& text,
                                                     std::string_view user_id) {
    std::istringstream in(text);
    return parse_activity_log(in, user_id);
}

inline std::map<std::string, std::vector<ActivityEvent>> parse_activity_all(std::istream& in) {
    std::map<std::string, std::vector<ActivityEvent>> by_user;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw DataError("activity line " + std::to_string(line_no) +
                            ": not valid JSON");
        ActivityEvent e = detail::event_from_json(j, line_no);
        by_user[e.user_id].push_back(std::move(e));
    }
    for (auto& [user, events] : by_user) detail::sort_events(events);
    return by_user;
}

inline std::string serialize_activity_log(const std::vector<ActivityEvent>& events) {
    std::string out;
    for (const auto& e : events) {
        nlohmann::json j;
        j["user_id"] = e.user_id;
        j["time_ms"] = e.time_ms;
        j["kind"] = std::string(to_token(e.kind));
        if (e.url) j["url"] = *e.url;
        out += j.dump();
        out += '\n';
    }
    return out;
}

struct BuildSpanStats {
    int64_t ignored_end_events = 0;  // end-type events with no open span
    int64_t dropped_zero_length = 0;
};

// One span per maximal focused interval on a URL.
//
//   tab_focus / navigation  open a new span on their URL (closing any open one)
//   window_focus            resumes the previously focused URL, if any
//   blur / close / idle / lock  close the open span
//   input                   no span effect (feeds the 60s activity rule)
//
// An unclosed span ends at the last event time; zero-length spans are dropped.
inline std::vector<ActivitySpan> build_spans(const std::vector<ActivityEvent>& events,
                                             BuildSpanStats* stats = nullptr) {
    std::vector<ActivitySpan> spans;
    BuildSpanStats local;

    std::string current_url;   // last focused URL; survives blur/idle/lock
    bool open = false;
    int64_t open_start = 0;
    std::string open_url;
    std::string user_id = events.empty() ? std::string() : events.front().user_id;

    auto close_at = [&](int64_t t) {
        if (!open) return;
        open = false;
        if (t <= open_start) {
            ++local.dropped_zero_length;
            return;
        }
        spans.push_back(ActivitySpan{user_id, open_url, extract_domain(open_url),
                                     open_start, t});
    };

    for (const auto& e : events) {
        switch (e.kind) {
            case ActivityKind::kTabFocus:
            case ActivityKind::kNavigation:
                close_at(e.time_ms);
                open = true;
                open_start = e.time_ms;
                open_url = *e.url;
                current_url = *e.url;
                break;
            case ActivityKind::kWindowFocus:
                if (!open && !current_url.empty()) {
                    open = true;
                    open_start = e.time_ms;
                    open_url = current_url;
                }
                break;
            case ActivityKind::kWindowBlur:
            case ActivityKind::kIdleStart:
            case ActivityKind::kScreenLock:
                if (!open) ++local.ignored_end_events;
                close_at(e.time_ms);
                break;
            case ActivityKind::kTabClose:
            case ActivityKind::kWindowClose:
                if (!open) ++local.ignored_end_events;
                close_at(e.time_ms);
                current_url.clear();  // the page is gone
                break;
            case ActivityKind::kInput:
                break;
        }
    }
    if (open && !events.empty()) close_at(events.back().time_ms);

    if (stats) *stats = local;
    return spans;
}

// Second s is active iff its start instant lies inside a span and some
// input/navigation event happened within the trailing minute:
//   exists span:  start_ms <= s*1000 < end_ms
//   exists event: s*1000 - 60000 < time_ms <= s*1000
// The grid covers [first event second, last event second].
inline SecondGrid active_seconds(const std::vector<ActivitySpan>& spans,
                                 const std::vector<ActivityEvent>& events) {
    if (events.empty()) return SecondGrid{};

    std::string user_id = events.front().user_id;
    int64_t origin = ms_to_second(events.front().time_ms);
    int64_t last = ms_to_second(events.back().time_ms);
    SecondGrid grid(user_id, origin, last - origin + 1);

    std::vector<int64_t> signal_ms;  // input + navigation times
    for (const auto& e : events)
        if (e.kind == ActivityKind::kInput || e.kind == ActivityKind::kNavigation)
            signal_ms.push_back(e.time_ms);

    size_t sig_lo = 0, sig_hi = 0;  // window (t-60000, t] as [lo, hi)
    for (const auto& span : spans) {
        // First second whose start instant is >= start_ms:
        int64_t s0 = ms_to_second(span.start_ms + kMsPerSecond - 1);
        // Last second whose start instant is < end_ms:
        int64_t s1 = ms_to_second(span.end_ms - 1);
        // Spans are time-ordered, so the two cursors only move forward.
        for (int64_t s = s0; s <= s1; ++s) {
            int64_t t = s * kMsPerSecond;
            while (sig_hi < signal_ms.size() && signal_ms[sig_hi] <= t) ++sig_hi;
            while (sig_lo < sig_hi &&
                   signal_ms[sig_lo] <= t - kActivityWindowSeconds * kMsPerSecond)
                ++sig_lo;
            if (sig_lo < sig_hi) grid.set_active(s, span.domain);
        }
    }
    return grid;
}

// Runs of activity merged while the inactive stretch between active seconds
// stays within gap_seconds; each session keeps a gap_seconds tail after its
// last active second.
inline std::vector<Session> sessions(const SecondGrid& grid,
                                     int64_t gap_seconds = kSessionGapSeconds) {
    std::vector<Session> out;
    int64_t run_start = 0, run_last = 0;
    bool in_run = false;
    for (int64_t s = grid.origin_second(); s < grid.end_second(); ++s) {
        if (!grid.active(s)) continue;
        if (!in_run) {
            in_run = true;
            run_start = s;
        } else if (s - run_last - 1 > gap_seconds) {
            out.push_back(Session{run_start, run_last + gap_seconds});
            run_start = s;
        }
        run_last = s;
    }
    if (in_run) out.push_back(Session{run_start, run_last + gap_seconds});
    return out;
}

inline int64_t total_in_session_seconds(const std::vector<Session>& sessions) {
    int64_t n = 0;
    for (const auto& s : sessions) n += s.length();
    return n;
}

inline bool in_any_session(const std::vector<Session>& sessions, int64_t s) {
    auto it = std::upper_bound(sessions.begin(), sessions.end(), s,
                               [](int64_t v, const Session& sess) {
                                   return v < sess.start_second;
                               });
    if (it == sessions.begin()) return false;
    return std::prev(it)->contains(s);
}

// ---------------------------------------------------------------------------
// CSV dumps for inspection

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string quoted = "\"";
    for (char c : s) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

inline std::string spans_to_csv(const std::vector<ActivitySpan>& spans) {
    std::string out = "user_id,url,domain,start_ms,end_ms\n";
    for (const auto& s : spans) {
        out += s.user_id;
        out += ',';
        out += csv_field(s.url);
        out += ',';
        out += csv_field(s.domain);
        out += ',';
        out += std::to_string(s.start_ms);
        out += ',';
        out += std::to_string(s.end_ms);
        out += '\n';
    }
    return out;
}

// One row per active second; inactive seconds are implicit.
inline std::string grid_to_csv(const SecondGrid& grid) {
    std::string out = "user_id,second,domain\n";
    for (int64_t s = grid.origin_second(); s < grid.end_second(); ++s) {
        if (!grid.active(s)) continue;
        out += grid.user_id();
        out += ',';
        out += std::to_string(s);
        out += ',';
        out += csv_field(grid.domain(s));
        out += '\n';
    }
    return out;
}

}  // namespace rebrowse
