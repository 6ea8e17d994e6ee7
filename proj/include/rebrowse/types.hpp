#pragma once
// Core value types shared across the library.
//
// Times are int64 milliseconds since epoch; the reconstruction itself works
// on second indices (floor of ms/1000).

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rebrowse {

constexpr int64_t kMsPerSecond = 1000;
constexpr int64_t kActivityWindowSeconds = 60;    // input/navigation lookback
constexpr int64_t kSessionGapSeconds = 20 * 60;   // max in-session inactive run
constexpr int64_t kMissingEventSentinelSeconds = 86400;  // "a day away"

inline int64_t ms_to_second(int64_t ms) {
    // Floor division; history/activity times are non-negative in practice
    // but keep this total.
    int64_t q = ms / kMsPerSecond;
    if (ms % kMsPerSecond != 0 && ms < 0) --q;
    return q;
}

class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// History side

enum class Transition {
    kLink,
    kTyped,
    kReload,
    kAutoSubframe,
    kManualSubframe,
    kFormSubmit,
    kOther,
};

inline std::string_view to_token(Transition t) {
    switch (t) {
        case Transition::kLink: return "link";
        case Transition::kTyped: return "typed";
        case Transition::kReload: return "reload";
        case Transition::kAutoSubframe: return "auto_subframe";
        case Transition::kManualSubframe: return "manual_subframe";
        case Transition::kFormSubmit: return "form_submit";
        case Transition::kOther: return "other";
    }
    return "other";
}

inline std::optional<Transition> transition_from_token(std::string_view s) {
    if (s == "link") return Transition::kLink;
    if (s == "typed") return Transition::kTyped;
    if (s == "reload") return Transition::kReload;
    if (s == "auto_subframe") return Transition::kAutoSubframe;
    if (s == "manual_subframe") return Transition::kManualSubframe;
    if (s == "form_submit") return Transition::kFormSubmit;
    if (s == "other") return Transition::kOther;
    return std::nullopt;
}

struct HistoryVisit {
    std::string user_id;
    int64_t visit_id = 0;
    std::optional<int64_t> referring_visit_id;
    std::string url;
    std::string domain;  // derived, see extract_domain()
    int64_t visit_time_ms = 0;
    Transition transition = Transition::kOther;

    int64_t second() const { return ms_to_second(visit_time_ms); }
};

enum class ProductivityLevel {
    kVeryProductive = 0,
    kProductive = 1,
    kNeutral = 2,
    kDistracting = 3,
    kVeryDistracting = 4,
};
constexpr int kProductivityLevels = 5;

inline std::string_view to_token(ProductivityLevel l) {
    switch (l) {
        case ProductivityLevel::kVeryProductive: return "very_productive";
        case ProductivityLevel::kProductive: return "productive";
        case ProductivityLevel::kNeutral: return "neutral";
        case ProductivityLevel::kDistracting: return "distracting";
        case ProductivityLevel::kVeryDistracting: return "very_distracting";
    }
    return "neutral";
}

inline std::optional<ProductivityLevel> productivity_from_token(std::string_view s) {
    if (s == "very_productive") return ProductivityLevel::kVeryProductive;
    if (s == "productive") return ProductivityLevel::kProductive;
    if (s == "neutral") return ProductivityLevel::kNeutral;
    if (s == "distracting") return ProductivityLevel::kDistracting;
    if (s == "very_distracting") return ProductivityLevel::kVeryDistracting;
    return std::nullopt;
}

// domain -> level, total lookup with a neutral default.
class ProductivityMap {
  public:
    void set(std::string domain, ProductivityLevel level) {
        entries_[std::move(domain)] = level;
    }
    ProductivityLevel level_of(std::string_view domain) const {
        auto it = entries_.find(std::string(domain));
        return it == entries_.end() ? ProductivityLevel::kNeutral : it->second;
    }
    size_t size() const { return entries_.size(); }

  private:
    std::unordered_map<std::string, ProductivityLevel> entries_;
};

// Fixed-width top-K domain list; anything else is the implicit OTHER bucket
// (all-zero one-hot).
class DomainVocabulary {
  public:
    static constexpr int kDefaultSize = 20;

    DomainVocabulary() = default;
    explicit DomainVocabulary(std::vector<std::string> domains)
        : domains_(std::move(domains)) {
        for (size_t i = 0; i < domains_.size(); ++i)
            index_[domains_[i]] = static_cast<int>(i);
    }

    int size() const { return static_cast<int>(domains_.size()); }
    const std::vector<std::string>& domains() const { return domains_; }

    // -1 means OTHER.
    int index_of(std::string_view domain) const {
        auto it = index_.find(std::string(domain));
        return it == index_.end() ? -1 : it->second;
    }

  private:
    std::vector<std::string> domains_;
    std::unordered_map<std::string, int> index_;
};

// ---------------------------------------------------------------------------
// Activity side

enum class ActivityKind {
    kTabFocus,
    kWindowFocus,
    kWindowBlur,
    kNavigation,
    kTabClose,
    kWindowClose,
    kInput,       // mouse / keyboard / scroll / click
    kIdleStart,
    kScreenLock,
};

inline std::string_view to_token(ActivityKind k) {
    switch (k) {
        case ActivityKind::kTabFocus: return "tab_focus";
        case ActivityKind::kWindowFocus: return "window_focus";
        case ActivityKind::kWindowBlur: return "window_blur";
        case ActivityKind::kNavigation: return "navigation";
        case ActivityKind::kTabClose: return "tab_close";
        case ActivityKind::kWindowClose: return "window_close";
        case ActivityKind::kInput: return "input";
        case ActivityKind::kIdleStart: return "idle_start";
        case ActivityKind::kScreenLock: return "screen_lock";
    }
    return "input";
}

inline std::optional<ActivityKind> activity_kind_from_token(std::string_view s) {
    if (s == "tab_focus") return ActivityKind::kTabFocus;
    if (s == "window_focus") return ActivityKind::kWindowFocus;
    if (s == "window_blur") return ActivityKind::kWindowBlur;
    if (s == "navigation") return ActivityKind::kNavigation;
    if (s == "tab_close") return ActivityKind::kTabClose;
    if (s == "window_close") return ActivityKind::kWindowClose;
    if (s == "input") return ActivityKind::kInput;
    if (s == "idle_start") return ActivityKind::kIdleStart;
    if (s == "screen_lock") return ActivityKind::kScreenLock;
    return std::nullopt;
}

struct ActivityEvent {
    std::string user_id;
    int64_t time_ms = 0;
    ActivityKind kind = ActivityKind::kInput;
    std::optional<std::string> url;  // required for tab_focus and navigation

    int64_t second() const { return ms_to_second(time_ms); }
};

// A maximal focused interval on one URL; [start_ms, end_ms).
struct ActivitySpan {
    std::string user_id;
    std::string url;
    std::string domain;
    int64_t start_ms = 0;
    int64_t end_ms = 0;
};

// Inclusive second range; a run of activity plus its 20-minute tail.
struct Session {
    int64_t start_second = 0;
    int64_t end_second = 0;

    int64_t length() const { return end_second - start_second + 1; }
    bool contains(int64_t s) const { return s >= start_second && s <= end_second; }
};

// Per-user second-resolution timeline of (active, focused domain).
// Queries are total: seconds outside the stored range are inactive.
class SecondGrid {
  public:
    SecondGrid() = default;
    SecondGrid(std::string user_id, int64_t origin_second, int64_t length)
        : user_id_(std::move(user_id)),
          origin_(origin_second),
          domain_idx_(static_cast<size_t>(length), kInactive) {}

    const std::string& user_id() const { return user_id_; }
    int64_t origin_second() const { return origin_; }
    int64_t length() const { return static_cast<int64_t>(domain_idx_.size()); }
    int64_t end_second() const { return origin_ + length(); }  // exclusive

    bool active(int64_t s) const {
        int64_t off = s - origin_;
        if (off < 0 || off >= length()) return false;
        return domain_idx_[static_cast<size_t>(off)] != kInactive;
    }

    // Empty when inactive; invariant: domain present iff active.
    std::string_view domain(int64_t s) const {
        int64_t off = s - origin_;
        if (off < 0 || off >= length()) return {};
        int32_t d = domain_idx_[static_cast<size_t>(off)];
        return d == kInactive ? std::string_view{} : std::string_view(domain_table_[static_cast<size_t>(d)]);
    }

    void set_active(int64_t s, std::string_view domain) {
        int64_t off = s - origin_;
        if (off < 0 || off >= length())
            throw std::out_of_range("SecondGrid::set_active outside grid");
        domain_idx_[static_cast<size_t>(off)] = intern(domain);
    }

    void set_inactive(int64_t s) {
        int64_t off = s - origin_;
        if (off < 0 || off >= length()) return;
        domain_idx_[static_cast<size_t>(off)] = kInactive;
    }

    int64_t active_count() const {
        int64_t n = 0;
        for (int32_t d : domain_idx_) n += (d != kInactive);
        return n;
    }

    const std::vector<std::string>& domain_table() const { return domain_table_; }

  private:
    static constexpr int32_t kInactive = -1;

    int32_t intern(std::string_view domain) {
        auto it = domain_to_idx_.find(std::string(domain));
        if (it != domain_to_idx_.end()) return it->second;
        int32_t idx = static_cast<int32_t>(domain_table_.size());
        domain_table_.emplace_back(domain);
        domain_to_idx_[domain_table_.back()] = idx;
        return idx;
    }

    std::string user_id_;
    int64_t origin_ = 0;
    std::vector<int32_t> domain_idx_;
    std::vector<std::string> domain_table_;
    std::unordered_map<std::string, int32_t> domain_to_idx_;
};

}  // namespace rebrowse
