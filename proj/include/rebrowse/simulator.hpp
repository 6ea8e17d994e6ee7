#pragma once
// Synthetic user generator: produces a ground-truth activity log and the
// browser history that activity would leave behind.
//
// Generation is two-stage. Stage one emits the activity event log from the
// profile's behavioral model. Stage two derives the history from the activity
// log alone (derive_history): navigation events on recordable (http/https)
// URLs become visits; transition type, referrer attachment and frame
// side-visits are decided by a content hash of the event, so the history is a
// pure function of the activity log and the profile's recordability knobs.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rebrowse/rng.hpp"
#include "rebrowse/types.hpp"
#include "rebrowse/url.hpp"

namespace rebrowse {

struct DomainBehavior {
    std::string domain;
    double weight = 1.0;            // selection weight for fresh navigations
    double dwell_log_mean = 4.0;    // ln seconds
    double dwell_log_sigma = 0.7;
    double input_gap_mean_s = 10.0; // mean seconds between inputs while engaged
    double continue_prob = 0.4;     // next navigation stays on this domain
    double keep_open_prob = 0.4;    // page survives as a background tab
    bool sticky = false;            // preferred background-switch target
};

struct ProfileJitter {
    double session_length_sigma = 0.0;   // added to session_length_log_mean
    double sessions_per_day_sigma = 0.0; // lognormal factor
    double input_gap_sigma = 0.0;        // lognormal factor on all input gaps
    double background_prob_sigma = 0.0;  // lognormal factor, clamped
};

struct UserProfile {
    uint64_t seed = 0;
    int days = 14;
    int64_t start_epoch_s = 1'700'000'000;
    double sessions_per_day = 1.5;               // Poisson mean
    double session_length_log_mean = 7.65;       // ln seconds (~2100 s median)
    double session_length_log_sigma = 0.55;
    double background_tab_prob = 0.22;
    double idle_prob = 0.12;
    double nonhistory_prob = 0.04;
    double subframe_prob = 0.05;
    double reload_prob = 0.03;
    double link_prob = 0.65;
    int max_open_tabs = 6;
    std::vector<DomainBehavior> domains;
    ProfileJitter jitter;
};

struct SimStats {
    std::vector<double> session_lengths_s;  // drawn (clamped) target lengths
    int64_t sessions = 0;
    int64_t background_switches = 0;
    int64_t idle_gaps = 0;
};

struct SimulatedUser {
    std::string user_id;
    UserProfile profile;  // after per-user jitter
    std::vector<ActivityEvent> events;
    std::vector<HistoryVisit> visits;
    SimStats stats;
};

namespace sim_detail {

constexpr const char* kNonHistoryUrls[] = {
    "chrome://newtab", "chrome://settings", "chrome://downloads", "about:blank"};

inline bool recordable(std::string_view url) {
    return url.rfind("https://", 0) == 0 || url.rfind("http://", 0) == 0;
}

// Deterministic coin keyed on event content; the derivation stays a pure
// function of the activity log.
inline bool hash_coin(std::string_view user, int64_t time_ms, std::string_view url,
                      std::string_view tag, double p) {
    uint64_t h = fnv1a64(user);
    h = fnv1a64(url, h);
    h = fnv1a64(tag, h);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(time_ms));
    h = fnv1a64(buf, h);
    return static_cast<double>(h >> 11) * 0x1.0p-53 < p;
}

struct Tab {
    std::string url;
    int domain_index = -1;
};

}  // namespace sim_detail

// History as the recordability rule sees the activity log. Visit ids are
// sequential per user; referrers follow the focused page at navigation time.
inline std::vector<HistoryVisit> derive_history(const std::vector<ActivityEvent>& events,
                                                const UserProfile& profile,
                                                const std::string& user_id) {
    std::vector<HistoryVisit> visits;
    std::string focused_url;
    std::unordered_map<std::string, int64_t> last_visit_id;  // url -> visit id
    int64_t next_id = 1;

    for (const auto& e : events) {
        switch (e.kind) {
            case ActivityKind::kTabFocus:
                focused_url = *e.url;
                break;
            case ActivityKind::kTabClose:
            case ActivityKind::kWindowClose:
                focused_url.clear();
                break;
            case ActivityKind::kNavigation: {
                std::string prev_focused = focused_url;
                focused_url = *e.url;
                if (!sim_detail::recordable(*e.url)) break;

                HistoryVisit v;
                v.user_id = user_id;
                v.visit_id = next_id++;
                v.url = *e.url;
                v.domain = extract_domain(*e.url);
                v.visit_time_ms = e.time_ms;
                if (prev_focused == *e.url) {
                    v.transition = Transition::kReload;
                } else if (!prev_focused.empty() &&
                           last_visit_id.count(prev_focused) > 0 &&
                           sim_detail::hash_coin(user_id, e.time_ms, *e.url, "link",
                                                 profile.link_prob)) {
                    v.transition = Transition::kLink;
                    v.referring_visit_id = last_visit_id[prev_focused];
                } else if (sim_detail::hash_coin(user_id, e.time_ms, *e.url, "form", 0.10)) {
                    v.transition = Transition::kFormSubmit;
                } else if (sim_detail::hash_coin(user_id, e.time_ms, *e.url, "other", 0.10)) {
                    v.transition = Transition::kOther;
                } else {
                    v.transition = Transition::kTyped;
                }
                int64_t parent_id = v.visit_id;
                last_visit_id[*e.url] = v.visit_id;
                visits.push_back(std::move(v));

                if (sim_detail::hash_coin(user_id, e.time_ms, *e.url, "frame",
                                          profile.subframe_prob)) {
                    HistoryVisit frame;
                    frame.user_id = user_id;
                    frame.visit_id = next_id++;
                    frame.url = "https://frames.adnet.example/embed?page=" +
                                extract_domain(*e.url);
                    frame.domain = extract_domain(frame.url);
                    frame.visit_time_ms = e.time_ms;
                    frame.referring_visit_id = parent_id;
                    frame.transition =
                        sim_detail::hash_coin(user_id, e.time_ms, *e.url, "frame_kind", 0.85)
                            ? Transition::kAutoSubframe
                            : Transition::kManualSubframe;
                    visits.push_back(std::move(frame));
                }
                break;
            }
            default:
                break;
        }
    }
    return visits;
}

namespace sim_detail {

class UserGenerator {
  public:
    UserGenerator(const UserProfile& profile, std::string user_id)
        : p_(profile), user_id_(std::move(user_id)), rng_(profile.seed) {
        for (const auto& d : p_.domains) weights_.push_back(d.weight);
    }

    SimulatedUser run() {
        SimulatedUser out;
        out.user_id = user_id_;
        out.profile = p_;
        for (int day = 0; day < p_.days; ++day) {
            int64_t day_start = p_.start_epoch_s + static_cast<int64_t>(day) * 86400;
            int64_t day_end = day_start + 86400;
            int n_sessions = rng_.poisson(p_.sessions_per_day);
            int64_t cursor = day_start + rng_.between(6 * 3600, 10 * 3600);
            for (int i = 0; i < n_sessions; ++i) {
                double drawn = rng_.lognormal(p_.session_length_log_mean,
                                              p_.session_length_log_sigma);
                int64_t length = std::clamp<int64_t>(static_cast<int64_t>(drawn), 180, 21600);
                if (cursor + length + 60 > day_end) break;
                stats_.session_lengths_s.push_back(static_cast<double>(length));
                ++stats_.sessions;
                simulate_session(cursor, cursor + length);
                cursor = last_time_ + rng_.between(1800, 4 * 3600);
            }
        }
        out.events = std::move(events_);
        out.visits = derive_history(out.events, p_, user_id_);
        out.stats = std::move(stats_);
        return out;
    }

  private:
    void emit(ActivityKind kind, int64_t second, std::optional<std::string> url = {}) {
        ActivityEvent e;
        e.user_id = user_id_;
        e.time_ms = second * kMsPerSecond;
        e.kind = kind;
        e.url = std::move(url);
        events_.push_back(std::move(e));
        last_time_ = std::max(last_time_, second);
    }

    std::string make_url(int domain_index) {
        return "https://" + p_.domains[static_cast<size_t>(domain_index)].domain + "/p" +
               std::to_string(++page_counter_);
    }

    void push_open_tab(const Tab& tab) {
        if (tab.domain_index < 0 || !recordable(tab.url)) return;
        // One tab per URL; refresh recency by moving to the back.
        std::erase_if(open_tabs_, [&](const Tab& t) { return t.url == tab.url; });
        open_tabs_.push_back(tab);
        if (static_cast<int>(open_tabs_.size()) > p_.max_open_tabs)
            open_tabs_.erase(open_tabs_.begin());
    }

    int pick_background_tab() {
        // Sticky sites and recently backgrounded tabs are the likely targets.
        std::vector<double> w;
        w.reserve(open_tabs_.size());
        for (size_t i = 0; i < open_tabs_.size(); ++i) {
            const Tab& t = open_tabs_[i];
            bool sticky = t.domain_index >= 0 &&
                          p_.domains[static_cast<size_t>(t.domain_index)].sticky;
            w.push_back((sticky ? 3.0 : 1.0) * (1.0 + static_cast<double>(i)));
        }
        return static_cast<int>(rng_.weighted_index(w));
    }

    void simulate_session(int64_t t0, int64_t te) {
        int64_t t = t0;
        bool first = true;
        while (t < te - 3) {
            if (!first && !open_tabs_.empty() && rng_.coin(p_.background_tab_prob)) {
                int idx = pick_background_tab();
                Tab target = open_tabs_[static_cast<size_t>(idx)];
                open_tabs_.erase(open_tabs_.begin() + idx);
                if (current_.domain_index >= 0) push_open_tab(current_);
                emit(ActivityKind::kTabFocus, t, target.url);
                current_ = target;
                ++stats_.background_switches;
            } else {
                std::string url;
                int domain_index = -1;
                if (!first && current_.domain_index >= 0 && rng_.coin(p_.reload_prob)) {
                    url = current_.url;  // reload
                    domain_index = current_.domain_index;
                } else if (rng_.coin(p_.nonhistory_prob)) {
                    url = kNonHistoryUrls[rng_.below(std::size(kNonHistoryUrls))];
                } else {
                    if (current_.domain_index >= 0 &&
                        rng_.coin(p_.domains[static_cast<size_t>(current_.domain_index)].continue_prob))
                        domain_index = current_.domain_index;
                    else
                        domain_index = static_cast<int>(rng_.weighted_index(weights_));
                    url = make_url(domain_index);
                }
                if (current_.domain_index >= 0 && domain_index != current_.domain_index &&
                    rng_.coin(p_.domains[static_cast<size_t>(current_.domain_index)].keep_open_prob))
                    push_open_tab(current_);
                emit(ActivityKind::kNavigation, t, url);
                current_ = Tab{url, domain_index};
            }
            first = false;

            // Dwell on the focused page with the domain's input cadence.
            double gap_mean = 6.0;  // non-history pages: brief engaged dwell
            int64_t dwell;
            if (current_.domain_index >= 0) {
                const auto& d = p_.domains[static_cast<size_t>(current_.domain_index)];
                dwell = std::clamp<int64_t>(
                    static_cast<int64_t>(rng_.lognormal(d.dwell_log_mean, d.dwell_log_sigma)),
                    3, 2700);
                gap_mean = d.input_gap_mean_s;
            } else {
                dwell = rng_.between(2, 10);
            }
            int64_t dwell_end = std::min(t + dwell, te);

            bool idle_here = rng_.coin(p_.idle_prob) && dwell_end - t > 300;
            int64_t t_idle = idle_here ? t + rng_.between(60, dwell_end - t - 120) : -1;

            int64_t tin = t;
            while (true) {
                int64_t g = std::max<int64_t>(
                    1, static_cast<int64_t>(-gap_mean * std::log(rng_.uniform_pos())));
                tin += g;
                if (idle_here && tin >= t_idle) break;
                if (tin >= dwell_end) break;
                emit(ActivityKind::kInput, tin);
            }

            if (idle_here) {
                emit(ActivityKind::kIdleStart, t_idle);
                ++stats_.idle_gaps;
                int64_t gap = rng_.between(120, 900);
                int64_t resume = t_idle + gap;
                if (resume + 30 >= te) {
                    t = std::min(resume, te);
                    break;  // idled out of the session
                }
                emit(ActivityKind::kWindowFocus, resume);
                emit(ActivityKind::kInput, resume + 1);
                t = std::min(dwell_end + gap, te);
            } else {
                t = dwell_end;
            }
        }

        // Session end.
        double r = rng_.uniform();
        if (r < 0.75) {
            emit(ActivityKind::kWindowBlur, std::max(t, last_time_));
            if (current_.domain_index >= 0 &&
                rng_.coin(p_.domains[static_cast<size_t>(current_.domain_index)].keep_open_prob))
                push_open_tab(current_);
        } else if (r < 0.90) {
            emit(ActivityKind::kScreenLock, std::max(t, last_time_));
            if (current_.domain_index >= 0 &&
                rng_.coin(p_.domains[static_cast<size_t>(current_.domain_index)].keep_open_prob))
                push_open_tab(current_);
        } else if (r < 0.97) {
            emit(ActivityKind::kTabClose, std::max(t, last_time_));
        } else {
            emit(ActivityKind::kWindowClose, std::max(t, last_time_));
            open_tabs_.clear();
        }
        current_ = Tab{};
    }

    UserProfile p_;
    std::string user_id_;
    Rng rng_;
    std::vector<double> weights_;
    std::vector<ActivityEvent> events_;
    std::vector<Tab> open_tabs_;
    Tab current_;
    int64_t page_counter_ = 0;
    int64_t last_time_ = 0;
    SimStats stats_;
};

}  // namespace sim_detail

inline SimulatedUser generate_user(const UserProfile& profile, std::string user_id) {
    sim_detail::UserGenerator gen(profile, std::move(user_id));
    return gen.run();
}

struct SimulatedCorpus {
    uint64_t master_seed = 0;
    std::vector<SimulatedUser> users;
    std::vector<bool> is_train;  // even index -> train
};

inline UserProfile jitter_profile(const UserProfile& base, Rng& rng) {
    UserProfile p = base;
    const ProfileJitter& j = base.jitter;
    p.sessions_per_day *= std::exp(rng.normal() * j.sessions_per_day_sigma);
    p.session_length_log_mean += rng.normal() * j.session_length_sigma;
    double input_factor = std::exp(rng.normal() * j.input_gap_sigma);
    for (auto& d : p.domains) d.input_gap_mean_s *= input_factor;
    p.background_tab_prob = std::clamp(
        p.background_tab_prob * std::exp(rng.normal() * j.background_prob_sigma), 0.0, 0.6);
    return p;
}

inline SimulatedCorpus generate_corpus(int n_users, uint64_t master_seed,
                                       const UserProfile& base_profile) {
    SimulatedCorpus corpus;
    corpus.master_seed = master_seed;
    uint64_t root = splitmix64_mix(master_seed);
    for (int i = 0; i < n_users; ++i) {
        uint64_t user_seed = splitmix64_mix(root + static_cast<uint64_t>(i));
        Rng jitter_rng(splitmix64_mix(user_seed ^ 0x6a09e667f3bcc908ull));
        UserProfile profile = jitter_profile(base_profile, jitter_rng);
        profile.seed = user_seed;
        char name[16];
        std::snprintf(name, sizeof name, "u%04d", i);
        corpus.users.push_back(generate_user(profile, name));
        corpus.is_train.push_back(i % 2 == 0);
    }
    return corpus;
}

// ---------------------------------------------------------------------------
// Profile files (JSON)

inline nlohmann::json profile_to_json(const UserProfile& p) {
    nlohmann::json j;
    j["format"] = "rebrowse-profile v1";
    j["days"] = p.days;
    j["start_epoch_s"] = p.start_epoch_s;
    j["sessions_per_day"] = p.sessions_per_day;
    j["session_length_log_mean"] = p.session_length_log_mean;
    j["session_length_log_sigma"] = p.session_length_log_sigma;
    j["background_tab_prob"] = p.background_tab_prob;
    j["idle_prob"] = p.idle_prob;
    j["nonhistory_prob"] = p.nonhistory_prob;
    j["subframe_prob"] = p.subframe_prob;
    j["reload_prob"] = p.reload_prob;
    j["link_prob"] = p.link_prob;
    j["max_open_tabs"] = p.max_open_tabs;
    j["jitter"] = {{"session_length_sigma", p.jitter.session_length_sigma},
                   {"sessions_per_day_sigma", p.jitter.sessions_per_day_sigma},
                   {"input_gap_sigma", p.jitter.input_gap_sigma},
                   {"background_prob_sigma", p.jitter.background_prob_sigma}};
    j["domains"] = nlohmann::json::array();
    for (const auto& d : p.domains) {
        j["domains"].push_back({{"domain", d.domain},
                                {"weight", d.weight},
                                {"dwell_log_mean", d.dwell_log_mean},
                                {"dwell_log_sigma", d.dwell_log_sigma},
                                {"input_gap_mean_s", d.input_gap_mean_s},
                                {"continue_prob", d.continue_prob},
                                {"keep_open_prob", d.keep_open_prob},
                                {"sticky", d.sticky}});
    }
    return j;
}

inline UserProfile profile_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("format", "") != "rebrowse-profile v1")
        throw DataError("not a rebrowse-profile v1 file");
    UserProfile p;
    p.days = j.value("days", p.days);
    p.start_epoch_s = j.value("start_epoch_s", p.start_epoch_s);
    p.sessions_per_day = j.value("sessions_per_day", p.sessions_per_day);
    p.session_length_log_mean = j.value("session_length_log_mean", p.session_length_log_mean);
    p.session_length_log_sigma = j.value("session_length_log_sigma", p.session_length_log_sigma);
    p.background_tab_prob = j.value("background_tab_prob", p.background_tab_prob);
    p.idle_prob = j.value("idle_prob", p.idle_prob);
    p.nonhistory_prob = j.value("nonhistory_prob", p.nonhistory_prob);
    p.subframe_prob = j.value("subframe_prob", p.subframe_prob);
    p.reload_prob = j.value("reload_prob", p.reload_prob);
    p.link_prob = j.value("link_prob", p.link_prob);
    p.max_open_tabs = j.value("max_open_tabs", p.max_open_tabs);
    if (j.contains("jitter")) {
        const auto& jt = j.at("jitter");
        p.jitter.session_length_sigma = jt.value("session_length_sigma", 0.0);
        p.jitter.sessions_per_day_sigma = jt.value("sessions_per_day_sigma", 0.0);
        p.jitter.input_gap_sigma = jt.value("input_gap_sigma", 0.0);
        p.jitter.background_prob_sigma = jt.value("background_prob_sigma", 0.0);
    }
    if (!j.contains("domains") || !j.at("domains").is_array() || j.at("domains").empty())
        throw DataError("profile needs a non-empty domains array");
    for (const auto& dj : j.at("domains")) {
        DomainBehavior d;
        d.domain = dj.at("domain").get<std::string>();
        d.weight = dj.value("weight", d.weight);
        d.dwell_log_mean = dj.value("dwell_log_mean", d.dwell_log_mean);
        d.dwell_log_sigma = dj.value("dwell_log_sigma", d.dwell_log_sigma);
        d.input_gap_mean_s = dj.value("input_gap_mean_s", d.input_gap_mean_s);
        d.continue_prob = dj.value("continue_prob", d.continue_prob);
        d.keep_open_prob = dj.value("keep_open_prob", d.keep_open_prob);
        d.sticky = dj.value("sticky", false);
        if (d.weight < 0 || d.input_gap_mean_s <= 0)
            throw DataError("profile domain '" + d.domain + "' has invalid parameters");
        p.domains.push_back(std::move(d));
    }
    return p;
}

// Built-in default: a mix of engaged short-dwell sites, paginated sites,
// passive long-dwell video, and sticky mail/social tabs, plus a long tail so
// the vocabulary's OTHER bucket is exercised.
inline UserProfile default_profile() {
    UserProfile p;
    p.jitter = ProfileJitter{0.30, 0.35, 0.25, 0.30};
    auto add = [&p](std::string domain, double weight, double dwell_median_s,
                    double dwell_sigma, double input_gap, double continue_prob,
                    double keep_open, bool sticky) {
        DomainBehavior d;
        d.domain = std::move(domain);
        d.weight = weight;
        d.dwell_log_mean = std::log(dwell_median_s);
        d.dwell_log_sigma = dwell_sigma;
        d.input_gap_mean_s = input_gap;
        d.continue_prob = continue_prob;
        d.keep_open_prob = keep_open;
        d.sticky = sticky;
        p.domains.push_back(std::move(d));
    };
    add("social.example.com", 0.16, 420.0, 0.8, 8.0, 0.25, 0.75, true);
    add("mail.example.com", 0.12, 130.0, 0.6, 10.0, 0.45, 0.85, true);
    add("video.example.com", 0.10, 540.0, 0.9, 170.0, 0.30, 0.50, false);
    add("news.example.com", 0.12, 45.0, 0.6, 12.0, 0.70, 0.30, false);
    add("search.example.com", 0.14, 14.0, 0.5, 6.0, 0.30, 0.15, false);
    add("shop.example.com", 0.08, 35.0, 0.6, 9.0, 0.60, 0.30, false);
    add("work.example.com", 0.08, 90.0, 0.7, 7.0, 0.50, 0.40, false);
    add("wiki.example.com", 0.07, 150.0, 0.7, 20.0, 0.40, 0.30, false);
    add("forum.example.com", 0.05, 80.0, 0.7, 10.0, 0.55, 0.50, true);
    add("docs.example.com", 0.015, 200.0, 0.7, 9.0, 0.40, 0.40, false);
    add("blog.example.com", 0.010, 120.0, 0.7, 15.0, 0.30, 0.20, false);
    add("code.example.com", 0.010, 160.0, 0.8, 11.0, 0.50, 0.40, false);
    add("maps.example.com", 0.008, 60.0, 0.6, 7.0, 0.30, 0.20, false);
    add("bank.example.com", 0.006, 50.0, 0.5, 8.0, 0.40, 0.10, false);
    add("travel.example.com", 0.006, 70.0, 0.7, 9.0, 0.50, 0.25, false);
    add("recipes.example.com", 0.005, 90.0, 0.7, 14.0, 0.35, 0.20, false);
    add("weather.example.com", 0.005, 20.0, 0.4, 8.0, 0.10, 0.10, false);
    add("sports.example.com", 0.005, 60.0, 0.7, 10.0, 0.50, 0.25, false);
    add("music.example.com", 0.004, 300.0, 0.8, 60.0, 0.20, 0.60, true);
    add("photos.example.com", 0.004, 80.0, 0.7, 9.0, 0.40, 0.20, false);
    add("games.example.com", 0.003, 240.0, 0.8, 15.0, 0.30, 0.30, false);
    add("podcasts.example.com", 0.003, 200.0, 0.8, 80.0, 0.20, 0.40, false);
    add("events.example.com", 0.002, 40.0, 0.6, 9.0, 0.30, 0.15, false);
    add("fitness.example.com", 0.002, 60.0, 0.6, 10.0, 0.30, 0.15, false);
    add("realty.example.com", 0.002, 70.0, 0.7, 9.0, 0.45, 0.20, false);
    add("jobs.example.com", 0.002, 60.0, 0.7, 9.0, 0.45, 0.20, false);
    return p;
}

}  // namespace rebrowse
