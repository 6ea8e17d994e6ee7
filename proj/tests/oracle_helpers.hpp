#pragma once
// Independent brute-force oracles for the per-second operations. Everything
// here rescans plain visit lists linearly (no UserHistory indexes, no binary
// search), so agreement with the library is a real check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rebrowse/rng.hpp"
#include "rebrowse/types.hpp"

namespace oracle {

using rebrowse::HistoryVisit;
using rebrowse::ProductivityLevel;
using rebrowse::Transition;

inline bool is_frame(const HistoryVisit& v) {
    return v.transition == Transition::kAutoSubframe ||
           v.transition == Transition::kManualSubframe;
}

// Sorted, frame-filtered copy; the oracle's own ingest.
inline std::vector<HistoryVisit> prepare(std::vector<HistoryVisit> visits) {
    std::erase_if(visits, is_frame);
    std::stable_sort(visits.begin(), visits.end(),
                     [](const HistoryVisit& a, const HistoryVisit& b) {
                         if (a.visit_time_ms != b.visit_time_ms)
                             return a.visit_time_ms < b.visit_time_ms;
                         return a.visit_id < b.visit_id;
                     });
    return visits;
}

inline int64_t vsec(const HistoryVisit& v) { return v.visit_time_ms / 1000; }

inline double log_dur(int64_t d) {
    return std::log(static_cast<double>(d < 1 ? 1 : d));
}

inline double missing_log() { return std::log(86400.0); }

inline int vocab_index(const std::vector<std::string>& vocab, const std::string& d) {
    for (size_t i = 0; i < vocab.size(); ++i)
        if (vocab[i] == d) return static_cast<int>(i);
    return -1;
}

// --------------------------------------------------------------------------
// Browser-active features, full rescan

inline std::array<float, 48> active_features(
    int64_t s, const std::vector<HistoryVisit>& raw,
    const std::vector<std::string>& vocab,
    const std::vector<std::pair<std::string, ProductivityLevel>>& productivity) {
    std::vector<HistoryVisit> visits = prepare(raw);
    const HistoryVisit* prev = nullptr;
    const HistoryVisit* next = nullptr;
    for (const auto& v : visits) {
        if (vsec(v) <= s) prev = &v;
        if (vsec(v) > s && next == nullptr) next = &v;
    }

    std::array<float, 48> out{};
    double gap = (prev && next) ? log_dur(vsec(*next) - vsec(*prev)) : missing_log();
    double since = prev ? log_dur(s - vsec(*prev)) : missing_log();
    double until = next ? log_dur(vsec(*next) - s) : missing_log();
    out[0] = static_cast<float>(gap);
    out[1] = static_cast<float>(since);
    out[2] = static_cast<float>(until);

    if (prev) {
        int idx = vocab_index(vocab, prev->domain);
        if (idx >= 0) out[static_cast<size_t>(3 + idx)] = 1.0f;
    }
    if (next) {
        int idx = vocab_index(vocab, next->domain);
        if (idx >= 0) out[static_cast<size_t>(23 + idx)] = 1.0f;
    }
    ProductivityLevel level = ProductivityLevel::kNeutral;
    if (prev) {
        for (const auto& [d, l] : productivity)
            if (d == prev->domain) level = l;
    }
    out[static_cast<size_t>(43 + static_cast<int>(level))] = 1.0f;
    return out;
}

// --------------------------------------------------------------------------
// Candidate sets, full rescan

struct Candidates {
    bool ok = false;  // a visit at or before s exists
    std::string current, next, past1, past2;
    bool has_next = false, has_past1 = false, has_past2 = false;
    int64_t t_current = 0, t_next = 0, t_past1 = 0, t_past2 = 0;
    int64_t id_current = 0, id_next = 0, id_past1 = 0, id_past2 = 0;
    int64_t visits_since_past1 = 0, visits_since_past2 = 0;
    bool ref_c = false, ref_p1 = false, ref_p2 = false;
};

inline Candidates candidates(int64_t s, const std::vector<HistoryVisit>& raw) {
    std::vector<HistoryVisit> visits = prepare(raw);
    Candidates out;
    int64_t c = -1;
    for (size_t i = 0; i < visits.size(); ++i)
        if (vsec(visits[i]) <= s) c = static_cast<int64_t>(i);
    if (c < 0) return out;
    out.ok = true;
    out.current = visits[static_cast<size_t>(c)].domain;
    out.t_current = vsec(visits[static_cast<size_t>(c)]);
    out.id_current = visits[static_cast<size_t>(c)].visit_id;

    for (size_t i = 0; i < visits.size(); ++i) {
        if (vsec(visits[i]) > s) {
            out.has_next = true;
            out.next = visits[i].domain;
            out.t_next = vsec(visits[i]);
            out.id_next = visits[i].visit_id;
            if (visits[i].referring_visit_id) {
                int64_t ref = *visits[i].referring_visit_id;
                out.ref_c = ref == out.id_current;
            }
            break;
        }
    }

    int64_t p1 = -1;
    for (int64_t i = c - 1; i >= 0; --i) {
        if (visits[static_cast<size_t>(i)].domain != out.current) {
            p1 = i;
            break;
        }
    }
    if (p1 >= 0) {
        out.has_past1 = true;
        out.past1 = visits[static_cast<size_t>(p1)].domain;
        out.t_past1 = vsec(visits[static_cast<size_t>(p1)]);
        out.id_past1 = visits[static_cast<size_t>(p1)].visit_id;
        out.visits_since_past1 = c - p1;
        int64_t p2 = -1;
        for (int64_t i = c - 1; i >= 0; --i) {
            const std::string& d = visits[static_cast<size_t>(i)].domain;
            if (d != out.current && d != out.past1) {
                p2 = i;
                break;
            }
        }
        if (p2 >= 0) {
            out.has_past2 = true;
            out.past2 = visits[static_cast<size_t>(p2)].domain;
            out.t_past2 = vsec(visits[static_cast<size_t>(p2)]);
            out.id_past2 = visits[static_cast<size_t>(p2)].visit_id;
            out.visits_since_past2 = c - p2;
        }
    }
    if (out.has_next) {
        for (const auto& v : visits) {
            if (v.visit_id == out.id_next && v.referring_visit_id) {
                int64_t ref = *v.referring_visit_id;
                out.ref_p1 = out.has_past1 && ref == out.id_past1;
                out.ref_p2 = out.has_past2 && ref == out.id_past2;
            }
        }
    }
    return out;
}

// --------------------------------------------------------------------------
// Focused-domain features, full rescan

inline std::array<float, 97> domain_features(int64_t s,
                                             const std::vector<HistoryVisit>& raw,
                                             const std::vector<std::string>& vocab) {
    std::vector<HistoryVisit> visits = prepare(raw);
    Candidates set = candidates(s, raw);
    std::array<float, 97> out{};

    out[0] = static_cast<float>(set.has_next ? log_dur(set.t_next - set.t_current)
                                             : missing_log());
    out[1] = static_cast<float>(log_dur(s - set.t_current));
    out[2] = static_cast<float>(set.has_next ? log_dur(set.t_next - s) : missing_log());
    out[3] = static_cast<float>(set.has_past1 ? log_dur(s - set.t_past1) : missing_log());
    out[4] = static_cast<float>(set.has_past2 ? log_dur(s - set.t_past2) : missing_log());
    out[5] = static_cast<float>(set.visits_since_past1);
    out[6] = static_cast<float>(set.visits_since_past2);

    auto follow_count = [&](const std::string& domain) {
        int64_t count = 0;
        for (size_t i = 1; i < visits.size(); ++i) {
            int64_t t = vsec(visits[i]);
            if (t < s - 1200 || t > s) continue;
            if (visits[i].domain == domain && visits[i - 1].domain != domain) ++count;
        }
        return count;
    };
    if (set.has_next) out[7] = static_cast<float>(follow_count(set.next));
    out[8] = static_cast<float>(follow_count(set.current));
    if (set.has_past1) out[9] = static_cast<float>(follow_count(set.past1));
    if (set.has_past2) out[10] = static_cast<float>(follow_count(set.past2));

    out[11] = set.ref_c ? 1.0f : 0.0f;
    out[12] = set.ref_p1 ? 1.0f : 0.0f;
    out[13] = set.ref_p2 ? 1.0f : 0.0f;

    auto onehot = [&](int base, bool has, const std::string& domain) {
        if (!has) return;
        int idx = vocab_index(vocab, domain);
        if (idx >= 0) out[static_cast<size_t>(base + idx)] = 1.0f;
    };
    onehot(14, true, set.current);
    onehot(34, set.has_next, set.next);
    onehot(54, set.has_past1, set.past1);
    onehot(74, set.has_past2, set.past2);

    if (set.has_next) {
        out[94] = set.next == set.current ? 1.0f : 0.0f;
        out[95] = set.has_past1 && set.next == set.past1 ? 1.0f : 0.0f;
        out[96] = set.has_past2 && set.next == set.past2 ? 1.0f : 0.0f;
    }
    return out;
}

// --------------------------------------------------------------------------
// Sessionization from a plain sorted list of active seconds

inline std::vector<std::pair<int64_t, int64_t>> sessions(const std::vector<int64_t>& active,
                                                         int64_t gap = 1200) {
    std::vector<std::pair<int64_t, int64_t>> out;
    for (size_t i = 0; i < active.size(); ++i) {
        if (out.empty() || active[i] - (out.back().second - gap) - 1 > gap)
            out.emplace_back(active[i], active[i] + gap);
        else
            out.back().second = active[i] + gap;
    }
    return out;
}

// --------------------------------------------------------------------------
// Forest re-walk from the serialized text format

struct WalkNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1, right = -1;
    std::vector<long long> counts;
};

struct WalkForest {
    int width = 0;
    int classes = 0;
    std::vector<long long> class_totals;
    std::vector<std::vector<WalkNode>> trees;
};

inline WalkForest parse_forest(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    WalkForest f;
    std::getline(in, line);  // header
    if (line != "rebrowse-forest v1") std::abort();
    std::getline(in, line);
    f.width = std::atoi(line.c_str() + 6);
    std::getline(in, line);
    f.classes = std::atoi(line.c_str() + 8);
    std::getline(in, line);
    {
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        long long v;
        while (ss >> v) f.class_totals.push_back(v);
    }
    std::getline(in, line);  // params
    int n_trees = 0;
    std::sscanf(line.c_str(), "params trees %d", &n_trees);
    for (int t = 0; t < n_trees; ++t) {
        std::getline(in, line);
        size_t nodes = 0;
        std::sscanf(line.c_str(), "tree %*d nodes %zu", &nodes);
        std::vector<WalkNode> tree;
        for (size_t i = 0; i < nodes; ++i) {
            std::getline(in, line);
            WalkNode node;
            if (line[0] == 's') {
                char* end = nullptr;
                node.feature = static_cast<int>(std::strtol(line.c_str() + 2, &end, 10));
                node.threshold = std::strtod(end, &end);
                node.left = static_cast<int>(std::strtol(end, &end, 10));
                node.right = static_cast<int>(std::strtol(end, &end, 10));
            } else {
                const char* p = line.c_str() + 1;
                char* end = nullptr;
                while (true) {
                    long long v = std::strtoll(p, &end, 10);
                    if (end == p) break;
                    node.counts.push_back(v);
                    p = end;
                }
            }
            tree.push_back(std::move(node));
        }
        f.trees.push_back(std::move(tree));
    }
    return f;
}

inline int walk_predict(const WalkForest& f, const std::vector<float>& row) {
    auto better = [&f](int challenger, int incumbent) {
        long long tc = f.class_totals[static_cast<size_t>(challenger)];
        long long ti = f.class_totals[static_cast<size_t>(incumbent)];
        if (tc != ti) return tc > ti;
        return challenger < incumbent;
    };
    std::vector<long long> votes(static_cast<size_t>(f.classes), 0);
    for (const auto& tree : f.trees) {
        const WalkNode* node = &tree[0];
        while (node->feature >= 0) {
            double v = row[static_cast<size_t>(node->feature)];
            node = &tree[static_cast<size_t>(v < node->threshold ? node->left : node->right)];
        }
        int best = 0;
        for (int k = 1; k < f.classes; ++k) {
            if (node->counts[static_cast<size_t>(k)] > node->counts[static_cast<size_t>(best)])
                best = k;
            else if (node->counts[static_cast<size_t>(k)] == node->counts[static_cast<size_t>(best)] &&
                     better(k, best))
                best = k;
        }
        ++votes[static_cast<size_t>(best)];
    }
    int best = 0;
    for (int k = 1; k < f.classes; ++k) {
        if (votes[static_cast<size_t>(k)] > votes[static_cast<size_t>(best)])
            best = k;
        else if (votes[static_cast<size_t>(k)] == votes[static_cast<size_t>(best)] && better(k, best))
            best = k;
    }
    return best;
}

// --------------------------------------------------------------------------
// Random history generation shared by the oracle-equivalence suites

struct HistoryGen {
    explicit HistoryGen(uint64_t seed) : rng(seed) {}
    rebrowse::Rng rng;

    std::vector<HistoryVisit> random_history(int max_visits = 50) {
        static const char* domains[] = {"a.example", "b.example", "c.example",
                                        "d.example", "e.example"};
        int n = static_cast<int>(rng.below(static_cast<uint64_t>(max_visits))) + 1;
        std::vector<HistoryVisit> visits;
        int64_t t = 1000;
        for (int i = 0; i < n; ++i) {
            HistoryVisit v;
            v.user_id = "u";
            v.visit_id = 100 + i;
            t += rng.between(0, 400);  // occasional same-second ties
            v.visit_time_ms = t * 1000 + rng.between(0, 1000);
            v.domain = domains[rng.below(5)];
            v.url = "https://" + v.domain + "/" + std::to_string(i);
            int roll = static_cast<int>(rng.below(10));
            if (roll == 0)
                v.transition = Transition::kAutoSubframe;
            else if (roll == 1)
                v.transition = Transition::kManualSubframe;
            else
                v.transition = rng.coin(0.5) ? Transition::kLink : Transition::kTyped;
            if (i > 0 && rng.coin(0.6))
                v.referring_visit_id = 100 + static_cast<int64_t>(rng.below(static_cast<uint64_t>(i)));
            visits.push_back(std::move(v));
        }
        return visits;
    }
};

}  // namespace oracle
