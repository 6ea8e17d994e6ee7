#pragma once
// End-to-end glue shared by the CLI and the acceptance suite: corpus files,
// model training and artifacts, reconstruction, and the evaluation report.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rebrowse/active_features.hpp"
#include "rebrowse/activity.hpp"
#include "rebrowse/baselines.hpp"
#include "rebrowse/domain_features.hpp"
#include "rebrowse/forest.hpp"
#include "rebrowse/history.hpp"
#include "rebrowse/metrics.hpp"
#include "rebrowse/parallel.hpp"
#include "rebrowse/simulator.hpp"
#include "rebrowse/types.hpp"

namespace rebrowse {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Corpus directory: per-user history/activity NDJSON pairs plus manifest.json

struct CorpusUser {
    std::string id;
    bool train = false;
    std::vector<ActivityEvent> events;
    std::vector<HistoryVisit> visits;  // raw (frames included)
};

struct Corpus {
    uint64_t master_seed = 0;
    std::vector<CorpusUser> users;  // sorted by id

    std::vector<const CorpusUser*> split(bool train) const {
        std::vector<const CorpusUser*> out;
        for (const auto& u : users)
            if (u.train == train) out.push_back(&u);
        return out;
    }
};

inline Corpus corpus_from_simulation(const SimulatedCorpus& sim) {
    Corpus corpus;
    corpus.master_seed = sim.master_seed;
    for (size_t i = 0; i < sim.users.size(); ++i) {
        CorpusUser u;
        u.id = sim.users[i].user_id;
        u.train = sim.is_train[i];
        u.events = sim.users[i].events;
        u.visits = sim.users[i].visits;
        corpus.users.push_back(std::move(u));
    }
    return corpus;
}

inline void save_corpus(const Corpus& corpus, const fs::path& dir, bool dump_truth = false) {
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["format"] = "rebrowse-corpus v1";
    manifest["master_seed"] = corpus.master_seed;
    manifest["users"] = nlohmann::json::array();
    for (const auto& u : corpus.users) {
        std::string hist_name = u.id + ".history.ndjson";
        std::string act_name = u.id + ".activity.ndjson";
        write_file(dir / hist_name, serialize_history(u.visits));
        write_file(dir / act_name, serialize_activity_log(u.events));
        manifest["users"].push_back({{"id", u.id},
                                     {"split", u.train ? "train" : "test"},
                                     {"history", hist_name},
                                     {"activity", act_name}});
        if (dump_truth) {
            auto spans = build_spans(u.events);
            auto grid = active_seconds(spans, u.events);
            write_file(dir / (u.id + ".spans.csv"), spans_to_csv(spans));
            write_file(dir / (u.id + ".grid.csv"), grid_to_csv(grid));
        }
    }
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

inline Corpus load_corpus(const fs::path& dir) {
    fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path))
        throw DataError("missing split manifest " + manifest_path.string());
    nlohmann::json manifest = nlohmann::json::parse(read_file(manifest_path));
    if (manifest.value("format", "") != "rebrowse-corpus v1")
        throw DataError("unrecognized corpus manifest format");
    Corpus corpus;
    corpus.master_seed = manifest.value("master_seed", 0ull);
    for (const auto& ju : manifest.at("users")) {
        CorpusUser u;
        u.id = ju.at("id").get<std::string>();
        std::string split = ju.at("split").get<std::string>();
        if (split != "train" && split != "test")
            throw DataError("user " + u.id + ": unknown split '" + split + "'");
        u.train = split == "train";
        std::ifstream hist(dir / ju.at("history").get<std::string>());
        if (!hist) throw DataError("user " + u.id + " missing history file");
        u.visits = parse_history(hist, u.id);
        std::ifstream act(dir / ju.at("activity").get<std::string>());
        if (!act) throw DataError("user " + u.id + " missing activity file");
        u.events = parse_activity_log(act, u.id);
        corpus.users.push_back(std::move(u));
    }
    std::sort(corpus.users.begin(), corpus.users.end(),
              [](const CorpusUser& a, const CorpusUser& b) { return a.id < b.id; });
    return corpus;
}

// ---------------------------------------------------------------------------
// Per-user derived state

struct PreparedUser {
    std::string id;
    bool train = false;
    UserHistory history;
    SecondGrid truth;
    std::vector<Session> truth_sessions;
};

inline PreparedUser prepare_user(const CorpusUser& u) {
    PreparedUser p;
    p.id = u.id;
    p.train = u.train;
    p.history = UserHistory::build(u.visits);
    auto spans = build_spans(u.events);
    p.truth = active_seconds(spans, u.events);
    p.truth_sessions = sessions(p.truth);
    return p;
}

inline std::vector<PreparedUser> prepare_users(const Corpus& corpus, bool train,
                                               int n_threads = default_thread_count()) {
    auto selected = corpus.split(train);
    std::vector<PreparedUser> out(selected.size());
    parallel_for(static_cast<int64_t>(selected.size()), n_threads,
                 [&](int64_t i) { out[static_cast<size_t>(i)] = prepare_user(*selected[static_cast<size_t>(i)]); });
    return out;
}

// ---------------------------------------------------------------------------
// Models

struct TrainedModels {
    DomainVocabulary vocabulary;
    ProductivityMap productivity;
    Forest active_forest;
    Forest domain_forest;
    int threshold_minutes = 5;
    std::map<int, double> threshold_f1_by_minutes;
    uint64_t seed = 0;
};

struct TrainingSummary {
    int64_t train_users = 0;
    int64_t active_rows = 0;
    int64_t active_positive = 0;
    int64_t domain_rows = 0;
    std::array<int64_t, 4> domain_class_counts{};
    int64_t domain_skipped_none = 0;
    int64_t domain_skipped_pre_history = 0;
};

inline TrainedModels train_models(const std::vector<PreparedUser>& train_users,
                                  ProductivityMap productivity, uint64_t seed,
                                  TrainingSummary* summary = nullptr,
                                  int n_threads = default_thread_count()) {
    if (train_users.empty()) throw DataError("no training users");
    TrainedModels models;
    models.seed = seed;
    models.productivity = std::move(productivity);

    std::vector<HistoryVisit> train_visits;
    for (const auto& u : train_users)
        train_visits.insert(train_visits.end(), u.history.visits().begin(),
                            u.history.visits().end());
    models.vocabulary = compute_top_domains(train_visits);

    std::vector<UserDataset> datasets;
    datasets.reserve(train_users.size());
    for (const auto& u : train_users)
        datasets.push_back(UserDataset{u.id, &u.truth, &u.history});

    ActiveDataset active = build_active_dataset(datasets, models.vocabulary,
                                                models.productivity);
    ForestParams params;
    params.seed = seed;
    models.active_forest = Forest::fit(active.features, active.labels, params, n_threads);

    DomainDataset domain = build_domain_dataset(datasets, models.vocabulary);
    ForestParams domain_params;
    domain_params.seed = splitmix64_mix(seed ^ 0x5bf0a8b1457395ffull);
    models.domain_forest = Forest::fit(domain.features, domain.labels, domain_params,
                                       n_threads);

    std::vector<SweepInput> sweep_inputs;
    for (const auto& u : train_users)
        sweep_inputs.push_back(SweepInput{&u.truth, &u.history});
    for (int m = 1; m <= 10; ++m)
        models.threshold_f1_by_minutes[m] = threshold_in_session_metrics(sweep_inputs, m).f1;
    models.threshold_minutes = sweep_threshold(sweep_inputs);

    if (summary) {
        summary->train_users = static_cast<int64_t>(train_users.size());
        summary->active_rows = active.features.row_count();
        for (int32_t l : active.labels) summary->active_positive += l;
        summary->domain_rows = domain.features.row_count();
        for (int32_t l : domain.labels)
            ++summary->domain_class_counts[static_cast<size_t>(l)];
        summary->domain_skipped_none = domain.skipped_none;
        summary->domain_skipped_pre_history = domain.skipped_pre_history;
    }
    return models;
}

inline uint64_t vocabulary_hash(const DomainVocabulary& vocab) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& d : vocab.domains()) {
        h = fnv1a64(d, h);
        h = fnv1a64("\n", h);
    }
    return h;
}

inline std::string serialize_vocabulary(const DomainVocabulary& vocab) {
    std::string out = "rebrowse-vocab v1\n";
    out += std::to_string(vocab.size());
    out += '\n';
    for (const auto& d : vocab.domains()) {
        out += d;
        out += '\n';
    }
    return out;
}

inline DomainVocabulary deserialize_vocabulary(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "rebrowse-vocab v1")
        throw DataError("not a rebrowse-vocab v1 file");
    if (!std::getline(in, line)) throw DataError("vocabulary file truncated");
    int n = std::stoi(line);
    std::vector<std::string> domains;
    for (int i = 0; i < n; ++i) {
        if (!std::getline(in, line)) throw DataError("vocabulary file truncated");
        domains.push_back(line);
    }
    return DomainVocabulary(std::move(domains));
}

inline void save_models(const TrainedModels& models, const fs::path& dir,
                        const std::string& productivity_csv = {}) {
    fs::create_directories(dir);
    write_file(dir / "vocabulary.txt", serialize_vocabulary(models.vocabulary));
    write_file(dir / "active_forest.txt", models.active_forest.serialize());
    write_file(dir / "domain_forest.txt", models.domain_forest.serialize());
    nlohmann::json threshold;
    threshold["format"] = "rebrowse-threshold v1";
    threshold["best_minutes"] = models.threshold_minutes;
    nlohmann::json per_m = nlohmann::json::object();
    for (const auto& [m, f1] : models.threshold_f1_by_minutes)
        per_m[std::to_string(m)] = f1;
    threshold["f1_by_minutes"] = per_m;
    write_file(dir / "threshold.json", threshold.dump(2) + "\n");

    nlohmann::json meta;
    meta["format"] = "rebrowse-model v1";
    meta["seed"] = models.seed;
    meta["vocabulary_hash"] = vocabulary_hash(models.vocabulary);
    meta["files"] = {"vocabulary.txt", "active_forest.txt", "domain_forest.txt",
                     "threshold.json"};
    write_file(dir / "model.json", meta.dump(2) + "\n");
    write_file(dir / "productivity.csv", productivity_csv);
}

inline TrainedModels load_models(const fs::path& dir) {
    nlohmann::json meta = nlohmann::json::parse(read_file(dir / "model.json"));
    if (meta.value("format", "") != "rebrowse-model v1")
        throw DataError("unrecognized model.json format");
    TrainedModels models;
    models.seed = meta.value("seed", 0ull);
    models.vocabulary = deserialize_vocabulary(read_file(dir / "vocabulary.txt"));
    if (vocabulary_hash(models.vocabulary) != meta.at("vocabulary_hash").get<uint64_t>())
        throw DataError("vocabulary version mismatch: vocabulary.txt does not match model.json");
    models.active_forest = Forest::deserialize(read_file(dir / "active_forest.txt"));
    models.domain_forest = Forest::deserialize(read_file(dir / "domain_forest.txt"));
    nlohmann::json threshold = nlohmann::json::parse(read_file(dir / "threshold.json"));
    models.threshold_minutes = threshold.at("best_minutes").get<int>();
    for (const auto& [key, value] : threshold.at("f1_by_minutes").items())
        models.threshold_f1_by_minutes[std::stoi(key)] = value.get<double>();
    if (fs::exists(dir / "productivity.csv"))
        models.productivity = load_productivity_map(read_file(dir / "productivity.csv"));
    return models;
}

// ---------------------------------------------------------------------------
// Reconstruction

// Forest activity predictions for an explicit list of seconds.
inline std::vector<uint8_t> predict_active_seconds(const std::vector<int64_t>& seconds,
                                                   const UserHistory& history,
                                                   const TrainedModels& models) {
    FeatureMatrix batch(kActiveFeatureWidth, active_feature_binary_mask());
    batch.reserve(static_cast<int64_t>(seconds.size()));
    for (int64_t s : seconds) {
        auto f = featurize_active(s, history, models.vocabulary, models.productivity)
                     .to_floats();
        batch.append_row(f);
    }
    std::vector<int32_t> cls = models.active_forest.predict_batch(batch, 1);
    std::vector<uint8_t> out(cls.size());
    for (size_t i = 0; i < cls.size(); ++i) out[i] = cls[i] == 1 ? 1 : 0;
    return out;
}

enum class ReconstructionMethod { kForest, kHeuristic };
constexpr int kHeuristicThresholdMinutes = 5;

// Predicts activity over [first visit second, last visit second + 1h] and
// assigns a domain to each predicted-active second. The heuristic method is
// the fixed 5-minute threshold plus most-recent-domain.
inline SecondGrid reconstruct_user(const UserHistory& history, const TrainedModels& models,
                                   ReconstructionMethod method) {
    if (history.empty()) return SecondGrid{};
    int64_t first = history.visit_second(0);
    int64_t last = history.visit_second(history.size() - 1);
    int64_t end = last + 3600 + 1;
    const std::string user_id = history.visits().front().user_id;
    SecondGrid grid(user_id, first, end - first);

    if (method == ReconstructionMethod::kHeuristic) {
        ThresholdActiveBaseline baseline(history, kHeuristicThresholdMinutes);
        for (int64_t s = first; s < end; ++s)
            if (baseline.active(s))
                grid.set_active(s, most_recent_domain_baseline(s, history));
        return grid;
    }

    constexpr int64_t kChunk = 1 << 16;
    std::vector<int64_t> seconds;
    SecondGrid active_grid(user_id, first, end - first);
    for (int64_t lo = first; lo < end; lo += kChunk) {
        int64_t hi = std::min(lo + kChunk, end);
        seconds.clear();
        for (int64_t s = lo; s < hi; ++s) seconds.push_back(s);
        std::vector<uint8_t> pred = predict_active_seconds(seconds, history, models);
        for (size_t i = 0; i < seconds.size(); ++i)
            if (pred[i]) active_grid.set_active(seconds[i], "?");
    }
    return reconstruct_domain_grid(active_grid, history, models.domain_forest,
                                   models.vocabulary);
}

// ---------------------------------------------------------------------------
// Evaluation

struct ScopedBinaryReport {
    BinaryMetrics in_session;
    BinaryMetrics all_seconds;
};

struct UserTimeRow {
    std::string user_id;
    int64_t actual_s = 0;
    int64_t forest_s = 0;
    int64_t heuristic_s = 0;
};

struct DomainTimeRow {
    std::string user_id;
    std::string domain;
    int64_t actual_s = 0;
    int64_t forest_s = 0;
    int64_t heuristic_s = 0;
};

struct EvalReport {
    std::string split;
    int64_t users = 0;

    ScopedBinaryReport forest_active;
    ScopedBinaryReport threshold_best;
    ScopedBinaryReport threshold_5min;
    BinaryMetrics majority_in_session;  // second-half scope
    int threshold_best_minutes = 0;

    double forest_domain_accuracy = 0.0;        // over truth-active seconds
    double forest_domain_accuracy_covered = 0.0; // over labeled (non-none) seconds
    double most_recent_domain_accuracy = 0.0;
    double top_domain_accuracy = 0.0;  // second-half scope
    double none_fraction = 0.0;
    int64_t pre_history_seconds = 0;
    ConfusionMatrix4 confusion;

    // Composed pipelines (activity model -> domain model), truth-window scope.
    std::vector<UserTimeRow> total_time;
    std::vector<DomainTimeRow> domain_time;
    double total_time_r2_forest = 0.0;
    double total_time_r2_identity_forest = 0.0;
    double total_time_r2_heuristic = 0.0;
    NormalizedErrors total_time_nae_forest;
    NormalizedErrors total_time_nae_heuristic;
    double mean_domain_r2_forest = 0.0;
    double domain_r2_stddev_forest = 0.0;
    double mean_domain_r2_heuristic = 0.0;
    double domain_r2_stddev_heuristic = 0.0;
    NormalizedErrors domain_nae_forest;
    NormalizedErrors domain_nae_heuristic;
    int64_t domain_r2_users_forest = 0;
    int64_t domain_r2_users_heuristic = 0;

    std::map<std::string, int64_t> truth_domain_totals;  // corpus-wide
};

namespace eval_detail {

struct UserWindow {
    int64_t begin = 0;
    int64_t end = 0;  // exclusive
};

inline UserWindow data_window(const PreparedUser& u) {
    UserWindow w;
    w.begin = u.truth.origin_second();
    w.end = u.truth.end_second();
    if (!u.history.empty()) {
        w.begin = std::min(w.begin, u.history.visit_second(0));
        w.end = std::max(w.end, u.history.visit_second(u.history.size() - 1) + 1);
    }
    for (const auto& s : u.truth_sessions) w.end = std::max(w.end, s.end_second + 1);
    return w;
}

}  // namespace eval_detail

// Full metric suite over one split. Predictions for the binary task cover the
// whole per-user data window (history extent, truth extent and session tails);
// in-session metrics restrict to truth sessions. The per-user constant
// baselines calibrate on the first half of each user's truth window and are
// scored on the second half.
inline EvalReport evaluate_corpus(const Corpus& corpus, const TrainedModels& models,
                                  bool train_split,
                                  int n_threads = default_thread_count()) {
    EvalReport report;
    report.split = train_split ? "train" : "test";
    report.threshold_best_minutes = models.threshold_minutes;

    std::vector<PreparedUser> users = prepare_users(corpus, train_split, n_threads);
    report.users = static_cast<int64_t>(users.size());
    if (users.empty()) throw DataError("no users in requested split");

    struct PerUser {
        BinaryMetrics forest_in, forest_all;
        BinaryMetrics thr_best_in, thr_best_all;
        BinaryMetrics thr5_in, thr5_all;
        BinaryMetrics majority_second_half;
        int64_t truth_active = 0, domain_correct = 0, labeled = 0, labeled_correct = 0;
        int64_t none_seconds = 0, pre_history = 0;
        int64_t top_domain_active = 0, top_domain_correct = 0;
        ConfusionMatrix4 confusion;
        TimeTotals actual, forest, heuristic;
        std::map<std::string, int64_t> truth_domains;
    };
    std::vector<PerUser> per_user(users.size());

    parallel_for(static_cast<int64_t>(users.size()), n_threads, [&](int64_t ui) {
        const PreparedUser& u = users[static_cast<size_t>(ui)];
        PerUser& acc = per_user[static_cast<size_t>(ui)];
        eval_detail::UserWindow window = eval_detail::data_window(u);
        int64_t mid = u.truth.origin_second() + u.truth.length() / 2;

        ThresholdActiveBaseline thr_best(u.history, models.threshold_minutes);
        ThresholdActiveBaseline thr5(u.history, kHeuristicThresholdMinutes);
        bool majority_active = false;
        std::string top_domain;
        {
            // Calibration on the first half of the truth window.
            SecondGrid calib(u.id, u.truth.origin_second(),
                             std::max<int64_t>(0, mid - u.truth.origin_second()));
            for (int64_t s = u.truth.origin_second(); s < mid; ++s)
                if (u.truth.active(s)) calib.set_active(s, u.truth.domain(s));
            majority_active = majority_activity_baseline(calib, sessions(calib));
            top_domain = top_domain_baseline(calib);
        }

        SecondGrid forest_active_grid(u.id, window.begin, window.end - window.begin);

        constexpr int64_t kChunk = 1 << 15;
        std::vector<int64_t> seconds;
        for (int64_t lo = window.begin; lo < window.end; lo += kChunk) {
            int64_t hi = std::min(lo + kChunk, window.end);
            seconds.clear();
            for (int64_t s = lo; s < hi; ++s) seconds.push_back(s);
            std::vector<uint8_t> forest_pred =
                predict_active_seconds(seconds, u.history, models);
            for (size_t i = 0; i < seconds.size(); ++i) {
                int64_t s = seconds[i];
                bool truth = u.truth.active(s);
                bool in_session = in_any_session(u.truth_sessions, s);
                bool f = forest_pred[i] != 0;
                bool tb = thr_best.active(s);
                bool t5 = thr5.active(s);
                acc.forest_all.add(f, truth);
                acc.thr_best_all.add(tb, truth);
                acc.thr5_all.add(t5, truth);
                if (in_session) {
                    acc.forest_in.add(f, truth);
                    acc.thr_best_in.add(tb, truth);
                    acc.thr5_in.add(t5, truth);
                    if (s >= mid) acc.majority_second_half.add(majority_active, truth);
                }
                if (f) forest_active_grid.set_active(s, "?");
            }
        }

        // Domain task on truth-active seconds.
        for (int64_t s = u.truth.origin_second(); s < u.truth.end_second(); ++s) {
            if (!u.truth.active(s)) continue;
            ++acc.truth_active;
            std::string_view truth_domain = u.truth.domain(s);
            ++acc.truth_domains[std::string(truth_domain)];
            if (s >= mid) {
                ++acc.top_domain_active;
                if (truth_domain == top_domain) ++acc.top_domain_correct;
            }
            if (u.history.last_at_or_before(s) < 0) {
                ++acc.pre_history;
                ++acc.none_seconds;
                acc.confusion.add(DomainClass::kNone, DomainClass::kCurrent);
                continue;
            }
            CandidateSet set = candidates(s, u.history);
            DomainClass truth_class = label_domain(truth_domain, set);
            auto features = featurize_domain(s, u.history, set, models.vocabulary).to_floats();
            auto predicted = static_cast<DomainClass>(models.domain_forest.predict(features));
            acc.confusion.add(truth_class, predicted);
            const Candidate* cand = set.of(predicted);
            if (cand == nullptr) cand = &set.current;
            bool correct = cand->domain == truth_domain;
            if (correct) ++acc.domain_correct;
            if (truth_class == DomainClass::kNone) {
                ++acc.none_seconds;
            } else {
                ++acc.labeled;
                if (truth_class == predicted) ++acc.labeled_correct;
            }
        }

        // Composed reconstructions over the truth window (time totals).
        acc.actual = aggregate_time(u.truth);
        SecondGrid forest_domains = reconstruct_domain_grid(
            forest_active_grid, u.history, models.domain_forest, models.vocabulary);
        acc.forest = aggregate_time(forest_domains);
        SecondGrid heuristic(u.id, window.begin, window.end - window.begin);
        for (int64_t s = window.begin; s < window.end; ++s)
            if (thr5.active(s) && u.history.last_at_or_before(s) >= 0)
                heuristic.set_active(s, most_recent_domain_baseline(s, u.history));
        acc.heuristic = aggregate_time(heuristic);
    });

    // Pooled binary metrics.
    auto pool = [&](auto member) {
        BinaryMetrics m;
        for (const auto& acc : per_user) m.merge(acc.*member);
        m.finish();
        return m;
    };
    report.forest_active.in_session = pool(&PerUser::forest_in);
    report.forest_active.all_seconds = pool(&PerUser::forest_all);
    report.threshold_best.in_session = pool(&PerUser::thr_best_in);
    report.threshold_best.all_seconds = pool(&PerUser::thr_best_all);
    report.threshold_5min.in_session = pool(&PerUser::thr5_in);
    report.threshold_5min.all_seconds = pool(&PerUser::thr5_all);
    report.majority_in_session = pool(&PerUser::majority_second_half);

    int64_t truth_active = 0, domain_correct = 0, labeled = 0, labeled_correct = 0;
    int64_t none_seconds = 0, top_active = 0, top_correct = 0;
    for (const auto& acc : per_user) {
        truth_active += acc.truth_active;
        domain_correct += acc.domain_correct;
        labeled += acc.labeled;
        labeled_correct += acc.labeled_correct;
        none_seconds += acc.none_seconds;
        top_active += acc.top_domain_active;
        top_correct += acc.top_domain_correct;
        report.pre_history_seconds += acc.pre_history;
        for (int r = 0; r < 5; ++r)
            for (int c = 0; c < 4; ++c)
                report.confusion.counts[r][c] += acc.confusion.counts[r][c];
        for (const auto& [d, n] : acc.truth_domains) report.truth_domain_totals[d] += n;
    }
    report.forest_domain_accuracy =
        truth_active > 0 ? static_cast<double>(domain_correct) / static_cast<double>(truth_active) : 0.0;
    report.forest_domain_accuracy_covered =
        labeled > 0 ? static_cast<double>(labeled_correct) / static_cast<double>(labeled) : 0.0;
    report.none_fraction =
        truth_active > 0 ? static_cast<double>(none_seconds) / static_cast<double>(truth_active) : 0.0;
    report.top_domain_accuracy =
        top_active > 0 ? static_cast<double>(top_correct) / static_cast<double>(top_active) : 0.0;

    // Most-recent-domain baseline: correct exactly where truth class is current.
    int64_t mr_correct = report.confusion.row_sum(DomainClass::kCurrent);
    report.most_recent_domain_accuracy =
        truth_active > 0 ? static_cast<double>(mr_correct) / static_cast<double>(truth_active) : 0.0;

    // Time totals and scatter rows.
    for (size_t ui = 0; ui < users.size(); ++ui) {
        const auto& acc = per_user[ui];
        UserTimeRow row;
        row.user_id = users[ui].id;
        row.actual_s = acc.actual.online_seconds;
        row.forest_s = acc.forest.online_seconds;
        row.heuristic_s = acc.heuristic.online_seconds;
        report.total_time.push_back(row);

        std::map<std::string, DomainTimeRow> rows;
        auto touch = [&](const std::string& d) -> DomainTimeRow& {
            auto& r = rows[d];
            r.user_id = users[ui].id;
            r.domain = d;
            return r;
        };
        for (const auto& [d, n] : acc.actual.per_domain) touch(d).actual_s = n;
        for (const auto& [d, n] : acc.forest.per_domain) touch(d).forest_s = n;
        for (const auto& [d, n] : acc.heuristic.per_domain) touch(d).heuristic_s = n;
        for (auto& [d, r] : rows) report.domain_time.push_back(r);
    }

    // Total-online-time correlation and errors.
    std::vector<std::pair<double, double>> forest_pairs, heuristic_pairs;
    for (const auto& row : report.total_time) {
        forest_pairs.emplace_back(static_cast<double>(row.actual_s),
                                  static_cast<double>(row.forest_s));
        heuristic_pairs.emplace_back(static_cast<double>(row.actual_s),
                                     static_cast<double>(row.heuristic_s));
        if (row.actual_s > 0) {
            report.total_time_nae_forest.per_user.push_back(normalized_abs_error_online(
                static_cast<double>(row.actual_s), static_cast<double>(row.forest_s)));
            report.total_time_nae_heuristic.per_user.push_back(normalized_abs_error_online(
                static_cast<double>(row.actual_s), static_cast<double>(row.heuristic_s)));
        }
    }
    report.total_time_nae_forest.finish();
    report.total_time_nae_heuristic.finish();
    if (forest_pairs.size() >= 2) {
        report.total_time_r2_forest = r_squared(forest_pairs);
        report.total_time_r2_identity_forest = r_squared_identity(forest_pairs);
        report.total_time_r2_heuristic = r_squared(heuristic_pairs);
    }

    // Per-domain, per-user correlation; mean over users with >= 2 eligible
    // domains and non-constant actuals.
    std::vector<double> r2f, r2h;
    for (size_t ui = 0; ui < users.size(); ++ui) {
        const auto& acc = per_user[ui];
        std::map<std::string, std::pair<double, double>> fmap, hmap;
        for (const auto& [d, n] : acc.actual.per_domain) {
            fmap[d].first = static_cast<double>(n);
            hmap[d].first = static_cast<double>(n);
        }
        for (const auto& [d, n] : acc.forest.per_domain) fmap[d].second = static_cast<double>(n);
        for (const auto& [d, n] : acc.heuristic.per_domain) hmap[d].second = static_cast<double>(n);

        auto pairs_of = [](const std::map<std::string, std::pair<double, double>>& m) {
            std::vector<std::pair<double, double>> pairs;
            for (const auto& [d, ap] : m) pairs.push_back(ap);
            return pairs;
        };
        auto fpairs = pairs_of(fmap);
        auto hpairs = pairs_of(hmap);
        auto eligible = [](const std::vector<std::pair<double, double>>& pairs) {
            if (pairs.size() < 2) return false;
            double first = pairs.front().first;
            for (const auto& [a, p] : pairs)
                if (a != first) return true;
            return false;
        };
        if (eligible(fpairs)) r2f.push_back(r_squared(fpairs));
        if (eligible(hpairs)) r2h.push_back(r_squared(hpairs));
        if (acc.actual.online_seconds > 0) {
            report.domain_nae_forest.per_user.push_back(normalized_abs_error_per_domain(fmap));
            report.domain_nae_heuristic.per_user.push_back(normalized_abs_error_per_domain(hmap));
        }
    }
    auto mean_std = [](const std::vector<double>& v, double& mean, double& stddev) {
        if (v.empty()) return;
        double sum = 0.0;
        for (double x : v) sum += x;
        mean = sum / static_cast<double>(v.size());
        double sq = 0.0;
        for (double x : v) sq += (x - mean) * (x - mean);
        stddev = std::sqrt(sq / static_cast<double>(v.size()));
    };
    mean_std(r2f, report.mean_domain_r2_forest, report.domain_r2_stddev_forest);
    mean_std(r2h, report.mean_domain_r2_heuristic, report.domain_r2_stddev_heuristic);
    report.domain_r2_users_forest = static_cast<int64_t>(r2f.size());
    report.domain_r2_users_heuristic = static_cast<int64_t>(r2h.size());
    report.domain_nae_forest.finish();
    report.domain_nae_heuristic.finish();
    return report;
}

// ---------------------------------------------------------------------------
// Report serialization

inline nlohmann::json binary_metrics_to_json(const BinaryMetrics& m) {
    return {{"tp", m.tp},
            {"fp", m.fp},
            {"tn", m.tn},
            {"fn", m.fn},
            {"precision", m.precision},
            {"recall", m.recall},
            {"f1", m.f1},
            {"accuracy", m.accuracy}};
}

inline nlohmann::json report_to_json(const EvalReport& r) {
    nlohmann::json j;
    j["format"] = "rebrowse-report v1";
    j["split"] = r.split;
    j["users"] = r.users;
    j["notes"] = {
        {"constant_baseline_scope",
         "majority and top-domain baselines calibrate on the first half of each "
         "user's truth window and are scored on the second half"},
        {"binary_scopes", "in_session restricts to truth sessions (incl. tails); "
                          "all_seconds covers the full per-user data window"}};

    j["active"]["forest"]["in_session"] = binary_metrics_to_json(r.forest_active.in_session);
    j["active"]["forest"]["all_seconds"] = binary_metrics_to_json(r.forest_active.all_seconds);
    j["active"]["threshold_best"]["minutes"] = r.threshold_best_minutes;
    j["active"]["threshold_best"]["in_session"] = binary_metrics_to_json(r.threshold_best.in_session);
    j["active"]["threshold_best"]["all_seconds"] = binary_metrics_to_json(r.threshold_best.all_seconds);
    j["active"]["threshold_5min"]["in_session"] = binary_metrics_to_json(r.threshold_5min.in_session);
    j["active"]["threshold_5min"]["all_seconds"] = binary_metrics_to_json(r.threshold_5min.all_seconds);
    j["active"]["majority"]["in_session_second_half"] = binary_metrics_to_json(r.majority_in_session);

    j["domain"]["forest"]["accuracy_truth_active"] = r.forest_domain_accuracy;
    j["domain"]["forest"]["accuracy_covered"] = r.forest_domain_accuracy_covered;
    j["domain"]["most_recent"]["accuracy_truth_active"] = r.most_recent_domain_accuracy;
    j["domain"]["top_domain"]["accuracy_truth_active_second_half"] = r.top_domain_accuracy;
    j["domain"]["none_fraction"] = r.none_fraction;
    j["domain"]["pre_history_seconds"] = r.pre_history_seconds;
    const char* row_names[5] = {"current", "next", "past1", "past2", "none"};
    nlohmann::json confusion = nlohmann::json::object();
    for (int row = 0; row < 5; ++row) {
        nlohmann::json cols = nlohmann::json::object();
        for (int col = 0; col < 4; ++col)
            cols[row_names[col]] = r.confusion.counts[row][col];
        confusion[row_names[row]] = cols;
    }
    j["domain"]["confusion"] = confusion;

    j["total_time"]["forest"] = {{"r2", r.total_time_r2_forest},
                                 {"r2_identity", r.total_time_r2_identity_forest},
                                 {"nae_mean", r.total_time_nae_forest.mean},
                                 {"nae_stddev", r.total_time_nae_forest.stddev}};
    j["total_time"]["threshold_5min"] = {{"r2", r.total_time_r2_heuristic},
                                         {"nae_mean", r.total_time_nae_heuristic.mean},
                                         {"nae_stddev", r.total_time_nae_heuristic.stddev}};
    j["per_domain_time"]["forest"] = {{"mean_r2", r.mean_domain_r2_forest},
                                      {"r2_stddev", r.domain_r2_stddev_forest},
                                      {"users", r.domain_r2_users_forest},
                                      {"nae_mean", r.domain_nae_forest.mean},
                                      {"nae_stddev", r.domain_nae_forest.stddev}};
    j["per_domain_time"]["heuristic"] = {{"mean_r2", r.mean_domain_r2_heuristic},
                                         {"r2_stddev", r.domain_r2_stddev_heuristic},
                                         {"users", r.domain_r2_users_heuristic},
                                         {"nae_mean", r.domain_nae_heuristic.mean},
                                         {"nae_stddev", r.domain_nae_heuristic.stddev}};
    return j;
}

}  // namespace rebrowse
