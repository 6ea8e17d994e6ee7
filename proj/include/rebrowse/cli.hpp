#pragma once
// Batch CLI: simulate / train / reconstruct / evaluate.
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rebrowse/pipeline.hpp"

namespace rebrowse::cli {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

namespace cli_detail {

inline std::string active_metrics_csv(const EvalReport& r) {
    std::string out = "method,scope,tp,fp,tn,fn,precision,recall,f1,accuracy\n";
    auto row = [&out](const std::string& method, const std::string& scope,
                      const BinaryMetrics& m) {
        out += method + "," + scope + "," + std::to_string(m.tp) + "," +
               std::to_string(m.fp) + "," + std::to_string(m.tn) + "," +
               std::to_string(m.fn) + "," + std::to_string(m.precision) + "," +
               std::to_string(m.recall) + "," + std::to_string(m.f1) + "," +
               std::to_string(m.accuracy) + "\n";
    };
    row("forest", "in_session", r.forest_active.in_session);
    row("forest", "all_seconds", r.forest_active.all_seconds);
    row("threshold_best", "in_session", r.threshold_best.in_session);
    row("threshold_best", "all_seconds", r.threshold_best.all_seconds);
    row("threshold_5min", "in_session", r.threshold_5min.in_session);
    row("threshold_5min", "all_seconds", r.threshold_5min.all_seconds);
    row("majority", "in_session_second_half", r.majority_in_session);
    return out;
}

inline std::string total_time_csv(const EvalReport& r) {
    std::string out = "user_id,actual_s,forest_s,heuristic_s\n";
    for (const auto& row : r.total_time)
        out += row.user_id + "," + std::to_string(row.actual_s) + "," +
               std::to_string(row.forest_s) + "," + std::to_string(row.heuristic_s) + "\n";
    return out;
}

inline std::string domain_time_csv(const EvalReport& r) {
    std::string out = "user_id,domain,actual_s,forest_s,heuristic_s\n";
    for (const auto& row : r.domain_time)
        out += row.user_id + "," + csv_field(row.domain) + "," +
               std::to_string(row.actual_s) + "," + std::to_string(row.forest_s) + "," +
               std::to_string(row.heuristic_s) + "\n";
    return out;
}

inline std::string top_domains_csv(const EvalReport& r) {
    std::vector<std::pair<std::string, int64_t>> rows(r.truth_domain_totals.begin(),
                                                      r.truth_domain_totals.end());
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::string out = "domain,truth_active_seconds\n";
    for (const auto& [d, n] : rows)
        out += csv_field(d) + "," + std::to_string(n) + "\n";
    return out;
}

inline std::string confusion_csv(const EvalReport& r) {
    const char* names[5] = {"current", "next", "past1", "past2", "none"};
    std::string out = "truth,pred_current,pred_next,pred_past1,pred_past2\n";
    for (int row = 0; row < 5; ++row) {
        out += names[row];
        for (int col = 0; col < 4; ++col)
            out += "," + std::to_string(r.confusion.counts[row][col]);
        out += "\n";
    }
    return out;
}

inline std::string time_report_csv(const std::string& user_id, const TimeTotals& totals) {
    std::string out = "user_id,domain,predicted_s\n";
    out += user_id + ",<online>," + std::to_string(totals.online_seconds) + "\n";
    for (const auto& [d, n] : totals.per_domain)
        out += user_id + "," + csv_field(d) + "," + std::to_string(n) + "\n";
    return out;
}

}  // namespace cli_detail

inline int run(std::vector<std::string> args) {
    CLI::App app{"Reconstructs second-by-second browsing activity from "
                 "navigation-only browser histories"};
    app.require_subcommand(1);

    // --- simulate ---
    auto* sim = app.add_subcommand("simulate", "Generate a synthetic corpus");
    int sim_users = 0;
    uint64_t sim_seed = 1;
    std::string sim_profile, sim_out;
    bool sim_dump_truth = false;
    sim->add_option("--users", sim_users, "number of users")
        ->required()
        ->check(CLI::PositiveNumber);
    sim->add_option("--seed", sim_seed, "master seed")->required();
    sim->add_option("--profile", sim_profile, "profile JSON (default: built-in)");
    sim->add_option("--out", sim_out, "output directory")->required();
    sim->add_flag("--dump-truth", sim_dump_truth, "also write span/grid CSV dumps");

    // --- train ---
    auto* train = app.add_subcommand("train", "Train models on a corpus directory");
    std::string train_data, train_out, train_productivity;
    uint64_t train_seed = 1;
    int train_threads = default_thread_count();
    train->add_option("--data", train_data, "corpus directory")->required();
    train->add_option("--out", train_out, "model output directory")->required();
    train->add_option("--seed", train_seed, "training seed")->required();
    train->add_option("--productivity", train_productivity, "productivity CSV");
    train->add_option("--threads", train_threads, "worker threads");

    // --- reconstruct ---
    auto* rec = app.add_subcommand("reconstruct", "Reconstruct activity from a history file");
    std::string rec_model, rec_history, rec_out, rec_method = "forest";
    rec->add_option("--model", rec_model, "model directory")->required();
    rec->add_option("--history", rec_history, "history NDJSON file")->required();
    rec->add_option("--out", rec_out, "output directory")->required();
    rec->add_option("--method", rec_method, "forest|heuristic")
        ->check(CLI::IsMember({"forest", "heuristic"}));

    // --- evaluate ---
    auto* eval = app.add_subcommand("evaluate", "Evaluate models against ground truth");
    std::string eval_model, eval_data, eval_out, eval_split = "test";
    int eval_threads = default_thread_count();
    eval->add_option("--model", eval_model, "model directory")->required();
    eval->add_option("--data", eval_data, "corpus directory")->required();
    eval->add_option("--out", eval_out, "report output directory")->required();
    eval->add_option("--split", eval_split, "test|train")
        ->check(CLI::IsMember({"test", "train"}));
    eval->add_option("--threads", eval_threads, "worker threads");

    std::vector<const char*> argv;
    argv.push_back("rebrowse");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (sim->parsed()) {
            UserProfile profile = default_profile();
            if (!sim_profile.empty())
                profile = profile_from_json(nlohmann::json::parse(read_file(sim_profile)));
            SimulatedCorpus corpus = generate_corpus(sim_users, sim_seed, profile);
            save_corpus(corpus_from_simulation(corpus), sim_out, sim_dump_truth);
            write_file(fs::path(sim_out) / "profile.json",
                       profile_to_json(profile).dump(2) + "\n");
            std::cout << "wrote " << sim_users << " user pairs to " << sim_out << "\n";
            return kExitOk;
        }

        if (train->parsed()) {
            Corpus corpus = load_corpus(train_data);
            ProductivityMap productivity;
            std::string productivity_csv;
            if (!train_productivity.empty()) {
                productivity_csv = read_file(train_productivity);
                productivity = load_productivity_map(productivity_csv);
            }
            std::vector<PreparedUser> users = prepare_users(corpus, true, train_threads);
            if (users.empty()) throw DataError("corpus has no training users");
            if (users.size() == 1)
                std::cerr << "warning: training on a single user\n";
            TrainingSummary summary;
            TrainedModels models =
                train_models(users, std::move(productivity), train_seed, &summary,
                             train_threads);
            save_models(models, train_out, productivity_csv);
            nlohmann::json sj;
            sj["format"] = "rebrowse-training-summary v1";
            sj["train_users"] = summary.train_users;
            sj["active_rows"] = summary.active_rows;
            sj["active_positive"] = summary.active_positive;
            sj["domain_rows"] = summary.domain_rows;
            sj["domain_class_counts"] = {{"current", summary.domain_class_counts[0]},
                                         {"next", summary.domain_class_counts[1]},
                                         {"past1", summary.domain_class_counts[2]},
                                         {"past2", summary.domain_class_counts[3]}};
            sj["domain_skipped_none"] = summary.domain_skipped_none;
            sj["domain_skipped_pre_history"] = summary.domain_skipped_pre_history;
            sj["threshold_best_minutes"] = models.threshold_minutes;
            write_file(fs::path(train_out) / "training_summary.json", sj.dump(2) + "\n");
            std::cout << "models written to " << train_out << "\n";
            return kExitOk;
        }

        if (rec->parsed()) {
            TrainedModels models = load_models(rec_model);
            std::ifstream in(rec_history);
            if (!in) throw DataError("cannot open " + rec_history);
            auto by_user = parse_history_all(in);
            fs::create_directories(rec_out);
            ReconstructionMethod method = rec_method == "forest"
                                              ? ReconstructionMethod::kForest
                                              : ReconstructionMethod::kHeuristic;
            std::string grids_csv = "user_id,second,domain\n";
            std::string times_csv = "user_id,domain,predicted_s\n";
            for (const auto& [user_id, visits] : by_user) {
                UserHistory history = UserHistory::build(visits);
                SecondGrid grid = reconstruct_user(history, models, method);
                std::string dump = grid_to_csv(grid);
                grids_csv += dump.substr(dump.find('\n') + 1);  // strip header
                TimeTotals totals = aggregate_time(grid);
                std::string t = cli_detail::time_report_csv(user_id, totals);
                times_csv += t.substr(t.find('\n') + 1);
            }
            write_file(fs::path(rec_out) / "predicted_grid.csv", grids_csv);
            write_file(fs::path(rec_out) / "time_report.csv", times_csv);
            std::cout << "reconstruction written to " << rec_out << "\n";
            return kExitOk;
        }

        if (eval->parsed()) {
            TrainedModels models = load_models(eval_model);
            Corpus corpus = load_corpus(eval_data);
            EvalReport report =
                evaluate_corpus(corpus, models, eval_split == "train", eval_threads);
            fs::create_directories(eval_out);
            write_file(fs::path(eval_out) / "report.json",
                       report_to_json(report).dump(2) + "\n");
            write_file(fs::path(eval_out) / "active_metrics.csv",
                       cli_detail::active_metrics_csv(report));
            write_file(fs::path(eval_out) / "total_time.csv",
                       cli_detail::total_time_csv(report));
            write_file(fs::path(eval_out) / "domain_time.csv",
                       cli_detail::domain_time_csv(report));
            write_file(fs::path(eval_out) / "top_domains.csv",
                       cli_detail::top_domains_csv(report));
            write_file(fs::path(eval_out) / "confusion.csv",
                       cli_detail::confusion_csv(report));
            std::cout << "report written to " << eval_out << "\n";
            return kExitOk;
        }
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace rebrowse::cli
