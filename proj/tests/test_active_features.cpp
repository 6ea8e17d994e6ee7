#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oracle_helpers.hpp"
#include "rebrowse/active_features.hpp"
#include "rebrowse/simulator.hpp"

using namespace rebrowse;

namespace {

HistoryVisit visit(int64_t id, const std::string& domain, int64_t second) {
    HistoryVisit v;
    v.user_id = "u";
    v.visit_id = id;
    v.url = "https://" + domain + "/";
    v.domain = domain;
    v.visit_time_ms = second * 1000;
    v.transition = Transition::kLink;
    return v;
}

DomainVocabulary small_vocab() {
    std::vector<std::string> domains{"facebook.com", "youtube.com"};
    for (int i = 2; i < 20; ++i) domains.push_back("<pad-" + std::to_string(i) + ">");
    return DomainVocabulary(std::move(domains));
}

}  // namespace

TEST_CASE("featurize_active computes the three log durations") {
    auto history = UserHistory::build({visit(1, "facebook.com", 100),
                                       visit(2, "youtube.com", 400)});
    ProductivityMap prod;
    prod.set("facebook.com", ProductivityLevel::kVeryDistracting);
    auto row = featurize_active(250, history, small_vocab(), prod);
    CHECK(row.log_since_prev == std::log(150.0));
    CHECK(row.log_until_next == std::log(150.0));
    CHECK(row.log_gap_prev_next == std::log(300.0));
    CHECK(row.prev_domain_onehot[0] == 1);
    CHECK(row.next_domain_onehot[1] == 1);
    CHECK(row.productivity_onehot[static_cast<int>(ProductivityLevel::kVeryDistracting)] == 1);
}

TEST_CASE("featurize_active floors durations at one second") {
    auto history = UserHistory::build({visit(1, "facebook.com", 100)});
    auto row = featurize_active(100, history, small_vocab(), {});
    CHECK(row.log_since_prev == 0.0);  // ln(1)
}

TEST_CASE("featurize_active uses sentinels at history boundaries") {
    auto history = UserHistory::build({visit(1, "facebook.com", 100)});
    ProductivityMap prod;
    prod.set("facebook.com", ProductivityLevel::kDistracting);

    SECTION("before the first visit") {
        auto row = featurize_active(50, history, small_vocab(), prod);
        CHECK(row.log_since_prev == std::log(86400.0));
        CHECK(row.log_gap_prev_next == std::log(86400.0));
        CHECK(row.log_until_next == std::log(50.0));
        for (auto b : row.prev_domain_onehot) CHECK(b == 0);
        CHECK(row.productivity_onehot[static_cast<int>(ProductivityLevel::kNeutral)] == 1);
    }
    SECTION("after the last visit") {
        auto row = featurize_active(160, history, small_vocab(), prod);
        CHECK(row.log_until_next == std::log(86400.0));
        CHECK(row.log_gap_prev_next == std::log(86400.0));
        CHECK(row.log_since_prev == std::log(60.0));
        for (auto b : row.next_domain_onehot) CHECK(b == 0);
        CHECK(row.productivity_onehot[static_cast<int>(ProductivityLevel::kDistracting)] == 1);
    }
}

TEST_CASE("feature vector width is fixed at 48") {
    auto history = UserHistory::build({visit(1, "facebook.com", 100)});
    auto floats = featurize_active(100, history, small_vocab(), {}).to_floats();
    CHECK(floats.size() == 48);
    CHECK(active_feature_binary_mask().size() == 48);
    int binaries = 0;
    for (bool b : active_feature_binary_mask()) binaries += b;
    CHECK(binaries == 45);
}

TEST_CASE("featurize_active equals the brute-force oracle on random histories") {
    oracle::HistoryGen gen(42);
    std::vector<std::string> vocab{"a.example", "b.example", "c.example"};
    for (int i = 3; i < 20; ++i) vocab.push_back("<pad-" + std::to_string(i) + ">");
    std::vector<std::pair<std::string, ProductivityLevel>> prod_pairs{
        {"a.example", ProductivityLevel::kVeryProductive},
        {"c.example", ProductivityLevel::kDistracting}};
    ProductivityMap prod;
    for (const auto& [d, l] : prod_pairs) prod.set(d, l);
    DomainVocabulary vocabulary{vocab};

    for (int trial = 0; trial < 300; ++trial) {
        auto raw = gen.random_history();
        auto history = UserHistory::build(raw);
        for (int q = 0; q < 10; ++q) {
            int64_t s = gen.rng.between(0, 25000);
            auto expected = oracle::active_features(s, raw, vocab, prod_pairs);
            auto got = featurize_active(s, history, vocabulary, prod).to_floats();
            REQUIRE(got == expected);
        }
    }
}

TEST_CASE("label_active reads the truth grid and is false outside it") {
    SecondGrid grid("u", 100, 10);
    grid.set_active(105, "a.example");
    CHECK(label_active(105, grid));
    CHECK_FALSE(label_active(104, grid));
    CHECK_FALSE(label_active(99, grid));     // before the grid
    CHECK_FALSE(label_active(100000, grid)); // session tail / out of session
}

TEST_CASE("build_active_dataset emits one row per in-session second") {
    std::vector<ActivityEvent> events;
    auto push = [&events](ActivityKind k, int64_t s, std::optional<std::string> url = {}) {
        ActivityEvent e;
        e.user_id = "u";
        e.time_ms = s * 1000;
        e.kind = k;
        e.url = std::move(url);
        events.push_back(e);
    };
    push(ActivityKind::kNavigation, 0, "https://a.example/");
    push(ActivityKind::kWindowBlur, 10);
    auto grid = active_seconds(build_spans(events), events);
    auto history = UserHistory::build(
        {visit(1, "a.example", 0)});

    SECTION("single user, one short session") {
        std::vector<UserDataset> users{{"u", &grid, &history}};
        auto ds = build_active_dataset(users, small_vocab(), {});
        // Active seconds 0..9, session = [0, 9 + 1200].
        CHECK(ds.features.row_count() == 10 + 1200);
        int64_t positives = 0;
        for (auto l : ds.labels) positives += l;
        CHECK(positives == 10);
    }
    SECTION("two users concatenate in caller order") {
        std::vector<UserDataset> users{{"a", &grid, &history}, {"b", &grid, &history}};
        auto ds = build_active_dataset(users, small_vocab(), {});
        CHECK(ds.features.row_count() == 2 * (10 + 1200));
    }
    SECTION("missing history is an error") {
        std::vector<UserDataset> users{{"u", &grid, nullptr}};
        CHECK_THROWS_AS(build_active_dataset(users, small_vocab(), {}), DataError);
    }
}

TEST_CASE("a user's rows are unchanged by other users in the batch") {
    UserProfile profile = default_profile();
    profile.days = 2;
    auto corpus = generate_corpus(3, 8, profile);
    std::vector<SecondGrid> grids;
    std::vector<UserHistory> histories;
    for (const auto& su : corpus.users) {
        grids.push_back(active_seconds(build_spans(su.events), su.events));
        histories.push_back(UserHistory::build(su.visits));
    }
    auto vocab = small_vocab();
    std::vector<UserDataset> solo{{"u0000", &grids[0], &histories[0]}};
    std::vector<UserDataset> batch{{"u0000", &grids[0], &histories[0]},
                                   {"u0001", &grids[1], &histories[1]},
                                   {"u0002", &grids[2], &histories[2]}};
    auto solo_ds = build_active_dataset(solo, vocab, {});
    auto batch_ds = build_active_dataset(batch, vocab, {});
    REQUIRE(batch_ds.features.row_count() >= solo_ds.features.row_count());
    for (int64_t r = 0; r < solo_ds.features.row_count(); ++r) {
        CHECK(batch_ds.features.row(r) == solo_ds.features.row(r));
        CHECK(batch_ds.labels[static_cast<size_t>(r)] == solo_ds.labels[static_cast<size_t>(r)]);
    }
}

TEST_CASE("dataset row count matches an independent session-length sum") {
    UserProfile profile = default_profile();
    profile.days = 2;
    profile.seed = 31;
    auto sim = generate_user(profile, "u");
    auto grid = active_seconds(build_spans(sim.events), sim.events);
    auto history = UserHistory::build(sim.visits);
    std::vector<UserDataset> users{{"u", &grid, &history}};
    auto ds = build_active_dataset(users, small_vocab(), {});

    int64_t expected = 0;
    for (const auto& sess : sessions(grid)) expected += sess.end_second - sess.start_second + 1;
    CHECK(ds.features.row_count() == expected);
}
