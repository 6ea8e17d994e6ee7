#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "oracle_helpers.hpp"
#include "rebrowse/domain_features.hpp"
#include "rebrowse/forest.hpp"
#include "rebrowse/simulator.hpp"

using namespace rebrowse;

namespace {

HistoryVisit visit(int64_t id, const std::string& domain, int64_t second,
                   std::optional<int64_t> ref = {}) {
    HistoryVisit v;
    v.user_id = "u";
    v.visit_id = id;
    v.url = "https://" + domain + "/" + std::to_string(id);
    v.domain = domain;
    v.visit_time_ms = second * 1000;
    v.transition = ref ? Transition::kLink : Transition::kTyped;
    v.referring_visit_id = ref;
    return v;
}

DomainVocabulary vocab_abc() {
    std::vector<std::string> domains{"a.example", "b.example", "c.example", "d.example"};
    for (int i = 4; i < 20; ++i) domains.push_back("<pad-" + std::to_string(i) + ">");
    return DomainVocabulary(std::move(domains));
}

}  // namespace

TEST_CASE("candidates walk the definition") {
    // a@100, b@200, a@300, c@400, next d@500; query inside (400, 500).
    auto history = UserHistory::build({visit(1, "a.example", 100),
                                       visit(2, "b.example", 200),
                                       visit(3, "a.example", 300),
                                       visit(4, "c.example", 400, 3),
                                       visit(5, "d.example", 500, 4)});
    auto set = candidates(450, history);
    CHECK(set.current.domain == "c.example");
    CHECK(set.current.visit_second == 400);
    REQUIRE(set.next);
    CHECK(set.next->domain == "d.example");
    REQUIRE(set.past1);
    CHECK(set.past1->domain == "a.example");
    CHECK(set.past1->visit_second == 300);
    REQUIRE(set.past2);
    CHECK(set.past2->domain == "b.example");
    CHECK(set.past2->visit_second == 200);
    CHECK(set.visits_since_past1 == 1);
    CHECK(set.visits_since_past2 == 2);
    CHECK(set.ref_next_eq_current);  // d's referrer is visit 4 = C
    CHECK_FALSE(set.ref_next_eq_past1);
    CHECK_FALSE(set.ref_next_eq_past2);
}

TEST_CASE("candidates degenerate single visit") {
    auto history = UserHistory::build({visit(1, "a.example", 100)});
    auto set = candidates(500, history);
    CHECK(set.current.domain == "a.example");
    CHECK_FALSE(set.next);
    CHECK_FALSE(set.past1);
    CHECK_FALSE(set.past2);
    CHECK(set.visits_since_past1 == 0);
}

TEST_CASE("candidates refuse pre-history queries") {
    auto history = UserHistory::build({visit(1, "a.example", 100)});
    CHECK_THROWS_AS(candidates(99, history), DataError);
}

TEST_CASE("past2 skips interleaved current/past1 domains") {
    // x b a b a : past1 = b, past2 must reach x, not b again.
    auto history = UserHistory::build({visit(1, "x.example", 10),
                                       visit(2, "b.example", 20),
                                       visit(3, "a.example", 30),
                                       visit(4, "b.example", 40),
                                       visit(5, "a.example", 50)});
    auto set = candidates(60, history);
    CHECK(set.current.domain == "a.example");
    REQUIRE(set.past1);
    CHECK(set.past1->visit_second == 40);
    REQUIRE(set.past2);
    CHECK(set.past2->domain == "x.example");
}

TEST_CASE("candidates equal the brute-force oracle on random histories") {
    oracle::HistoryGen gen(7);
    for (int trial = 0; trial < 400; ++trial) {
        auto raw = gen.random_history();
        auto history = UserHistory::build(raw);
        for (int q = 0; q < 8; ++q) {
            int64_t s = gen.rng.between(500, 25000);
            auto expected = oracle::candidates(s, raw);
            if (!expected.ok) {
                CHECK_THROWS_AS(candidates(s, history), DataError);
                continue;
            }
            auto got = candidates(s, history);
            CHECK(got.current.domain == expected.current);
            CHECK(got.current.visit_second == expected.t_current);
            CHECK(got.current.visit_id == expected.id_current);
            CHECK(got.next.has_value() == expected.has_next);
            if (expected.has_next) {
                CHECK(got.next->domain == expected.next);
                CHECK(got.next->visit_second == expected.t_next);
            }
            CHECK(got.past1.has_value() == expected.has_past1);
            if (expected.has_past1) {
                CHECK(got.past1->domain == expected.past1);
                CHECK(got.past1->visit_second == expected.t_past1);
                CHECK(got.visits_since_past1 == expected.visits_since_past1);
            }
            CHECK(got.past2.has_value() == expected.has_past2);
            if (expected.has_past2) {
                CHECK(got.past2->domain == expected.past2);
                CHECK(got.past2->visit_second == expected.t_past2);
                CHECK(got.visits_since_past2 == expected.visits_since_past2);
            }
            CHECK(got.ref_next_eq_current == expected.ref_c);
            CHECK(got.ref_next_eq_past1 == expected.ref_p1);
            CHECK(got.ref_next_eq_past2 == expected.ref_p2);
        }
    }
}

TEST_CASE("candidates ignore visits strictly after next") {
    std::vector<HistoryVisit> base{visit(1, "a.example", 100), visit(2, "b.example", 200),
                                   visit(3, "c.example", 400, 2)};
    auto extended = base;
    extended.push_back(visit(4, "d.example", 900));
    extended.push_back(visit(5, "a.example", 950));
    auto h1 = UserHistory::build(base);
    auto h2 = UserHistory::build(extended);
    for (int64_t s : {200, 250, 399}) {
        auto a = candidates(s, h1);
        auto b = candidates(s, h2);
        CHECK(a.current.domain == b.current.domain);
        CHECK(a.next.has_value() == b.next.has_value());
        if (a.next) CHECK(a.next->domain == b.next->domain);
        CHECK(a.past1.has_value() == b.past1.has_value());
        CHECK(a.visits_since_past1 == b.visits_since_past1);
        CHECK(a.ref_next_eq_current == b.ref_next_eq_current);
    }
}

TEST_CASE("label_domain follows the fixed precedence") {
    auto history = UserHistory::build({visit(1, "b.example", 100),
                                       visit(2, "a.example", 200),
                                       visit(3, "a.example", 500, 2)});
    auto set = candidates(300, history);  // C=a@200, N=a@500, P1=b@100
    CHECK(label_domain("a.example", set) == DomainClass::kCurrent);  // C before N
    CHECK(label_domain("b.example", set) == DomainClass::kPast1);
    CHECK(label_domain("zz.example", set) == DomainClass::kNone);
}

TEST_CASE("featurize_domain counts follows within the 20-minute window") {
    auto history = UserHistory::build({visit(1, "a.example", 0),
                                       visit(2, "b.example", 60),
                                       visit(3, "a.example", 120)});
    auto set = candidates(130, history);
    auto row = featurize_domain(130, history, set, vocab_abc());
    // current = a: a@120 follows b@60; a@0 has no predecessor.
    CHECK(row.follow_counts[1] == 1.0);
    // past1 = b: b@60 follows a@0.
    CHECK(row.follow_counts[2] == 1.0);
    CHECK(row.numerics[1] == std::log(10.0));
    CHECK(row.numerics[5] == 1.0);  // visits since past1 (b@60 -> a@120)
}

TEST_CASE("featurize_domain uses sentinels for absent candidates") {
    auto history = UserHistory::build({visit(1, "a.example", 100)});
    auto set = candidates(200, history);
    auto row = featurize_domain(200, history, set, vocab_abc());
    CHECK(row.numerics[0] == std::log(86400.0));  // gap needs next
    CHECK(row.numerics[2] == std::log(86400.0));  // until next
    CHECK(row.numerics[3] == std::log(86400.0));  // since past1
    CHECK(row.numerics[4] == std::log(86400.0));  // since past2
    CHECK(row.numerics[5] == 0.0);
    CHECK(row.numerics[6] == 0.0);
    CHECK(row.follow_counts[0] == 0.0);
    for (auto b : row.referrer) CHECK(b == 0);
    for (auto b : row.overlap) CHECK(b == 0);
}

TEST_CASE("domain feature width is fixed at 97") {
    auto history = UserHistory::build({visit(1, "a.example", 100)});
    auto set = candidates(100, history);
    CHECK(featurize_domain(100, history, set, vocab_abc()).to_floats().size() == 97);
    int binaries = 0;
    for (bool b : domain_feature_binary_mask()) binaries += b;
    CHECK(binaries == 86);
}

TEST_CASE("featurize_domain equals the brute-force oracle on random histories") {
    oracle::HistoryGen gen(99);
    std::vector<std::string> vocab{"a.example", "b.example", "c.example",
                                   "d.example", "e.example"};
    for (int i = 5; i < 20; ++i) vocab.push_back("<pad-" + std::to_string(i) + ">");
    DomainVocabulary vocabulary{vocab};
    for (int trial = 0; trial < 300; ++trial) {
        auto raw = gen.random_history();
        auto history = UserHistory::build(raw);
        for (int q = 0; q < 8; ++q) {
            int64_t s = gen.rng.between(500, 25000);
            if (history.last_at_or_before(s) < 0) continue;
            auto set = candidates(s, history);
            auto got = featurize_domain(s, history, set, vocabulary).to_floats();
            auto expected = oracle::domain_features(s, raw, vocab);
            REQUIRE(got == expected);
        }
    }
}

TEST_CASE("reconstruct_domain_grid with an all-current forest equals the baseline") {
    auto history = UserHistory::build({visit(1, "a.example", 0),
                                       visit(2, "b.example", 100),
                                       visit(3, "c.example", 300)});
    // Single-class training data: the forest always answers current.
    FeatureMatrix x(kDomainFeatureWidth, domain_feature_binary_mask());
    std::vector<float> zero(kDomainFeatureWidth, 0.0f);
    x.append_row(zero);
    x.append_row(zero);
    Forest all_current = Forest::fit(x, {0, 0}, {});

    SecondGrid active("u", 0, 500);
    for (int64_t s = 0; s < 500; s += 7) active.set_active(s, "?");
    auto grid = reconstruct_domain_grid(active, history, all_current, vocab_abc());
    for (int64_t s = 0; s < 500; ++s) {
        if (!active.active(s)) {
            CHECK_FALSE(grid.active(s));
            continue;
        }
        REQUIRE(grid.active(s));
        CHECK(grid.domain(s) == candidates(s, history).current.domain);
    }
}

TEST_CASE("reconstruct_domain_grid with no predicted-active seconds is empty") {
    auto history = UserHistory::build({visit(1, "a.example", 0)});
    FeatureMatrix x(kDomainFeatureWidth, domain_feature_binary_mask());
    std::vector<float> zero(kDomainFeatureWidth, 0.0f);
    x.append_row(zero);
    Forest f = Forest::fit(x, {0}, {});
    SecondGrid inactive("u", 0, 100);
    auto grid = reconstruct_domain_grid(inactive, history, f, vocab_abc());
    CHECK(grid.active_count() == 0);
}

TEST_CASE("per-domain totals from a reconstructed grid sum to the active count") {
    UserProfile profile = default_profile();
    profile.days = 2;
    profile.seed = 17;
    auto sim = generate_user(profile, "u");
    auto history = UserHistory::build(sim.visits);
    auto truth = active_seconds(build_spans(sim.events), sim.events);

    FeatureMatrix x(kDomainFeatureWidth, domain_feature_binary_mask());
    std::vector<float> zero(kDomainFeatureWidth, 0.0f);
    x.append_row(zero);
    Forest f = Forest::fit(x, {0}, {});

    SecondGrid active("u", truth.origin_second(), truth.length());
    for (int64_t s = truth.origin_second(); s < truth.end_second(); ++s)
        if (truth.active(s) && history.last_at_or_before(s) >= 0) active.set_active(s, "?");
    auto grid = reconstruct_domain_grid(active, history, f, vocab_abc());

    int64_t total = 0;
    std::map<std::string, int64_t> per_domain;
    for (int64_t s = grid.origin_second(); s < grid.end_second(); ++s) {
        if (!grid.active(s)) continue;
        ++total;
        ++per_domain[std::string(grid.domain(s))];
    }
    int64_t sum = 0;
    for (const auto& [d, n] : per_domain) sum += n;
    CHECK(sum == total);
    CHECK(total == active.active_count());
}

TEST_CASE("labeled class fractions sum to one over truth-active seconds") {
    UserProfile profile = default_profile();
    profile.days = 2;
    profile.seed = 23;
    auto sim = generate_user(profile, "u");
    auto history = UserHistory::build(sim.visits);
    auto truth = active_seconds(build_spans(sim.events), sim.events);
    int64_t counts[5] = {0, 0, 0, 0, 0};
    int64_t active = 0, pre_history = 0;
    for (int64_t s = truth.origin_second(); s < truth.end_second(); ++s) {
        if (!truth.active(s)) continue;
        ++active;
        if (history.last_at_or_before(s) < 0) {
            ++pre_history;
            continue;
        }
        auto set = candidates(s, history);
        ++counts[static_cast<int>(label_domain(truth.domain(s), set))];
    }
    CHECK(counts[0] + counts[1] + counts[2] + counts[3] + counts[4] + pre_history == active);
    CHECK(counts[0] > 0);  // current dominates any realistic corpus
}
