#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <sstream>

#include "rebrowse/history.hpp"
#include "rebrowse/rng.hpp"
#include "rebrowse/simulator.hpp"
#include "rebrowse/url.hpp"

using namespace rebrowse;

namespace {

std::string record(const std::string& user, int64_t id, const std::string& url,
                   int64_t t_ms, const std::string& transition,
                   const std::string& ref = "null") {
    return R"({"user_id":")" + user + R"(","visit_id":)" + std::to_string(id) +
           R"(,"referring_visit_id":)" + ref + R"(,"url":")" + url +
           R"(","visit_time_ms":)" + std::to_string(t_ms) + R"(,"transition":")" +
           transition + "\"}\n";
}

}  // namespace

TEST_CASE("parse_history on an empty stream yields an empty list") {
    CHECK(parse_history(std::string{}, "u").empty());
}

TEST_CASE("parse_history round-trips a single record") {
    std::string text = record("u", 7, "https://www.youtube.com/watch?v=x", 5000, "link", "3");
    auto visits = parse_history(text, "u");
    REQUIRE(visits.size() == 1);
    CHECK(visits[0].visit_id == 7);
    CHECK(visits[0].referring_visit_id == 3);
    CHECK(visits[0].url == "https://www.youtube.com/watch?v=x");
    CHECK(visits[0].domain == "youtube.com");
    CHECK(visits[0].visit_time_ms == 5000);
    CHECK(visits[0].transition == Transition::kLink);
}

TEST_CASE("parse_history rejects duplicate visit ids") {
    std::string text = record("u", 7, "https://a.example/", 1000, "typed") +
                       record("u", 7, "https://b.example/", 2000, "typed");
    CHECK_THROWS_AS(parse_history(text, "u"), DataError);
}

TEST_CASE("parse_history names the line of a malformed record") {
    std::string text = record("u", 1, "https://a.example/", 1000, "typed") +
                       "{not json}\n";
    try {
        parse_history(text, "u");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    std::string bad_token = record("u", 1, "https://a.example/", 1000, "warp");
    try {
        parse_history(bad_token, "u");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("warp") != std::string::npos);
    }
}

TEST_CASE("parse_history sorts by visit time and filters by user") {
    std::string text = record("u", 2, "https://b.example/", 9000, "typed") +
                       record("v", 9, "https://x.example/", 1000, "typed") +
                       record("u", 1, "https://a.example/", 3000, "typed");
    auto visits = parse_history(text, "u");
    REQUIRE(visits.size() == 2);
    CHECK(visits[0].visit_id == 1);
    CHECK(visits[1].visit_id == 2);
}

TEST_CASE("history serialization round-trips") {
    UserProfile profile = default_profile();
    profile.days = 2;
    profile.seed = 11;
    auto sim = generate_user(profile, "u");
    auto parsed = parse_history(serialize_history(sim.visits), "u");
    auto reparsed = parse_history(serialize_history(parsed), "u");
    REQUIRE(parsed.size() == sim.visits.size());
    CHECK(serialize_history(parsed) == serialize_history(reparsed));
}

TEST_CASE("filter_frame_navigations drops exactly the frame transitions") {
    auto mk = [](int64_t id, Transition t) {
        HistoryVisit v;
        v.user_id = "u";
        v.visit_id = id;
        v.url = "https://a.example/";
        v.domain = "a.example";
        v.visit_time_ms = id * 1000;
        v.transition = t;
        return v;
    };
    std::vector<HistoryVisit> visits{mk(1, Transition::kLink),
                                     mk(2, Transition::kAutoSubframe),
                                     mk(3, Transition::kTyped)};
    auto filtered = filter_frame_navigations(visits);
    REQUIRE(filtered.size() == 2);
    CHECK(filtered[0].visit_id == 1);
    CHECK(filtered[1].visit_id == 3);

    SECTION("all subframe navigations leave nothing") {
        std::vector<HistoryVisit> frames{mk(1, Transition::kAutoSubframe),
                                         mk(2, Transition::kManualSubframe)};
        CHECK(filter_frame_navigations(frames).empty());
    }
    SECTION("no subframe navigations leave the list unchanged") {
        std::vector<HistoryVisit> clean{mk(1, Transition::kLink), mk(2, Transition::kReload)};
        CHECK(filter_frame_navigations(clean).size() == 2);
    }
    SECTION("idempotence") {
        auto once = filter_frame_navigations(visits);
        auto twice = filter_frame_navigations(once);
        REQUIRE(once.size() == twice.size());
        for (size_t i = 0; i < once.size(); ++i)
            CHECK(once[i].visit_id == twice[i].visit_id);
    }
}

TEST_CASE("extract_domain") {
    CHECK(extract_domain("https://www.youtube.com/watch?v=x") == "youtube.com");
    CHECK(extract_domain("https://mail.google.com/mail") == "mail.google.com");
    CHECK(extract_domain("chrome://newtab") == "chrome://newtab");
    CHECK(extract_domain("about:blank") == "about:blank");
    CHECK(extract_domain("HTTPS://WWW.Example.COM:8080/a/b") == "example.com");
    CHECK(extract_domain("http://user:pw@host.example/x") == "host.example");
    CHECK(extract_domain("file:///tmp/x.html") == "file:///tmp/x.html");
    CHECK(extract_domain("not a url") == "invalid:");
    CHECK(extract_domain("") == "invalid:");
    CHECK(extract_domain("http://") == "invalid:");
    CHECK(extract_domain("https://www./") == "invalid:");

    SECTION("total and deterministic on arbitrary bytes") {
        Rng rng(4);
        for (int i = 0; i < 2000; ++i) {
            std::string s;
            int len = static_cast<int>(rng.below(24));
            for (int k = 0; k < len; ++k)
                s += static_cast<char>(rng.between(32, 127));
            CHECK(extract_domain(s) == extract_domain(s));
        }
    }
}

TEST_CASE("compute_top_domains pads degenerate corpora") {
    std::vector<HistoryVisit> visits(3);
    for (auto& v : visits) v.domain = "only.example";
    auto vocab = compute_top_domains(visits);
    REQUIRE(vocab.size() == 20);
    CHECK(vocab.domains()[0] == "only.example");
    CHECK(vocab.domains()[1] == "<pad-1>");
    CHECK(vocab.domains()[19] == "<pad-19>");
    CHECK(vocab.index_of("only.example") == 0);
    CHECK(vocab.index_of("missing.example") == -1);
}

TEST_CASE("compute_top_domains breaks count ties lexicographically") {
    std::vector<HistoryVisit> visits;
    auto push = [&visits](const std::string& d, int n) {
        for (int i = 0; i < n; ++i) {
            HistoryVisit v;
            v.domain = d;
            visits.push_back(v);
        }
    };
    push("b.example", 3);
    push("a.example", 3);
    push("c.example", 1);
    auto vocab = compute_top_domains(visits, 2);
    REQUIRE(vocab.size() == 2);
    CHECK(vocab.domains()[0] == "a.example");
    CHECK(vocab.domains()[1] == "b.example");
}

TEST_CASE("compute_top_domains matches a brute-force count oracle on a corpus") {
    UserProfile profile = default_profile();
    profile.days = 4;
    auto corpus = generate_corpus(6, 77, profile);
    std::vector<HistoryVisit> visits;
    for (const auto& u : corpus.users) {
        auto filtered = filter_frame_navigations(u.visits);
        visits.insert(visits.end(), filtered.begin(), filtered.end());
    }

    std::map<std::string, int64_t> counts;
    for (const auto& v : visits) ++counts[v.domain];
    std::vector<std::pair<int64_t, std::string>> ranked;
    for (const auto& [d, n] : counts) ranked.emplace_back(-n, d);
    std::sort(ranked.begin(), ranked.end());

    auto vocab = compute_top_domains(visits);
    for (size_t i = 0; i < std::min<size_t>(ranked.size(), 20); ++i)
        CHECK(vocab.domains()[i] == ranked[i].second);

    SECTION("invariant to input order") {
        Rng rng(9);
        for (size_t i = visits.size(); i > 1; --i)
            std::swap(visits[i - 1], visits[rng.below(i)]);
        auto shuffled = compute_top_domains(visits);
        CHECK(shuffled.domains() == vocab.domains());
    }
}

TEST_CASE("load_productivity_map") {
    SECTION("empty file defaults everything to neutral") {
        auto map = load_productivity_map(std::string{});
        CHECK(map.level_of("anything.example") == ProductivityLevel::kNeutral);
    }
    SECTION("stored pairs and unlisted lookups") {
        auto map = load_productivity_map(
            std::string("facebook.com,very_distracting\ndocs.example,productive\n"));
        CHECK(map.level_of("facebook.com") == ProductivityLevel::kVeryDistracting);
        CHECK(map.level_of("docs.example") == ProductivityLevel::kProductive);
        CHECK(map.level_of("unlisted.example") == ProductivityLevel::kNeutral);
    }
    SECTION("unknown level token is an error naming the token") {
        try {
            load_productivity_map(std::string("a.example,sometimes_fun\n"));
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("sometimes_fun") != std::string::npos);
        }
    }
}
