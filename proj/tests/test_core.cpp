#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mgmem/core.hpp"

#include <nlohmann/json.hpp>

#include <random>

using namespace mgmem;

TEST_CASE("turn id formatting") {
    CHECK(format_turn_id({3, 7}) == "D_{3:7}");
    CHECK(format_turn_id({0, 0}) == "D_{0:0}");
    CHECK(format_turn_id({12, 345}) == "D_{12:345}");
}

TEST_CASE("turn id parsing") {
    CHECK(parse_turn_id("D_{3:7}") == TurnId{3, 7});
    CHECK_THROWS_AS(parse_turn_id("D_{3-7}"), MalformedIdError);
    // leading zeros tolerated, canonicalized on reformat
    CHECK(parse_turn_id("D_{003:7}") == TurnId{3, 7});
    CHECK(format_turn_id(parse_turn_id("D_{003:7}")) == "D_{3:7}");

    CHECK_THROWS_AS(parse_turn_id(""), MalformedIdError);
    CHECK_THROWS_AS(parse_turn_id("D_{3:7"), MalformedIdError);
    CHECK_THROWS_AS(parse_turn_id("D_{-3:7}"), MalformedIdError);
    CHECK_THROWS_AS(parse_turn_id("D_{a:7}"), MalformedIdError);
    CHECK_THROWS_AS(parse_turn_id("E_{3:7}"), MalformedIdError);
    CHECK_THROWS_AS(parse_turn_id("D_{:7}"), MalformedIdError);
    CHECK_THROWS_AS(parse_turn_id("D_{}"), MalformedIdError);
}

TEST_CASE("turn id round-trip property") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::int64_t> dist(0, 1'000'000'000);
    for (int i = 0; i < 1000; ++i) {
        const TurnId t{dist(rng), dist(rng)};
        CHECK(parse_turn_id(format_turn_id(t)) == t);
    }
}

TEST_CASE("turn id ordering is lexicographic") {
    CHECK(TurnId{1, 9} < TurnId{2, 0});
    CHECK(TurnId{1, 2} < TurnId{1, 3});
    CHECK_FALSE(TurnId{2, 0} < TurnId{1, 9});
}

TEST_CASE("datetime parse and canonical form") {
    CHECK(parse_datetime("2023-05-07 14:30").to_string() == "2023-05-07T14:30:00");
    CHECK(parse_datetime("2023-05-07T14:30:05").to_string() == "2023-05-07T14:30:05");
    CHECK(parse_datetime("2024-02-29").to_string() == "2024-02-29T00:00:00");
    CHECK_THROWS_AS(parse_datetime("2023-02-29"), MalformedTimestampError); // not a leap year
    CHECK_THROWS_AS(parse_datetime("sometime"), MalformedTimestampError);
    CHECK_THROWS_AS(parse_datetime("2023-13-01"), MalformedTimestampError);
    CHECK_THROWS_AS(parse_datetime("2023-05-07 25:00"), MalformedTimestampError);
    CHECK(is_canonical_datetime("2023-05-07T14:30:00"));
    CHECK_FALSE(is_canonical_datetime("2023-05-07 14:30:00"));
    CHECK_FALSE(is_canonical_datetime("May 7"));
}

TEST_CASE("datetime epoch round trip") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::int64_t> dist(-2'000'000'000LL, 4'000'000'000LL);
    for (int i = 0; i < 2000; ++i) {
        const DateTime t(dist(rng));
        CHECK(DateTime::from_civil(t.civil()).epoch_seconds() == t.epoch_seconds());
        CHECK(parse_datetime(t.to_string()) == t);
    }
}

namespace {

MemoryEntry sample_entry(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<int> small(0, 40);
    std::uniform_real_distribution<float> real(-2.0f, 2.0f);

    MemoryEntry e;
    e.id = small(rng) + 1;
    const int g = small(rng) % 3;
    e.granularity = g == 0 ? Granularity::Raw : (g == 1 ? Granularity::Fact : Granularity::Episode);
    e.content = "content-" + std::to_string(small(rng));
    if (e.granularity == Granularity::Episode) e.title = "title-" + std::to_string(small(rng));
    const int nrel = small(rng) % 4;
    for (int i = 0; i < nrel; ++i) e.relations.push_back({small(rng), small(rng)});
    if (coin(rng)) e.meta.timestamp = DateTime(1700000000 + small(rng) * 86400);
    e.meta.turn_id = {small(rng), small(rng)};
    e.meta.speaker = coin(rng) ? Speaker::User : Speaker::Assistant;
    for (int i = 0; i < 6; ++i) e.embedding.push_back(real(rng));
    e.created_at = e.id;
    e.deleted = coin(rng) == 1;
    if (e.deleted) e.content = coin(rng) ? e.content : "";
    return e;
}

} // namespace

TEST_CASE("memory entry canonical JSON round-trips losslessly") {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 500; ++i) {
        const MemoryEntry e = sample_entry(rng);
        const Json j = to_canonical_json(e);
        const MemoryEntry back = memory_entry_from_json(j);
        CHECK(canonical_dump(back) == canonical_dump(e));
        CHECK(back.deleted == e.deleted);
        CHECK(back.embedding == e.embedding);
        CHECK(back.meta == e.meta);
    }
}

TEST_CASE("memory entry invariants") {
    MemoryEntry e;
    e.granularity = Granularity::Fact;
    e.content = "";
    CHECK_THROWS_AS(e.validate(), InvariantError); // empty content on a live entry

    e.content = "x";
    e.title = "t"; // title on a non-episode
    CHECK_THROWS_AS(e.validate(), InvariantError);

    e.title.reset();
    CHECK_NOTHROW(e.validate());

    e.granularity = Granularity::Episode; // episode without title
    CHECK_THROWS_AS(e.validate(), InvariantError);
    e.title = "t";
    CHECK_NOTHROW(e.validate());
}

TEST_CASE("judge verdict construction rejects invalid combinations") {
    CHECK_THROWS_AS(make_judge_verdict(JudgeAction::Refresh, {}, {}, "r", 0.5), InvariantError);
    CHECK_THROWS_AS(make_judge_verdict(JudgeAction::Pass, {1}, {2}, "r", 0.5), InvariantError);
    CHECK_THROWS_AS(make_judge_verdict(JudgeAction::Retry, {}, {2}, "r", 0.5), InvariantError);
    CHECK_THROWS_AS(make_judge_verdict(JudgeAction::Pass, {}, {}, "r", 1.5), InvariantError);
    CHECK_NOTHROW(make_judge_verdict(JudgeAction::Refresh, {1}, {2}, "r", 0.5));
    CHECK_NOTHROW(make_judge_verdict(JudgeAction::Pass, {1, 2}, {}, "r", 1.0));
}

TEST_CASE("refresh plan invariants") {
    RefreshPlan p;
    p.action = RefreshAction::Update;
    CHECK_THROWS_AS(p.validate(), InvariantError); // no edits
    p.edits.push_back({1, ""});
    CHECK_THROWS_AS(p.validate(), InvariantError); // empty new content
    p.edits[0].new_content = "new";
    CHECK_NOTHROW(p.validate());

    p.action = RefreshAction::NoOp;
    CHECK_THROWS_AS(p.validate(), InvariantError); // edits on No-Op
    p.edits.clear();
    CHECK_NOTHROW(p.validate());

    p.action = RefreshAction::Delete;
    CHECK_THROWS_AS(p.validate(), InvariantError); // no targets
    p.edits.push_back({1, ""});
    CHECK_NOTHROW(p.validate()); // content irrelevant for deletes
}

TEST_CASE("refresh action wire names") {
    CHECK(to_string(RefreshAction::NoOp) == "No-Op");
    CHECK(refresh_action_from_string("No-Op") == RefreshAction::NoOp);
    CHECK_THROWS_AS(refresh_action_from_string("NoOp"), Error);
}

TEST_CASE("context window ordering and eviction") {
    ContextWindow w(3);
    TurnRecord a{{0, 0}, Speaker::User, "a", std::nullopt};
    TurnRecord b{{0, 1}, Speaker::Assistant, "b", std::nullopt};
    TurnRecord c{{0, 2}, Speaker::User, "c", std::nullopt};
    TurnRecord d{{0, 3}, Speaker::User, "d", std::nullopt};
    w.push(a);
    w.push(b);
    CHECK_THROWS_AS(w.push(b), InvariantError); // out of order
    w.push(c);
    CHECK(w.at_capacity());
    w.push(d); // evicts the oldest
    CHECK(w.size() == 3);
    CHECK(w.recent().front().text == "b");
}

TEST_CASE("turn record requires text") {
    TurnRecord u{{0, 0}, Speaker::User, "", std::nullopt};
    CHECK_THROWS_AS(u.validate(), InvariantError);
}
