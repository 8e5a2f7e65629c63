#include "support.hpp"

#include "ubitriage/error.hpp"
#include "ubitriage/store.hpp"

#include <doctest.h>

#include <random>
#include <thread>

using namespace ubitriage;
using namespace ubitriage::store;

namespace {

VerdictRecord record(const std::string& case_id, const std::string& decision, std::size_t turns,
                     const std::string& batch = "b1") {
    VerdictRecord r;
    r.batch = batch;
    r.case_id = case_id;
    r.decision = decision;
    r.votes = {decision};
    r.runs = {RunSummary{0, decision, "", turns, 10 * turns, {"ret = f(&x)"}}};
    r.suspicious = {"x"};
    r.must_init = decision == "non_bug" ? std::vector<std::string>{"x"} : std::vector<std::string>{};
    if (decision == "bug") {
        r.may_init = {{"x", "ret > 0"}};
    }
    r.turns = turns;
    r.tokens = 10 * turns;
    r.backend = "scripted";
    r.model = "m";
    r.pack_version = "default@1.0";
    r.recorded_at = kEpochTimestamp;
    return r;
}

}  // namespace

TEST_CASE("verdict records round trip through the store") {
    testsupport::TempDir tmp;
    Store st(tmp / "store");
    CHECK(std::filesystem::is_directory(tmp / "store" / "transcripts"));
    CHECK(std::filesystem::is_directory(st.cache_dir()));
    auto a = record("c1", "non_bug", 3);
    a.warnings = {"core disagrees on f"};
    a.merged = true;
    const auto b = record("c2", "bug", 5);
    CHECK(st.append_verdict(a) == 0);
    CHECK(st.append_verdict(b) == 1);
    const auto back = st.read_verdicts();
    REQUIRE(back.size() == 2);
    CHECK(back[0] == a);
    CHECK(back[1] == b);

    // A reopened store sees the same records and keys.
    Store again(tmp / "store");
    CHECK(again.read_verdicts() == back);
    CHECK_THROWS_AS(again.append_verdict(a), DuplicateRecordError);
    CHECK(verdict_from_json(to_json(b)) == b);
}

TEST_CASE("one record per case and batch") {
    testsupport::TempDir tmp;
    Store st(tmp.path());
    st.append_verdict(record("c1", "bug", 2));
    CHECK_THROWS_AS(st.append_verdict(record("c1", "non_bug", 2)), DuplicateRecordError);
    CHECK_NOTHROW(st.append_verdict(record("c1", "non_bug", 2, "b2")));
    CHECK(st.read_verdicts().size() == 2);
}

TEST_CASE("batch statistics") {
    testsupport::TempDir tmp;
    Store st(tmp.path());
    CHECK(st.batch_stats() == BatchStats{});
    CHECK(st.batch_stats().turn_mean() == 0.0);
    CHECK_THROWS_AS((void)st.batch_stats(std::string("nope")), NotFoundError);

    st.append_verdict(record("c1", "non_bug", 3));
    st.append_verdict(record("c2", "non_bug", 3));
    st.append_verdict(record("c3", "bug", 2));
    st.append_verdict(record("c9", "inconclusive", 8, "other"));
    const auto s = st.batch_stats(std::string("b1"));
    CHECK(s.cases == 3);
    CHECK(s.decisions == std::map<std::string, std::size_t>{{"bug", 1}, {"non_bug", 2}});
    CHECK(s.turn_mean() == doctest::Approx(8.0 / 3.0).epsilon(1e-12));
    // Population variance of {3, 3, 2}.
    CHECK(s.turn_variance() == doctest::Approx(2.0 / 9.0).epsilon(1e-12));
    CHECK(s.turn_max == 3);
    CHECK(s.total_tokens == 80);
    CHECK(st.batch_stats().cases == 4);
}

TEST_CASE("property: statistics agree with a direct computation") {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        testsupport::TempDir tmp;
        Store st(tmp.path());
        const int n = std::uniform_int_distribution<int>(1, 15)(rng);
        std::vector<double> turns;
        for (int i = 0; i < n; ++i) {
            const auto t = static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 24)(rng));
            turns.push_back(static_cast<double>(t));
            st.append_verdict(record("c" + std::to_string(i), i % 2 ? "bug" : "non_bug", t));
        }
        double mean = 0;
        for (double t : turns) {
            mean += t;
        }
        mean /= static_cast<double>(n);
        double var = 0;
        for (double t : turns) {
            var += (t - mean) * (t - mean);
        }
        var /= static_cast<double>(n);
        const auto s = st.batch_stats(std::string("b1"));
        CHECK(s.turn_mean() == doctest::Approx(mean).epsilon(1e-12));
        CHECK(s.turn_variance() == doctest::Approx(var).epsilon(1e-9));
        CHECK(static_cast<double>(s.turn_max) == *std::max_element(turns.begin(), turns.end()));
    }
}

TEST_CASE("concurrent appends keep every line intact") {
    testsupport::TempDir tmp;
    Store st(tmp.path());
    std::vector<std::thread> pool;
    for (int w = 0; w < 4; ++w) {
        pool.emplace_back([&st, w] {
            for (int i = 0; i < 25; ++i) {
                st.append_verdict(record("c" + std::to_string(w) + "-" + std::to_string(i), "bug", 2));
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    CHECK(st.read_verdicts().size() == 100);
}

TEST_CASE("malformed verdict lines are a store error") {
    testsupport::TempDir tmp;
    testsupport::spit(tmp / "verdicts.jsonl", "{\"case\": \"x\"\n");
    CHECK_THROWS_AS(Store(tmp.path()), StoreError);
}

TEST_CASE("transcripts are written per conversation") {
    testsupport::TempDir tmp;
    Store st(tmp.path());
    llm::Conversation c1;
    c1.id = {"case7", "convo1", 0, 0};
    c1.system_prompt = "sys";
    c1.turns.push_back({0, "first prompt", "first answer", 3, 3, std::chrono::milliseconds(5)});
    llm::Conversation c2;
    c2.id = {"case7", "convo2", 1, 1};
    const auto paths = st.write_transcripts({c1, c2});
    REQUIRE(paths.size() == 2);
    CHECK(paths[0] == "transcripts/case7/convo1-0.txt");
    CHECK(paths[1] == "transcripts/case7/convo2-1-1.txt");
    const auto text = testsupport::slurp(tmp / paths[0]);
    CHECK(text == render_transcript(c1));
    CHECK(text.find("first prompt") != std::string::npos);
    CHECK(text.find("first answer") != std::string::npos);
    // No timings, so reruns are byte-identical.
    c1.turns[0].elapsed = std::chrono::milliseconds(900);
    CHECK(render_transcript(c1) == text);
}

TEST_CASE("directory response cache") {
    testsupport::TempDir tmp;
    DirectoryResponseCache cache(tmp / "responses");
    CHECK_FALSE(cache.get("abc").has_value());
    cache.put("abc", "hello\nworld");
    CHECK(cache.get("abc") == std::optional<std::string>("hello\nworld"));
    DirectoryResponseCache reopened(tmp / "responses");
    CHECK(reopened.get("abc") == std::optional<std::string>("hello\nworld"));
}
