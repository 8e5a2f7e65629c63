#include "support.hpp"

#include "ubitriage/error.hpp"
#include "ubitriage/report_model.hpp"

#include <doctest.h>

#include <random>

using namespace ubitriage;
using namespace ubitriage::report;

TEST_CASE("a single record") {
    const auto reports = parse_reports(
        R"([{"id":"c1","variable":"tmp","caller":"get_signal_parameters",)"
        R"("file":"drivers/media/dvb-frontends/stv0910.c","line":504}])");
    REQUIRE(reports.size() == 1);
    const auto& r = reports[0];
    CHECK(r.id == "c1");
    CHECK(r.variable == "tmp");
    CHECK(r.caller == "get_signal_parameters");
    CHECK(r.file == "drivers/media/dvb-frontends/stv0910.c");
    CHECK(r.line == 504);
    CHECK(r.extra.empty());
}

TEST_CASE("empty and malformed documents") {
    CHECK(parse_reports("[]").empty());
    CHECK(parse_reports(" [ ]\n").empty());
    try {
        (void)parse_reports(R"([{"id": "c1",)");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.position() > 0);
    }
    CHECK_THROWS_AS((void)parse_reports(R"({"id": "c1"})"), ParseError);
    CHECK_THROWS_AS((void)parse_report_file(testsupport::fixtures() / "reports" / "absent.json"), NotFoundError);
}

TEST_CASE("schema errors name the field and the record") {
    const std::string good = R"({"id":"a","variable":"v","caller":"f","file":"x.c","line":3})";
    auto expect = [](const std::string& doc, const std::string& field, std::size_t index) {
        CAPTURE(doc);
        try {
            (void)parse_reports(doc);
            FAIL("expected a schema error");
        } catch (const SchemaError& e) {
            CHECK(e.field() == field);
            CHECK(e.record_index() == index);
        }
    };
    expect("[" + good + R"(,{"id":"b","caller":"f","file":"x.c","line":3}])", "variable", 1);
    expect(R"([{"id":"a","variable":"","caller":"f","file":"x.c","line":3}])", "variable", 0);
    expect(R"([{"id":"a","variable":"v","file":"x.c","line":3}])", "caller", 0);
    expect(R"([{"id":"a","variable":"v","caller":"f","file":"x.c","line":0}])", "line", 0);
    expect(R"([{"id":"a","variable":"v","caller":"f","file":"x.c","line":"3"}])", "line", 0);
    expect(R"([{"id":"a","variable":"v","caller":"f","file":"x.c"}])", "line", 0);
    expect(R"([{"id":7,"variable":"v","caller":"f","file":"x.c","line":3}])", "id", 0);
    expect("[" + good + "," + good + "]", "id", 1);
    expect("[" + good + ", 3]", "<record>", 1);
}

TEST_CASE("field paths stay opaque and extra fields survive") {
    const auto reports = parse_report_file(testsupport::fixtures() / "reports" / "case_studies.json");
    REQUIRE(reports.size() == 3);
    CHECK(reports[0].variable == "pages[j]");
    CHECK(reports[1].variable == "comp_pkt.completion_status");

    const auto misc = parse_report_file(testsupport::fixtures() / "reports" / "misc.json");
    REQUIRE(misc.size() == 2);
    CHECK(misc[1].extra == nlohmann::json{{"analyzer", "scanner-x"}});
    CHECK(parse_reports(serialize_reports(misc)) == misc);
}

TEST_CASE("property: round trip and order on random report lists") {
    std::mt19937 rng(12345);
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    const std::vector<std::string> vars = {"tmp", "cap_rid.softCap", "pages[j]", "a->b.c", "x"};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<BugReport> in;
        const int n = pick(0, 12);
        for (int i = 0; i < n; ++i) {
            BugReport r;
            r.id = "case-" + std::to_string(pick(0, 1'000'000)) + "-" + std::to_string(i);
            r.variable = vars[static_cast<std::size_t>(pick(0, 4))];
            r.caller = "fn_" + std::to_string(pick(0, 50));
            r.file = "dir" + std::to_string(pick(0, 3)) + "/file.c";
            r.line = pick(1, 100'000);
            if (pick(0, 3) == 0) {
                r.extra["score"] = pick(0, 9);
            }
            in.push_back(std::move(r));
        }
        const auto out = parse_reports(serialize_reports(in));
        REQUIRE(out.size() == in.size());
        for (std::size_t i = 0; i < in.size(); ++i) {
            CHECK(out[i] == in[i]);
        }
    }
}
