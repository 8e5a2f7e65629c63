#include "ubitriage/error.hpp"
#include "ubitriage/structured_response.hpp"

#include <doctest.h>
#include <json.hpp>

using namespace ubitriage;
using namespace ubitriage::orchestrator;
using nlohmann::json;

namespace {

const char* kSscanfRequest = R"J({
 "initializer": "ret = sscanf(str, \"%d:%d:%d:%d:%d\", &a, &b, &c, &d, &n)",
 "suspicious": ["a", "b", "c", "d"],
 "postconstraint": "ret >= 4"
})J";

const char* kSscanfResponse = R"J({
 "ret": "success",
 "response": {
   "must_init": ["a", "b", "c", "d"],
   "may_init": [{"name":"n", "condition": "ret > 4"}]
  }
})J";

const char* kRequestList = R"J([{"type":"function_def", "name":"some_func" }])J";

const char* kCaseOneRequest = R"J({
    "initializer": "res = get_user_pages_unlocked(uaddr, nr_pages, pages, rw == READ ? FOLL_WRITE : 0)",
    "suspicious": ["pages[j]"],
    "postconstraint": "res < nr_pages && res > 0 && j < res",
})J";

const char* kCaseOneResponse = R"J({
    "ret": "success",
    "response": {
        "must_init": ["pages[j]"],
        "may_init": [],
    }
})J";

const char* kCaseThreeResult = R"J({
    "initializer":
        "err = p9pdu_readf(req->rc, c->proto_version, 'd', &ecode)",
    "suspicious": ["ecode"],
    "postconstraint": null,
    "response": {
        "must_init": [],
        "may_init": [{
                "name": "ecode",
                "condition": "p9pdu_readf returns 0"
        }]
    }
})J";

template <typename T>
T as(const StructuredResponse& r) {
    REQUIRE(std::holds_alternative<T>(r));
    return std::get<T>(r);
}

}  // namespace

TEST_CASE("request document round trip") {
    const auto list = as<InitializerList>(parse_structured_response(kSscanfRequest));
    REQUIRE(list.size() == 1);
    const auto& r = list[0];
    CHECK(r.initializer_callee == "sscanf");
    CHECK(r.suspicious == std::vector<std::string>{"a", "b", "c", "d"});
    CHECK(r.postconstraint == "ret >= 4");
    CHECK(to_json(r) == json::parse(kSscanfRequest));

    const auto doc = request_document(r);
    CHECK(json::parse(doc) == json::parse(kSscanfRequest));
    CHECK(doc.find("\"initializer\"") < doc.find("\"suspicious\""));
    CHECK(doc.find("\"suspicious\"") < doc.find("\"postconstraint\""));
}

TEST_CASE("response document round trip") {
    const auto r = as<ConvoTwoResult>(parse_structured_response(kSscanfResponse));
    CHECK(r.status == ConvoTwoStatus::Success);
    CHECK(r.must_init == std::vector<std::string>{"a", "b", "c", "d"});
    REQUIRE(r.may_init.size() == 1);
    CHECK(r.may_init[0] == MayInitEntry{"n", "ret > 4"});
    CHECK(r.requests.empty());
    CHECK(to_json(r) == json::parse(kSscanfResponse));
}

TEST_CASE("request list round trip") {
    const auto r = as<RequestList>(parse_structured_response(kRequestList));
    CHECK(r == RequestList{{"function_def", "some_func"}});
    CHECK(to_json(r) == json::parse(kRequestList));
}

TEST_CASE("documents with trailing commas") {
    const auto req = as<InitializerList>(parse_structured_response(kCaseOneRequest));
    REQUIRE(req.size() == 1);
    CHECK(req[0].initializer_callee == "get_user_pages_unlocked");
    CHECK(req[0].postconstraint == "res < nr_pages && res > 0 && j < res");
    CHECK(to_json(req[0]) == json::parse(strip_trailing_commas(kCaseOneRequest)));

    const auto resp = as<ConvoTwoResult>(parse_structured_response(kCaseOneResponse));
    CHECK(resp.must_init == std::vector<std::string>{"pages[j]"});
    CHECK(resp.may_init.empty());
    CHECK(to_json(resp) == json::parse(strip_trailing_commas(kCaseOneResponse)));

    CHECK(strip_trailing_commas(R"J({"a": "x,}", "b": [1, 2, ],})J") == R"J({"a": "x,}", "b": [1, 2 ]})J");
}

TEST_CASE("a combined result is read as a summary") {
    const auto r = as<ConvoTwoResult>(parse_structured_response(kCaseThreeResult));
    CHECK(r.status == ConvoTwoStatus::Success);
    CHECK(r.must_init.empty());
    REQUIRE(r.may_init.size() == 1);
    CHECK(r.may_init[0] == MayInitEntry{"ecode", "p9pdu_readf returns 0"});
}

TEST_CASE("documents embedded in prose; the last one wins") {
    const std::string text = std::string("Let me think step by step.\n```json\n") + kRequestList +
                             "\n```\nOn reflection, here is the summary:\n```json\n" + kSscanfResponse +
                             "\n```\nHope that helps {really}.";
    CHECK(std::holds_alternative<ConvoTwoResult>(parse_structured_response(text)));

    const std::string braces_in_strings = R"J(Note: "}" is not a brace. {"type": "function_def", "name": "a{b"})J";
    CHECK(as<RequestList>(parse_structured_response(braces_in_strings)) == RequestList{{"function_def", "a{b"}});
}

TEST_CASE("request variants") {
    const auto wrapped = as<RequestList>(
        parse_structured_response(R"J({"ret": "need_more_info", "response": [{"type": "function_def", "name": "f"}]})J"));
    CHECK(wrapped == RequestList{{"function_def", "f"}});
    const auto status = as<RequestList>(
        parse_structured_response(R"J({"status": "need_more_info", "requests": [{"type": "function_def", "name": "g"}]})J"));
    CHECK(status == RequestList{{"function_def", "g"}});
    const auto single = as<RequestList>(parse_structured_response(R"J({"type": "function_def", "name": "h"})J"));
    CHECK(single == RequestList{{"function_def", "h"}});
}

TEST_CASE("summary statuses") {
    const auto more = as<ConvoTwoResult>(
        parse_structured_response(R"J({"ret": "need_more_info", "response": {"must_init": [], "may_init": []}})J"));
    CHECK(more.status == ConvoTwoStatus::NeedMoreInfo);
    const auto odd = as<ConvoTwoResult>(
        parse_structured_response(R"J({"ret": "failure", "response": {"must_init": ["a"]}})J"));
    CHECK(odd.status == ConvoTwoStatus::Inconclusive);
    CHECK_FALSE(odd.reason.empty());
    const auto bare = as<ConvoTwoResult>(parse_structured_response(R"J({"must_init": ["a"], "may_init": ["b"]})J"));
    CHECK(bare.may_init == std::vector<MayInitEntry>{{"b", ""}});
}

TEST_CASE("initializer lists") {
    CHECK(as<InitializerList>(parse_structured_response("[]")).empty());
    CHECK(as<InitializerList>(parse_structured_response(R"J({"initializer": null, "postconstraint": null})J")).empty());
    const auto two = as<InitializerList>(parse_structured_response(
        R"J([{"initializer": "a = f(x)", "suspicious": ["a"], "postconstraint": null},
            {"initializer": "g(&a)", "suspicious": ["a"], "postconstraint": "a_ok"}])J"));
    REQUIRE(two.size() == 2);
    CHECK(two[0].initializer_callee == "f");
    CHECK_FALSE(two[0].postconstraint.has_value());
    CHECK(two[1].initializer_callee == "g");
}

TEST_CASE("nothing usable is a parse error") {
    CHECK_THROWS_AS((void)parse_structured_response("The variable is always initialized."), ParseError);
    CHECK_THROWS_AS((void)parse_structured_response(""), ParseError);
    CHECK_THROWS_AS((void)parse_structured_response("{\"must_init\": [\"a\"], "), ParseError);
    CHECK_THROWS_AS((void)parse_structured_response(R"J({"unrelated": 1})J"), ParseError);
    CHECK_THROWS_AS((void)parse_structured_response("[1, 2, 3]"), ParseError);
    // A name in both lists breaks the disjointness invariant.
    CHECK_THROWS_AS((void)parse_structured_response(R"J({"must_init": ["a"], "may_init": [{"name": "a"}]})J"),
                    ParseError);
}

TEST_CASE("callee extraction") {
    CHECK(callee_of("ret = sscanf(str, \"%d\", &a)") == "sscanf");
    CHECK(callee_of("err = p9pdu_readf(req->rc, c->proto_version, 'd', &ecode)") == "p9pdu_readf");
    CHECK(callee_of("hv_pci_generic_compl") == "hv_pci_generic_compl");
    CHECK(callee_of("if (kstrtoul(buf, 10, &speed))") == "kstrtoul");
    CHECK(callee_of("res = (int)get_user_pages_unlocked(uaddr)") == "get_user_pages_unlocked");
    CHECK(callee_of("x == f(y)") == "f");
    CHECK(callee_of("") == "");
}
