#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cohortnet/events.hpp"

using namespace cohortnet;

namespace {

LoadResult parse(const std::string& text, InputFormat fmt = InputFormat::jsonl, bool strict = false) {
  std::istringstream in(text);
  return parse_events(in, fmt, strict);
}

const char* kThreeRows =
    R"({"event_id":"p1","user_id":"u1","community_id":"funny","kind":"post","timestamp":"2016-09-01T10:00:00Z","toxicity":0.2})"
    "\n"
    R"({"event_id":"c1","user_id":"u2","community_id":"funny","kind":"comment","parent_post_id":"p1","timestamp":1472724000})"
    "\n"
    R"({"event_id":"c2","user_id":"u3","community_id":"funny","platform":"reddit","kind":"comment","parent_post_id":"p1","timestamp":"1472724100","toxicity":0,"sentiment":-0.5})"
    "\n";

}  // namespace

TEST_CASE("well-formed JSONL loads every row in file order") {
  const auto r = parse(kThreeRows);
  REQUIRE(r.events.size() == 3);
  CHECK(r.report.rows_read == 3);
  CHECK(r.report.rows_rejected == 0);
  CHECK(r.events[0].event_id == "p1");
  CHECK(r.events[0].timestamp == 1472724000);
  CHECK(r.events[0].platform == Platform::receiver);
  CHECK(r.events[1].parent_post_id == "p1");
  CHECK_FALSE(r.events[1].toxicity.has_value());
  CHECK(r.events[2].platform == Platform::source);
  CHECK(r.events[2].timestamp == 1472724100);
  REQUIRE(r.events[2].toxicity.has_value());
  CHECK(*r.events[2].toxicity == 0.0);
  CHECK(r.events[2].sentiment == -0.5);
}

TEST_CASE("comment without parent is skipped in non-strict mode") {
  const auto r = parse(
      R"({"event_id":"c1","user_id":"u2","community_id":"funny","kind":"comment","timestamp":1472724000})"
      "\n");
  CHECK(r.events.empty());
  CHECK(r.report.rows_rejected == 1);
  CHECK(r.report.rejection_reasons.at("missing_parent") == 1);
  CHECK(r.report.issues.at(0).line == 1);
}

TEST_CASE("out-of-range toxicity is fatal in strict mode and names the row") {
  const std::string text = std::string(kThreeRows) +
                           R"({"event_id":"p9","user_id":"u1","community_id":"funny","kind":"post","timestamp":1472724000,"toxicity":1.3})"
                           "\n";
  try {
    (void)parse(text, InputFormat::jsonl, true);
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 4") != std::string::npos);
    CHECK(msg.find("toxicity_range") != std::string::npos);
  }
  const auto lenient = parse(text);
  CHECK(lenient.events.size() == 3);
  CHECK(lenient.report.rejection_reasons.at("toxicity_range") == 1);
}

TEST_CASE("every rejected row carries exactly one reason") {
  const std::string text =
      "{not json}\n"
      R"({"event_id":"p1","user_id":"u1","community_id":"c","kind":"post","timestamp":"2016-09-01"})"
      "\n"
      R"({"event_id":"p1","user_id":"u1","community_id":"c","kind":"post","timestamp":"2016-09-01"})"
      "\n"
      R"({"event_id":"p2","user_id":"u1","community_id":"c","kind":"reply","timestamp":"2016-09-01"})"
      "\n"
      R"({"event_id":"p3","user_id":"u1","community_id":"c","kind":"post","timestamp":"sometime"})"
      "\n"
      R"({"event_id":"p4","user_id":"u1","community_id":"c","kind":"post","parent_post_id":"p1","timestamp":5})"
      "\n"
      R"({"event_id":"p5","user_id":"u1","community_id":"c","kind":"post","timestamp":5,"sentiment":2})"
      "\n"
      R"({"event_id":"p6","user_id":"u1","kind":"post","timestamp":5})"
      "\n"
      R"({"event_id":"p7","user_id":"u1","community_id":"c","platform":"myspace","kind":"post","timestamp":5})"
      "\n"
      R"({"event_id":"p8","user_id":"u1","community_id":"c","kind":"post","timestamp":5,"toxicity":"high"})"
      "\n"
      "\n";
  const auto r = parse(text);
  CHECK(r.report.rows_read == 10);
  CHECK(r.report.rows_accepted == 1);
  CHECK(r.report.rows_read == r.report.rows_accepted + r.report.rows_rejected);
  std::size_t reasons = 0;
  for (const auto& [k, v] : r.report.rejection_reasons) reasons += v;
  CHECK(reasons == r.report.rows_rejected);
  const auto& rr = r.report.rejection_reasons;
  CHECK(rr.at("malformed_row") == 1);
  CHECK(rr.at("duplicate_id") == 1);
  CHECK(rr.at("invalid_kind") == 1);
  CHECK(rr.at("invalid_timestamp") == 1);
  CHECK(rr.at("unexpected_parent") == 1);
  CHECK(rr.at("sentiment_range") == 1);
  CHECK(rr.at("missing_field") == 1);
  CHECK(rr.at("invalid_platform") == 1);
  CHECK(rr.at("invalid_number") == 1);
}

TEST_CASE("CSV with header, quoting and empty optional fields") {
  const std::string text =
      "\xEF\xBB\xBF"
      "event_id,user_id,community_id,platform,kind,parent_post_id,timestamp,toxicity,sentiment\r\n"
      "p1,\"u,1\",funny,voat,post,,2016-09-01T10:00:00Z,0.25,\r\n"
      "c1,u2,funny,voat,comment,p1,1472724000,,0.1\r\n"
      "c2,u2,funny,voat,comment,p1,1472724000,0.1\r\n";
  const auto r = parse(text, InputFormat::csv);
  REQUIRE(r.events.size() == 2);
  CHECK(r.events[0].user_id == "u,1");
  CHECK(r.events[0].toxicity == 0.25);
  CHECK_FALSE(r.events[0].sentiment);
  CHECK_FALSE(r.events[1].toxicity);
  CHECK(r.events[1].sentiment == 0.1);
  CHECK(r.report.rejection_reasons.at("malformed_row") == 1);
}

TEST_CASE("ingestion is deterministic and round-trips through JSONL") {
  const auto a = parse(kThreeRows);
  const auto b = parse(kThreeRows);
  CHECK(a.events == b.events);
  CHECK(a.report.to_json() == b.report.to_json());
  std::ostringstream os;
  write_jsonl(os, a.events);
  const auto c = parse(os.str());
  CHECK(c.events == a.events);
}

TEST_CASE("file loading errors") {
  CHECK_THROWS_AS(load_events("/nonexistent/events.jsonl", InputFormat::jsonl, false), IoError);
  CHECK(format_from_path("x.csv") == InputFormat::csv);
  CHECK(format_from_path("x.jsonl") == InputFormat::jsonl);

  const auto dir = std::filesystem::temp_directory_path() / "cohortnet_test_events";
  std::filesystem::create_directories(dir);
  const auto f1 = (dir / "a.jsonl").string();
  const auto f2 = (dir / "b.jsonl").string();
  std::ofstream(f1) << kThreeRows;
  std::ofstream(f2) << kThreeRows;
  const auto all = load_all({{f1, InputFormat::jsonl}, {f2, InputFormat::jsonl}}, false);
  CHECK(all.events.size() == 3);
  CHECK(all.report.rows_read == 6);
  CHECK(all.report.rejection_reasons.at("duplicate_id") == 3);
  CHECK(all.report.rows_read == all.report.rows_accepted + all.report.rows_rejected);
  std::filesystem::remove_all(dir);
}
