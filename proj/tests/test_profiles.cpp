#include <catch2/catch_amalgamated.hpp>

#include <sstream>
#include <string>
#include <vector>

#include "peakevd/profiles.hpp"

using namespace peakevd;
using Catch::Matchers::ContainsSubstring;

static LoadProfile make_profile(std::string id, std::vector<double> readings) {
  LoadProfile p;
  p.customer_id = std::move(id);
  p.readings = std::move(readings);
  return p;
}

TEST_CASE("reduce_profile takes max and sum") {
  const auto r = profiles::reduce_profile(make_profile("c1", {1.0, 4.5, 0.25, 2.0}));
  CHECK(r.customer_id == "c1");
  CHECK(r.peak == 4.5);
  CHECK(r.energy == Catch::Approx(7.75));

  CHECK_THROWS_AS(profiles::reduce_profile(make_profile("empty", {})),
                  std::invalid_argument);
}

TEST_CASE("filter_profiles applies one reason per drop, in precedence order") {
  std::vector<LoadProfile> in;
  in.push_back(make_profile("ok", {0.0, 1.0, 2.0, 3.0}));
  in.push_back(make_profile("short_and_negative", {-1.0, 2.0}));  // incomplete wins
  in.push_back(make_profile("neg_and_leading_zero", {0.0, 0.0, -3.0, 1.0}));  // negative wins
  in.push_back(make_profile("leading_zero", {0.0, 0.0, 1.0, 2.0}));
  in.push_back(make_profile("too_long", {1.0, 1.0, 1.0, 1.0, 1.0}));

  const auto [kept, rep] = profiles::filter_profiles(in, 4, 2);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].customer_id == "ok");
  CHECK(rep.kept == 1);
  CHECK(rep.dropped_incomplete == 2);
  CHECK(rep.dropped_negative == 1);
  CHECK(rep.dropped_leading_zero == 1);
  REQUIRE(rep.dropped_ids.size() == 4);
  CHECK(rep.dropped_ids[0] == std::pair<std::string, std::string>{"short_and_negative",
                                                                  "incomplete"});
  CHECK(rep.dropped_ids[1] == std::pair<std::string, std::string>{"neg_and_leading_zero",
                                                                  "negative"});
  CHECK(rep.dropped_ids[2] == std::pair<std::string, std::string>{"leading_zero",
                                                                  "leading_zero"});
  CHECK(rep.dropped_ids[3] == std::pair<std::string, std::string>{"too_long",
                                                                  "incomplete"});
}

TEST_CASE("filter_profiles window checks only the leading points") {
  // Zeros past the window are fine.
  std::vector<LoadProfile> in{make_profile("tail_zero", {1.0, 0.0, 0.0, 0.0})};
  const auto [kept, rep] = profiles::filter_profiles(in, 4, 1);
  CHECK(kept.size() == 1);
  CHECK(rep.dropped_leading_zero == 0);

  CHECK_THROWS_AS(profiles::filter_profiles(in, 4, 5), std::invalid_argument);
}

TEST_CASE("ingest_csv parses the profile schema") {
  std::istringstream in(
      "customer_id,interval_minutes,r_0,r_1,r_2\n"
      "a,15,0.5,1.25,0\n"
      "b,30,2,0.75,1\r\n");  // CRLF tolerated
  const auto ps = profiles::ingest_csv(in);
  REQUIRE(ps.size() == 2);
  CHECK(ps[0].customer_id == "a");
  CHECK(ps[0].interval_minutes == 15);
  CHECK(ps[0].readings == std::vector<double>{0.5, 1.25, 0.0});
  CHECK(ps[1].interval_minutes == 30);
  CHECK(ps[1].readings == std::vector<double>{2.0, 0.75, 1.0});
}

TEST_CASE("ingest_csv reports schema and parse errors with 1-based positions") {
  std::istringstream bad_header("id,interval_minutes,r_0\nx,15,1\n");
  CHECK_THROWS_WITH(profiles::ingest_csv(bad_header), ContainsSubstring("row 1"));

  std::istringstream bad_cell(
      "customer_id,interval_minutes,r_0,r_1\n"
      "a,15,1.0,oops\n");
  CHECK_THROWS_WITH(profiles::ingest_csv(bad_cell),
                    ContainsSubstring("row 2, column 4") && ContainsSubstring("oops"));

  std::istringstream bad_interval(
      "customer_id,interval_minutes,r_0\n"
      "a,0,1.0\n");
  CHECK_THROWS_WITH(profiles::ingest_csv(bad_interval),
                    ContainsSubstring("interval_minutes must be positive"));

  std::istringstream no_readings("customer_id,interval_minutes,r_0\na,15\n");
  CHECK_THROWS_WITH(profiles::ingest_csv(no_readings),
                    ContainsSubstring("at least one reading"));
}

TEST_CASE("record CSV round-trips through write and read") {
  std::vector<CustomerRecord> recs{{"c1", 1234.5, 17.25},
                                   {"c2", 0.1, 0.30000000000000004},
                                   {"c3", 9.9e5, 3.0}};
  std::ostringstream out;
  profiles::write_records_csv(out, recs);

  std::istringstream in(out.str());
  const auto back = profiles::read_records_csv(in);
  REQUIRE(back.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(back[i].customer_id == recs[i].customer_id);
    CHECK(back[i].energy == recs[i].energy);  // exact: shortest round-trip format
    CHECK(back[i].peak == recs[i].peak);
  }
}

TEST_CASE("read_records_csv validates its schema") {
  std::istringstream bad_header("customer_id,peak,energy\nc,1,2\n");
  CHECK_THROWS_WITH(profiles::read_records_csv(bad_header),
                    ContainsSubstring("customer_id,energy,peak"));

  std::istringstream short_row("customer_id,energy,peak\nc,1\n");
  CHECK_THROWS_WITH(profiles::read_records_csv(short_row),
                    ContainsSubstring("expected 3 columns"));

  std::istringstream bad_value("customer_id,energy,peak\nc,1,x2\n");
  CHECK_THROWS_WITH(profiles::read_records_csv(bad_value),
                    ContainsSubstring("row 2, column 3"));
}

TEST_CASE("profile CSV round-trips through write and ingest") {
  std::vector<LoadProfile> ps{make_profile("a", {1.0, 2.5, 0.0}),
                              make_profile("b", {0.25, 0.125, 7.0})};
  std::ostringstream out;
  profiles::write_profiles_csv(out, ps);

  std::istringstream in(out.str());
  const auto back = profiles::ingest_csv(in);
  REQUIRE(back.size() == 2);
  CHECK(back[0].readings == ps[0].readings);
  CHECK(back[1].readings == ps[1].readings);
}
