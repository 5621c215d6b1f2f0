#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "mipdqn/profiles.hpp"

using namespace mipdqn;

namespace {

std::string tmp_path(const char* name) {
  return std::string("/tmp/mipdqn_test_") + name;
}

}  // namespace

TEST_CASE("load_csv groups complete days") {
  const std::string path = tmp_path("two_days.csv");
  {
    std::ofstream out(path);
    out << "timestamp,pv_kw,load_kw,price\n";
    for (int d = 14; d <= 15; ++d)
      for (int h = 0; h < 24; ++h) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "2022-06-%02dT%02d:00,%g,%g,%g\n", d, h,
                      h > 6 && h < 20 ? 50.0 : 0.0, 150.0 + h, 0.4);
        out << buf;
      }
  }
  const auto days = load_csv(path);
  REQUIRE(days.size() == 2);
  CHECK(days[0].date.to_string() == "2022-06-14");
  CHECK(days[1].load[5] == doctest::Approx(155.0));
}

TEST_CASE("load_csv rejects an incomplete day naming it") {
  const std::string path = tmp_path("short_day.csv");
  {
    std::ofstream out(path);
    out << "timestamp,pv_kw,load_kw,price\n";
    for (int h = 0; h < 23; ++h) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "2022-06-14T%02d:00,0,150,0.4\n", h);
      out << buf;
    }
  }
  try {
    load_csv(path);
    FAIL("expected a validation error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("2022-06-14") != std::string::npos);
  }
}

TEST_CASE("load_csv reports the line of a malformed row") {
  const std::string path = tmp_path("bad_row.csv");
  {
    std::ofstream out(path);
    out << "timestamp,pv_kw,load_kw,price\n";
    out << "2022-06-14T00:00,0,150,0.4\n";
    out << "2022-06-14T01:00,zebra,150,0.4\n";
  }
  try {
    load_csv(path);
    FAIL("expected a parse error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
}

TEST_CASE("save/load round trip is exact") {
  const auto days = synthesize(42, 3, SeasonParams{});
  const std::string path = tmp_path("roundtrip.csv");
  save_csv(path, days);
  const auto back = load_csv(path);
  REQUIRE(back.size() == days.size());
  for (std::size_t d = 0; d < days.size(); ++d) {
    CHECK(back[d].date == days[d].date);
    for (int h = 0; h < 24; ++h) {
      CHECK(back[d].pv[h] == doctest::Approx(days[d].pv[h]).epsilon(1e-12));
      CHECK(back[d].load[h] == doctest::Approx(days[d].load[h]).epsilon(1e-12));
      CHECK(back[d].price[h] == doctest::Approx(days[d].price[h]).epsilon(1e-12));
    }
  }
}

TEST_CASE("synthesize is deterministic and dark at midnight") {
  const auto a = synthesize(7, 5, SeasonParams{});
  const auto b = synthesize(7, 5, SeasonParams{});
  REQUIRE(a.size() == 5);
  for (std::size_t d = 0; d < a.size(); ++d) {
    CHECK(a[d].pv[0] == 0.0);
    CHECK(a[d].pv[23] == 0.0);
    for (int h = 0; h < 24; ++h) {
      CHECK(a[d].pv[h] == b[d].pv[h]);
      CHECK(a[d].load[h] == b[d].load[h]);
      CHECK(a[d].price[h] == b[d].price[h]);
    }
    validate(a[d]);
  }
}

TEST_CASE("mean noon PV of many summer days approaches the seasonal curve") {
  SeasonParams quiet;
  quiet.pv_noise_std = 0.0;
  quiet.load_noise_std = 0.0;
  const Date midsummer{2022, 7, 11};
  const double reference = synthesize(1, 1, quiet, midsummer)[0].pv[12];

  double mean = 0.0;
  const int n = 1000;
  for (int i = 0; i < n; ++i)
    mean += synthesize(1000 + i, 1, SeasonParams{}, midsummer)[0].pv[12];
  mean /= n;
  CHECK(std::abs(mean - reference) / reference < 0.05);
}

TEST_CASE("train/test split by day of month") {
  const auto days = synthesize(3, 365, SeasonParams{}, {2022, 1, 1});
  const Dataset ds = split_train_test(days);
  CHECK(ds.train.size() == 252);
  CHECK(ds.test.size() == 113);
  for (const auto& d : ds.train) CHECK(d.date.day <= 21);
  for (const auto& d : ds.test) CHECK(d.date.day >= 22);

  std::vector<DayProfile> untagged(1);
  untagged[0].pv.assign(24, 0.0);
  untagged[0].load.assign(24, 100.0);
  untagged[0].price.assign(24, 0.4);
  CHECK_THROWS_AS(split_train_test(untagged), std::invalid_argument);
}
