#pragma once

#include <string>
#include <vector>

namespace mipdqn {

struct Date {
  int year = 0;
  int month = 0;  // 1..12
  int day = 0;    // 1..31

  auto operator<=>(const Date&) const = default;
  std::string to_string() const;  // YYYY-MM-DD
};

// One 24-hour input series: PV generation, demand and the hourly tariff.
struct DayProfile {
  Date date;
  std::vector<double> pv;     // kW, >= 0
  std::vector<double> load;   // kW, >= 0
  std::vector<double> price;  // $/kWh, > 0
};

struct Dataset {
  std::vector<DayProfile> train;
  std::vector<DayProfile> test;
};

// Seasonal shape parameters for the synthetic generator. The magnitudes are
// calibration inputs, not measurements; defaults are sized for the default
// three-DG system so that every hour admits a balanced dispatch.
struct SeasonParams {
  double pv_peak_summer = 170.0;  // kW at solar noon, midsummer
  double pv_peak_winter = 90.0;
  double pv_noise_std = 8.0;

  double load_base = 150.0;        // kW overnight level
  double load_morning_peak = 95.0; // added on top of base around 08:30
  double load_evening_peak = 150.0;// added around 17:30
  double load_midday_bump = 140.0; // broad midday plateau (cooling load)
  double load_winter_scale = 0.92;
  double load_noise_std = 8.0;

  // Three-tier time-of-use tariff.
  double price_offpeak = 0.20;   // $/kWh, 23:00-06:59
  double price_shoulder = 0.50;  // 07:00-16:59 and 21:00-22:59
  double price_peak = 0.85;      // 17:00-20:59
  double price_noise_std = 0.0;
  double price_floor = 0.05;

  // Lower envelope load >= pv + offset, keeping days dispatchable for
  // systems whose generators cannot shut down. 135 kW = sum of the default
  // DG minimums minus the grid export limit, plus margin.
  double load_floor_offset = 135.0;
};

void validate(const DayProfile& day, int horizon = 24);

// CSV schema (header required): timestamp,pv_kw,load_kw,price
// ISO-8601 hourly timestamps. Rows are grouped by calendar day; a day with
// missing or duplicate hours is rejected.
std::vector<DayProfile> load_csv(const std::string& path);
void save_csv(const std::string& path, const std::vector<DayProfile>& days);

// Deterministic in (seed, n_days, params). Day i is tagged start_date + i.
std::vector<DayProfile> synthesize(std::uint64_t seed, int n_days,
                                   const SeasonParams& params,
                                   Date start_date = {2022, 1, 1});

// Day-of-month <= 21 goes to train, the rest to test.
Dataset split_train_test(const std::vector<DayProfile>& days);

}  // namespace mipdqn
