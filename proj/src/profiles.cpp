#include "mipdqn/profiles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "mipdqn/rng.hpp"

namespace mipdqn {

std::string Date::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
  return buf;
}

namespace {

int days_in_month(int year, int month) {
  static const int table[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month == 2) {
    const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    return leap ? 29 : 28;
  }
  return table[month - 1];
}

Date next_day(Date d) {
  d.day++;
  if (d.day > days_in_month(d.year, d.month)) {
    d.day = 1;
    d.month++;
    if (d.month > 12) {
      d.month = 1;
      d.year++;
    }
  }
  return d;
}

// Day-of-year in [0, 365), ignoring leap offsets; only used for the
// seasonal interpolation weight.
int day_of_year(const Date& d) {
  int doy = d.day - 1;
  for (int m = 1; m < d.month; ++m) doy += days_in_month(2001, m);
  return doy;
}

// 1 at midsummer (early July), 0 at midwinter.
double summer_weight(const Date& d) {
  const double doy = day_of_year(d);
  return 0.5 - 0.5 * std::cos(2.0 * M_PI * (doy - 10.0) / 365.0);
}

struct ParsedTimestamp {
  Date date;
  int hour;
};

bool parse_timestamp(const std::string& s, ParsedTimestamp& out) {
  // Accepts YYYY-MM-DDTHH:MM[:SS][Z] with 'T' or ' ' separator.
  int y = 0, mo = 0, dy = 0, h = 0, mi = 0;
  if (s.size() < 16) return false;
  char sep = s[10];
  if (sep != 'T' && sep != ' ') return false;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d", &y, &mo, &dy) != 3) return false;
  if (std::sscanf(s.c_str() + 11, "%2d:%2d", &h, &mi) != 2) return false;
  if (mo < 1 || mo > 12 || dy < 1 || dy > 31 || h < 0 || h > 23 || mi != 0)
    return false;
  out.date = {y, mo, dy};
  out.hour = h;
  return true;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

void validate(const DayProfile& day, int horizon) {
  const std::size_t n = static_cast<std::size_t>(horizon);
  if (day.pv.size() != n || day.load.size() != n || day.price.size() != n)
    throw std::invalid_argument("profile " + day.date.to_string() +
                                " does not cover the full horizon");
  for (double v : day.pv)
    if (!(v >= 0.0)) throw std::invalid_argument("pv must be >= 0");
  for (double v : day.load)
    if (!(v >= 0.0)) throw std::invalid_argument("load must be >= 0");
  for (double v : day.price)
    if (!(v > 0.0)) throw std::invalid_argument("price must be > 0");
}

std::vector<DayProfile> load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open profile file: " + path);

  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path + ": empty file");
  {
    auto header = split_fields(line);
    if (header.size() != 4 || header[0] != "timestamp" ||
        header[1] != "pv_kw" || header[2] != "load_kw" || header[3] != "price")
      throw std::runtime_error(path +
                               ": expected header timestamp,pv_kw,load_kw,price");
  }

  struct HourRow {
    bool present = false;
    double pv = 0, load = 0, price = 0;
  };
  std::map<Date, std::array<HourRow, 24>> by_day;

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_fields(line);
    auto fail = [&](const std::string& why) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " +
                               why);
    };
    if (fields.size() != 4) fail("expected 4 comma-separated fields");
    ParsedTimestamp ts;
    if (!parse_timestamp(fields[0], ts)) fail("bad timestamp '" + fields[0] + "'");
    double vals[3];
    for (int i = 0; i < 3; ++i) {
      std::size_t used = 0;
      try {
        vals[i] = std::stod(fields[i + 1], &used);
      } catch (const std::exception&) {
        fail("bad numeric field '" + fields[i + 1] + "'");
      }
      if (used != fields[i + 1].size()) fail("bad numeric field '" + fields[i + 1] + "'");
    }
    auto& slot = by_day[ts.date][ts.hour];
    if (slot.present)
      fail("duplicate hour " + std::to_string(ts.hour) + " for day " +
           ts.date.to_string());
    slot = {true, vals[0], vals[1], vals[2]};
  }

  std::vector<DayProfile> days;
  for (const auto& [date, hours] : by_day) {
    DayProfile day;
    day.date = date;
    for (int h = 0; h < 24; ++h) {
      if (!hours[h].present)
        throw std::runtime_error(path + ": day " + date.to_string() +
                                 " is missing hour " + std::to_string(h));
      day.pv.push_back(hours[h].pv);
      day.load.push_back(hours[h].load);
      day.price.push_back(hours[h].price);
    }
    validate(day);
    days.push_back(std::move(day));
  }
  if (days.empty()) throw std::runtime_error(path + ": no data rows");
  return days;
}

void save_csv(const std::string& path, const std::vector<DayProfile>& days) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write profile file: " + path);
  out << "timestamp,pv_kw,load_kw,price\n";
  char buf[160];
  for (const auto& day : days) {
    for (std::size_t h = 0; h < day.pv.size(); ++h) {
      std::snprintf(buf, sizeof(buf), "%sT%02zu:00,%.17g,%.17g,%.17g\n",
                    day.date.to_string().c_str(), h, day.pv[h], day.load[h],
                    day.price[h]);
      out << buf;
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<DayProfile> synthesize(std::uint64_t seed, int n_days,
                                   const SeasonParams& p, Date start_date) {
  if (n_days < 1) throw std::invalid_argument("n_days must be >= 1");
  Rng rng(seed);
  std::vector<DayProfile> days;
  days.reserve(n_days);

  Date date = start_date;
  for (int d = 0; d < n_days; ++d) {
    const double w = summer_weight(date);
    const double pv_peak =
        p.pv_peak_winter + w * (p.pv_peak_summer - p.pv_peak_winter);
    const double load_scale = p.load_winter_scale + w * (1.0 - p.load_winter_scale);

    DayProfile day;
    day.date = date;
    for (int h = 0; h < 24; ++h) {
      // Daylight bell, zero outside roughly 06:00-20:00.
      double pv = 0.0;
      if (h > 6 && h < 20) {
        const double x = (h - 6.0) / 14.0;  // 0..1 across the daylight window
        pv = pv_peak * std::pow(std::sin(M_PI * x), 1.5);
        pv += rng.normal(0.0, p.pv_noise_std * std::max(0.2, std::sin(M_PI * x)));
      }
      pv = std::max(0.0, pv);

      auto bump = [&](double center, double width) {
        const double z = (h - center) / width;
        return std::exp(-0.5 * z * z);
      };
      double load = p.load_base + p.load_morning_peak * bump(8.5, 1.6) +
                    p.load_midday_bump * bump(13.0, 3.2) +
                    p.load_evening_peak * bump(17.5, 2.4);
      load *= load_scale;
      load += rng.normal(0.0, p.load_noise_std);
      load = std::max(load, pv + p.load_floor_offset);
      load = std::max(0.0, load);

      double price = p.price_shoulder;
      if (h >= 23 || h < 7) price = p.price_offpeak;
      if (h >= 17 && h < 21) price = p.price_peak;
      if (p.price_noise_std > 0.0) price += rng.normal(0.0, p.price_noise_std);
      price = std::max(price, p.price_floor);

      day.pv.push_back(pv);
      day.load.push_back(load);
      day.price.push_back(price);
    }
    days.push_back(std::move(day));
    date = next_day(date);
  }
  return days;
}

Dataset split_train_test(const std::vector<DayProfile>& days) {
  Dataset out;
  for (const auto& day : days) {
    if (day.date.year == 0 || day.date.month == 0 || day.date.day == 0)
      throw std::invalid_argument("profile without a calendar tag cannot be split");
    if (day.date.day <= 21)
      out.train.push_back(day);
    else
      out.test.push_back(day);
  }
  return out;
}

}  // namespace mipdqn
