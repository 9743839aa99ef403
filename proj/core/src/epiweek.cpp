// Apache License, Version 2.0, refer to LICENSE.txt
#include "betapool/epiweek.hpp"

#include <chrono>

#include "betapool/errors.hpp"

namespace betapool {

namespace {

using days = std::chrono::sys_days;

// Sunday on or before the given date.
days sunday_on_or_before(days d) {
  const std::chrono::weekday wd{d};
  return d - std::chrono::days(wd.c_encoding());  // Sunday encodes as 0
}

// First day (Sunday) of MMWR week 1: the week containing January 4.
days week1_start(int year) {
  const days jan4 = days(std::chrono::year(year) / std::chrono::January / 4);
  return sunday_on_or_before(jan4);
}

days epiweek_start(const EpiWeek& ew) {
  return week1_start(ew.year) + std::chrono::days(7 * (ew.week - 1));
}

EpiWeek epiweek_of_day(days d) {
  const std::chrono::year_month_day ymd{d};
  int year = static_cast<int>(ymd.year());
  if (d >= week1_start(year + 1)) {
    ++year;
  } else if (d < week1_start(year)) {
    --year;
  }
  const auto delta = d - week1_start(year);
  return EpiWeek{year, static_cast<int>(delta.count() / 7) + 1};
}

}  // namespace

EpiWeek EpiWeek::from_yyyyww(int code) {
  EpiWeek ew{code / 100, code % 100};
  if (!epiweek_valid(ew)) {
    throw DataError("invalid epiweek code " + std::to_string(code));
  }
  return ew;
}

std::string EpiWeek::str() const {
  std::string w = std::to_string(week);
  if (week < 10) w = "0" + w;
  return "EW" + w + "-" + std::to_string(year);
}

int mmwr_weeks_in_year(int year) {
  return static_cast<int>((week1_start(year + 1) - week1_start(year)).count() / 7);
}

bool epiweek_valid(const EpiWeek& ew) {
  if (ew.year < 1900 || ew.year > 3000) return false;
  return ew.week >= 1 && ew.week <= mmwr_weeks_in_year(ew.year);
}

EpiWeek epiweek_add(const EpiWeek& ew, int weeks) {
  if (!epiweek_valid(ew)) {
    throw DataError("invalid epiweek " + std::to_string(ew.yyyyww()));
  }
  return epiweek_of_day(epiweek_start(ew) + std::chrono::days(7 * weeks));
}

std::string season_of(const EpiWeek& ew) {
  const int start = ew.week >= 40 ? ew.year : ew.year - 1;
  return std::to_string(start) + "/" + std::to_string(start + 1);
}

int season_start_year(const std::string& season) {
  const auto slash = season.find('/');
  if (slash == std::string::npos) {
    throw DataError("season label '" + season + "' is not YYYY/YYYY+1");
  }
  int start = 0;
  int end = 0;
  try {
    start = std::stoi(season.substr(0, slash));
    end = std::stoi(season.substr(slash + 1));
  } catch (const std::exception&) {
    throw DataError("season label '" + season + "' is not YYYY/YYYY+1");
  }
  if (end != start + 1) {
    throw DataError("season label '" + season + "' must span consecutive years");
  }
  return start;
}

}  // namespace betapool
