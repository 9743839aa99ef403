// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <compare>
#include <string>

namespace betapool {

/// MMWR epidemiological week. Weeks start on Sunday; week 1 of a year is the
/// week containing January 4 (equivalently, the first week with at least four
/// days in the new calendar year). Years have 52 or 53 weeks.
struct EpiWeek {
  int year = 0;
  int week = 0;

  auto operator<=>(const EpiWeek&) const = default;

  // Encode as YYYYWW (e.g. 201643).
  int yyyyww() const { return year * 100 + week; }
  static EpiWeek from_yyyyww(int code);
  std::string str() const;  // "EW43-2016" style used in submission filenames
};

// Number of MMWR weeks in `year` (52 or 53).
int mmwr_weeks_in_year(int year);

// True when `ew.week` is within 1..mmwr_weeks_in_year(ew.year).
bool epiweek_valid(const EpiWeek& ew);

// MMWR week arithmetic across year boundaries. Throws DataError when `ew`
// itself is not a valid epiweek.
EpiWeek epiweek_add(const EpiWeek& ew, int weeks);

// Influenza season label under the week-40 convention: weeks 40 and later
// open the "year/year+1" season, weeks before 40 close the previous one.
std::string season_of(const EpiWeek& ew);

// Start year of a "YYYY/YYYY+1" season label; throws DataError on anything
// else. Seasons order by start year.
int season_start_year(const std::string& season);

}  // namespace betapool
