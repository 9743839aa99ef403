// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <charconv>
#include <string>

namespace betapool {

// Shortest decimal form that parses back to the identical double; keeps
// delimited outputs both precise and reproducible.
inline std::string double_to_string(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// "2016/2017" -> "2016-2017" for use in file names.
inline std::string season_file_tag(std::string season) {
  for (char& c : season) {
    if (c == '/') c = '-';
  }
  return season;
}

}  // namespace betapool
