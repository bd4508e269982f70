// Copyright 2026 The qstab authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "qstab/errors.hpp"

namespace qstab {

/// A point on the absolute timeline with the UTC offset it was recorded at.
/// Ordering and window arithmetic use `epoch_seconds` only; the offset is
/// display metadata and survives round-trips through the file formats.
struct Timestamp {
  std::int64_t epoch_seconds{0};
  std::int32_t offset_minutes{0};

  auto operator<=>(const Timestamp&) const = default;
};

/// A duration as ingested: numeric value plus its source unit string.
/// Computation happens in seconds via seconds(); keeping the raw value
/// makes file round-trips exact.
struct Duration {
  double value{0.0};
  std::string unit{"s"};

  double seconds() const;

  bool operator==(const Duration&) const = default;
};

inline double unit_scale(std::string_view unit) {
  if (unit == "s") return 1.0;
  if (unit == "ms") return 1e-3;
  if (unit == "us" || unit == "µs") return 1e-6;
  if (unit == "ns") return 1e-9;
  throw ValidationError("unknown duration unit '" + std::string(unit) + "'");
}

inline double Duration::seconds() const { return value * unit_scale(unit); }

/// Builds a Duration that prints as `seconds / scale(unit)` in `unit`.
inline Duration duration_from_seconds(double seconds, const std::string& unit = "s") {
  return Duration{seconds / unit_scale(unit), unit};
}

namespace detail {

// Days since 1970-01-01 for a proleptic Gregorian date (Howard Hinnant's
// days_from_civil).
inline std::int64_t days_from_civil(std::int64_t y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                       static_cast<unsigned>(d) - 1u;
  const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

// Inverse of days_from_civil.
inline void civil_from_days(std::int64_t z, std::int64_t& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  y += m <= 2;
}

inline bool read_fixed_uint(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  int v = 0;
  for (std::size_t i = 0; i < len; ++i) {
    const char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}

}  // namespace detail

/// Parses "YYYY-MM-DD HH:MM:SS[.frac][{+|-}HH:MM|Z]" ('T' also accepted as the
/// separator, fractional seconds are truncated, missing offset means UTC).
inline Timestamp parse_timestamp(std::string_view text) {
  const auto fail = [&]() -> Timestamp {
    throw ParseError("malformed timestamp '" + std::string(text) + "'");
  };

  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
  if (!detail::read_fixed_uint(text, 0, 4, year)) return fail();
  if (text.size() < 19 || text[4] != '-' || text[7] != '-') return fail();
  if (!detail::read_fixed_uint(text, 5, 2, month) || !detail::read_fixed_uint(text, 8, 2, day)) {
    return fail();
  }
  if (text[10] != ' ' && text[10] != 'T') return fail();
  if (text[13] != ':' || text[16] != ':') return fail();
  if (!detail::read_fixed_uint(text, 11, 2, hour) || !detail::read_fixed_uint(text, 14, 2, minute) ||
      !detail::read_fixed_uint(text, 17, 2, second)) {
    return fail();
  }
  if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 60) {
    return fail();
  }

  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    const std::size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == start) return fail();
  }

  std::int32_t offset_minutes = 0;
  if (pos < text.size()) {
    const char sign = text[pos];
    if (sign == 'Z') {
      ++pos;
    } else if (sign == '+' || sign == '-') {
      int oh = 0, om = 0;
      if (!detail::read_fixed_uint(text, pos + 1, 2, oh)) return fail();
      std::size_t mpos = pos + 3;
      if (mpos < text.size() && text[mpos] == ':') ++mpos;
      if (!detail::read_fixed_uint(text, mpos, 2, om)) return fail();
      pos = mpos + 2;
      offset_minutes = (sign == '-' ? -1 : 1) * (oh * 60 + om);
    } else {
      return fail();
    }
  }
  if (pos != text.size()) return fail();

  const std::int64_t days = detail::days_from_civil(year, month, day);
  const std::int64_t local = days * 86400 + hour * 3600 + minute * 60 + second;
  return Timestamp{local - static_cast<std::int64_t>(offset_minutes) * 60, offset_minutes};
}

/// Formats as "YYYY-MM-DD HH:MM:SS+HH:MM" using the stored offset.
inline std::string format_timestamp(const Timestamp& t) {
  const std::int64_t local = t.epoch_seconds + static_cast<std::int64_t>(t.offset_minutes) * 60;
  std::int64_t days = local / 86400;
  std::int64_t sod = local % 86400;
  if (sod < 0) {
    sod += 86400;
    --days;
  }
  std::int64_t year = 0;
  int month = 0, day = 0;
  detail::civil_from_days(days, year, month, day);

  const int hour = static_cast<int>(sod / 3600);
  const int minute = static_cast<int>((sod % 3600) / 60);
  const int second = static_cast<int>(sod % 60);
  const int off = t.offset_minutes;
  const char sign = off < 0 ? '-' : '+';
  const int aoff = off < 0 ? -off : off;

  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04lld-%02d-%02d %02d:%02d:%02d%c%02d:%02d",
                static_cast<long long>(year), month, day, hour, minute, second, sign, aoff / 60,
                aoff % 60);
  return buf;
}

/// Parses "90d", "12h", "30m", "45s"; a bare integer means days.
inline std::int64_t parse_duration_seconds(std::string_view text) {
  if (text.empty()) throw ParseError("empty duration");
  std::int64_t scale = 86400;
  std::string_view digits = text;
  const char last = text.back();
  if (!std::isdigit(static_cast<unsigned char>(last))) {
    digits = text.substr(0, text.size() - 1);
    switch (last) {
      case 'd': scale = 86400; break;
      case 'h': scale = 3600; break;
      case 'm': scale = 60; break;
      case 's': scale = 1; break;
      default: throw ParseError("unknown duration suffix in '" + std::string(text) + "'");
    }
  }
  if (digits.empty()) throw ParseError("malformed duration '" + std::string(text) + "'");
  std::int64_t value = 0;
  for (const char c : digits) {
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      throw ParseError("malformed duration '" + std::string(text) + "'");
    }
    value = value * 10 + (c - '0');
  }
  return value * scale;
}

}  // namespace qstab
