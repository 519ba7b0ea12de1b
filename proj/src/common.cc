// src/common.cc

// Copyright 2026  The dasa-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "dasa/common.h"

#include <charconv>
#include <cmath>
#include <limits>

namespace dasa {

void ThrowValidation(const std::string &what) {
  throw Error(ErrorKind::kValidation, what);
}

void ThrowNumerical(const std::string &what) {
  throw Error(ErrorKind::kNumerical, what);
}

void ThrowIo(const std::string &what) { throw Error(ErrorKind::kIo, what); }

std::string FormatDouble(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value,
                           std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

bool ParseDouble(std::string_view text, double *out) {
  text = Trim(text);
  if (text.empty()) return false;
  if (text == "inf" || text == "+inf") {
    *out = std::numeric_limits<double>::infinity();
    return true;
  }
  if (text == "-inf") {
    *out = -std::numeric_limits<double>::infinity();
    return true;
  }
  if (text == "nan") {
    *out = std::numeric_limits<double>::quiet_NaN();
    return true;
  }
  if (text.front() == '+') text.remove_prefix(1);
  const char *end = text.data() + text.size();
  auto res = std::from_chars(text.data(), end, *out);
  return res.ec == std::errc() && res.ptr == end;
}

bool ParseInt(std::string_view text, int64_t *out) {
  text = Trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const char *end = text.data() + text.size();
  auto res = std::from_chars(text.data(), end, *out);
  return res.ec == std::errc() && res.ptr == end;
}

std::vector<std::string> SplitFields(std::string_view line, char delim) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      break;
    }
    fields.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::string_view Trim(std::string_view s) {
  const char *ws = " \t\r\n";
  size_t b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

bool AllFinite(const Vector &v) { return v.allFinite(); }
bool AllFinite(const Matrix &m) { return m.allFinite(); }

}  // namespace dasa
