#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "drf/core/error.hpp"

namespace drf {

// CSV emitter: ',' separator, '.' decimal point, LF line endings, mandatory
// header row. Doubles are written shortest-round-trip.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header)
      : out_(path, std::ios::binary) {
    if (!out_) fail(ErrorCode::IoError, "csv: cannot write '" + path + "'");
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) out_ << ',';
      out_ << header[i];
    }
    out_ << '\n';
  }

  CsvWriter& field(const std::string& s) {
    sep();
    out_ << s;
    return *this;
  }
  CsvWriter& field(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    sep();
    out_.write(buf, res.ptr - buf);
    return *this;
  }
  CsvWriter& field(std::int64_t x) {
    sep();
    out_ << x;
    return *this;
  }
  CsvWriter& field(std::size_t x) { return field(static_cast<std::int64_t>(x)); }
  CsvWriter& field(int x) { return field(static_cast<std::int64_t>(x)); }

  void endrow() {
    out_ << '\n';
    first_ = true;
  }

  void flush() { out_.flush(); }

 private:
  void sep() {
    if (!first_) out_ << ',';
    first_ = false;
  }

  std::ofstream out_;
  bool first_ = true;
};

}  // namespace drf
