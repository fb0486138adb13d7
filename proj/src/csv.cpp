// gmmdiag/csv.cpp

#include "gmmdiag/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "gmmdiag/errors.hpp"

namespace gmmdiag {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

Dataset parse_csv(std::istream& in) {
  std::vector<double> values;
  std::size_t n_dims = 0;
  std::size_t line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view row = trim(line);
    if (row.empty()) continue;

    std::size_t fields = 0;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = row.find(',', start);
      std::string_view field =
          trim(row.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                  : comma - start));
      double v = 0.0;
      auto res = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw DataError("line " + std::to_string(line_no) + ": invalid number '" +
                        std::string(field) + "'");
      }
      if (!std::isfinite(v)) {
        throw DataError("line " + std::to_string(line_no) + ": non-finite value");
      }
      values.push_back(v);
      ++fields;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }

    if (n_dims == 0) {
      n_dims = fields;
    } else if (fields != n_dims) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(n_dims) + " fields, got " + std::to_string(fields));
    }
  }
  if (in.bad()) throw DataError("read failure");
  if (values.empty()) throw DataError("dataset contains no samples");
  return Dataset(n_dims, std::move(values));
}

Dataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  try {
    return parse_csv(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_csv(std::ostream& out, const Dataset& data) {
  char buf[64];
  std::string line;
  for (std::size_t i = 0; i < data.n_samples(); ++i) {
    line.clear();
    auto x = data.sample(i);
    for (std::size_t d = 0; d < x.size(); ++d) {
      if (d > 0) line.push_back(',');
      auto res = std::to_chars(buf, buf + sizeof(buf), x[d], std::chars_format::general, 17);
      line.append(buf, res.ptr);
    }
    line.push_back('\n');
    out << line;
  }
}

void write_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  write_csv(out, data);
  out.flush();
  if (!out) throw DataError("write to '" + path.string() + "' failed");
}

}  // namespace gmmdiag
