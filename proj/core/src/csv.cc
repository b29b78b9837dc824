// Copyright 2026 The InherNet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "inhernet/csv.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "inhernet/checkpoint.h"
#include "inhernet/errors.h"

namespace inhernet {
namespace {

std::vector<std::string_view> split_line(std::string_view line, char delim) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double parse_double(std::string_view cell, std::size_t line) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ParseError("line " + std::to_string(line) + ": '" + std::string(cell) +
                         "' is not a number",
                     line);
  }
  return v;
}

std::size_t parse_label(std::string_view cell, std::size_t line) {
  cell = trim(cell);
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ParseError("line " + std::to_string(line) + ": label '" +
                         std::string(cell) + "' is not a class index",
                     line);
  }
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

Dataset read_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("missing header row", 1);
  ++line_no;
  const std::size_t columns = split_line(line, schema.delimiter).size();
  const std::size_t tail = schema.classification ? 1 : schema.target_columns;
  if (columns <= tail) {
    throw ParseError("header has " + std::to_string(columns) +
                         " columns, need more than " + std::to_string(tail),
                     1);
  }
  const std::size_t features = columns - tail;
  std::vector<double> x, y;
  std::vector<std::size_t> labels;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line, schema.delimiter);
    if (cells.size() != columns) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                           std::to_string(columns) + " cells, found " +
                           std::to_string(cells.size()),
                       line_no);
    }
    for (std::size_t c = 0; c < features; ++c) {
      x.push_back(parse_double(cells[c], line_no));
    }
    if (schema.classification) {
      const std::size_t label = parse_label(cells.back(), line_no);
      if (schema.num_classes != 0 && label >= schema.num_classes) {
        throw ParseError("line " + std::to_string(line_no) + ": label " +
                             std::to_string(label) + " >= class count " +
                             std::to_string(schema.num_classes),
                         line_no);
      }
      labels.push_back(label);
    } else {
      for (std::size_t c = features; c < columns; ++c) {
        y.push_back(parse_double(cells[c], line_no));
      }
    }
    ++rows;
  }
  Dataset data;
  data.inputs = Matrix(rows, features, std::move(x));
  if (schema.classification) {
    std::size_t classes = schema.num_classes;
    if (classes == 0) {
      for (std::size_t l : labels) classes = std::max(classes, l + 1);
    }
    data.labels = std::move(labels);
    data.num_classes = classes;
  } else {
    data.targets = Matrix(rows, tail, std::move(y));
  }
  return data;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_csv(in, schema);
}

void write_csv(const Dataset& data, std::ostream& out, const CsvSchema& schema) {
  const char d = schema.delimiter;
  const std::size_t features = data.inputs.cols();
  for (std::size_t c = 0; c < features; ++c) {
    if (c) out << d;
    out << 'x' << c;
  }
  if (schema.classification) {
    out << d << "label";
  } else {
    for (std::size_t c = 0; c < data.targets.cols(); ++c) out << d << 'y' << c;
  }
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t c = 0; c < features; ++c) {
      if (c) out << d;
      out << format_double(data.inputs(i, c));
    }
    if (schema.classification) {
      out << d << data.labels.at(i);
    } else {
      for (std::size_t c = 0; c < data.targets.cols(); ++c) {
        out << d << format_double(data.targets(i, c));
      }
    }
    out << '\n';
  }
}

void save_csv(const Dataset& data, const std::filesystem::path& path,
              const CsvSchema& schema) {
  std::ostringstream out;
  write_csv(data, out, schema);
  write_file_atomic(path, out.str());
}

}  // namespace inhernet
