#include "iotgan/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <string_view>

#include <fmt/core.h>

#include "iotgan/error.hpp"
#include "iotgan/io.hpp"

namespace iotgan::harness {

namespace {

struct Line {
  std::size_t number;
  std::string_view text;
};

// Non-empty, non-comment lines with their 1-based numbers.
std::vector<Line> lines_of(std::string_view text) {
  std::vector<Line> out;
  std::size_t number = 0;
  while (!text.empty()) {
    ++number;
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty() && line.front() != '#') out.push_back({number, line});
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return out;
}

std::vector<std::string_view> cells_of(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

double parse_number(std::string_view cell, std::size_t line, std::size_t column) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (first != last && *first == '+') ++first;
  auto [p, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc{} || p != last || !std::isfinite(v))
    throw ParseError(fmt::format("line {}, column {}: '{}' is not a finite number", line, column, cell), line, column);
  return v;
}

}  // namespace

std::string dataset_to_csv(const Dataset& ds) {
  std::string out;
  for (const auto& f : ds.schema().features()) out += fmt::format("f_{},", f.name);
  out += "class\n";
  for (const auto& r : ds.rows()) {
    for (double v : r.x.values) out += fmt::format("{},", v);
    out += ds.class_names()[r.label];
    out += '\n';
  }
  return out;
}

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
  write_file_atomic(path, dataset_to_csv(ds));
}

Dataset parse_dataset_csv(const std::string& text, const FeatureSchema& schema,
                          const std::optional<std::vector<std::string>>& class_names) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw ParseError("dataset CSV is empty", 1, 0);

  const auto header = cells_of(lines.front().text);
  const std::size_t hl = lines.front().number;
  if (header.size() != schema.size() + 1)
    throw ParseError(fmt::format("line {}: header has {} columns, expected {}", hl, header.size(), schema.size() + 1), hl, 0);
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (header[i] != "f_" + schema[i].name)
      throw ParseError(fmt::format("line {}, column {}: expected 'f_{}', found '{}'", hl, i + 1, schema[i].name, header[i]),
                       hl, i + 1);
  if (header.back() != "class")
    throw ParseError(fmt::format("line {}, column {}: expected 'class'", hl, header.size()), hl, header.size());

  struct Raw {
    FeatureVector x;
    std::string_view label;
  };
  std::vector<Raw> raw;
  raw.reserve(lines.size() - 1);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto [number, line] = lines[li];
    const auto cells = cells_of(line);
    if (cells.size() != header.size())
      throw ParseError(fmt::format("line {}: {} cells, expected {}", number, cells.size(), header.size()), number, 0);
    Raw r;
    r.x.values.resize(schema.size());
    for (std::size_t i = 0; i < schema.size(); ++i) {
      const double v = parse_number(cells[i], number, i + 1);
      if (v < schema[i].min || v > schema[i].max)
        throw ParseError(fmt::format("line {}, column {}: {} = {} outside [{}, {}]", number, i + 1, schema[i].name, v,
                                     schema[i].min, schema[i].max),
                         number, i + 1);
      r.x[i] = v;
    }
    r.label = cells.back();
    if (r.label.empty())
      throw ParseError(fmt::format("line {}, column {}: empty class label", number, header.size()), number, header.size());
    raw.push_back(std::move(r));
  }

  std::vector<std::string> names;
  if (class_names) {
    names = *class_names;
  } else {
    std::set<std::string, std::less<>> distinct;
    for (const auto& r : raw) distinct.emplace(r.label);
    names.assign(distinct.begin(), distinct.end());
  }
  std::map<std::string, ClassId, std::less<>> id_of;
  for (std::size_t c = 0; c < names.size(); ++c) id_of.emplace(names[c], c);

  std::vector<Sample> rows;
  rows.reserve(raw.size());
  for (std::size_t k = 0; k < raw.size(); ++k) {
    const auto it = id_of.find(raw[k].label);
    if (it == id_of.end())
      throw ValidationError(fmt::format("line {}: unknown class label '{}'", lines[k + 1].number, raw[k].label));
    rows.push_back({std::move(raw[k].x), it->second});
  }
  return Dataset(schema, std::move(names), std::move(rows));
}

Dataset ingest_csv(const std::filesystem::path& path, const FeatureSchema& schema,
                   const std::optional<std::vector<std::string>>& class_names) {
  return parse_dataset_csv(read_file(path), schema, class_names);
}

std::string schema_to_csv(const FeatureSchema& schema) {
  std::string out = "name,unit,min,max,mutable\n";
  for (const auto& f : schema.features())
    out += fmt::format("{},{},{},{},{}\n", f.name, f.unit, f.min, f.max, f.is_mutable ? 1 : 0);
  return out;
}

FeatureSchema parse_schema_csv(const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw ParseError("schema CSV is empty", 1, 0);
  if (lines.front().text != "name,unit,min,max,mutable")
    throw ParseError(fmt::format("line {}: expected header 'name,unit,min,max,mutable'", lines.front().number),
                     lines.front().number, 0);
  std::vector<FeatureSpec> specs;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto [number, line] = lines[li];
    const auto cells = cells_of(line);
    if (cells.size() != 5) throw ParseError(fmt::format("line {}: expected 5 cells", number), number, 0);
    FeatureSpec f;
    f.name = std::string(cells[0]);
    f.unit = std::string(cells[1]);
    f.min = parse_number(cells[2], number, 3);
    f.max = parse_number(cells[3], number, 4);
    if (cells[4] != "0" && cells[4] != "1")
      throw ParseError(fmt::format("line {}, column 5: mutable must be 0 or 1", number), number, 5);
    f.is_mutable = cells[4] == "1";
    specs.push_back(std::move(f));
  }
  return FeatureSchema(std::move(specs));
}

FeatureSchema load_schema(const std::filesystem::path& path) { return parse_schema_csv(read_file(path)); }

}  // namespace iotgan::harness
