#include <ostream>

#include "numfmt.hpp"
#include "oxdr/analysis.hpp"
#include "oxdr/error.hpp"

namespace oxdr::analysis {

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

namespace {

void append_cell(std::string& line, const Cell& cell) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
        } else if constexpr (std::is_same_v<T, double>) {
          detail::append_shortest(line, v);
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          line += std::to_string(v);
        } else if constexpr (std::is_same_v<T, bool>) {
          line += v ? '1' : '0';
        } else {
          line += csv_escape(v);
        }
      },
      cell);
}

}  // namespace

CsvCounts export_csv(const ResampledTable& table, std::ostream& out) {
  if (table.columns.empty() || table.rows() == 0)
    throw Error(ErrorCode::empty_table, "nothing to export");

  std::string line = "ts_us";
  for (const auto& c : table.columns) {
    line += ',';
    line += csv_escape(c.name);
  }
  line += '\n';
  out << line;

  for (std::size_t r = 0; r < table.rows(); ++r) {
    line = std::to_string(table.ts_us[r]);
    for (const auto& c : table.columns) {
      line += ',';
      append_cell(line, c.cells[r]);
    }
    line += '\n';
    out << line;
  }
  out.flush();
  if (!out) throw Error(ErrorCode::io, "writing CSV output failed");
  return {table.rows(), table.columns.size() + 1};
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      field_started = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      field_started = false;
    } else {
      field += c;
      field_started = true;
    }
  }
  if (field_started || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace oxdr::analysis
