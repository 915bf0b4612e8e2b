#include "treelink/records.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "treelink/errors.hpp"

namespace treelink {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

double parse_double(const std::string& text, int row, const char* column) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, "row " + std::to_string(row) +
                                           ": cannot parse " + column + " from '" +
                                           text + "'");
  }
}

int parse_int(const std::string& text, int row, const char* column) {
  const double v = parse_double(text, row, column);
  if (v != std::floor(v)) {
    throw Error(ErrorCode::ParseError, "row " + std::to_string(row) + ": " +
                                           column + " must be an integer, got '" +
                                           text + "'");
  }
  return static_cast<int>(v);
}

}  // namespace

RecordSet ingest_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::SchemaError, path + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line);
  const std::vector<std::string> expected = {"file_index", "record_id", "x",
                                             "y", "volume", "year"};
  if (header != expected) {
    throw Error(ErrorCode::SchemaError,
                path + ": expected header file_index,record_id,x,y,volume,year");
  }

  RecordSet set;
  set.first.file_index = 1;
  set.second.file_index = 2;
  bool saw_year[2] = {false, false};

  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 6) {
      throw Error(ErrorCode::ParseError,
                  "row " + std::to_string(row) + ": expected 6 fields, got " +
                      std::to_string(fields.size()));
    }
    const int file_index = parse_int(fields[0], row, "file_index");
    if (file_index != 1 && file_index != 2) {
      throw Error(ErrorCode::ValidationError,
                  "row " + std::to_string(row) + ": file_index must be 1 or 2");
    }
    Record rec;
    rec.id = parse_int(fields[1], row, "record_id");
    rec.loc.x = parse_double(fields[2], row, "x");
    rec.loc.y = parse_double(fields[3], row, "y");
    rec.volume = parse_double(fields[4], row, "volume");
    const int year = parse_int(fields[5], row, "year");
    if (!std::isfinite(rec.loc.x) || !std::isfinite(rec.loc.y)) {
      throw Error(ErrorCode::ValidationError,
                  "row " + std::to_string(row) + ": non-finite coordinates");
    }
    if (!(rec.volume > 0.0) || !std::isfinite(rec.volume)) {
      throw Error(ErrorCode::ValidationError,
                  "row " + std::to_string(row) + ": volume must be positive");
    }
    RecordFile& file = file_index == 1 ? set.first : set.second;
    if (saw_year[file_index - 1] && file.year != year) {
      throw Error(ErrorCode::ValidationError,
                  "row " + std::to_string(row) + ": inconsistent year for file " +
                      std::to_string(file_index));
    }
    file.year = year;
    saw_year[file_index - 1] = true;
    file.records.push_back(rec);
  }

  if (!saw_year[0] || !saw_year[1]) {
    throw Error(ErrorCode::ValidationError,
                path + ": need records from exactly two files (file_index 1 and 2)");
  }
  validate_records(set);
  return set;
}

void write_records_csv(const std::string& path, const RecordSet& records) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ValidationError, "cannot write " + path);
  out.precision(17);
  out << "file_index,record_id,x,y,volume,year\n";
  for (const RecordFile* file : {&records.first, &records.second}) {
    for (const Record& r : file->records) {
      out << file->file_index << ',' << r.id << ',' << r.loc.x << ',' << r.loc.y
          << ',' << r.volume << ',' << file->year << '\n';
    }
  }
}

void validate_records(const RecordSet& records, const Domain* domain) {
  for (const RecordFile* file : {&records.first, &records.second}) {
    std::unordered_set<int> ids;
    for (const Record& r : file->records) {
      if (!(r.volume > 0.0)) {
        throw Error(ErrorCode::ValidationError,
                    "file " + std::to_string(file->file_index) + " record " +
                        std::to_string(r.id) + ": volume must be positive");
      }
      if (!ids.insert(r.id).second) {
        throw Error(ErrorCode::ValidationError,
                    "file " + std::to_string(file->file_index) +
                        ": duplicate record_id " + std::to_string(r.id));
      }
      if (domain != nullptr && !domain->contains(r.loc)) {
        throw Error(ErrorCode::ValidationError,
                    "file " + std::to_string(file->file_index) + " record " +
                        std::to_string(r.id) + ": location outside domain");
      }
    }
  }
  if (records.total() == 0) {
    throw Error(ErrorCode::EmptyInput, "no records in either file");
  }
}

Domain data_extent(const RecordSet& records) {
  if (records.total() == 0) {
    throw Error(ErrorCode::EmptyInput, "cannot compute extent of empty record set");
  }
  Domain d{std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity()};
  for (const RecordFile* file : {&records.first, &records.second}) {
    for (const Record& r : file->records) {
      d.xmin = std::min(d.xmin, r.loc.x);
      d.ymin = std::min(d.ymin, r.loc.y);
      d.xmax = std::max(d.xmax, r.loc.x);
      d.ymax = std::max(d.ymax, r.loc.y);
    }
  }
  return d;
}

}  // namespace treelink
