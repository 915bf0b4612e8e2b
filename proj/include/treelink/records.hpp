#pragma once

#include <string>
#include <vector>

#include "treelink/geometry.hpp"

namespace treelink {

struct Record {
  int id = 0;          // unique within its file
  Point2 loc;
  double volume = 0.0;  // canopy volume, m^3, > 0
};

// One scan's observed records. file_index is 1 or 2; the first file is the
// older one and anchors the latent space.
struct RecordFile {
  int file_index = 1;
  int year = 0;
  std::vector<Record> records;
};

struct RecordSet {
  RecordFile first;   // file_index 1
  RecordFile second;  // file_index 2

  int n1() const { return static_cast<int>(first.records.size()); }
  int n2() const { return static_cast<int>(second.records.size()); }
  int total() const { return n1() + n2(); }
  int years_span() const { return second.year - first.year; }
  const RecordFile& file(int file_index) const {
    return file_index == 1 ? first : second;
  }
};

// CSV schema: header `file_index,record_id,x,y,volume,year`, exactly two
// distinct file_index values. Rows with nonpositive volume or non-finite
// coordinates are rejected with their row number.
RecordSet ingest_records(const std::string& path);

void write_records_csv(const std::string& path, const RecordSet& records);

// Invariant checks beyond what ingestion can see (volumes positive, ids
// unique, both files nonempty; locations inside `domain` when given).
void validate_records(const RecordSet& records, const Domain* domain = nullptr);

// Tight bounding box of all observed locations.
Domain data_extent(const RecordSet& records);

}  // namespace treelink
