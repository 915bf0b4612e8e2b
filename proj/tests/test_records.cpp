#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "treelink/errors.hpp"
#include "treelink/records.hpp"
#include "treelink/rng.hpp"

using namespace treelink;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "treelink_tests";
  fs::create_directories(dir);
  return (dir / name).string();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("well-formed fixture ingests into two files") {
  const std::string path = temp_path("records_ok.csv");
  write_file(path,
             "file_index,record_id,x,y,volume,year\n"
             "1,0,1.5,2.5,10.0,2015\n"
             "1,1,3.0,4.0,12.0,2015\n"
             "2,0,1.6,2.4,11.0,2019\n"
             "2,1,3.1,4.2,13.5,2019\n");
  const RecordSet records = ingest_records(path);
  CHECK(records.n1() == 2);
  CHECK(records.n2() == 2);
  CHECK(records.first.year == 2015);
  CHECK(records.second.year == 2019);
  CHECK(records.years_span() == 4);
  CHECK(records.second.records[1].volume == 13.5);
}

TEST_CASE("nonpositive volume is rejected with its row number") {
  const std::string path = temp_path("records_badvol.csv");
  write_file(path,
             "file_index,record_id,x,y,volume,year\n"
             "1,0,1.5,2.5,10.0,2015\n"
             "1,1,3.0,4.0,-1.0,2015\n"
             "2,0,1.6,2.4,11.0,2019\n");
  try {
    ingest_records(path);
    FAIL("expected ValidationError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ValidationError);
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
}

TEST_CASE("missing column is a SchemaError") {
  const std::string path = temp_path("records_schema.csv");
  write_file(path, "file_index,record_id,x,y,volume\n1,0,1,2,3\n");
  CHECK_THROWS_AS(ingest_records(path), Error);
  try {
    ingest_records(path);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaError);
  }
}

TEST_CASE("malformed row is a ParseError") {
  const std::string path = temp_path("records_parse.csv");
  write_file(path,
             "file_index,record_id,x,y,volume,year\n"
             "1,0,oops,2.5,10.0,2015\n"
             "2,0,1.6,2.4,11.0,2019\n");
  try {
    ingest_records(path);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
  }
}

TEST_CASE("write then read round-trips random record sets") {
  Rng rng(53);
  for (int trial = 0; trial < 5; ++trial) {
    RecordSet records;
    records.first = {1, 2015, {}};
    records.second = {2, 2019, {}};
    const int n1 = 1 + static_cast<int>(rng.uniform_index(30));
    const int n2 = 1 + static_cast<int>(rng.uniform_index(30));
    for (int i = 0; i < n1; ++i) {
      records.first.records.push_back(
          {i, {rng.uniform(0, 100), rng.uniform(0, 100)}, rng.uniform(0.1, 50)});
    }
    for (int j = 0; j < n2; ++j) {
      records.second.records.push_back(
          {j, {rng.uniform(0, 100), rng.uniform(0, 100)}, rng.uniform(0.1, 50)});
    }
    const std::string path = temp_path("records_roundtrip.csv");
    write_records_csv(path, records);
    const RecordSet back = ingest_records(path);
    REQUIRE(back.n1() == n1);
    REQUIRE(back.n2() == n2);
    for (int i = 0; i < n1; ++i) {
      CHECK(back.first.records[i].id == records.first.records[i].id);
      CHECK(back.first.records[i].loc == records.first.records[i].loc);
      CHECK(back.first.records[i].volume == records.first.records[i].volume);
    }
  }
}

TEST_CASE("duplicate ids within a file are rejected") {
  RecordSet records;
  records.first = {1, 2015, {{0, {1, 1}, 5.0}, {0, {2, 2}, 6.0}}};
  records.second = {2, 2019, {{0, {1, 1}, 5.0}}};
  CHECK_THROWS_AS(validate_records(records), Error);
}
