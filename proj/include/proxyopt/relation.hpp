#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace proxyopt {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateSampleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One row flowing through a plan. Label columns are filled lazily as UDFs run
// (or eagerly by the synthetic generator).
struct Record {
  int id = 0;
  std::vector<double> features;
  std::map<std::string, std::string> labels;
};

struct Table {
  std::vector<Record> records;
  int dim = 0;
  std::vector<std::string> schema;  // declared label columns, in header order

  std::size_t size() const { return records.size(); }
};

// Records plus {+1,-1} labels for one target predicate.
struct LabeledSample {
  std::vector<Record> records;
  std::vector<int> labels;  // +1 / -1
  int target_pred = -1;

  std::size_t size() const { return records.size(); }
};

// Rows of a source table that pass every predicate in `prefix`, source order.
struct MaterializedSample {
  std::vector<int> prefix;       // predicate ids
  std::vector<int> row_indices;  // indices into the owning store's rows
};

struct Split {
  std::vector<int> train;
  std::vector<int> test;
  std::vector<int> validation;
};

// CSV format: header `f0,...,f{dim-1}[,label columns]`, `.` decimal separator.
Table load_csv(const std::string& path, int dim);
void save_csv(const Table& table, const std::string& path);

// Deterministic 6:2:2 split with largest-remainder rounding. Requires n >= 10.
Split split_622(std::size_t n, std::uint64_t seed);
Split split_622(const LabeledSample& sample, std::uint64_t seed);

// Equalize class counts by oversampling the minority with replacement.
// All original records are kept; only multiplicities change.
LabeledSample rebalance(const LabeledSample& train_part, std::uint64_t seed);

LabeledSample subsample(const LabeledSample& sample, const std::vector<int>& idx);

}  // namespace proxyopt
