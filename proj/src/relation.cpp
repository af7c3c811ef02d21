#include "proxyopt/relation.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "proxyopt/rng.hpp"

namespace proxyopt {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_number(const std::string& s, int line_no) {
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  if (end == begin || (end && *end != '\0')) {
    throw ParseError("line " + std::to_string(line_no) + ": not a number: '" + s + "'");
  }
  return v;
}

}  // namespace

Table load_csv(const std::string& path, int dim) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);

  Table table;
  table.dim = dim;

  std::string line;
  if (!std::getline(in, line)) return table;  // empty file -> empty table
  if (!line.empty() && line.back() == '\r') line.pop_back();

  auto header = split_fields(line);
  if (static_cast<int>(header.size()) < dim) {
    throw SchemaError("header has " + std::to_string(header.size()) +
                      " columns, expected at least dim=" + std::to_string(dim));
  }
  for (int i = 0; i < dim; ++i) {
    std::string expected = "f" + std::to_string(i);
    if (header[i] != expected) {
      throw SchemaError("header column " + std::to_string(i) + " is '" + header[i] +
                        "', expected '" + expected + "'");
    }
  }
  for (std::size_t i = dim; i < header.size(); ++i) table.schema.push_back(header[i]);

  int line_no = 1;
  int id = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    Record rec;
    rec.id = id++;
    rec.features.reserve(dim);
    for (int i = 0; i < dim; ++i) rec.features.push_back(parse_number(fields[i], line_no));
    for (std::size_t i = dim; i < fields.size(); ++i) rec.labels[table.schema[i - dim]] = fields[i];
    table.records.push_back(std::move(rec));
  }
  return table;
}

void save_csv(const Table& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open file for writing: " + path);
  out.precision(17);
  for (int i = 0; i < table.dim; ++i) {
    if (i) out << ',';
    out << 'f' << i;
  }
  for (const auto& col : table.schema) out << ',' << col;
  out << '\n';
  for (const auto& rec : table.records) {
    for (int i = 0; i < table.dim; ++i) {
      if (i) out << ',';
      out << rec.features[i];
    }
    for (const auto& col : table.schema) {
      auto it = rec.labels.find(col);
      out << ',' << (it == rec.labels.end() ? "" : it->second);
    }
    out << '\n';
  }
}

Split split_622(std::size_t n, std::uint64_t seed) {
  if (n < 10) throw DegenerateSampleError("sample too small for 6:2:2 split: " + std::to_string(n));

  // Largest-remainder apportionment of n over ratios 6:2:2.
  double quota[3] = {0.6 * n, 0.2 * n, 0.2 * n};
  std::size_t sizes[3];
  double rem[3];
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    sizes[i] = static_cast<std::size_t>(quota[i]);
    rem[i] = quota[i] - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  int order[3] = {0, 1, 2};
  std::stable_sort(order, order + 3, [&](int a, int b) { return rem[a] > rem[b]; });
  for (int i = 0; assigned < n; ++i, ++assigned) sizes[order[i % 3]] += 1;

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(idx);

  Split split;
  split.train.assign(idx.begin(), idx.begin() + sizes[0]);
  split.test.assign(idx.begin() + sizes[0], idx.begin() + sizes[0] + sizes[1]);
  split.validation.assign(idx.begin() + sizes[0] + sizes[1], idx.end());
  return split;
}

Split split_622(const LabeledSample& sample, std::uint64_t seed) {
  return split_622(sample.size(), seed);
}

LabeledSample rebalance(const LabeledSample& train_part, std::uint64_t seed) {
  std::vector<int> pos, neg;
  for (std::size_t i = 0; i < train_part.size(); ++i) {
    (train_part.labels[i] > 0 ? pos : neg).push_back(static_cast<int>(i));
  }
  if (pos.empty() || neg.empty()) throw DegenerateSampleError("degenerate sample");

  auto& minority = pos.size() < neg.size() ? pos : neg;
  std::size_t majority_n = std::max(pos.size(), neg.size());

  std::vector<int> idx;
  idx.reserve(2 * majority_n);
  for (std::size_t i = 0; i < train_part.size(); ++i) idx.push_back(static_cast<int>(i));
  Rng rng(seed);
  for (std::size_t i = minority.size(); i < majority_n; ++i) {
    idx.push_back(minority[rng.next_below(minority.size())]);
  }
  return subsample(train_part, idx);
}

LabeledSample subsample(const LabeledSample& sample, const std::vector<int>& idx) {
  LabeledSample out;
  out.target_pred = sample.target_pred;
  out.records.reserve(idx.size());
  out.labels.reserve(idx.size());
  for (int i : idx) {
    out.records.push_back(sample.records[i]);
    out.labels.push_back(sample.labels[i]);
  }
  return out;
}

}  // namespace proxyopt
