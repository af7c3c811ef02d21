#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "proxyopt/relation.hpp"

using namespace proxyopt;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& contents) {
    path = "test_relation_tmp_" + std::to_string(rand()) + ".csv";
    std::ofstream out(path);
    out << contents;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

LabeledSample make_sample(const std::vector<int>& labels) {
  LabeledSample s;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Record r;
    r.id = static_cast<int>(i);
    r.features = {static_cast<double>(i)};
    s.records.push_back(r);
    s.labels.push_back(labels[i]);
  }
  return s;
}

}  // namespace

TEST_CASE("load_csv loads rows with stable ids") {
  TempFile f("f0,f1\n1.0,2.0\n3.5,-1.25\n0,0\n");
  Table t = load_csv(f.path, 2);
  REQUIRE(t.size() == 3);
  CHECK(t.records[0].id == 0);
  CHECK(t.records[1].id == 1);
  CHECK(t.records[2].id == 2);
  CHECK(t.records[1].features[0] == doctest::Approx(3.5));
  CHECK(t.schema.empty());
}

TEST_CASE("load_csv handles label columns") {
  TempFile f("f0,f1,tag\n1,2,pos\n3,4,neg\n");
  Table t = load_csv(f.path, 2);
  REQUIRE(t.schema == std::vector<std::string>{"tag"});
  CHECK(t.records[0].labels.at("tag") == "pos");
  CHECK(t.records[1].labels.at("tag") == "neg");
}

TEST_CASE("load_csv on an empty file gives an empty table") {
  TempFile f("");
  Table t = load_csv(f.path, 2);
  CHECK(t.size() == 0);
}

TEST_CASE("load_csv reports the failing line") {
  TempFile f("f0,f1\n1.0,2.0\nnope,3.0\n");
  try {
    load_csv(f.path, 2);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("load_csv rejects a bad header") {
  TempFile f("f0,x1\n1.0,2.0\n");
  CHECK_THROWS_AS(load_csv(f.path, 2), SchemaError);
}

TEST_CASE("split_622 sizes") {
  Split s = split_622(static_cast<std::size_t>(1000), 7);
  CHECK(s.train.size() == 600);
  CHECK(s.test.size() == 200);
  CHECK(s.validation.size() == 200);

  Split tiny = split_622(static_cast<std::size_t>(10), 7);
  CHECK(tiny.train.size() == 6);
  CHECK(tiny.test.size() == 2);
  CHECK(tiny.validation.size() == 2);
}

TEST_CASE("split_622 is deterministic per seed") {
  Split a = split_622(static_cast<std::size_t>(137), 42);
  Split b = split_622(static_cast<std::size_t>(137), 42);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  CHECK(a.validation == b.validation);
  Split c = split_622(static_cast<std::size_t>(137), 43);
  CHECK(a.train != c.train);
}

TEST_CASE("split_622 partitions the index range") {
  for (std::size_t n : {10, 11, 13, 100, 999, 1001}) {
    Split s = split_622(n, 5);
    std::set<int> all;
    for (int i : s.train) all.insert(i);
    for (int i : s.test) all.insert(i);
    for (int i : s.validation) all.insert(i);
    CHECK(all.size() == n);
    CHECK(*all.begin() == 0);
    CHECK(*all.rbegin() == static_cast<int>(n) - 1);
    CHECK(s.train.size() + s.test.size() + s.validation.size() == n);
    // largest-remainder keeps each part within one element of its quota
    CHECK(std::abs(static_cast<double>(s.train.size()) - 0.6 * static_cast<double>(n)) <= 1.0);
    CHECK(std::abs(static_cast<double>(s.test.size()) - 0.2 * static_cast<double>(n)) <= 1.0);
  }
}

TEST_CASE("split_622 rejects tiny samples") {
  CHECK_THROWS_AS(split_622(static_cast<std::size_t>(9), 1), DegenerateSampleError);
}

TEST_CASE("rebalance oversamples the minority") {
  std::vector<int> labels(90, 1);
  labels.insert(labels.end(), 10, -1);
  LabeledSample s = make_sample(labels);
  LabeledSample out = rebalance(s, 3);
  long long pos = 0, neg = 0;
  for (int l : out.labels) (l > 0 ? pos : neg) += 1;
  CHECK(pos == 90);
  CHECK(neg == 90);
}

TEST_CASE("rebalance keeps balanced input unchanged") {
  std::vector<int> labels(50, 1);
  labels.insert(labels.end(), 50, -1);
  LabeledSample s = make_sample(labels);
  LabeledSample out = rebalance(s, 3);
  CHECK(out.size() == 100);
}

TEST_CASE("rebalance rejects single-class input") {
  LabeledSample s = make_sample(std::vector<int>(20, 1));
  CHECK_THROWS_AS(rebalance(s, 3), DegenerateSampleError);
}

TEST_CASE("rebalance preserves the set of distinct records") {
  std::vector<int> labels(37, 1);
  labels.insert(labels.end(), 7, -1);
  LabeledSample s = make_sample(labels);
  LabeledSample out = rebalance(s, 11);
  std::set<int> before, after;
  for (const auto& r : s.records) before.insert(r.id);
  for (const auto& r : out.records) after.insert(r.id);
  CHECK(before == after);
}
