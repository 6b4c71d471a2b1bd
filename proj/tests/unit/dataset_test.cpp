#include <gtest/gtest.h>

#include <fstream>

#include "fixtures.hpp"
#include "mfp/dataset.hpp"
#include "mfp/error.hpp"

using namespace mfp;
using mfp::testing::TempDir;

TEST(Dataset, CsvRoundTripIsExact) {
  TempDir dir("csv");
  LabeledDataset d{2, 3, {{0.1, -2.5}, {1.0 / 3.0, 1e-300}, {-0.0, 123456.789}}, {0, 2, 1},
                   {Split::Train, Split::Test, Split::Train}};
  write_csv(d, dir.path() / "d.csv");
  const auto back = read_csv(dir.path() / "d.csv", 3);
  EXPECT_EQ(back, d);
  EXPECT_EQ(mfp::testing::read_file(dir.path() / "d.csv").substr(0, 20), "x_1,x_2,label,split\n");
}

TEST(Dataset, CsvInfersClassCount) {
  TempDir dir("csv-infer");
  LabeledDataset d{1, 5, {{0.0}, {1.0}}, {4, 1}, {Split::Test, Split::Test}};
  write_csv(d, dir.path() / "d.csv");
  EXPECT_EQ(read_csv(dir.path() / "d.csv").num_classes, 5);
}

TEST(Dataset, CsvErrorsNameTheLine) {
  TempDir dir("csv-bad");
  {
    std::ofstream out(dir.path() / "bad.csv");
    out << "x_1,label,split\n0.5,1,train\nabc,0,test\n";
  }
  try {
    read_csv(dir.path() / "bad.csv");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("bad.csv:3"), std::string::npos) << e.what();
  }
}

TEST(Dataset, ValidateRejectsInconsistentData) {
  LabeledDataset d{2, 2, {{0.0, 1.0}}, {2}, {Split::Test}};
  EXPECT_THROW(d.validate(), Error);
  d.labels = {1};
  EXPECT_NO_THROW(d.validate());
  d.points.push_back({1.0});
  d.labels.push_back(0);
  d.splits.push_back(Split::Test);
  EXPECT_THROW(d.validate(), Error);
}

TEST(Dataset, FilterSubsetConcatenate) {
  LabeledDataset d{1, 2, {{0.0}, {1.0}, {2.0}}, {0, 1, 0}, {Split::Train, Split::Test, Split::Train}};
  EXPECT_EQ(d.filter(Split::Train).size(), 2u);
  EXPECT_EQ(d.filter(Split::Test).labels, std::vector<int>{1});
  const std::vector<std::size_t> idx = {2, 0};
  EXPECT_EQ(d.subset(idx).points, (std::vector<Vector>{{2.0}, {0.0}}));
  EXPECT_EQ(concatenate(d, d).size(), 6u);
}
