// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "qsurv/checkpoint.hpp"
#include "qsurv/data.hpp"

using namespace qsurv;

namespace {

std::string error_text(const std::string& csv) {
  std::istringstream in(csv);
  try {
    read_csv(in);
  } catch (const IngestionError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Csv, ParsesHeaderOrderAndOutcomeColumns) {
  std::istringstream in("age,time,bmi,event\n61,2.5,22.1,1\n47,0.75,30,0\n");
  const Dataset d = read_csv(in);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.covariate_names(), (std::vector<std::string>{"age", "bmi"}));
  EXPECT_EQ(d.x(0)[1], 22.1);
  EXPECT_EQ(d.time(1), 0.75);
  EXPECT_EQ(d.event(0), 1);
  EXPECT_DOUBLE_EQ(d.censoring_rate(), 0.5);
}

TEST(Csv, RoundTripIsExact) {
  Dataset d({"x1", "x2"});
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const double x[2] = {rng.normal(), rng.uniform() * 1e-9};
    d.add(x, rng.exponential(0.3), rng.bernoulli(0.6) ? 1 : 0);
  }
  std::stringstream buf;
  write_csv(buf, d);
  const Dataset r = read_csv(buf);
  ASSERT_EQ(r.size(), d.size());
  EXPECT_EQ(r.covariate_names(), d.covariate_names());
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(r.time(i), d.time(i));
    EXPECT_EQ(r.event(i), d.event(i));
    EXPECT_EQ(r.x(i)[0], d.x(i)[0]);
    EXPECT_EQ(r.x(i)[1], d.x(i)[1]);
  }
}

TEST(Csv, ErrorsNameTheColumn) {
  EXPECT_NE(error_text("x,event\n1,1\n").find("'time'"), std::string::npos);
  EXPECT_NE(error_text("x,time\n1,1\n").find("'event'"), std::string::npos);
  EXPECT_NE(error_text("x,time,event\n1,-2,1\n").find("'time'"), std::string::npos);
  EXPECT_NE(error_text("x,time,event\n1,2,3\n").find("'event'"), std::string::npos);
  EXPECT_NE(error_text("age,time,event\nabc,2,1\n").find("'age'"), std::string::npos);
  EXPECT_NE(error_text("age,time,event\n,2,1\n").find("'age'"), std::string::npos);
  EXPECT_NE(error_text("age,time,event\n1,2\n").find("fields"), std::string::npos);
  EXPECT_NE(error_text("").find("empty"), std::string::npos);
  EXPECT_NE(error_text("age,time,event\nnan,2,1\n").find("'age'"), std::string::npos);
}

TEST(Csv, CovariateOnlyFiles) {
  std::istringstream in("a,b\n1,2\n\n3,4\n");
  const Dataset d = read_csv(in, false);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.x(1)[0], 3.0);
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(2.0), "2");
  for (double v : {1.0 / 3.0, 1e-300, 6.02214076e23, -0.0, std::numeric_limits<double>::denorm_min()})
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
}

TEST(DatasetTest, RejectsBadRecords) {
  Dataset d({"a"});
  const double x[1] = {1.0};
  const double xx[2] = {1.0, 2.0};
  EXPECT_THROW(d.add(xx, 1.0, 1), ShapeError);
  EXPECT_THROW(d.add(x, -1.0, 1), IngestionError);
  EXPECT_THROW(d.add(x, 1.0, 2), IngestionError);
  EXPECT_THROW(d.add(x, std::numeric_limits<double>::infinity(), 1), IngestionError);
}

TEST(Standardization, MeanAndPopulationScale) {
  Dataset d({"a", "b"});
  const double rows[3][2] = {{1, 5}, {2, 5}, {3, 5}};
  for (auto& r : rows) d.add(r, 1.0, 1);
  const auto s = fit_standardization(d);
  EXPECT_DOUBLE_EQ(s.mean[0], 2.0);
  EXPECT_DOUBLE_EQ(s.scale[0], std::sqrt(2.0 / 3.0));
  EXPECT_EQ(s.scale[1], 1.0);  // constant column
}

TEST(StratifiedSplit, PreservesEventProportion) {
  Dataset d({"a"});
  const double x[1] = {0.0};
  for (int i = 0; i < 100; ++i) d.add(x, 1.0, i < 30 ? 1 : 0);
  Rng rng(1);
  const Split s = stratified_split(d, 0.2, rng);
  EXPECT_EQ(s.validation.size(), 20u);
  EXPECT_EQ(s.train.size(), 80u);
  std::size_t val_events = 0;
  for (auto i : s.validation) val_events += static_cast<std::size_t>(d.event(i));
  EXPECT_EQ(val_events, 6u);
  std::vector<std::size_t> all = s.train;
  all.insert(all.end(), s.validation.begin(), s.validation.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
  EXPECT_THROW(stratified_split(d, 1.0, rng), ConfigError);
}

TEST(Quantile, Type7) {
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4, 5}, 0.99), 4.96);
  EXPECT_EQ(quantile({7}, 0.3), 7.0);
  EXPECT_THROW(quantile({}, 0.5), ContractError);
}

TEST(Linspace, Endpoints) {
  const auto v = linspace(0.5, 2.5, 5);
  EXPECT_EQ(v, (std::vector<double>{0.5, 1.0, 1.5, 2.0, 2.5}));
}

TEST(Base64, KnownVectors) {
  auto bytes = [](std::string_view s) { return std::vector<std::uint8_t>(s.begin(), s.end()); };
  EXPECT_EQ(base64::encode(bytes("")), "");
  EXPECT_EQ(base64::encode(bytes("f")), "Zg==");
  EXPECT_EQ(base64::encode(bytes("fo")), "Zm8=");
  EXPECT_EQ(base64::encode(bytes("foo")), "Zm9v");
  EXPECT_EQ(base64::encode(bytes("foobar")), "Zm9vYmFy");
  EXPECT_EQ(base64::decode("Zm9vYmE="), bytes("fooba"));
  EXPECT_THROW(base64::decode("Zm9"), IngestionError);
  EXPECT_THROW(base64::decode("Zm9!"), IngestionError);
}

TEST(Checkpoint, BitExactRoundTrip) {
  std::vector<NamedParameter> params = {
      {"w", ad::Tensor::from({2, 2}, {0.1, -1e-300, std::numeric_limits<double>::max(), -0.0})},
      {"b", ad::Tensor::from({3}, {1.0 / 3.0, 2.0, 1e22})}};
  const auto doc = checkpoint_to_json(params);
  std::vector<NamedParameter> target = {{"b", ad::Tensor::zeros({3})}, {"w", ad::Tensor::zeros({2, 2})}};
  load_checkpoint(nlohmann::json::parse(doc.dump()), target);
  for (std::size_t i = 0; i < 4; ++i)
    EXPECT_EQ(std::bit_cast<std::uint64_t>(target[1].tensor.value(i)),
              std::bit_cast<std::uint64_t>(params[0].tensor.value(i)));
  EXPECT_EQ(target[0].tensor.value(0), 1.0 / 3.0);
}

TEST(Checkpoint, MismatchesAreReported) {
  std::vector<NamedParameter> params = {{"w", ad::Tensor::from({2}, {1, 2})}};
  const auto doc = checkpoint_to_json(params);
  std::vector<NamedParameter> wrong_shape = {{"w", ad::Tensor::zeros({3})}};
  EXPECT_THROW(load_checkpoint(doc, wrong_shape), ShapeError);
  std::vector<NamedParameter> missing = {{"v", ad::Tensor::zeros({2})}};
  EXPECT_THROW(load_checkpoint(doc, missing), IngestionError);
}
