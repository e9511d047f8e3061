#include <sstream>

#include <gtest/gtest.h>

#include "models.hpp"
#include "oakes_hmm/bootstrap.hpp"
#include "oakes_hmm/io.hpp"

using namespace oakes_hmm;

namespace {

Dataset parse(const std::string& text, const IngestOptions& o = {}) {
  std::istringstream in(text);
  return parse_csv(in, o);
}

void expect_ingest_error(const std::string& text, long row, long col) {
  try {
    (void)parse(text);
    FAIL() << "expected IngestError for: " << text;
  } catch (const IngestError& e) {
    EXPECT_EQ(e.row(), row) << e.what();
    EXPECT_EQ(e.column(), col) << e.what();
  }
}

}  // namespace

TEST(Ingest, CollapsesDuplicateRows) {
  const Dataset d = parse("0,1,2\n0,1,2\n0,1,2\n");
  ASSERT_EQ(d.num_configs(), 1u);
  EXPECT_EQ(d.counts()[0], 3);
  EXPECT_EQ(d.configs()[0], (Sequence{0, 1, 2}));
  EXPECT_EQ(d.categories(), 3);
  EXPECT_EQ(d.length(), 3);
}

TEST(Ingest, LexicographicOrderAndWhitespace) {
  const Dataset d = parse("1, 0\n 0,1\r\n0,0\n1,0\n\n");
  ASSERT_EQ(d.num_configs(), 3u);
  EXPECT_EQ(d.configs()[0], (Sequence{0, 0}));
  EXPECT_EQ(d.configs()[2], (Sequence{1, 0}));
  EXPECT_EQ(d.counts()[2], 2);
}

TEST(Ingest, BinaryMinimumCategories) {
  EXPECT_EQ(parse("0,0\n").categories(), 2);
  IngestOptions o;
  o.categories = 5;
  EXPECT_EQ(parse("0,1\n", o).categories(), 5);
  o.categories = 2;
  EXPECT_THROW(parse("0,3\n", o), IngestError);
}

TEST(Ingest, OneBasedCodes) {
  IngestOptions o;
  o.one_based = true;
  const Dataset d = parse("1,2,3\n", o);
  EXPECT_EQ(d.configs()[0], (Sequence{0, 1, 2}));
  EXPECT_THROW(parse("0,1\n", o), IngestError);
}

TEST(Ingest, ErrorsCarryLocation) {
  expect_ingest_error("0,1\n0,\n", 2, 2);
  expect_ingest_error("0,1\n0,x\n", 2, 2);
  expect_ingest_error("0,1\n1.5,0\n", 2, 1);
  expect_ingest_error("0,1\n0,1,1\n", 2, 3);
  expect_ingest_error("0,1\n\n0,1\n", 2, 1);
  expect_ingest_error("-1,0\n", 1, 1);
  EXPECT_THROW(parse(""), IngestError);
  EXPECT_THROW(parse("\n\n"), IngestError);
  EXPECT_THROW(ingest("/nonexistent/file.csv"), IngestError);
}

TEST(Ingest, RoundTripThroughCsv) {
  const Dataset d = simulate(oakes_hmm::testing::reference_k2(), 80, 5, 2);
  std::ostringstream out;
  write_csv(d, out);
  EXPECT_EQ(parse(out.str()), d);
}

TEST(Params, JsonRoundTrip) {
  const auto p = oakes_hmm::testing::reference_k2();
  const auto back = params_from_json(params_to_json(p));
  EXPECT_EQ(back.pack(), p.pack());
  EXPECT_THROW(params_from_json(nlohmann::json::parse(R"({"lambda":[1.0]})")), InputError);
  EXPECT_THROW(params_from_json(nlohmann::json::parse(
                   R"({"lambda":[0.5,0.6],"Pi":[[1,0],[0,1]],"Phi":[[1,0],[0,1]]})")),
               InputError);
}

TEST(Params, ShippedReferenceFile) {
  const auto p = read_params(std::string(OAKES_DATA_DIR) + "/params_k2.json");
  EXPECT_EQ(p.pack(), oakes_hmm::testing::reference_k2().pack());
}
