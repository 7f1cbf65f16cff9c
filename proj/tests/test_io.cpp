#include <cstdio>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "../tools/run_config.hpp"
#include "test_util.hpp"

using namespace fsc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("fsc_test_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

}  // namespace

TEST(Csv, RoundTripIsLossless) {
  const fs::path dir = scratch("roundtrip");
  Matrix v = test::random_matrix(7, 5, 1);
  v(0, 0) = 1e-300;
  v(1, 1) = -0.1;
  Mask m = test::random_mask(7, 5, 0.6, 2);
  const MaskedMatrix x(v, m);
  io::write_masked_csv((dir / "x.csv").string(), x);
  const MaskedMatrix y = io::load_masked((dir / "x.csv").string());
  EXPECT_EQ(y.mask(), x.mask());
  EXPECT_EQ(y.values(), x.values());
}

TEST(Csv, MissingMarkersAndSidecarMask) {
  const fs::path dir = scratch("markers");
  write_text(dir / "x.csv", "1,NaN,3\n4,5,\n7,8,9\n");
  auto raw = io::read_matrix_csv((dir / "x.csv").string());
  EXPECT_FALSE(raw.mask(0, 1));
  EXPECT_FALSE(raw.mask(1, 2));
  EXPECT_EQ(raw.mask.count(), 7);
  write_text(dir / "m.csv", "1,0,1\n0,1,0\n1,1,1\n");
  const MaskedMatrix x = io::load_masked((dir / "x.csv").string(), (dir / "m.csv").string());
  EXPECT_FALSE(x.mask()(1, 0));
  EXPECT_EQ(x.values()(1, 0), 0.0);
  write_text(dir / "bad_mask.csv", "1,1,1\n1,1,1\n1,1,1\n");
  EXPECT_THROW(io::load_masked((dir / "x.csv").string(), (dir / "bad_mask.csv").string()), ParseError);
  write_text(dir / "small_mask.csv", "1,1\n");
  EXPECT_THROW(io::load_masked((dir / "x.csv").string(), (dir / "small_mask.csv").string()), ShapeMismatch);
}

TEST(Csv, ParseErrorsNameTheLocation) {
  const fs::path dir = scratch("errors");
  write_text(dir / "ragged.csv", "1,2\n3\n");
  try {
    io::read_matrix_csv((dir / "ragged.csv").string());
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos);
  }
  write_text(dir / "word.csv", "1,2\n3,abc\n");
  try {
    io::read_matrix_csv((dir / "word.csv").string());
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("field 2"), std::string::npos);
  }
  EXPECT_THROW(io::read_matrix_csv((dir / "missing.csv").string()), ParseError);
  write_text(dir / "empty_col.csv", "1,\n2,\n");
  EXPECT_THROW(io::load_masked((dir / "empty_col.csv").string()), InsufficientObservations);
}

TEST(Labels, RoundTripAndValidation) {
  const fs::path dir = scratch("labels");
  const Labels l{1, 3, 2, 2};
  io::write_labels((dir / "l.txt").string(), l);
  EXPECT_EQ(io::read_labels((dir / "l.txt").string()), l);
  write_text(dir / "bad.txt", "1\n0\n");
  EXPECT_THROW(io::read_labels((dir / "bad.txt").string()), ParseError);
}

TEST(Table, RoundTrip) {
  const fs::path dir = scratch("table");
  io::Table t{{"a", "b"}, {}};
  t.add({"1", "x"});
  t.add({"2.5", "y"});
  EXPECT_THROW(t.add({"1"}), LengthMismatch);
  io::write_table((dir / "t.tsv").string(), t);
  const auto back = io::read_table((dir / "t.tsv").string());
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.rows, t.rows);
}

TEST(FormatDouble, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) EXPECT_EQ(std::stod(io::format_double(v)), v);
  EXPECT_EQ(io::format_double(0.5), "0.5");
}

TEST(RunConfig, JsonRoundTrip) {
  cli::RunConfig c;
  c.command = "path";
  c.input = "x.csv";
  c.lambda = 0.125;
  c.k = 4;
  c.grid = {0.0, 1e-3, 0.1};
  c.init = "seeded";
  c.seed = 123456789012345ULL;
  c.smooth = true;
  const auto j = cli::to_json(c);
  const auto back = cli::from_json(j);
  EXPECT_EQ(cli::to_json(back), j);
  EXPECT_EQ(*back.lambda, 0.125);
  EXPECT_EQ(back.seed, c.seed);
  // text round trip
  EXPECT_EQ(cli::to_json(cli::from_json(cli::json::parse(j.dump()))), j);
  cli::json wrapped;
  wrapped["config"] = j;
  EXPECT_EQ(cli::to_json(cli::from_json(wrapped)), j);
}

TEST(RunConfig, RejectsUnknownKeysAndBadTypes) {
  EXPECT_THROW(cli::from_json(cli::json::parse(R"({"lamda": 1})")), ParseError);
  EXPECT_THROW(cli::from_json(cli::json::parse(R"({"rank": "two"})")), ParseError);
  cli::RunConfig c;
  c.init = "zeros";
  EXPECT_THROW(c.solver(0.0), InvalidParams);
}
