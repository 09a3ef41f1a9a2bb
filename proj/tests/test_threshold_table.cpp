#include <filesystem>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "fetcpm/bundled_tables.hpp"
#include "fetcpm/threshold_table.hpp"

using namespace fetcpm;

namespace {

ThresholdMetadata sample_meta() {
  ThresholdMetadata m;
  m.alpha = 0.002;
  m.lambda = 0.1;
  m.n_streams = 1000;
  m.length = 40;
  m.seed = 42;
  m.generator = "test";
  m.t_min = 20;
  return m;
}

std::string table_text(const std::string& rows, const std::string& meta_tail = "") {
  return "# alpha=0.002\n# lambda=0.1\n# n_streams=10\n# length=30\n# seed=3\n"
         "# generator=g\n# t_min=20\n" +
         meta_tail + "t,h\n" + rows;
}

std::string parse_error(const std::string& text) {
  std::istringstream in(text);
  try {
    read_threshold_table(in);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("threshold lookup is a step function held beyond the horizon") {
  const ThresholdTable table(sample_meta(), {{20, 0.9}, {30, 0.95}, {40, 0.97}});
  CHECK_FALSE(table.threshold_at(19).has_value());
  CHECK(*table.threshold_at(20) == 0.9);
  CHECK(*table.threshold_at(29) == 0.9);
  CHECK(*table.threshold_at(30) == 0.95);
  CHECK(*table.threshold_at(39) == 0.95);
  CHECK(*table.threshold_at(40) == 0.97);
  CHECK(*table.threshold_at(100000) == 0.97);
  CHECK(table.horizon() == 40);
  CHECK(table.arl0() == doctest::Approx(500));
}

TEST_CASE("table construction validates entries and metadata") {
  CHECK_THROWS_AS(ThresholdTable(sample_meta(), {}), std::invalid_argument);
  CHECK_THROWS_AS(ThresholdTable(sample_meta(), {{20, 1.2}}), std::invalid_argument);
  CHECK_THROWS_AS(ThresholdTable(sample_meta(), {{20, -0.1}}), std::invalid_argument);
  CHECK_THROWS_AS(ThresholdTable(sample_meta(), {{20, 0.5}, {20, 0.6}}), std::invalid_argument);
  auto bad = sample_meta();
  bad.alpha = 0.0;
  CHECK_THROWS_AS(ThresholdTable(bad, {{20, 0.5}}), std::invalid_argument);
  bad = sample_meta();
  bad.lambda = 1.5;
  CHECK_THROWS_AS(ThresholdTable(bad, {{20, 0.5}}), std::invalid_argument);
}

TEST_CASE("write then read reproduces the table exactly") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ThresholdEntry> entries;
  for (std::uint64_t t = 20; t <= 400; ++t) entries.push_back({t, u(rng)});
  auto meta = sample_meta();
  meta.alpha = 1.0 / 370.0;
  meta.lambda = 0.3;
  meta.extra["source"] = "unit";
  const ThresholdTable table(meta, entries);

  std::stringstream buffer;
  write_threshold_table(buffer, table);
  const auto back = read_threshold_table(buffer);
  CHECK(back == table);

  meta.seed.reset();
  const ThresholdTable unseeded(meta, entries);
  std::stringstream again;
  write_threshold_table(again, unseeded);
  CHECK(again.str().find("# seed=none\n") != std::string::npos);
  CHECK(read_threshold_table(again) == unseeded);
}

TEST_CASE("malformed files name the offending line") {
  CHECK(parse_error(table_text("20,0.9\n21,abc\n")).find("line 10") != std::string::npos);
  CHECK(parse_error(table_text("20,0.9\n20,0.91\n")).find("line 10") != std::string::npos);
  CHECK(parse_error(table_text("20,1.5\n")).find("line 9") != std::string::npos);
  CHECK(parse_error(table_text("20\n")).find("line 9") != std::string::npos);
  CHECK(parse_error("# alpha=0.002\nt,h\n20,0.9\n").find("missing metadata") != std::string::npos);
  CHECK(parse_error(table_text("")).find("no threshold rows") != std::string::npos);
  CHECK(parse_error("# alpha=0.1\n20,0.9\n").find("line 2") != std::string::npos);
  CHECK(parse_error(table_text("20,0.9\n", "# seed=4\n")).find("duplicate") != std::string::npos);
  CHECK_THROWS_AS(read_threshold_table(std::filesystem::path("/nonexistent/table.csv")),
                  std::runtime_error);
}

TEST_CASE("format_double round-trips") {
  for (const double v : {0.1, 1.0 / 3.0, 0.9284, 1e-300, 0.0}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.9284) == "0.9284");
}

TEST_CASE("bundled tables cover four ARL0 targets at two smoothing weights") {
  const auto t500 = bundled_threshold_table(500, 0.1);
  CHECK(*t500->threshold_at(20) == 0.9284);
  CHECK(*t500->threshold_at(2000) == 0.9767);
  CHECK(*t500->threshold_at(35) == 0.9057);  // held from t=30
  CHECK(t500->alpha() == 1.0 / 500.0);
  CHECK(t500->metadata().extra.at("source") == "paper_table_A1");
  CHECK_FALSE(t500->metadata().seed.has_value());
  CHECK(*bundled_threshold_table(370, 0.3)->threshold_at(20) == 0.97);
  CHECK(*bundled_threshold_table(5000, 0.3)->threshold_at(2000) == 0.9994);
  CHECK(bundled_threshold_table(1000, 0.1)->entries().size() == 28);
  CHECK_THROWS_AS(bundled_threshold_table(600, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(bundled_threshold_table(500, 0.2), std::invalid_argument);
  CHECK(bundled_table_filename(500, 0.1) == "arl500_lambda0.1.csv");
}

TEST_CASE("shipped data files match the embedded tables") {
  const std::filesystem::path dir = std::filesystem::path(FETCPM_DATA_DIR) / "thresholds";
  for (const double lambda : bundled_lambda_values()) {
    for (const auto arl0 : bundled_arl0_values()) {
      const auto path = dir / bundled_table_filename(arl0, lambda);
      INFO(path.string());
      CHECK(read_threshold_table(path) == *bundled_threshold_table(arl0, lambda));
    }
  }
}
