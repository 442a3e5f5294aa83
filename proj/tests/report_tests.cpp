#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ges/config.hpp"
#include "ges/errors.hpp"
#include "ges/reports.hpp"

using ges::ConfigMap;
using ges::CsvWriter;
using ges::IoError;
using ges::RunRecord;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<RunRecord> sample_records() {
  std::vector<RunRecord> records(2);
  records[0].step = 1;
  records[0].loss = 2.25;
  records[0].update_norm = 0.5;
  records[1].step = 2;
  records[1].loss = 1.0 / 3.0;
  records[1].cos_es = 0.125;
  records[1].cos_ours = 0.25;
  records[1].ratio = 2.0;
  records[1].consec_cos = -0.75;
  records[1].update_norm = 0.0625;
  return records;
}

}  // namespace

TEST_SUITE("reports") {

TEST_CASE("format_float round-trips doubles exactly") {
  for (double v : {1.0 / 3.0, 2.2841761478447262, -0.0001, 1e300, 0.0}) {
    CHECK(std::stod(ges::format_float(v)) == v);
  }
  CHECK(ges::format_float(0.0) == "0");
  CHECK(ges::format_float(2.25) == "2.25");
}

TEST_CASE("csv rows leave absent optionals empty") {
  const auto path = temp_path("ges_report_basic.csv");
  ges::write_run_csv(sample_records(), path.string());
  const std::string text = slurp(path);
  std::istringstream lines(text);
  std::string header, row1, row2;
  std::getline(lines, header);
  std::getline(lines, row1);
  std::getline(lines, row2);
  CHECK(header == ges::kRunCsvHeader);
  CHECK(row1 == "1,2.25,,,,,0.5,0");
  CHECK(row2 == "2,0.33333333333333331,0.125,0.25,2,-0.75,0.0625,0");
  CHECK(text.find('\r') == std::string::npos);  // LF endings only
  std::filesystem::remove(path);
}

TEST_CASE("csv parse inverts csv write") {
  const auto path = temp_path("ges_report_roundtrip.csv");
  const auto records = sample_records();
  ges::write_run_csv(records, path.string());
  const auto back = ges::parse_run_csv(path.string());
  REQUIRE(back.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(back[i].step == records[i].step);
    CHECK(back[i].loss == records[i].loss);
    CHECK(back[i].cos_es == records[i].cos_es);
    CHECK(back[i].cos_ours == records[i].cos_ours);
    CHECK(back[i].ratio == records[i].ratio);
    CHECK(back[i].consec_cos == records[i].consec_cos);
    CHECK(back[i].update_norm == records[i].update_norm);
  }
  std::filesystem::remove(path);
}

TEST_CASE("streaming writer leaves a valid file after every row") {
  const auto path = temp_path("ges_report_stream.csv");
  {
    CsvWriter writer(path.string());
    CHECK(writer.rows() == 0);
    // Header alone is already parseable (an aborted run's artifact).
    CHECK(ges::parse_run_csv(path.string()).empty());
    RunRecord r;
    r.step = 1;
    r.loss = 0.5;
    writer.append(r);
    CHECK(writer.rows() == 1);
    CHECK(ges::parse_run_csv(path.string()).size() == 1);
  }
  std::filesystem::remove(path);
}

TEST_CASE("csv parser rejects foreign files") {
  const auto path = temp_path("ges_report_bad.csv");
  {
    std::ofstream out(path);
    out << "step,loss\n1,0.5\n";
  }
  CHECK_THROWS_AS(ges::parse_run_csv(path.string()), IoError);
  {
    std::ofstream out(path);
    out << ges::kRunCsvHeader << "\n1,0.5,,,\n";  // too few fields
  }
  CHECK_THROWS_AS(ges::parse_run_csv(path.string()), IoError);
  CHECK_THROWS_AS(ges::parse_run_csv("/nonexistent/run.csv"), IoError);
  std::filesystem::remove(path);
}

TEST_CASE("identical records produce byte-identical csv files") {
  const auto a = temp_path("ges_report_a.csv");
  const auto b = temp_path("ges_report_b.csv");
  ges::write_run_csv(sample_records(), a.string());
  ges::write_run_csv(sample_records(), b.string());
  CHECK(slurp(a) == slurp(b));
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}

TEST_CASE("summary json echoes the config and the seed lineage") {
  const auto path = temp_path("ges_report_summary.json");
  ConfigMap map = ConfigMap::from_string("[estimator]\nsigma = 0.05\n");
  nlohmann::json metrics;
  metrics["final_loss"] = 0.25;
  metrics["total_updates"] = 40;
  ges::write_summary_json(path.string(), map, 7, metrics);

  const nlohmann::json doc = nlohmann::json::parse(slurp(path));
  CHECK(doc.at("seed").get<std::uint64_t>() == 7);
  CHECK(doc.at("config").at("estimator.sigma").get<std::string>() == "0.05");
  CHECK(doc.at("metrics").at("final_loss").get<double>() == 0.25);
  const std::string lineage = doc.at("seed_lineage").get<std::string>();
  CHECK(lineage.find("derive_seed") != std::string::npos);
  std::filesystem::remove(path);
}

TEST_CASE("loss chart is a standalone svg") {
  const auto path = temp_path("ges_report_loss.svg");
  ges::write_loss_svg(sample_records(), path.string());
  const std::string svg = slurp(path);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("polyline") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);

  // Degenerate inputs still produce a well-formed file.
  ges::write_loss_svg({}, path.string());
  CHECK(slurp(path).rfind("<svg", 0) == 0);
  std::filesystem::remove(path);
}

}  // TEST_SUITE
