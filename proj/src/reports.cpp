#include "ges/reports.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "ges/errors.hpp"

namespace ges {

namespace {

std::string optional_field(const std::optional<double>& value) {
  return value ? format_float(*value) : std::string();
}

std::optional<double> parse_optional(const std::string& field) {
  if (field.empty()) return std::nullopt;
  return std::stod(field);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(current);
  return fields;
}

std::string format_row(const RunRecord& r) {
  std::ostringstream row;
  row << r.step << ',' << format_float(r.loss) << ','
      << optional_field(r.cos_es) << ',' << optional_field(r.cos_ours) << ','
      << optional_field(r.ratio) << ',' << optional_field(r.consec_cos) << ','
      << format_float(r.update_norm) << ',' << format_float(r.wall_ms)
      << '\n';
  return row.str();
}

}  // namespace

std::string format_float(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

CsvWriter::CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
  if (!out_) throw IoError("cannot open " + path + " for writing");
  out_ << kRunCsvHeader << '\n';
  out_.flush();
}

void CsvWriter::append(const RunRecord& record) {
  out_ << format_row(record);
  out_.flush();
  if (!out_) throw IoError("short write to run csv");
  ++rows_;
}

void write_run_csv(const std::vector<RunRecord>& records,
                   const std::string& path) {
  CsvWriter writer(path);
  for (const RunRecord& r : records) writer.append(r);
}

std::vector<RunRecord> parse_run_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRunCsvHeader) {
    throw IoError(path + " has an unexpected header: " + line);
  }
  std::vector<RunRecord> records;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 8) {
      throw IoError(path + ":" + std::to_string(line_no) +
                    " has " + std::to_string(fields.size()) + " fields");
    }
    RunRecord r;
    r.step = std::stol(fields[0]);
    r.loss = std::stod(fields[1]);
    r.cos_es = parse_optional(fields[2]);
    r.cos_ours = parse_optional(fields[3]);
    r.ratio = parse_optional(fields[4]);
    r.consec_cos = parse_optional(fields[5]);
    r.update_norm = std::stod(fields[6]);
    r.wall_ms = std::stod(fields[7]);
    records.push_back(r);
  }
  return records;
}

std::string git_describe() {
  FILE* pipe = ::popen("git describe --always --dirty 2>/dev/null", "r");
  if (pipe == nullptr) return "";
  char buffer[256];
  std::string out;
  while (std::fgets(buffer, sizeof(buffer), pipe) != nullptr) out += buffer;
  ::pclose(pipe);
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) {
    out.pop_back();
  }
  return out;
}

void write_summary_json(const std::string& path, const ConfigMap& config,
                        std::uint64_t seed, const nlohmann::json& metrics) {
  nlohmann::json doc;
  doc["config"] = nlohmann::json::object();
  for (const auto& [key, value] : config.entries()) doc["config"][key] = value;
  doc["seed"] = seed;
  doc["seed_lineage"] =
      "update t uses derive_seed(seed, \"update\", t); data/init/batch/noise "
      "streams use the same rule with their own tags";
  doc["metrics"] = metrics;
  const std::string git = git_describe();
  if (!git.empty()) doc["git"] = git;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("short write to " + path);
}

void write_loss_svg(const std::vector<RunRecord>& records,
                    const std::string& path) {
  constexpr double kWidth = 720.0;
  constexpr double kHeight = 420.0;
  constexpr double kMargin = 56.0;
  double lo = 0.0;
  double hi = 1.0;
  long max_step = 1;
  if (!records.empty()) {
    lo = hi = records.front().loss;
    for (const RunRecord& r : records) {
      lo = std::min(lo, r.loss);
      hi = std::max(hi, r.loss);
      max_step = std::max(max_step, r.step);
    }
    if (hi - lo < 1e-12) hi = lo + 1.0;
  }
  const auto x_of = [&](long step) {
    return kMargin + (kWidth - 2 * kMargin) *
                         (static_cast<double>(step) / std::max<long>(max_step, 1));
  };
  const auto y_of = [&](double loss) {
    return kHeight - kMargin - (kHeight - 2 * kMargin) * ((loss - lo) / (hi - lo));
  };

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
      << kHeight << "\">\n";
  out << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "  <line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin
      << "\" x2=\"" << kWidth - kMargin << "\" y2=\"" << kHeight - kMargin
      << "\" stroke=\"black\"/>\n";
  out << "  <line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\""
      << kMargin << "\" y2=\"" << kHeight - kMargin
      << "\" stroke=\"black\"/>\n";
  if (records.size() >= 2) {
    out << "  <polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"1.5\" "
           "points=\"";
    for (const RunRecord& r : records) {
      out << x_of(r.step) << ',' << y_of(r.loss) << ' ';
    }
    out << "\"/>\n";
  }
  out << "  <text x=\"" << kMargin << "\" y=\"" << kMargin - 12
      << "\" font-family=\"sans-serif\" font-size=\"13\">loss, max "
      << format_float(hi) << "</text>\n";
  out << "  <text x=\"" << kMargin << "\" y=\"" << kHeight - kMargin + 28
      << "\" font-family=\"sans-serif\" font-size=\"13\">updates 0.."
      << max_step << ", min loss " << format_float(lo) << "</text>\n";
  out << "</svg>\n";
  if (!out) throw IoError("short write to " + path);
}

}  // namespace ges
