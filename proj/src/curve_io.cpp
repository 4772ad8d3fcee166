#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "poolal/error.hpp"
#include "poolal/harness.hpp"

namespace poolal {

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string join(const IndexList& idx, char sep) {
  std::string s;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(idx[i]);
  }
  return s;
}

template <typename T>
T parse_field(std::string_view text, const char* what, std::size_t line) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ParseError(std::string("curve: bad ") + what + " '" + std::string(text) + "' on line " +
                     std::to_string(line));
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

constexpr const char* kCsvHeader = "round,n_labeled,accuracy,selected_indices";

}  // namespace

CurveFormat curve_format_for_path(const std::string& path) {
  const auto dot = path.rfind('.');
  if (dot != std::string::npos && path.substr(dot) == ".json") return CurveFormat::json;
  return CurveFormat::csv;
}

std::string format_curve(const std::vector<RoundRecord>& records, CurveFormat format) {
  std::ostringstream out;
  if (format == CurveFormat::csv) {
    out << kCsvHeader << '\n';
    for (const RoundRecord& r : records) {
      out << r.round << ',' << r.n_labeled << ',' << fixed6(r.accuracy) << ',' << join(r.selected, ';') << '\n';
    }
    return out.str();
  }
  out << "[";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const RoundRecord& r = records[i];
    out << (i ? ",\n " : "\n ") << "{\"round\": " << r.round << ", \"n_labeled\": " << r.n_labeled
        << ", \"accuracy\": " << fixed6(r.accuracy) << ", \"selected_indices\": [" << join(r.selected, ',') << "]}";
  }
  out << (records.empty() ? "]\n" : "\n]\n");
  return out.str();
}

std::vector<RoundRecord> parse_curve(const std::string& text, CurveFormat format) {
  std::vector<RoundRecord> records;
  if (format == CurveFormat::json) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
      for (const auto& item : doc) {
        RoundRecord r;
        r.round = item.at("round").get<std::size_t>();
        r.n_labeled = item.at("n_labeled").get<std::size_t>();
        r.accuracy = item.at("accuracy").get<double>();
        r.selected = item.at("selected_indices").get<IndexList>();
        records.push_back(std::move(r));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("curve: ") + e.what());
    }
    return records;
  }

  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw ParseError("curve: missing CSV header");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 4) throw ParseError("curve: line " + std::to_string(line_no) + " needs 4 fields");
    RoundRecord r;
    r.round = parse_field<std::size_t>(fields[0], "round", line_no);
    r.n_labeled = parse_field<std::size_t>(fields[1], "n_labeled", line_no);
    r.accuracy = parse_field<double>(fields[2], "accuracy", line_no);
    if (!fields[3].empty()) {
      for (std::string_view idx : split(fields[3], ';')) {
        r.selected.push_back(parse_field<std::size_t>(idx, "index", line_no));
      }
    }
    records.push_back(std::move(r));
  }
  return records;
}

void export_curve(const std::vector<RoundRecord>& records, const std::string& path, CurveFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << format_curve(records, format);
  if (!out) throw IoError("write to '" + path + "' failed");
}

std::vector<RoundRecord> read_curve(const std::string& path, CurveFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_curve(buf.str(), format);
}

std::string format_summary_csv(const SummaryTable& table) {
  std::ostringstream out;
  out << "strategy,round,mean_accuracy,stddev_accuracy\n";
  for (const StrategySummary& row : table.rows) {
    for (std::size_t t = 0; t < row.mean_accuracy.size(); ++t) {
      out << row.strategy << ',' << t << ',' << fixed6(row.mean_accuracy[t]) << ','
          << fixed6(row.stddev_accuracy[t]) << '\n';
    }
  }
  out << "\nstrategy,mean_aulc,mean_rounds_to_" << fixed6(table.target_accuracy) << '\n';
  for (const StrategySummary& row : table.rows) {
    out << row.strategy << ',' << fixed6(row.mean_aulc) << ',' << fixed6(row.mean_rounds_to_target) << '\n';
  }
  return out.str();
}

}  // namespace poolal
