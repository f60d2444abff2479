#include "netlab/metrics.hpp"

#include <charconv>
#include <filesystem>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace netlab {

void MetricsSink::record(const std::string& run_id, std::int64_t t, std::string metric, std::string subject,
                         double value) {
  auto it = last_t_.find(run_id);
  if (it != last_t_.end() && t < it->second) {
    throw std::logic_error("metrics: out-of-order timestamp " + std::to_string(t) + " after " +
                           std::to_string(it->second) + " in run " + run_id);
  }
  last_t_[run_id] = t;
  records_.push_back({run_id, t, std::move(metric), std::move(subject), value});
}

void MetricsSink::append(const MetricsSink& other) {
  for (const auto& r : other.records_) record(r.run_id, r.t, r.metric, r.subject, r.value);
}

std::string format_value(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void MetricsSink::write_csv(std::ostream& os) const {
  os << header() << '\n';
  for (const auto& r : records_) {
    os << csv_escape(r.run_id) << ',' << r.t << ',' << csv_escape(r.metric) << ',' << csv_escape(r.subject) << ','
       << format_value(r.value) << '\n';
  }
}

std::string MetricsSink::to_csv() const {
  std::ostringstream os;
  write_csv(os);
  return os.str();
}

void MetricsSink::save(const std::string& path) const {
  auto dir = std::filesystem::path(path).parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  write_csv(f);
}

}  // namespace netlab
