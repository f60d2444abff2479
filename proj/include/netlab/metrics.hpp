#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace netlab {

struct MetricRecord {
  std::string run_id;
  std::int64_t t = 0;
  std::string metric;
  std::string subject;
  double value = 0.0;
};

// Append-only stream; within one run_id timestamps must not go backwards.
class MetricsSink {
 public:
  void record(const std::string& run_id, std::int64_t t, std::string metric, std::string subject, double value);

  const std::vector<MetricRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  void write_csv(std::ostream& os) const;
  std::string to_csv() const;
  void save(const std::string& path) const;

  // Copies every record of `other`, re-checking order per run.
  void append(const MetricsSink& other);

  static const char* header() { return "run_id,t,metric,subject,value"; }

 private:
  std::vector<MetricRecord> records_;
  std::map<std::string, std::int64_t> last_t_;
};

std::string format_value(double v);
std::string csv_escape(const std::string& s);

}  // namespace netlab
