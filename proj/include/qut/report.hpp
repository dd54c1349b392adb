#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace qut {

/// Reals as "%.17g"; NaN and infinities as JSON-safe strings.
std::string format_real(double v);

/// Minimal streaming JSON writer. Fields appear in the order they are written,
/// which keeps output byte-stable across runs.
class JsonWriter {
 public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(const std::string& k);
  JsonWriter& value(double v);
  JsonWriter& value(long long v);
  JsonWriter& value(int v) { return value(static_cast<long long>(v)); }
  JsonWriter& value(bool v);
  JsonWriter& value(const std::string& v);
  JsonWriter& value(const char* v) { return value(std::string(v)); }
  JsonWriter& null();

  template <class T>
  JsonWriter& field(const std::string& k, const T& v) {
    key(k);
    return value(v);
  }

  /// Document text, newline-terminated.
  std::string str() const { return out_ + "\n"; }

 private:
  void separate();
  void indent();

  std::string out_;
  // One entry per open container: number of items written so far.
  std::vector<int> counts_;
  bool after_key_ = false;
};

std::string json_escape(const std::string& s);

struct SimRecord {
  std::string scenario;
  std::string method;
  int replication = 0;
  /// Named metrics in output order; NaN marks a missing value.
  std::vector<std::pair<std::string, double>> metrics;
};

struct MetricSummary {
  std::string name;
  double mean = 0.0;
  double std_error = 0.0;
  double median = 0.0;
  /// Replications with a finite value.
  int count = 0;
};

struct GroupSummary {
  std::string scenario;
  std::string method;
  int replications = 0;
  std::vector<MetricSummary> metrics;
};

class SimReport {
 public:
  void add(SimRecord record) { records_.push_back(std::move(record)); }
  void append(const SimReport& other);
  const std::vector<SimRecord>& records() const { return records_; }

  /// Groups in first-appearance order of (scenario, method).
  std::vector<GroupSummary> summarize() const;
  /// Values of one metric for one group, in record order (NaN skipped).
  std::vector<double> values(const std::string& scenario, const std::string& method,
                             const std::string& metric) const;

  /// One row per record: scenario, method, replication, then every metric
  /// name seen in the report.
  std::string to_csv() const;
  std::string summary_json() const;
  /// Aligned text table of group means.
  std::string table() const;

  /// Writes <prefix>.csv and <prefix>.json.
  void write(const std::filesystem::path& prefix) const;

 private:
  std::vector<std::string> metric_names() const;

  std::vector<SimRecord> records_;
};

/// Median and interquartile range with linear interpolation between order
/// statistics.
double median_of(std::vector<double> v);
double iqr_of(std::vector<double> v);
double quantile_of(std::vector<double> v, double q);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace qut
