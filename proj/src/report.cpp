#include "qut/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace qut {

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

void JsonWriter::indent() {
  out_ += '\n';
  out_.append(2 * counts_.size(), ' ');
}

void JsonWriter::separate() {
  if (after_key_) {
    after_key_ = false;
    return;
  }
  if (!counts_.empty()) {
    if (counts_.back()++ > 0) out_ += ',';
    indent();
  }
}

JsonWriter& JsonWriter::begin_object() {
  separate();
  out_ += '{';
  counts_.push_back(0);
  return *this;
}

JsonWriter& JsonWriter::end_object() {
  const bool empty = counts_.back() == 0;
  counts_.pop_back();
  if (!empty) indent();
  out_ += '}';
  return *this;
}

JsonWriter& JsonWriter::begin_array() {
  separate();
  out_ += '[';
  counts_.push_back(0);
  return *this;
}

JsonWriter& JsonWriter::end_array() {
  const bool empty = counts_.back() == 0;
  counts_.pop_back();
  if (!empty) indent();
  out_ += ']';
  return *this;
}

JsonWriter& JsonWriter::key(const std::string& k) {
  separate();
  out_ += '"' + json_escape(k) + "\": ";
  after_key_ = true;
  return *this;
}

JsonWriter& JsonWriter::value(double v) {
  separate();
  if (std::isfinite(v))
    out_ += format_real(v);
  else
    out_ += '"' + format_real(v) + '"';
  return *this;
}

JsonWriter& JsonWriter::value(long long v) {
  separate();
  out_ += std::to_string(v);
  return *this;
}

JsonWriter& JsonWriter::value(bool v) {
  separate();
  out_ += v ? "true" : "false";
  return *this;
}

JsonWriter& JsonWriter::value(const std::string& v) {
  separate();
  out_ += '"' + json_escape(v) + '"';
  return *this;
}

JsonWriter& JsonWriter::null() {
  separate();
  out_ += "null";
  return *this;
}

double quantile_of(std::vector<double> v, double q) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

double median_of(std::vector<double> v) { return quantile_of(std::move(v), 0.5); }

double iqr_of(std::vector<double> v) {
  return quantile_of(v, 0.75) - quantile_of(v, 0.25);
}

void SimReport::append(const SimReport& other) {
  records_.insert(records_.end(), other.records_.begin(), other.records_.end());
}

std::vector<std::string> SimReport::metric_names() const {
  std::vector<std::string> names;
  for (const auto& r : records_)
    for (const auto& [name, value] : r.metrics)
      if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
  return names;
}

std::vector<double> SimReport::values(const std::string& scenario, const std::string& method,
                                      const std::string& metric) const {
  std::vector<double> out;
  for (const auto& r : records_) {
    if (r.scenario != scenario || r.method != method) continue;
    for (const auto& [name, value] : r.metrics)
      if (name == metric && !std::isnan(value)) out.push_back(value);
  }
  return out;
}

std::vector<GroupSummary> SimReport::summarize() const {
  std::vector<GroupSummary> groups;
  for (const auto& r : records_) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const GroupSummary& g) {
      return g.scenario == r.scenario && g.method == r.method;
    });
    if (it == groups.end()) {
      groups.push_back({r.scenario, r.method, 0, {}});
      it = std::prev(groups.end());
    }
    ++it->replications;
    for (const auto& [name, value] : r.metrics) {
      auto m = std::find_if(it->metrics.begin(), it->metrics.end(),
                            [&](const MetricSummary& s) { return s.name == name; });
      if (m == it->metrics.end()) it->metrics.push_back({name, 0.0, 0.0, 0.0, 0});
    }
  }
  for (auto& g : groups) {
    for (auto& m : g.metrics) {
      const auto v = values(g.scenario, g.method, m.name);
      m.count = static_cast<int>(v.size());
      if (v.empty()) {
        m.mean = m.std_error = m.median = std::nan("");
        continue;
      }
      double sum = 0.0;
      for (double x : v) sum += x;
      m.mean = sum / static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - m.mean) * (x - m.mean);
      m.std_error = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1) /
                                             static_cast<double>(v.size()))
                                 : 0.0;
      m.median = median_of(v);
    }
  }
  return groups;
}

std::string SimReport::to_csv() const {
  const auto names = metric_names();
  std::ostringstream os;
  os << "scenario,method,replication";
  for (const auto& n : names) os << ',' << n;
  os << '\n';
  for (const auto& r : records_) {
    os << r.scenario << ',' << r.method << ',' << r.replication;
    for (const auto& n : names) {
      double v = std::nan("");
      for (const auto& [name, value] : r.metrics)
        if (name == n) v = value;
      os << ',' << format_real(v);
    }
    os << '\n';
  }
  return os.str();
}

std::string SimReport::summary_json() const {
  JsonWriter w;
  w.begin_object();
  w.key("groups").begin_array();
  for (const auto& g : summarize()) {
    w.begin_object();
    w.field("scenario", g.scenario);
    w.field("method", g.method);
    w.field("replications", g.replications);
    w.key("metrics").begin_object();
    for (const auto& m : g.metrics) {
      w.key(m.name).begin_object();
      w.field("mean", m.mean);
      w.field("std_error", m.std_error);
      w.field("median", m.median);
      w.field("count", m.count);
      w.end_object();
    }
    w.end_object();
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.str();
}

std::string SimReport::table() const {
  std::ostringstream os;
  for (const auto& g : summarize()) {
    os << g.scenario << "  " << g.method << "  (n=" << g.replications << ")";
    for (const auto& m : g.metrics) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "  %s=%.4f", m.name.c_str(), m.mean);
      os << buf;
    }
    os << '\n';
  }
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

void SimReport::write(const std::filesystem::path& prefix) const {
  write_text_file(prefix.string() + ".csv", to_csv());
  write_text_file(prefix.string() + ".json", summary_json());
}

}  // namespace qut
