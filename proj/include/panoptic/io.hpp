#pragma once
// Flat key/value config files (TOML-compatible subset: dotted keys, `=`,
// `#` comments), CSV/report builders, and atomic file output.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace panoptic::io {

// Input problems (bad config, malformed data files). CLI exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Config {
 public:
  static Config load(const std::string& path);
  static Config from_string(const std::string& text,
                            const std::string& name = "<string>");

  bool has(const std::string& key) const { return kv_.count(key) != 0; }
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  // comma-separated doubles; empty list is allowed and returned empty
  std::vector<double> get_list(const std::string& key) const;

  // every present key must appear in `allowed`, else UsageError naming it
  void check_allowed(const std::vector<std::string>& allowed) const;
  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
  std::string name_;
};

std::string format_g(double v, int prec = 12);

// temp file + rename; partial runs never leave truncated artifacts
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

class Report {
 public:
  void add(const std::string& key, const std::string& value);
  void add(const std::string& key, double value, int prec = 9);
  const std::string& str() const { return text_; }

 private:
  std::string text_;
};

class Csv {
 public:
  explicit Csv(const std::string& header) { text_ = header + "\n"; }
  void comment(const std::string& line) { text_ += "# " + line + "\n"; }
  void row(const std::vector<double>& values, int prec = 12);
  void row_raw(const std::string& line) { text_ += line + "\n"; }
  const std::string& str() const { return text_; }

 private:
  std::string text_;
};

}  // namespace panoptic::io
