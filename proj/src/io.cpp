#include "panoptic/io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace panoptic::io {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str(), path);
}

Config Config::from_string(const std::string& text, const std::string& name) {
  Config c;
  c.name_ = name;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // strip comments, honoring double quotes
    bool quoted = false;
    std::string body;
    for (char ch : line) {
      if (ch == '"') quoted = !quoted;
      if (ch == '#' && !quoted) break;
      body += ch;
    }
    body = trim(body);
    if (body.empty()) continue;
    if (body[0] == '[') {
      throw UsageError(name + ":" + std::to_string(lineno) +
                       ": section headers are not supported; use dotted keys");
    }
    size_t eq = body.find('=');
    if (eq == std::string::npos) {
      throw UsageError(name + ":" + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(body.substr(0, eq));
    std::string val = trim(body.substr(eq + 1));
    if (key.empty()) {
      throw UsageError(name + ":" + std::to_string(lineno) + ": empty key");
    }
    if (key.find_first_not_of(
            "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789._-") !=
        std::string::npos) {
      throw UsageError(name + ":" + std::to_string(lineno) + ": bad key '" + key + "'");
    }
    if (val.size() >= 2 && val.front() == '"' && val.back() == '"') {
      val = val.substr(1, val.size() - 2);
    }
    if (c.kv_.count(key)) {
      throw UsageError(name + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    c.kv_[key] = val;
  }
  return c;
}

double Config::get_double(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw UsageError(name_ + ": missing key '" + key + "'");
  const std::string& s = it->second;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw UsageError(name_ + ": key '" + key + "': not a number: '" + s + "'");
  }
  return v;
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long long Config::get_int(const std::string& key, long long fallback) const {
  if (!has(key)) return fallback;
  const std::string& s = kv_.at(key);
  char* end = nullptr;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') {
    throw UsageError(name_ + ": key '" + key + "': not an integer: '" + s + "'");
  }
  return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& s = kv_.at(key);
  if (s == "true") return true;
  if (s == "false") return false;
  throw UsageError(name_ + ": key '" + key + "': expected true/false, got '" + s + "'");
}

std::string Config::get_string(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw UsageError(name_ + ": missing key '" + key + "'");
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? kv_.at(key) : fallback;
}

std::vector<double> Config::get_list(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw UsageError(name_ + ": missing key '" + key + "'");
  std::vector<double> out;
  std::string s = it->second;
  size_t pos = 0;
  while (pos <= s.size()) {
    size_t comma = s.find(',', pos);
    std::string tok = trim(comma == std::string::npos ? s.substr(pos)
                                                      : s.substr(pos, comma - pos));
    if (!tok.empty()) {
      char* end = nullptr;
      double v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0') {
        throw UsageError(name_ + ": key '" + key + "': bad list element '" + tok + "'");
      }
      out.push_back(v);
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

void Config::check_allowed(const std::vector<std::string>& allowed) const {
  for (const auto& [k, v] : kv_) {
    (void)v;
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw UsageError(name_ + ": unknown key '" + k + "'");
    }
  }
}

std::string format_g(double v, int prec) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
  return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void Report::add(const std::string& key, const std::string& value) {
  text_ += key + "=" + value + "\n";
}

void Report::add(const std::string& key, double value, int prec) {
  add(key, format_g(value, prec));
}

void Csv::row(const std::vector<double>& values, int prec) {
  std::string line;
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) line += ",";
    line += format_g(values[i], prec);
  }
  text_ += line + "\n";
}

}  // namespace panoptic::io
