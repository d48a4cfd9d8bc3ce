#include "report.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace nullcone::cli {

std::string format_double(double x) {
  if (x == 0.0) return "0";  // normalize -0
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, ptr);
}

void Report::kv(const std::string& key, const std::string& value) {
  lines_.push_back(key + " = " + value);
}

void Report::kv(const std::string& key, double value) { kv(key, format_double(value)); }

void Report::kv(const std::string& key, long value) { kv(key, std::to_string(value)); }

void Report::kv(const std::string& key, bool value) {
  kv(key, std::string(value ? "true" : "false"));
}

void Report::kv(const std::string& key, const Eigen::VectorXd& value) {
  std::string s;
  for (int i = 0; i < value.size(); ++i) {
    if (i) s += ",";
    s += format_double(value[i]);
  }
  kv(key, s);
}

void Report::section(const std::string& name) {
  lines_.push_back("");
  lines_.push_back("[" + name + "]");
}

std::string Report::str() const {
  std::string out;
  for (const auto& l : lines_) {
    out += l;
    out += "\n";
  }
  return out;
}

}  // namespace nullcone::cli
