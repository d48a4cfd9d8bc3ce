#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace nullcone::cli {

/// Deterministic key/value report writer. Keys keep insertion order, numbers
/// are printed with shortest round-trip formatting, so identical runs produce
/// byte-identical reports that diff cleanly in CI.
class Report {
public:
  void kv(const std::string& key, const std::string& value);
  void kv(const std::string& key, const char* value) { kv(key, std::string(value)); }
  void kv(const std::string& key, double value);
  void kv(const std::string& key, long value);
  void kv(const std::string& key, int value) { kv(key, static_cast<long>(value)); }
  void kv(const std::string& key, std::size_t value) { kv(key, static_cast<long>(value)); }
  void kv(const std::string& key, bool value);
  void kv(const std::string& key, const Eigen::VectorXd& value);
  void section(const std::string& name);

  std::string str() const;

private:
  std::vector<std::string> lines_;
};

std::string format_double(double x);

}  // namespace nullcone::cli
