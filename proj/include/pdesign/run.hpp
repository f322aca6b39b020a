#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "pdesign/config.hpp"

namespace pdesign {

/// Ordered `key: value` lines; insertion order is the file order.
class Summary {
 public:
  void add(const std::string& key, const std::string& value);
  void add(const std::string& key, const char* value) { add(key, std::string(value)); }
  void add(const std::string& key, double value);
  void add(const std::string& key, int value);
  void add(const std::string& key, bool value);
  void add_config(const RunConfig& cfg);
  void append(const Summary& other);

  std::string text() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// solve, oracle, laminate, dual-check, diagnose
const std::vector<std::string>& command_names();

/// Runs one command and writes summary.txt plus CSVs under cfg.out. Never
/// throws: failures become a `status: error` block and a nonzero return
/// (2 invalid input, 3 numerical failure, 1 anything else).
int run_command(const std::string& command, const RunConfig& cfg, std::ostream& console);

/// Error summary for failures that happen before a config exists.
int write_error(const std::filesystem::path& out_dir, const std::string& command,
                const std::string& kind, const std::string& message, std::ostream& console);

}  // namespace pdesign
