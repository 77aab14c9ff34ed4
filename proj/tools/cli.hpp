#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace lil::cli {

/// Exit codes of the tool.
enum Exit : int { ok = 0, internal = 1, config_error = 2, inconclusive = 3, nonconvergence = 4 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A config document together with where each value came from, for error messages.
class Config {
 public:
  /// Parses `text`; a manifest written by this tool is unwrapped to its config.
  static Config parse(const std::string& text, const std::string& source, std::filesystem::path base_dir = {});
  static Config load(const std::filesystem::path& path);

  /// `--a.b value` sets /a/b; the value is read as JSON when it parses, else as a string.
  void override_with(const std::string& flag, const std::string& value);
  void set(const std::string& pointer, nlohmann::json v, const std::string& origin);

  const nlohmann::json& doc() const { return j_; }
  bool has(const std::string& pointer) const;
  const nlohmann::json& at(const std::string& pointer) const;
  double number(const std::string& pointer) const;
  double number(const std::string& pointer, double fallback) const;
  std::string string(const std::string& pointer) const;
  std::string string(const std::string& pointer, const std::string& fallback) const;
  /// Relative paths resolve against the config file's directory.
  std::filesystem::path path(const std::string& pointer) const;
  /// Where the value at `pointer` was given: "source:line" or the override flag.
  std::string where(const std::string& pointer) const;
  [[noreturn]] void fail(const std::string& pointer, const std::string& why) const;

  /// Verb recorded in a manifest, empty for plain configs.
  const std::string& manifest_verb() const { return manifest_verb_; }

 private:
  nlohmann::json j_ = nlohmann::json::object();
  std::string text_;
  std::string source_ = "<config>";
  std::filesystem::path base_;
  std::vector<std::pair<std::string, std::string>> overrides_;  // pointer, flag
  std::string manifest_verb_;
};

/// Runs one invocation; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lil::cli
