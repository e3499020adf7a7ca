#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ltts/serialize.hpp"

namespace ltts::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kQualityGate = 2, kRuntimeError = 3 };

/// Thrown while resolving a configuration; the message names the offending field.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Entry point shared by the executable and the tests.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Defaults for each subcommand, before the config file and flags are applied.
json default_config(std::string_view subcommand);

/// Replaces keys of `base` with those of `overlay`; unknown keys are a ConfigError.
void merge_config(json& base, const json& overlay, const std::string& where);

/// Git blob hash ("blob <len>\0" + content) as 40 hex digits.
std::string git_blob_hash(std::string_view content);

/// "4x3,6x2" or the pair shorthand "4,3".
std::vector<std::pair<std::size_t, int>> parse_configs(const std::string& text);

/// Family names, case-insensitive, plus the bucket aliases separable, poly, trig+gauss.
std::vector<FamilyKind> parse_families(const std::string& text);

const char* version() noexcept;

} // namespace ltts::cli
