#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "msziarmn/config.hpp"

namespace msz {

/// Command-line overrides; each takes precedence over the matching config key.
struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::string> variant;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::filesystem::path> draws_dir;  // waic / summarize: where the fit was written
  bool strict = false;
};

enum ExitCode : int { kOk = 0, kValidation = 2, kNumerical = 3, kNotConverged = 4 };

/// The configuration with the command-line overrides applied.
RunConfig effective_config(const CommandOptions& opts);

int cmd_simulate(const CommandOptions& opts, std::ostream& log);
int cmd_fit(const CommandOptions& opts, std::ostream& log);
int cmd_waic(const CommandOptions& opts, std::ostream& log);
int cmd_summarize(const CommandOptions& opts, std::ostream& log);

/// Dispatches by name and maps exceptions to exit codes, reporting them on `err`.
int run_command(const std::string& name, const CommandOptions& opts, std::ostream& log, std::ostream& err);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& file);

}  // namespace msz
