#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "plot.hpp"

namespace hacklab::app {

// Exit codes shared by every command.
constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;  // verify: some non-vacuous bound unsatisfied
constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed,
              std::optional<std::filesystem::path> out);
int cmd_verify(const std::string& suite, std::size_t n, std::uint64_t seed, const std::filesystem::path& out);
int cmd_probe(const std::string& config_path, const std::filesystem::path& checkpoint, std::uint64_t seed,
              const std::filesystem::path& out);
int cmd_sweep(const std::string& config_path, const std::string& param, const std::vector<double>& values,
              std::optional<std::uint64_t> seed, const std::filesystem::path& out);
int cmd_plot(const std::vector<std::filesystem::path>& inputs, const std::string& kind,
             const std::vector<std::string>& series, bool post_peak, const std::filesystem::path& out);

// Parses argv and dispatches; returns the process exit code.
int run_cli(int argc, const char* const* argv);

// HACKLAB_THREADS if set and positive, else the hardware concurrency.
std::size_t thread_budget();

}  // namespace hacklab::app
