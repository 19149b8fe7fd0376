#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "obsyn/config.hpp"

namespace obsyn {

/// Exit codes of the batch front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalError = 3;

/// Dispatches one subcommand against a parsed config, writing CSV artifacts
/// and a summary.json into `out_dir`. Returns the process exit code; error
/// names go to stderr.
int run(const RunConfig& config, const std::string& subcommand,
        const std::filesystem::path& out_dir, std::optional<std::uint64_t> seed_override);

/// `obsyn demo holonomic` / `obsyn demo consensus`: the two built-in studies
/// with pre-baked configs.
int run_demo(const std::string& which, const std::filesystem::path& out_dir,
             std::optional<std::uint64_t> seed_override);

/// Pre-baked demo configs (exposed for tests).
RunConfig holonomic_demo_config();
RunConfig consensus_demo_config();
/// The per-channel oscillation gains the holonomic demo applies.
AugmentedGains holonomic_demo_gains();

}  // namespace obsyn
