#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

namespace twinfuse::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kTotalFailure = 3,
};

struct RunOptions {
  std::vector<std::filesystem::path> configs;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;
};

/// Runs each config. A single config writes straight into out_dir; several
/// configs write to out_dir/<config stem>/ and run on up to
/// $TWINFUSE_JOBS worker threads. Returns the worst exit code.
int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err);

/// Replays the two-cycle worked example and checks the composites.
int cmd_fusion_demo(std::ostream& out);

int cmd_twin_eval(const std::filesystem::path& config, const std::filesystem::path& out_dir,
                  std::ostream& out, std::ostream& err);

/// Worker cap from $TWINFUSE_JOBS, falling back to hardware concurrency.
unsigned worker_limit();

}  // namespace twinfuse::cli
