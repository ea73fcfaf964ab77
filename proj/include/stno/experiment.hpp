#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stno/config.hpp"

namespace stno {

/// One output file of a run, as listed in the summary manifest.
struct FileEntry {
  std::string name;          // path relative to the run directory
  std::uint64_t bytes = 0;
  std::string fnv1a64;       // hex digest of the file contents
};

/// What run_experiment leaves behind besides the files themselves.
struct RunRecord {
  std::string run_id;
  std::string directory;
  bool success = true;       // false when any point, trial or stage failed
  int failed_points = 0;
  std::vector<FileEntry> files;  // data files; summary.json itself is extra
  std::string summary_text;      // exact bytes of summary.json
};

/// Execute the configured experiment, writing CSV data files plus a
/// machine-readable summary.json into config.resolved_output(). Per-point
/// failures are recorded as status markers in the data files (and flip
/// `success`) rather than aborting the run; only unusable configurations and
/// I/O problems throw. Output bytes are a pure function of (config, seed).
RunRecord run_experiment(const ExperimentConfig& config);

/// 64-bit FNV-1a digest, hex-formatted; the manifest hash.
std::string fnv1a64_hex(const std::string& bytes);

}  // namespace stno
