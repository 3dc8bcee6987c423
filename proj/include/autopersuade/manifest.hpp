#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace autopersuade {

struct StageRecord {
    std::string status;     // "ok"
    std::string timestamp;  // ISO-8601 UTC
    std::map<std::string, std::string> config;   // flat key -> value snapshot
    std::map<std::string, std::string> inputs;   // input path -> sha256
    std::map<std::string, std::string> outputs;  // output path (relative to output_dir) -> sha256
};

/// Per-run provenance: one record per pipeline stage, merged across commands
/// that share an output directory.
class Manifest {
  public:
    static Manifest load_or_empty(const std::filesystem::path& path);

    void record(const std::string& stage, StageRecord record);
    const std::map<std::string, StageRecord>& stages() const { return stages_; }

    void save(const std::filesystem::path& path) const;
    std::string to_json() const;
    static Manifest from_json(const std::string& text);

  private:
    std::map<std::string, StageRecord> stages_;
};

/// Current time as ISO-8601 UTC.
std::string utc_timestamp();

}  // namespace autopersuade
