#pragma once

#include <cstdint>
#include <string>

namespace segwave {

std::string tool_version();

// Everything needed to replay a run. `config` is a JSON object text.
struct RunManifest {
    std::string tool_version = segwave::tool_version();
    std::string command;
    std::string config = "{}";
    std::uint64_t seed = 0;
    std::string source_digest;
    std::string started_at;
    std::string finished_at;

    // Stamps started_at / finished_at with the current UTC time (ISO 8601).
    void start();
    void finish();

    // Without timestamps: embedded in machine outputs, which must be
    // byte-identical across repeated runs.
    std::string reproducible_json() const;
    // With timestamps, for the sidecar file.
    std::string full_json() const;
};

}  // namespace segwave
