#include "segwave/manifest.hpp"

#include <json.hpp>

#include <chrono>
#include <ctime>

#ifndef SEGWAVE_VERSION
#define SEGWAVE_VERSION "0.0.0"
#endif

namespace segwave {

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

nlohmann::ordered_json base(const RunManifest& m) {
    nlohmann::ordered_json j;
    j["tool_version"] = m.tool_version;
    j["command"] = m.command;
    j["config"] = nlohmann::ordered_json::parse(m.config);
    j["seed"] = m.seed;
    j["source_digest"] = m.source_digest;
    return j;
}

}  // namespace

std::string tool_version() { return SEGWAVE_VERSION; }

void RunManifest::start() { started_at = utc_now(); }
void RunManifest::finish() { finished_at = utc_now(); }

std::string RunManifest::reproducible_json() const { return base(*this).dump(); }

std::string RunManifest::full_json() const {
    auto j = base(*this);
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    return j.dump(2) + "\n";
}

}  // namespace segwave
