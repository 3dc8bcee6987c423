#include "autopersuade/manifest.hpp"

#include <chrono>
#include <ctime>

#include <nlohmann/json.hpp>

#include "autopersuade/errors.hpp"
#include "autopersuade/io_util.hpp"

namespace autopersuade {

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Manifest Manifest::load_or_empty(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return {};
    return from_json(io::read_file(path));
}

void Manifest::record(const std::string& stage, StageRecord record) {
    stages_[stage] = std::move(record);
}

std::string Manifest::to_json() const {
    nlohmann::json j;
    j["format_version"] = 1;
    nlohmann::json stages = nlohmann::json::object();
    for (const auto& [name, rec] : stages_) {
        stages[name] = {
            {"status", rec.status},
            {"timestamp", rec.timestamp},
            {"config", rec.config},
            {"inputs", rec.inputs},
            {"outputs", rec.outputs},
        };
    }
    j["stages"] = std::move(stages);
    return j.dump(1) + "\n";
}

Manifest Manifest::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("manifest is not valid JSON: ") + e.what());
    }
    Manifest manifest;
    try {
        for (const auto& [name, rec] : j.at("stages").items()) {
            StageRecord record;
            record.status = rec.at("status").get<std::string>();
            record.timestamp = rec.at("timestamp").get<std::string>();
            record.config = rec.at("config").get<std::map<std::string, std::string>>();
            record.inputs = rec.at("inputs").get<std::map<std::string, std::string>>();
            record.outputs = rec.at("outputs").get<std::map<std::string, std::string>>();
            manifest.stages_[name] = std::move(record);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("manifest is missing a field: ") + e.what());
    }
    return manifest;
}

void Manifest::save(const std::filesystem::path& path) const {
    io::write_file(path, to_json());
}

}  // namespace autopersuade
