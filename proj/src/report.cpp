#include "fblab/report.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace fblab {

const char* kToolVersion = "fblab 0.1.0";

std::string format_double(double v) {
    char buf[40];
    // %.17g always round-trips an IEEE double
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::uint64_t fnv64_bytes(const void* data, std::size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t fnv64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot hash missing file " + path);
    std::uint64_t h = 1469598103934665603ull;
    char buf[65536];
    while (in) {
        in.read(buf, sizeof buf);
        std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void Csv::write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (std::size_t i = 0; i < header.size(); ++i)
        out << header[i] << (i + 1 < header.size() ? "," : "\n");
    for (const auto& row : rows)
        for (std::size_t i = 0; i < row.size(); ++i)
            out << row[i] << (i + 1 < row.size() ? "," : "\n");
}

void RunManifest::add_artifact(const std::string& dir, const std::string& name) {
    artifacts.emplace_back(name, hex64(fnv64_file(dir + "/" + name)));
}

void RunManifest::write(const std::string& path) const {
    nlohmann::json j;
    j["schema"] = "fblab-manifest-1";
    j["tool_version"] = tool_version;
    j["spec_hash"] = spec_hash;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    nlohmann::json arts = nlohmann::json::array();
    for (const auto& [name, hash] : artifacts) arts.push_back({{"name", name}, {"fnv64", hash}});
    j["artifacts"] = arts;
    j["wall_clock"] = wall_clock;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace fblab
