#pragma once

// Run directories: machine-readable reports, checksums, manifests.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fblab {

std::string format_double(double v);  // shortest round-trip, locale-free

std::uint64_t fnv64_bytes(const void* data, std::size_t n);
std::uint64_t fnv64_file(const std::string& path);
std::string hex64(std::uint64_t v);

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    void write(const std::string& path) const;
};

struct RunManifest {
    std::string tool_version;
    std::string spec_hash;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> artifacts;  // name -> fnv64 hex
    std::map<std::string, double> wall_clock;                    // stage -> seconds

    void add_artifact(const std::string& dir, const std::string& name);
    void write(const std::string& path) const;
};

extern const char* kToolVersion;

}  // namespace fblab
