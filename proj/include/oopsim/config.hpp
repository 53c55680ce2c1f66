#pragma once
#include <cstdint>
#include <map>
#include <string>

#include "oopsim/estimation.hpp"
#include "oopsim/population.hpp"
#include "oopsim/simulator.hpp"

namespace oopsim {

// Fixed default seed so unseeded runs are reproducible.
constexpr std::uint64_t kDefaultSeed = 104729;

// Flat key = value file with [section] headers; '#' starts a comment.
struct ConfigFile {
    struct Entry {
        std::string value;
        int line = 0;
        mutable bool used = false;
    };
    std::map<std::string, std::map<std::string, Entry>> sections;
    std::string path;

    static ConfigFile parse(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    std::uint64_t get_u64(const std::string& section, const std::string& key,
                          std::uint64_t fallback) const;
    int get_int(const std::string& section, const std::string& key, int fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
};

// Everything a run needs, validated. Paths in the config are resolved
// relative to the config file's directory.
struct RunSettings {
    std::uint64_t seed = kDefaultSeed;
    int threads = 0;  // 0 = all cores
    std::uint64_t replicate = 0;
    PopulationConfig population;
    SimParams sim;
    EstimationConfig estimation;
    EventSpec events;
};

RunSettings load_settings(const std::string& path);

}  // namespace oopsim
