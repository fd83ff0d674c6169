#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "doalab/sim.hpp"

namespace doalab {

struct GenConfig {
    std::string out_dir;
    std::string geometry = "uca10";
    int train = 2000, dev = 200, test = 200;
    int num_sources = 2;
    double min_separation_deg = 10.0;
    double duration_lo_s = 1.0, duration_hi_s = 2.0;
    double t60_lo = 0.25, t60_hi = 0.7;
    double snr_lo_db = 10.0, snr_hi_db = 20.0;
    double distance_lo_m = 1.0, distance_hi_m = 2.0;
    double sample_rate = 16000.0;
    bool write_images = true;
};

struct ManifestRecord {
    std::string mixture;               // path relative to manifest directory
    std::vector<std::string> images;   // empty when images not kept
    std::vector<double> doas_deg;      // [0, 360)
    double snr_db = 0.0;
    std::string geometry;
    std::string split;
    double t60 = 0.0;
    std::array<double, 3> room_dims{};
    uint64_t seed = 0;
};

using DatasetManifest = std::vector<ManifestRecord>;

uint64_t fnv1a64(const void* data, size_t len);

// Scenario sampling: room and t60 uniform in the configured ranges, array
// center uniform with a 1.2 m wall margin, sources resampled until they sit
// inside the room and the pairwise separation constraint holds.
RoomSpec sample_room(Rng& rng, const ArrayGeometry& g, const GenConfig& cfg);
std::vector<SourcePlacement> sample_placements(Rng& rng, const RoomSpec& room,
                                               const GenConfig& cfg);

// One example from its own seed; deterministic and independent of the rest.
MixtureExample generate_example(const GenConfig& cfg, uint64_t example_seed,
                                std::vector<SourcePlacement>* placements_out = nullptr);

// Writes audio under out_dir/audio/<hh>/<hash16>/ and one JSON-lines
// manifest per split (train.jsonl, dev.jsonl, test.jsonl). Byte-identical
// output for a fixed (config, seed).
std::map<std::string, DatasetManifest> dataset_generate(const GenConfig& cfg, uint64_t seed);

DatasetManifest manifest_read(const std::string& path);
void manifest_write(const std::string& path, const DatasetManifest& records);

}  // namespace doalab
