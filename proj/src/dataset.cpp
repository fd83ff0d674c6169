#include "doalab/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace doalab {

namespace fs = std::filesystem;
using nlohmann::json;

uint64_t fnv1a64(const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = 0xCBF29CE484222325ULL;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

RoomSpec sample_room(Rng& rng, const ArrayGeometry& g, const GenConfig& cfg) {
    RoomSpec room;
    room.geometry = g;
    room.length = rng.uniform(5.0, 11.0);
    room.width = rng.uniform(5.0, 11.0);
    room.height = rng.uniform(2.6, 3.4);
    room.t60 = rng.uniform(cfg.t60_lo, cfg.t60_hi);
    const double margin = 1.2;  // array keeps clear of the walls
    room.array_center[0] = rng.uniform(margin, room.length - margin);
    room.array_center[1] = rng.uniform(margin, room.width - margin);
    room.array_center[2] = rng.uniform(1.0, 1.6);
    return room;
}

std::vector<SourcePlacement> sample_placements(Rng& rng, const RoomSpec& room,
                                               const GenConfig& cfg) {
    const double wall = 0.05;
    for (int attempt = 0; attempt < 10000; ++attempt) {
        std::vector<SourcePlacement> ps(static_cast<size_t>(cfg.num_sources));
        for (auto& p : ps) {
            p.azimuth_rad = rng.uniform(0.0, kTwoPi);
            p.distance_m = rng.uniform(cfg.distance_lo_m, cfg.distance_hi_m);
        }
        bool ok = true;
        for (const auto& p : ps) {
            const auto pos = source_position(room, p);
            if (pos[0] < wall || pos[0] > room.length - wall || pos[1] < wall ||
                pos[1] > room.width - wall) {
                ok = false;
                break;
            }
        }
        for (size_t a = 0; ok && a < ps.size(); ++a)
            for (size_t b = a + 1; ok && b < ps.size(); ++b)
                if (cyclic_diff_deg(rad2deg(ps[a].azimuth_rad), rad2deg(ps[b].azimuth_rad)) <
                    cfg.min_separation_deg)
                    ok = false;
        if (ok) return ps;
    }
    throw Error("sample_placements: rejection sampling failed; constraints too tight");
}

MixtureExample generate_example(const GenConfig& cfg, uint64_t example_seed,
                                std::vector<SourcePlacement>* placements_out) {
    Rng rng(example_seed);
    const auto g = ArrayGeometry::by_name(cfg.geometry);
    const auto room = sample_room(rng, g, cfg);
    const auto placements = sample_placements(rng, room, cfg);
    const double dur = rng.uniform(cfg.duration_lo_s, cfg.duration_hi_s);
    const auto src_len = static_cast<size_t>(dur * cfg.sample_rate);

    std::vector<std::vector<double>> sources;
    sources.reserve(placements.size());
    for (size_t n = 0; n < placements.size(); ++n)
        sources.push_back(speech_burst(src_len, cfg.sample_rate, rng));
    const double snr = rng.uniform(cfg.snr_lo_db, cfg.snr_hi_db);

    ImageMethodConfig im;
    im.sample_rate = cfg.sample_rate;
    const auto rir_len = static_cast<size_t>(std::ceil((0.8 * room.t60 + 0.02) * cfg.sample_rate));
    const auto mix_len = src_len + rir_len - 1;
    const auto noise = isotropic_noise(g, mix_len, cfg.sample_rate, rng);

    if (placements_out) *placements_out = placements;
    return synthesize_mixture(sources, room, placements, noise, snr, im);
}

namespace {

std::string hex16(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void atomic_write_text(const std::string& path, const std::string& body) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        DOALAB_CHECK(f.good(), "cannot open " + tmp);
        f.write(body.data(), static_cast<std::streamsize>(body.size()));
        DOALAB_CHECK(f.good(), "write failed for " + tmp);
    }
    fs::rename(tmp, path);
}

json record_to_json(const ManifestRecord& r) {
    json j;
    j["mixture"] = r.mixture;
    j["images"] = r.images;
    j["doas_deg"] = r.doas_deg;
    j["snr_db"] = r.snr_db;
    j["geometry"] = r.geometry;
    j["split"] = r.split;
    j["t60"] = r.t60;
    j["room_dims"] = r.room_dims;
    j["seed"] = r.seed;
    return j;
}

ManifestRecord record_from_json(const json& j) {
    ManifestRecord r;
    r.mixture = j.at("mixture").get<std::string>();
    r.images = j.at("images").get<std::vector<std::string>>();
    r.doas_deg = j.at("doas_deg").get<std::vector<double>>();
    r.snr_db = j.at("snr_db").get<double>();
    r.geometry = j.at("geometry").get<std::string>();
    r.split = j.at("split").get<std::string>();
    r.t60 = j.value("t60", 0.0);
    if (j.contains("room_dims")) {
        auto v = j.at("room_dims").get<std::vector<double>>();
        DOALAB_CHECK(v.size() == 3, "manifest: room_dims needs 3 entries");
        r.room_dims = {v[0], v[1], v[2]};
    }
    r.seed = j.value("seed", 0ULL);
    for (double d : r.doas_deg)
        DOALAB_CHECK(d >= 0.0 && d < 360.0, "manifest: label outside [0, 360)");
    return r;
}

}  // namespace

std::map<std::string, DatasetManifest> dataset_generate(const GenConfig& cfg, uint64_t seed) {
    DOALAB_CHECK(!cfg.out_dir.empty(), "dataset_generate: out_dir not set");
    DOALAB_CHECK(cfg.num_sources >= 1, "dataset_generate: need at least one source");
    fs::create_directories(cfg.out_dir);

    const std::vector<std::pair<std::string, int>> splits = {
        {"train", cfg.train}, {"dev", cfg.dev}, {"test", cfg.test}};
    std::map<std::string, DatasetManifest> out;
    uint64_t index = 0;
    for (const auto& [split, count] : splits) {
        DatasetManifest records;
        for (int i = 0; i < count; ++i, ++index) {
            const uint64_t ex_seed = derive_seed(seed, index);
            auto ex = generate_example(cfg, ex_seed);

            // content address: hash of the float32 mixture samples
            std::vector<float> flat;
            flat.reserve(ex.mixture.num_samples() * static_cast<size_t>(ex.mixture.num_channels()));
            for (const auto& ch : ex.mixture.channels)
                for (double v : ch) flat.push_back(static_cast<float>(v));
            const std::string h = hex16(fnv1a64(flat.data(), flat.size() * sizeof(float)));
            const std::string rel_dir = "audio/" + h.substr(0, 2) + "/" + h;
            fs::create_directories(fs::path(cfg.out_dir) / rel_dir);

            ManifestRecord r;
            r.mixture = rel_dir + "/mixture.wav";
            wav_write((fs::path(cfg.out_dir) / r.mixture).string(), ex.mixture);
            if (cfg.write_images) {
                for (size_t nsrc = 0; nsrc < ex.images.size(); ++nsrc) {
                    const std::string p =
                        rel_dir + "/image_" + std::to_string(nsrc) + ".wav";
                    wav_write((fs::path(cfg.out_dir) / p).string(), ex.images[nsrc]);
                    r.images.push_back(p);
                }
            }
            for (double a : ex.doas_rad) r.doas_deg.push_back(wrap_deg(rad2deg(a)));
            r.snr_db = ex.snr_db;
            r.geometry = cfg.geometry;
            r.split = split;
            r.t60 = ex.room.t60;
            r.room_dims = {ex.room.length, ex.room.width, ex.room.height};
            r.seed = ex_seed;
            records.push_back(std::move(r));
        }
        manifest_write((fs::path(cfg.out_dir) / (split + ".jsonl")).string(), records);
        out.emplace(split, std::move(records));
    }
    return out;
}

DatasetManifest manifest_read(const std::string& path) {
    std::ifstream f(path);
    DOALAB_CHECK(f.good(), "manifest_read: cannot open " + path);
    DatasetManifest records;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        records.push_back(record_from_json(json::parse(line)));
    }
    return records;
}

void manifest_write(const std::string& path, const DatasetManifest& records) {
    std::string body;
    for (const auto& r : records) {
        body += record_to_json(r).dump();
        body += '\n';
    }
    atomic_write_text(path, body);
}

}  // namespace doalab
