#include "doalab/config.hpp"

#include <fstream>

#include <json.hpp>

namespace doalab {

using nlohmann::json;

namespace {

// pull one range pair like "t60": [0.25, 0.7]
void read_range(const json& j, const char* key, double& lo, double& hi) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    DOALAB_CHECK(v.is_array() && v.size() == 2, std::string("config: ") + key +
                                                    " must be a [lo, hi] pair");
    lo = v.at(0).get<double>();
    hi = v.at(1).get<double>();
    DOALAB_CHECK(lo <= hi, std::string("config: ") + key + " range is inverted");
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const char* where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok |= key == a;
        DOALAB_CHECK(ok, std::string("config: unknown key '") + key + "' in " + where);
    }
}

template <class T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

GenConfig parse_simulate(const json& j) {
    reject_unknown(j,
                   {"out_dir", "geometry", "train", "dev", "test", "num_sources",
                    "min_separation_deg", "duration_s", "t60", "snr_db", "distance_m",
                    "sample_rate", "write_images"},
                   "simulate");
    GenConfig g;
    maybe(j, "out_dir", g.out_dir);
    maybe(j, "geometry", g.geometry);
    maybe(j, "train", g.train);
    maybe(j, "dev", g.dev);
    maybe(j, "test", g.test);
    maybe(j, "num_sources", g.num_sources);
    maybe(j, "min_separation_deg", g.min_separation_deg);
    read_range(j, "duration_s", g.duration_lo_s, g.duration_hi_s);
    read_range(j, "t60", g.t60_lo, g.t60_hi);
    read_range(j, "snr_db", g.snr_lo_db, g.snr_hi_db);
    read_range(j, "distance_m", g.distance_lo_m, g.distance_hi_m);
    maybe(j, "sample_rate", g.sample_rate);
    maybe(j, "write_images", g.write_images);
    return g;
}

neural::TrainConfig parse_train(const json& j) {
    reject_unknown(
        j, {"epochs", "batch", "lr", "crop_s", "geometry", "data_dir", "max_train", "max_dev"},
        "train");
    neural::TrainConfig t;
    maybe(j, "epochs", t.epochs);
    maybe(j, "batch", t.batch);
    maybe(j, "lr", t.lr);
    maybe(j, "crop_s", t.crop_s);
    maybe(j, "geometry", t.geometry);
    maybe(j, "data_dir", t.data_dir);
    maybe(j, "max_train", t.max_train);
    maybe(j, "max_dev", t.max_dev);
    DOALAB_CHECK(t.epochs >= 1 && t.batch >= 1, "config: train schedule must be positive");
    return t;
}

RunSpec parse_run(const json& j) {
    reject_unknown(j, {"model", "loss", "gamma", "pit", "sharing", "chunked"}, "runs[]");
    RunSpec r;
    maybe(j, "model", r.model);
    maybe(j, "loss", r.loss);
    maybe(j, "gamma", r.gamma);
    maybe(j, "pit", r.pit);
    if (j.contains("sharing") && !j.at("sharing").is_null())
        r.sharing = j.at("sharing").get<bool>() ? 1 : 0;
    maybe(j, "chunked", r.chunked);
    neural::loss_from_name(r.loss);  // validates
    return r;
}

}  // namespace

Config config_load(const std::string& path) {
    std::ifstream in(path);
    DOALAB_CHECK(in.good(), "config: cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error("config: " + path + " is not valid JSON: " + e.what());
    }
    DOALAB_CHECK(j.is_object(), "config: top level must be an object");
    reject_unknown(j, {"version", "simulate", "train", "runs"}, "top level");

    Config cfg;
    maybe(j, "version", cfg.version);
    DOALAB_CHECK(cfg.version == 1, "config: unsupported version");
    if (j.contains("simulate")) cfg.simulate = parse_simulate(j.at("simulate"));
    if (j.contains("train")) cfg.train = parse_train(j.at("train"));
    if (j.contains("runs")) {
        DOALAB_CHECK(j.at("runs").is_array(), "config: runs must be an array");
        for (const auto& r : j.at("runs")) cfg.runs.push_back(parse_run(r));
    }
    return cfg;
}

}  // namespace doalab
