#pragma once

#include <string>
#include <vector>

#include "doalab/dataset.hpp"
#include "doalab/neural/train.hpp"

namespace doalab {

// One experiment grid row: which model to train and how to decode.
struct RunSpec {
    std::string model = "mask_split";
    std::string loss = "sce";
    double gamma = 10.0;
    bool pit = false;
    int sharing = -1;  // -1 = model default
    bool chunked = false;
};

// Top-level experiment file. JSON with a fixed, versioned schema; unknown
// keys are rejected so typos fail loudly instead of silently using defaults.
//
//   {
//     "version": 1,
//     "simulate": {
//       "out_dir": "data/desk", "geometry": "uca10",
//       "train": 2000, "dev": 200, "test": 200,
//       "num_sources": 2, "min_separation_deg": 10.0,
//       "duration_s": [1.0, 2.0], "t60": [0.25, 0.7],
//       "snr_db": [10.0, 20.0], "distance_m": [1.0, 2.0],
//       "sample_rate": 16000.0, "write_images": true
//     },
//     "train": {
//       "epochs": 50, "batch": 16, "lr": 0.001, "crop_s": 1.0,
//       "geometry": "uca10", "data_dir": "data/desk",
//       "max_train": 0, "max_dev": 0
//     },
//     "runs": [
//       {"model": "mask_split", "loss": "sce", "gamma": 10.0,
//        "pit": false, "sharing": null, "chunked": false}
//     ]
//   }
struct Config {
    int version = 1;
    GenConfig simulate;
    neural::TrainConfig train;
    std::vector<RunSpec> runs;
};

Config config_load(const std::string& path);

}  // namespace doalab
