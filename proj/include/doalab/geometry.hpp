#pragma once

#include <string>
#include <utility>
#include <vector>

#include "doalab/common.hpp"

namespace doalab {

// Circular array in the horizontal plane; mic angles are stored explicitly
// because qa10 keeps uca10 positions while dropping mics.
struct ArrayGeometry {
    std::string name;
    double radius_m = 0.0;
    std::vector<double> mic_angles;               // radians, one per mic
    std::vector<std::pair<int, int>> ipd_pairs;   // 0-based mic indices

    int num_mics() const { return static_cast<int>(mic_angles.size()); }

    double mic_angle(int m) const {
        DOALAB_CHECK(m >= 0 && m < num_mics(), "mic_angle: index out of range");
        return mic_angles[static_cast<size_t>(m)];
    }

    // Mic position relative to array center, z = 0.
    void mic_offset(int m, double& dx, double& dy) const;

    static ArrayGeometry uca5();   // r = 5 cm, 8 mics
    static ArrayGeometry uca10();  // r = 10 cm, 8 mics
    static ArrayGeometry qa10();   // first 3 mics of uca10
    static ArrayGeometry by_name(const std::string& name);
};

// Uniform azimuth grid with resolution gamma degrees; class i (0-based)
// sits at gamma*(i+1) - (gamma-1)/2 degrees, so classes straddle the
// circle symmetrically and never touch 0 exactly for gamma > 1.
struct AngularGrid {
    double gamma_deg = 0.0;
    int size = 0;

    explicit AngularGrid(double gamma) : gamma_deg(gamma) {
        DOALAB_CHECK(gamma > 0 && gamma <= 360.0, "AngularGrid: bad resolution");
        size = static_cast<int>(360.0 / gamma);
        DOALAB_CHECK(size >= 1, "AngularGrid: empty grid");
    }

    double class_angle_deg(int i) const {
        DOALAB_CHECK(i >= 0 && i < size, "class_angle_deg: index out of range");
        return gamma_deg * (i + 1) - (gamma_deg - 1.0) / 2.0;
    }
    double class_angle_rad(int i) const { return deg2rad(class_angle_deg(i)); }

    // Nearest class under cyclic distance; ties resolve to the lower index.
    int quantize_deg(double angle_deg) const {
        int best = 0;
        double best_d = cyclic_diff_deg(angle_deg, class_angle_deg(0));
        for (int i = 1; i < size; ++i) {
            double d = cyclic_diff_deg(angle_deg, class_angle_deg(i));
            if (d < best_d - 1e-12) {
                best_d = d;
                best = i;
            }
        }
        return best;
    }
};

}  // namespace doalab
