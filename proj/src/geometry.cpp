#include "doalab/geometry.hpp"

#include <cmath>

namespace doalab {

void ArrayGeometry::mic_offset(int m, double& dx, double& dy) const {
    const double a = mic_angle(m);
    dx = radius_m * std::cos(a);
    dy = radius_m * std::sin(a);
}

namespace {

std::vector<double> circle_angles(int m) {
    std::vector<double> a(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) a[static_cast<size_t>(i)] = kTwoPi * i / m;
    return a;
}

// Four diameters plus four chords of the 8-mic circle.
std::vector<std::pair<int, int>> eight_mic_pairs() {
    return {{0, 4}, {1, 5}, {2, 6}, {3, 7}, {0, 2}, {2, 4}, {4, 6}, {6, 0}};
}

}  // namespace

ArrayGeometry ArrayGeometry::uca5() {
    ArrayGeometry g;
    g.name = "uca5";
    g.radius_m = 0.05;
    g.mic_angles = circle_angles(8);
    g.ipd_pairs = eight_mic_pairs();
    return g;
}

ArrayGeometry ArrayGeometry::uca10() {
    ArrayGeometry g;
    g.name = "uca10";
    g.radius_m = 0.10;
    g.mic_angles = circle_angles(8);
    g.ipd_pairs = eight_mic_pairs();
    return g;
}

ArrayGeometry ArrayGeometry::qa10() {
    ArrayGeometry g;
    g.name = "qa10";
    g.radius_m = 0.10;
    auto full = circle_angles(8);
    g.mic_angles = {full[0], full[1], full[2]};
    g.ipd_pairs = {{0, 1}, {1, 2}, {0, 2}};
    return g;
}

ArrayGeometry ArrayGeometry::by_name(const std::string& name) {
    if (name == "uca5") return uca5();
    if (name == "uca10") return uca10();
    if (name == "qa10") return qa10();
    throw Error("unknown geometry: " + name + " (expected uca5, uca10, or qa10)");
}

}  // namespace doalab
