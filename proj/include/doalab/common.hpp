#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace doalab {

class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define DOALAB_CHECK(cond, msg)                                  \
    do {                                                         \
        if (!(cond)) throw ::doalab::Error(std::string(msg));    \
    } while (0)

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
constexpr double kSpeedOfSound = 343.0;  // m/s

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

// Wraps into [0, 360).
inline double wrap_deg(double d) {
    d = std::fmod(d, 360.0);
    return d < 0 ? d + 360.0 : d;
}

// Cyclic absolute difference in degrees, in [0, 180].
inline double cyclic_diff_deg(double a, double b) {
    double d = std::fabs(wrap_deg(a) - wrap_deg(b));
    return d > 180.0 ? 360.0 - d : d;
}

}  // namespace doalab
