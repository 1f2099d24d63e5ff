#include "kinwave/smooth_cutoff.hpp"

namespace kinwave {

double smoothstep_c2(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

double low_frequency_window(double s, double delta) {
    // Transition band [delta/2, delta].
    return 1.0 - smoothstep_c2((s - 0.5 * delta) / (0.5 * delta));
}

double unit_window(double s) {
    return 1.0 - smoothstep_c2(s - 1.0);
}

} // namespace kinwave
