#include "kinwave/potential.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace kinwave {

namespace {
const double PI = std::acos(-1.0);
}

double KernelParams::gamma0() const {
    switch (beta) {
        case AngularLaw::AbsCos:
            // int_{S^2} |cos theta| dOmega = 2 pi int_0^pi |cos| sin = 2 pi.
            return 2.0 * PI;
    }
    throw std::logic_error("KernelParams: unknown angular law");
}

double KernelParams::beta_of(double theta) const {
    switch (beta) {
        case AngularLaw::AbsCos:
            return std::abs(std::cos(theta));
    }
    throw std::logic_error("KernelParams: unknown angular law");
}

void KernelParams::validate() const {
    auto fail = [](const char *field, double value, const char *range) {
        std::ostringstream msg;
        msg << "KernelParams: " << field << " = " << value << " out of range " << range;
        throw std::invalid_argument(msg.str());
    };
    if (!(gamma >= 0.0 && gamma <= 1.0)) fail("gamma", gamma, "[0, 1]");
    if (!(kappa > 0.0 && kappa < 1.0)) fail("kappa", kappa, "(0, 1)");
    if (!(q_prime > 0.0 && q_prime < 1.0)) fail("q_prime", q_prime, "(0, 1)");
}

double in_plane_weight(double r, const KernelParams &params) {
    if (params.beta == AngularLaw::AbsCos) {
        // Closed form; agrees with the generic branch below (unit test).
        return 2.0 * std::pow(1.0 + r * r, 0.5 * (params.gamma - 1.0));
    }
    if (r < 1e-14) {
        // beta(pi/2 - arctan r)/r -> beta'(pi/2-)-type limit; for the cutoff
        // family behaving like |cos| near pi/2 this tends to 1, giving 2.
        double t = std::atan(r);
        return std::pow(1.0 + r * r, 0.5 * (params.gamma - 1.0)) *
               std::sqrt(1.0 + r * r) * (params.beta_of(t) + 1.0);
    }
    double t = std::atan(r);
    return std::pow(1.0 + r * r, 0.5 * (params.gamma - 1.0)) * std::sqrt(1.0 + r * r) *
           (params.beta_of(t) + params.beta_of(0.5 * PI - t) / r);
}

} // namespace kinwave
