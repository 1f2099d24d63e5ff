#include "kinwave/envelopes.hpp"

#include <cmath>
#include <cstdio>

#include "kinwave/common.hpp"

namespace kinwave {

double b_profile(double z, double t, double m) {
    return std::pow(1.0 + z * z / (1.0 + t), -m);
}

double phi_structure(double t, double x_mag, double m) {
    const double c = FLUID_SOUND_SPEED;
    double v = std::pow(1.0 + t, -1.5) * b_profile(x_mag, t, m) +
               std::pow(1.0 + t, -2.0) * b_profile(x_mag - c * t, t, m);
    if (x_mag <= c * t)
        v += std::pow(1.0 + t, -1.5) * b_profile(x_mag, t, 1.5);
    return v;
}

double Envelope::eval(double x_mag, double t) const {
    if (cone_gated && x_mag > gate_speed * t) return 0.0;
    switch (kind) {
    case Kind::Diffusion:
        return std::pow(1.0 + t, -time_power) * b_profile(x_mag, t, profile_order);
    case Kind::Huygens:
        return std::pow(1.0 + t, -time_power) *
               b_profile(x_mag - speed * t, t, profile_order);
    case Kind::StaticExp:
        return std::exp(-time_power * t) * std::pow(1.0 + x_mag, -profile_order);
    case Kind::StaticAlg:
        return std::pow(1.0 + t, -time_power) * std::pow(1.0 + x_mag, -profile_order);
    }
    return 0.0; // unreachable
}

Envelope Envelope::gated(double cone_speed) const {
    Envelope e = *this;
    e.cone_gated = true;
    e.gate_speed = cone_speed;
    return e;
}

Envelope Envelope::diffusion(double a, double b) {
    Envelope e;
    e.kind = Kind::Diffusion;
    e.time_power = a;
    e.profile_order = b;
    return e;
}

Envelope Envelope::huygens(double a, double b, double c) {
    Envelope e;
    e.kind = Kind::Huygens;
    e.time_power = a;
    e.profile_order = b;
    e.speed = c;
    return e;
}

Envelope Envelope::static_exp(double a, double b) {
    Envelope e;
    e.kind = Kind::StaticExp;
    e.time_power = a;
    e.profile_order = b;
    return e;
}

Envelope Envelope::static_alg(double a, double b) {
    Envelope e;
    e.kind = Kind::StaticAlg;
    e.time_power = a;
    e.profile_order = b;
    return e;
}

std::string Envelope::describe() const {
    char buf[128];
    switch (kind) {
    case Kind::Diffusion:
        std::snprintf(buf, sizeof buf, "(1+t)^-%g B_%g(|x|)", time_power, profile_order);
        break;
    case Kind::Huygens:
        std::snprintf(buf, sizeof buf, "(1+t)^-%g B_%g(|x|-%.3gt)", time_power,
                      profile_order, speed);
        break;
    case Kind::StaticExp:
        std::snprintf(buf, sizeof buf, "exp(-%gt) (1+|x|)^-%g", time_power, profile_order);
        break;
    case Kind::StaticAlg:
        std::snprintf(buf, sizeof buf, "(1+t)^-%g (1+|x|)^-%g", time_power, profile_order);
        break;
    }
    std::string s(buf);
    if (cone_gated) {
        std::snprintf(buf, sizeof buf, " [|x|<=%.3gt]", gate_speed);
        s += buf;
    }
    return s;
}

} // namespace kinwave
