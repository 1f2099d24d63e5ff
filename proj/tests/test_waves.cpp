/**
 * Wave-envelope audits on the reconstructed fluid field: the long-wave
 * eigendata table and its cache, the radial reconstruction against
 * independent oracles (t = 0 low-pass profile, conservation, parity), and
 * the decay-rate sweeps for general and microscopic initial data.
 *
 * Quantitative pins were measured on the n = 10, R = 6 working grid and
 * carry slack for platform noise; the physical windows (interior 1.5 +- 0.15,
 * ridge speed within 3% of sqrt(5/3), ridge 2.0 +- 0.2, microscopic interior
 * 2.0 +- 0.2) are asserted separately from the tighter regression pins so a
 * drift inside the window is visible before it becomes a failure.
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "kinwave/common.hpp"
#include "kinwave/kernel_cache.hpp"
#include "kinwave/operator_assembly.hpp"
#include "kinwave/quadrature.hpp"
#include "kinwave/smooth_cutoff.hpp"
#include "kinwave/wave_fit.hpp"

#include <cmath>
#include <complex>
#include <cstring>
#include <string>

using namespace kinwave;

namespace {

const double SOUND = std::sqrt(5.0 / 3.0);

const CollisionOperator &wave_operator() {
    static CollisionOperator op =
        assemble_or_load(cache_dir_from_env(), VelocityGrid::make(10, 6.0), KernelParams{});
    return op;
}

const FluidWaveTable &wave_table() {
    static FluidWaveTable table = wave_table_or_load(cache_dir_from_env(), wave_operator(), {});
    return table;
}

// Low-passed spatial profile phi_delta(r): the exact r-space image of the
// windowed Gaussian transform, by 1D adaptive quadrature.  Independent of the
// reconstruction path (no eigendata, no product rule).
double phi_delta(double r, double width, double delta) {
    const double pi = std::acos(-1.0);
    auto f = [&](double rho) {
        const double ph = std::pow(2.0 * pi * width * width, 1.5) *
                          std::exp(-0.5 * width * width * rho * rho);
        const double sinc = (rho * r < 1e-8) ? 1.0 : std::sin(rho * r) / (rho * r);
        return rho * rho * ph * low_frequency_window(rho, delta) * sinc;
    };
    return adaptive_simpson(f, 0.0, delta, 1e-11, 1e-300, {delta / 2}) / (2.0 * pi * pi);
}

} // namespace

TEST_CASE("eigendata table: health, cache round-trip, interpolation fidelity") {
    const FluidWaveTable &t = wave_table();
    REQUIRE(t.rho.size() == 24);
    REQUIRE(t.s.size() == 5);
    CHECK(t.max_residual <= 5e-10);        // measured 9.9e-11
    CHECK(t.max_iterations <= 40);         // measured 20

    // Branch structure at every node: conjugate acoustic pair, real slow
    // branches, thermal decaying faster than shear.
    for (std::size_t idx = 0; idx < t.nodes(); ++idx) {
        const auto &lam = t.lambda[idx];
        const double scale = std::abs(lam[0]);
        CHECK(std::abs(lam[0] - std::conj(lam[1])) <= 1e-8 * scale);
        CHECK(lam[0].imag() < 0.0);
        for (int j = 2; j < 5; ++j) {
            CHECK(std::abs(lam[std::size_t(j)].imag()) <= 1e-8 * scale);
            CHECK(lam[std::size_t(j)].real() < 0.0);
        }
        CHECK(lam[4].real() < lam[2].real()); // thermal below the shear pair
    }

    // Acoustic speed from the smallest tabulated frequency (axis column).
    const std::size_t base = t.node_index(0, 0);
    const double a_est = -t.lambda[base][0].imag() / t.rho.front();
    CHECK(std::abs(a_est - SOUND) / SOUND <= 5e-3); // measured -1.3e-4 rel

    // Thermal / shear damping ratio at leading order (this grid: 1.5164;
    // the n = 12 value is 1.5028).
    const double ratio = t.lambda[base][4].real() / t.lambda[base][2].real();
    CHECK(ratio >= 1.45);
    CHECK(ratio <= 1.58);

    // Cache round-trip is bit-identical.
    const FluidWaveTable reload = wave_table_or_load(cache_dir_from_env(), wave_operator(), {});
    REQUIRE(reload.nodes() == t.nodes());
    for (std::size_t idx : {std::size_t(0), t.nodes() / 2, t.nodes() - 1}) {
        CHECK(std::memcmp(t.lambda[idx].data(), reload.lambda[idx].data(),
                          sizeof(std::complex<double>) * 5) == 0);
        CHECK(std::memcmp(t.vectors[idx].data(), reload.vectors[idx].data(),
                          sizeof(std::complex<double>) *
                              std::size_t(t.vectors[idx].size())) == 0);
    }

    // Off-table frequencies: spline + barycentric resampling against fresh
    // eigensolves.
    const TableProbe probe = probe_table_interpolation(t, wave_operator(), 6);
    CHECK(probe.max_lambda_err <= 1e-4);  // measured 1.9e-5
    CHECK(probe.max_moment_err <= 1e-3);  // measured 2.0e-4

    // Request hygiene.
    CHECK(wave_table_name(KernelParams{}, 10, 6.0, WaveTableSpec{}) !=
          wave_table_name(KernelParams{}, 12, 6.0, WaveTableSpec{}));
    WaveTableSpec bad;
    bad.delta = 0.0;
    CHECK_THROWS_AS(wave_table_or_load("", wave_operator(), bad), std::invalid_argument);
    bad = WaveTableSpec{};
    bad.rho_min = 2.0; // >= delta
    CHECK_THROWS_AS(wave_table_or_load("", wave_operator(), bad), std::invalid_argument);
}

TEST_CASE("initial data: carrier content, parity, validation") {
    const FluidWaveTable &t = wave_table();
    const VelocityGrid &grid = t.grid;

    const RadialDatum mass = mass_datum(t);
    CHECK(mass.z_parity == +1);
    CHECK(grid.norm(mass.velocity_profile) == doctest::Approx(1.0).epsilon(1e-12));

    const RadialDatum micro = microscopic_datum(t);
    CHECK(micro.z_parity == -1);
    CHECK(grid.norm(micro.velocity_profile) == doctest::Approx(1.0).epsilon(1e-12));
    const RadialDatum even = microscopic_datum_even(t);
    CHECK(even.z_parity == +1);
    for (int j = 0; j < 5; ++j) {
        CHECK(std::abs(grid.dot(t.basis.chi.col(j), micro.velocity_profile)) <= 1e-13);
        CHECK(std::abs(grid.dot(t.basis.chi.col(j), even.velocity_profile)) <= 1e-13);
    }

    CHECK_THROWS_AS(mass_datum(t, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(microscopic_datum(t, 0.0), std::invalid_argument);

    RadialDatum bad = mass;
    bad.z_parity = 2;
    CHECK_THROWS_AS(FluidWaveModel(t, bad, {}), std::invalid_argument);
    WaveQuadrature thin;
    thin.rho_nodes = 4;
    CHECK_THROWS_AS(FluidWaveModel(t, mass, thin), std::invalid_argument);
}

TEST_CASE("mass-datum reconstruction against independent oracles") {
    const FluidWaveTable &t = wave_table();
    const RadialDatum mass = mass_datum(t);
    const FluidWaveModel model(t, mass, {});

    // The zero-frequency mass response of the five-branch sum is the mass
    // moment of the fluid projection of chi_0: unity up to O(rho_min^2).
    CHECK(std::abs(model.zero_frequency_mass_response().real() - 1.0) <= 1e-4);
    CHECK(std::abs(model.zero_frequency_mass_response().imag()) <= 1e-12);

    // Radial data excite the shear pair only through grid anisotropy.
    CHECK(model.shear_amplitude() > 0.0);
    CHECK(model.shear_amplitude() <= 1e-2); // measured 5.8e-3

    // t = 0: the reconstruction must reproduce the low-passed datum profile
    // up to the fluid-projection defect (measured 4.1e-4 of the peak).
    {
        const std::vector<double> rs = {0.0, 1.0, 2.0, 3.5, 5.0, 8.0, 12.0, 20.0, 40.0};
        const MomentField mf = model.moments(0.0, rs);
        const double peak = phi_delta(0.0, mass.width, 1.3);
        CHECK(peak == doctest::Approx(0.190586).epsilon(1e-4));
        for (std::size_t i = 0; i < rs.size(); ++i) {
            const double want = phi_delta(rs[i], mass.width, 1.3);
            CHECK(std::abs(mf.moments(0, Eigen::Index(i)) - want) <= 2e-3 * peak);
        }
        CHECK(mf.imag_residue <= 1e-10); // measured 4.4e-13
        CHECK(std::abs(mf.moments(3, 0)) <= 1e-14); // parity zero at the origin
    }

    // Conservation: the ball integral of the mass moment approaches the
    // zero-frequency amplitude phihat(0); the residual is window-truncation
    // ringing, quadrature-stable (measured <= 7.2e-3).
    {
        const double pi = std::acos(-1.0);
        const double target = std::pow(2.0 * pi * mass.width * mass.width, 1.5);
        for (double R : {60.0, 120.0, 200.0})
            CHECK(rel_diff(model.spatial_moment(0.0, R), target) <= 1e-3);
        for (double time : {10.0, 30.0})
            for (double R : {60.0, 120.0, 200.0})
                CHECK(rel_diff(model.spatial_moment(time, R), target) <= 2e-2);
    }

    // Late time: parity of the origin momentum survives propagation.
    {
        const MomentField mf = model.moments(200.0, {0.0, 5.0, 100.0, 260.0});
        CHECK(std::abs(mf.moments(3, 0)) <= 1e-14);
        CHECK(mf.imag_residue <= 1e-10);
    }
}

TEST_CASE("general-data sweep: interior 3/2 decay, sound-speed ridge, quadratic ridge decay") {
    const WaveSweep sweep =
        run_wave_sweep(wave_table(), mass_datum(wave_table()), wave_time_lattice());
    const WaveFitReport &r = sweep.report;

    // Contract windows.
    CHECK(std::abs(r.interior.exponent - 1.5) <= 0.15);
    REQUIRE(r.ridge_detected);
    CHECK(std::abs(r.ridge_speed - SOUND) / SOUND <= 0.03);
    CHECK(std::abs(r.ridge.exponent - 2.0) <= 0.2);

    // Regression pins (measured 1.4756 / 1.28555 / 2.0169).
    CHECK(r.interior.exponent >= 1.42);
    CHECK(r.interior.exponent <= 1.53);
    CHECK(r.interior.rms <= 3e-2);
    CHECK(r.ridge_speed >= 1.27);
    CHECK(r.ridge_speed <= 1.30);
    CHECK(r.ridge_drift >= -0.8); // diffusive peak offset, inward
    CHECK(r.ridge_drift <= -0.3);
    CHECK(r.ridge_speed_rms <= 0.1);
    CHECK(r.ridge.exponent >= 1.95);
    CHECK(r.ridge.exponent <= 2.08);
    CHECK(r.ridge.rms <= 2e-2);
    CHECK(r.ridge.points == 13);

    CHECK(r.refinement_change <= 5e-3); // measured 1.0e-3
    CHECK(r.imag_residue <= 1e-9);
    CHECK(r.seconds <= 600.0); // measured ~4 s against a warm table
    for (const RadialField &f : sweep.fields)
        for (double v : f.values) CHECK(std::isfinite(v));
}

TEST_CASE("microscopic-data sweeps: generic quadratic interior decay, parity suppression") {
    const FluidWaveTable &t = wave_table();
    const WaveSweep odd = run_wave_sweep(t, microscopic_datum(t), wave_time_lattice());
    const WaveFitReport &ro = odd.report;

    // Contract window for microscopic data.
    CHECK(std::abs(ro.interior.exponent - 2.0) <= 0.2);

    // Regression pins (measured 1.9650, rms 1.6e-2).
    CHECK(ro.interior.exponent >= 1.90);
    CHECK(ro.interior.exponent <= 2.03);
    CHECK(ro.interior.rms <= 5e-2);
    CHECK(ro.refinement_change <= 1.5e-2); // measured 3.4e-3
    CHECK(ro.imag_residue <= 1e-9);
    CHECK(ro.seconds <= 600.0);

    // The microscopic wave shell decays half a power faster than the general
    // one (measured 2.4670), still advected at the sound speed.
    REQUIRE(ro.ridge_detected);
    CHECK(ro.ridge.exponent >= 2.3);
    CHECK(ro.ridge.exponent <= 2.6);
    CHECK(std::abs(ro.ridge_speed - SOUND) / SOUND <= 0.03);

    // Half-power gap between microscopic and general interior decay.
    const WaveSweep general = run_wave_sweep(t, mass_datum(t), wave_time_lattice());
    const double gap = ro.interior.exponent - general.report.interior.exponent;
    CHECK(gap >= 0.3);
    CHECK(gap <= 0.7);

    // An even microscopic datum under-excites the slow branch (the coupling
    // is odd-parity at first order) and decays faster still: measured 2.4301.
    const WaveSweep even = run_wave_sweep(t, microscopic_datum_even(t), wave_time_lattice());
    CHECK(even.report.interior.exponent >= 2.2);
    CHECK(even.report.interior.exponent <= 2.55);
}

TEST_CASE("decay fits: input validation and synthetic-field recovery") {
    auto field = [](double t, std::vector<double> radii, std::vector<double> values) {
        RadialField f;
        f.t = t;
        f.radii = std::move(radii);
        f.values = std::move(values);
        return f;
    };

    // Too few samples / wrong ordering / short span all throw.
    std::vector<RadialField> two = {field(1, {0}, {1}), field(10, {0}, {1})};
    CHECK_THROWS_AS(fit_decay(two), std::invalid_argument);
    std::vector<RadialField> unordered;
    for (double t : {1.0, 3.0, 2.0, 5.0, 10.0}) unordered.push_back(field(t, {0}, {1}));
    CHECK_THROWS_AS(fit_decay(unordered), std::invalid_argument);
    std::vector<RadialField> narrow;
    for (double t : {1.0, 2.0, 3.0, 4.0, 5.0}) narrow.push_back(field(t, {0}, {1}));
    CHECK_THROWS_AS(fit_decay(narrow), std::invalid_argument);

    // Pure interior power law, flat in r: exact exponent, no ridge, flagged
    // rather than failed.
    {
        std::vector<RadialField> fields;
        for (double t : {10.0, 20.0, 40.0, 70.0, 100.0, 130.0}) {
            std::vector<double> radii, values;
            for (double r = 0.0; r <= 2.0 * t; r += t / 8.0) {
                radii.push_back(r);
                values.push_back(std::pow(1.0 + t, -1.5));
            }
            fields.push_back(field(t, radii, values));
        }
        const WaveFitReport rep = fit_decay(fields);
        CHECK(rep.interior.exponent == doctest::Approx(1.5).epsilon(1e-12));
        CHECK(rep.interior.rms <= 1e-12);
        CHECK_FALSE(rep.ridge_detected);
    }

    // Planted Gaussian ridge: location c0 t exactly, amplitude (1+t)^{-1.7}.
    // The fits must recover speed, zero drift, and the exponent sharply.
    {
        const double c0 = 1.2;
        std::vector<RadialField> fields;
        for (double t : {20.0, 35.0, 60.0, 90.0, 140.0, 200.0}) {
            std::vector<double> radii, values;
            for (double r = 0.0; r <= 1.8 * c0 * t; r += 1.0) {
                radii.push_back(r);
                const double core = 0.1 * std::pow(1.0 + t, -1.5) * std::exp(-r * r / (1.0 + t));
                const double shell =
                    std::pow(1.0 + t, -1.7) * std::exp(-0.5 * (r - c0 * t) * (r - c0 * t) / 9.0);
                values.push_back(core + shell);
            }
            fields.push_back(field(t, radii, values));
        }
        const WaveFitReport rep = fit_decay(fields);
        REQUIRE(rep.ridge_detected);
        CHECK(rep.ridge_speed == doctest::Approx(c0).epsilon(2e-3));
        CHECK(std::abs(rep.ridge_drift) <= 0.1);
        CHECK(rep.ridge.exponent == doctest::Approx(1.7).epsilon(5e-3));
        CHECK(rep.interior.exponent == doctest::Approx(1.5).epsilon(5e-3));
    }
}
