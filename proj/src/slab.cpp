#include "kinwave/slab.hpp"

#include "kinwave/common.hpp"
#include "kinwave/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace kinwave {

// ============================================================================
// Geometry
// ============================================================================

double SlabGeometry::eta(int m) const {
    const double pi = std::acos(-1.0);
    return pi * wave_index(m) / half_length;
}

int SlabGeometry::conjugate_row(int m) const {
    const int k = wave_index(m);
    if (-k < -mode_count / 2 || -k >= mode_count - mode_count / 2) return -1;
    return -k + mode_count / 2;
}

SlabGeometry SlabGeometry::make(double half_length, int mode_count) {
    if (!(half_length > 0.0))
        throw std::invalid_argument("SlabGeometry: half_length must be positive, got " +
                                    std::to_string(half_length));
    if (mode_count < 2 || mode_count % 2 != 0)
        throw std::invalid_argument("SlabGeometry: mode_count must be even and >= 2, got " +
                                    std::to_string(mode_count));
    SlabGeometry g;
    g.half_length = half_length;
    g.mode_count = mode_count;
    return g;
}

// ============================================================================
// ModeField
// ============================================================================

Eigen::VectorXcd ModeField::eval_at(double x) const {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(values.cols());
    for (Eigen::Index m = 0; m < values.rows(); ++m) {
        const double phase = geom.eta(static_cast<int>(m)) * x;
        const std::complex<double> e(std::cos(phase), std::sin(phase));
        out += e * values.row(m).transpose();
    }
    return out;
}

double ModeField::hermitian_defect() const {
    double worst = 0.0;
    for (Eigen::Index m = 0; m < values.rows(); ++m) {
        const int cm = geom.conjugate_row(static_cast<int>(m));
        if (cm < 0) {
            // No partner: a real field needs this coefficient real.
            worst = std::max(worst, values.row(m).imag().cwiseAbs().maxCoeff());
            continue;
        }
        const double d =
            (values.row(m) - values.row(cm).conjugate()).cwiseAbs().maxCoeff();
        worst = std::max(worst, d);
    }
    return worst;
}

double ModeField::weighted_l2(double tau) const {
    const Eigen::VectorXd wv = op->grid.bracket_weights(tau);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < values.cols(); ++i)
        acc += sq(wv[i]) * values.col(i).squaredNorm();
    return std::sqrt(2.0 * geom.half_length * op->grid.cell_weight * acc);
}

ModeField ModeField::zero_like(const ModeField &model) {
    ModeField f;
    f.geom = model.geom;
    f.op = model.op;
    f.values = Eigen::MatrixXcd::Zero(model.values.rows(), model.values.cols());
    return f;
}

ModeField ModeField::zero(const SlabGeometry &geom,
                          std::shared_ptr<const CollisionOperator> op) {
    ModeField f;
    f.geom = geom;
    f.values = Eigen::MatrixXcd::Zero(geom.mode_count,
                                      static_cast<Eigen::Index>(op->grid.size()));
    f.op = std::move(op);
    return f;
}

// ============================================================================
// Canonical datum
// ============================================================================

double bump_profile(double x) {
    const double s = 1.0 - x * x;
    if (s <= 0.0) return 0.0;
    return std::exp(1.0 - 1.0 / s);
}

double CompactDatum::eval(double x, double abs_v) const {
    return bump_profile((x - center) / radius) * std::pow(1.0 + abs_v, -q_weight);
}

Eigen::VectorXd datum_mode_coefficients(const SlabGeometry &geom, const CompactDatum &datum) {
    // c_m = (1/2X) Int bump((x-c)/r) e^{-i eta_m x} dx.  Substituting
    // x = c + r u and using that the bump is even in u leaves a cosine
    // integral over [0, 1]; a nonzero center only contributes the phase
    // e^{-i eta_m c}, which make_mode_datum applies.  The centered canonical
    // datum therefore has exactly real, even-in-m coefficients, and Hermitian
    // mode symmetry holds with zero defect.
    const auto &rule = gauss_legendre(64);
    Eigen::VectorXd coeff(geom.mode_count);
    for (int m = 0; m < geom.mode_count; ++m) {
        const double eta = geom.eta(m);
        double acc = 0.0;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            const double u = 0.5 * (rule.nodes[q] + 1.0); // [0,1]
            acc += 0.5 * rule.weights[q] * bump_profile(u) * std::cos(eta * datum.radius * u);
        }
        coeff[m] = datum.radius * acc / geom.half_length;
    }
    return coeff;
}

ModeField make_mode_datum(std::shared_ptr<const CollisionOperator> op,
                          const SlabGeometry &geom, const CompactDatum &datum) {
    const Eigen::VectorXd coeff = datum_mode_coefficients(geom, datum);
    const Eigen::VectorXd profile = op->grid.bracket_weights(-datum.q_weight);

    ModeField f;
    f.geom = geom;
    f.values.resize(geom.mode_count, profile.size());
    for (int m = 0; m < geom.mode_count; ++m) {
        // The lowest mode -K/2 has no +K/2 partner in the storage, so a real
        // field cannot carry it consistently once a translation phase or the
        // transport multiplier acts on it.  Drop it: its coefficient sits at
        // the truncation scale already, and every downstream operation is
        // mode-diagonal, so the representation stays exactly Hermitian.
        if (geom.conjugate_row(m) < 0) {
            f.values.row(m).setZero();
            continue;
        }
        std::complex<double> phase(1.0, 0.0);
        if (datum.center != 0.0) {
            const double a = -geom.eta(m) * datum.center;
            phase = std::complex<double>(std::cos(a), std::sin(a));
        }
        f.values.row(m) = (phase * coeff[m]) * profile.transpose();
    }
    f.op = std::move(op);
    return f;
}

} // namespace kinwave
