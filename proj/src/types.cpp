#include "cavmem/types.hpp"

#include <cmath>
#include <sstream>

namespace cavmem {

PhysicalParams PhysicalParams::bad_cavity(double cooperativity, double delta, double gamma_s,
                                          double gamma) {
    PhysicalParams p;
    p.cooperativity = cooperativity;
    p.gamma = gamma;
    p.delta = delta;
    p.gamma_s = gamma_s;
    p.validate();
    return p;
}

PhysicalParams PhysicalParams::full_cavity(double coupling_gN, double kappa, double delta,
                                           double gamma_s, double gamma) {
    PhysicalParams p;
    p.gamma = gamma;
    p.delta = delta;
    p.gamma_s = gamma_s;
    p.kappa = kappa;
    p.coupling_gN = coupling_gN;
    if (!(kappa > 0.0) || !(coupling_gN > 0.0)) {
        throw std::invalid_argument("full_cavity: kappa and coupling_gN must be positive");
    }
    p.cooperativity = coupling_gN * coupling_gN / (kappa * gamma);
    p.validate();
    return p;
}

double PhysicalParams::field_coupling() const {
    return std::sqrt(2.0 * gamma * cooperativity);
}

void PhysicalParams::validate() const {
    std::ostringstream err;
    if (!(cooperativity > 0.0) || !std::isfinite(cooperativity)) {
        err << "cooperativity must be positive and finite, got " << cooperativity;
        throw std::invalid_argument(err.str());
    }
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        err << "gamma must be positive and finite, got " << gamma;
        throw std::invalid_argument(err.str());
    }
    if (gamma_s < 0.0 || !std::isfinite(gamma_s)) {
        err << "gamma_s must be nonnegative and finite, got " << gamma_s;
        throw std::invalid_argument(err.str());
    }
    if (!std::isfinite(delta)) {
        throw std::invalid_argument("delta must be finite");
    }
    if (kappa != 0.0 || coupling_gN != 0.0) {
        if (!(kappa > 0.0) || !(coupling_gN > 0.0)) {
            throw std::invalid_argument("cavity parameters require both kappa > 0 and coupling_gN > 0");
        }
        const double derived = coupling_gN * coupling_gN / (kappa * gamma);
        if (std::abs(derived - cooperativity) > 1e-12 * std::abs(cooperativity)) {
            err << "cooperativity " << cooperativity << " inconsistent with gN^2/(kappa gamma) = "
                << derived;
            throw std::invalid_argument(err.str());
        }
    }
}

TimeGrid TimeGrid::over(double t0, double t1, std::size_t n) {
    if (!(t1 > t0) || !std::isfinite(t0) || !std::isfinite(t1)) {
        throw std::invalid_argument("time grid requires finite t1 > t0");
    }
    if (n < 2) {
        throw std::invalid_argument("time grid requires at least 2 samples");
    }
    return {t0, t1, n};
}

bool TimeGrid::matches(const TimeGrid& other, double rel_tol) const {
    const double scale = std::max(std::abs(span()), std::abs(other.span()));
    return n == other.n && std::abs(t0 - other.t0) <= rel_tol * scale &&
           std::abs(t1 - other.t1) <= rel_tol * scale;
}

Envelope::Envelope(TimeGrid grid, std::vector<Complex> values, EnvelopeRole role)
    : grid_(grid), values_(std::move(values)), role_(role) {
    if (values_.size() != grid_.n) {
        throw std::invalid_argument("envelope sample count must equal the grid size");
    }
    if (grid_.n < 2) {
        throw std::invalid_argument("envelope requires at least 2 samples");
    }
}

double Envelope::norm2() const {
    const double dt = grid_.dt();
    double acc = 0.5 * (std::norm(values_.front()) + std::norm(values_.back()));
    for (std::size_t i = 1; i + 1 < values_.size(); ++i) acc += std::norm(values_[i]);
    return acc * dt;
}

Envelope Envelope::normalized() const {
    const double n2 = norm2();
    if (!(n2 > 0.0) || !std::isfinite(n2)) {
        throw std::invalid_argument("cannot normalize an envelope with zero or non-finite norm");
    }
    const double scale = 1.0 / std::sqrt(n2);
    std::vector<Complex> scaled(values_.size());
    for (std::size_t i = 0; i < values_.size(); ++i) scaled[i] = values_[i] * scale;
    return Envelope(grid_, std::move(scaled), role_);
}

Complex Envelope::at(double t) const {
    const double dt = grid_.dt();
    if (t <= grid_.t0) return values_.front();
    if (t >= grid_.t1) return values_.back();
    const double x = (t - grid_.t0) / dt;
    std::size_t i = static_cast<std::size_t>(x);
    if (i + 1 >= values_.size()) i = values_.size() - 2;
    const double w = x - static_cast<double>(i);
    return values_[i] * (1.0 - w) + values_[i + 1] * w;
}

Envelope Envelope::refined() const {
    std::vector<Complex> fine(2 * values_.size() - 1);
    for (std::size_t i = 0; i + 1 < values_.size(); ++i) {
        fine[2 * i] = values_[i];
        fine[2 * i + 1] = 0.5 * (values_[i] + values_[i + 1]);
    }
    fine.back() = values_.back();
    return Envelope(grid_.refined(), std::move(fine), role_);
}

bool Envelope::all_finite() const {
    for (const Complex& v : values_) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    }
    return true;
}

}  // namespace cavmem
