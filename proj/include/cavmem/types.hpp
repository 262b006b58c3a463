// Core value types for the cavity memory toolkit: physical parameters of a
// single-mode cavity coupled to a Lambda-type atomic ensemble, uniform time
// grids, complex envelopes sampled on those grids, and the (P, S) atomic
// amplitudes (optical polarization and spin wave).
//
// Internal units: the optical polarization decay rate gamma sets the time
// unit (gamma = 1 unless stated otherwise); all rates and detunings are
// expressed in units of gamma, times in units of 1/gamma.
#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace cavmem {

using Complex = std::complex<double>;

// Thrown when grid refinement fails to stabilize a reported efficiency.
class ConvergenceError : public std::runtime_error {
public:
    explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a scan's built-in consistency assertion fails (see experiments.hpp).
class ScanAssertionError : public std::runtime_error {
public:
    explicit ScanAssertionError(const std::string& what) : std::runtime_error(what) {}
};

// Ensemble/cavity parameters. The cooperativity C is the only knob that
// matters in the bad-cavity (adiabatically eliminated) model; kappa and
// coupling_gN are carried only when the full cavity model is requested.
//
//   cooperativity = coupling_gN^2 / (kappa * gamma)
//
// must hold whenever both cavity numbers are present.
struct PhysicalParams {
    double cooperativity = 0.0;   // C > 0
    double gamma = 1.0;           // polarization decay rate (time unit), > 0
    double delta = 0.0;           // two-photon detuning, in units of gamma
    double gamma_s = 0.0;         // spin-wave decay rate, >= 0
    double kappa = 0.0;           // cavity decay rate; 0 means "not set"
    double coupling_gN = 0.0;     // collectively enhanced coupling g*sqrt(N); 0 means "not set"

    // Bad-cavity model: only C, gamma, delta, gamma_s.
    static PhysicalParams bad_cavity(double cooperativity, double delta = 0.0,
                                     double gamma_s = 0.0, double gamma = 1.0);

    // Full cavity model: C is derived from (coupling_gN, kappa, gamma).
    static PhysicalParams full_cavity(double coupling_gN, double kappa, double delta = 0.0,
                                      double gamma_s = 0.0, double gamma = 1.0);

    bool has_cavity() const { return kappa > 0.0 && coupling_gN > 0.0; }

    // Polarization decay rate dressed by the cavity: gamma * (1 + C).
    double dressed_gamma() const { return gamma * (1.0 + cooperativity); }

    // Complex decay constant of the polarization: gamma*(1+C) + i*delta.
    Complex dressed_decay() const { return {dressed_gamma(), delta}; }

    // |gamma*(1+C) + i*delta|^2, the Lorentzian denominator of the dressed line.
    double dressed_line() const { return dressed_gamma() * dressed_gamma() + delta * delta; }

    // sqrt(2*gamma*C): coupling between the polarization and the field mode
    // after the cavity is eliminated.
    double field_coupling() const;

    // Validates positivity and, when cavity numbers are present, consistency
    // of C with gN^2/(kappa*gamma) to relative 1e-12. Throws std::invalid_argument.
    void validate() const;
};

// Uniform closed time grid [t0, t1] with n samples (n >= 2).
struct TimeGrid {
    double t0 = 0.0;
    double t1 = 1.0;
    std::size_t n = 2;

    static TimeGrid over(double t0, double t1, std::size_t n);

    double span() const { return t1 - t0; }
    double dt() const { return (t1 - t0) / static_cast<double>(n - 1); }
    double time(std::size_t i) const {
        // Last sample is exactly t1 so envelope endpoints land on the boundary.
        return i + 1 == n ? t1 : t0 + static_cast<double>(i) * dt();
    }

    // Same span, 2n-1 samples: keeps every existing sample and adds midpoints.
    TimeGrid refined() const { return {t0, t1, 2 * n - 1}; }

    bool matches(const TimeGrid& other, double rel_tol = 1e-12) const;
};

enum class EnvelopeRole {
    InputField,   // incoming photon mode E_in(t)
    OutputField,  // outgoing field E_out(t)
    Control,      // classical control Rabi envelope Omega(t)
    SpinMode,     // spin-wave mode shape
};

// Complex envelope sampled on a uniform grid. Between samples the envelope is
// linear (this is the semantics the integrator and all quadratures use).
// Norms and overlaps are trapezoidal.
class Envelope {
public:
    Envelope() = default;
    Envelope(TimeGrid grid, std::vector<Complex> values, EnvelopeRole role);

    const TimeGrid& grid() const { return grid_; }
    EnvelopeRole role() const { return role_; }
    std::size_t size() const { return values_.size(); }
    const std::vector<Complex>& values() const { return values_; }
    const Complex& operator[](std::size_t i) const { return values_[i]; }

    // Trapezoidal integral of |value|^2 over the grid.
    double norm2() const;

    // Same shape scaled to norm2() == 1. Throws std::invalid_argument on a
    // null envelope.
    Envelope normalized() const;

    // Value at arbitrary t inside the grid span (linear interpolation).
    Complex at(double t) const;

    // Same grid, values refined by midpoint insertion (linear interpolation),
    // preserving the piecewise-linear shape exactly.
    Envelope refined() const;

    bool all_finite() const;

private:
    TimeGrid grid_{};
    std::vector<Complex> values_{};
    EnvelopeRole role_ = EnvelopeRole::InputField;
};

// Atomic amplitudes: P couples to the field, S is the long-lived spin wave.
// Physically initialized runs keep |P|^2 + |S|^2 <= 1 (up to 1e-9 of slack);
// the dynamics layer accepts arbitrary finite states for identity checks.
struct AtomicState {
    Complex P{0.0, 0.0};
    Complex S{0.0, 0.0};

    double excitation() const { return std::norm(P) + std::norm(S); }
};

}  // namespace cavmem
