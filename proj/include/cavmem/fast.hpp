// Fast (pi-pulse) storage and retrieval.
//
// In the fast protocol the control is a short resonant pulse of Rabi
// frequency Omega (convention: a pi pulse lasts pi / (2 Omega)) that swaps
// the polarization and the spin wave, (P, S) -> (i S, i P). Retrieval then
// emits a pure exponential
//
//   E_out(t) = -sqrt(2 gamma C) exp(-(gamma(1+C)) t)        (resonant)
//
// and the optimally stored input is its renormalized time reverse.
#pragma once

#include "cavmem/dynamics.hpp"
#include "cavmem/types.hpp"

namespace cavmem {

// Resonant pulse with pulse area pi: duration() * omega == pi/2.
struct PiPulseSpec {
    double omega = 0.0;  // Rabi frequency, > 0

    static PiPulseSpec with_omega(double omega);
    double duration() const;
};

// Ideal pi-pulse action on the atomic amplitudes: (P, S) -> (i S, i P).
AtomicState pi_pulse_map(const AtomicState& state);

// Closed-form output of fast retrieval (ideal pulse at t = 0) on a grid
// spanning [0, T]: E_out(t) = -sqrt(2 gamma C) exp(-gamma(1+C) t), resonant.
Envelope fast_retrieval_output(const PhysicalParams& params, const TimeGrid& grid);

struct FastInput {
    Envelope mode;        // rising exponential ending at t = T (not renormalized)
    double norm2 = 0.0;   // analytic norm^2 = 1 - exp(-2 gamma(1+C) T)
    bool complete = false; // norm2 >= 1 - 1e-4
};

// Input mode fast storage maps onto the spin wave with unit overlap:
// f(t) = -sqrt(2 gamma(1+C)) exp(gamma(1+C)(t - T)) on [0, T].
FastInput optimal_fast_input(const PhysicalParams& params, const TimeGrid& grid);

// Stored amplitude under an ideal pi pulse at t = T:
// S = sqrt(C/(1+C)) * integral f(t) E_in(t) dt (trapezoidal).
Complex fast_storage_amplitude(const PhysicalParams& params, const Envelope& input);

struct FastProtocolResult {
    Trajectory trajectory;        // sampled on the caller's grid over [0, t1]
    AtomicState before_pulse;     // state at the pulse start t = T
    AtomicState after_pulse;      // state at the pulse end (exact integration)
    AtomicState ideal_after_pulse;
    double map_deviation = 0.0;   // two-norm distance of after_pulse from ideal
    double eta_s = 0.0;           // |S|^2 at the pulse end
};

// Exact fast storage: absorb the input over [0, T] with the control off, then
// apply a rectangular resonant pulse of the given spec over [T, T + pi/(2 Omega)].
// With the control off the dynamics are linear in P alone and the rectangular
// pulse has constant coefficients, so both phases integrate in closed form
// (piecewise-exact for the piecewise-linear input); there is no step-size
// error and no pulse-edge alignment error. The grid must span the pulse
// window; beyond it the polarization rings down freely. Finite pulse strength
// and decay during the pulse make the result deviate from the ideal map; the
// deviation shrinks as Omega grows.
FastProtocolResult simulate_fast_protocol(const PhysicalParams& params, const Envelope& input,
                                          const PiPulseSpec& pulse, const TimeGrid& grid);

}  // namespace cavmem
