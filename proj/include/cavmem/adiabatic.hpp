// Adiabatic (smooth-control) closed forms and control synthesis.
//
// When the control varies slowly on the scale of the dressed decay
// gamma(1+C) + i*delta, the polarization follows the drive and the memory
// admits closed-form solutions. Retrieval from a stored spin wave emits
//
//   E_out(t) = -sqrt(2 gamma C) * Omega(t) / (gamma(1+C) + i delta)
//              * exp(-H(t) / (gamma(1+C) + i delta)),   H(t) = integral_0^t |Omega|^2,
//
// with total efficiency
//
//   eta_r = C/(1+C) * (1 - exp(-2 gamma(1+C) H(inf) / (gamma^2 (1+C)^2 + delta^2))).
//
// Inverting these relations yields the control that retrieves into a chosen
// output mode, and (by time reversal) the control that stores a given input
// mode with the best possible efficiency C/(1+C).
#pragma once

#include "cavmem/types.hpp"

#include <optional>

namespace cavmem {

struct ShapingOptions {
    // Regularizer for the analytic inversion near the mode boundary; equals
    // the fraction of the mode energy the shaped control never transfers
    // (efficiency deficit is about epsilon_boundary * C/(1+C)).
    double epsilon_boundary = 1e-4;
    // Fraction of the mode duration over which the divergent magnitude is
    // clamped: the first fraction*T for storage, the last for retrieval.
    double truncation_fraction = 0.01;
};

struct ShapingResult {
    Envelope control;                      // shaped Rabi envelope on the mode's grid
    std::vector<double> intensity_profile; // cumulative integral of |Omega|^2 used by the inversion
    bool truncated = false;                // magnitude clamp engaged somewhere
    double epsilon_boundary = 0.0;         // regularizer actually used
    double predicted_efficiency = 0.0;     // C/(1+C), times the spin-decay factor when gamma_s > 0
};

// Trapezoidal integral of |control|^2 between t_from and t_to (both inside
// the grid; partial end intervals integrate the piecewise-linear |value|^2).
double control_intensity_integral(const Envelope& control, double t_from, double t_to);

// Closed-form retrieval output for a given control, from S(0) = 1. A nonzero
// params.gamma_s multiplies the output by exp(-gamma_s t).
Envelope adiabatic_retrieval_output(const PhysicalParams& params, const Envelope& control);

// Control that retrieves the stored excitation into the given output mode
// (defined on [0, T]): magnitude from the analytic inversion
//
//   H(t) = -[(gamma^2(1+C)^2 + delta^2) / (2 gamma(1+C))] * ln(1 - integral_0^t |e|^2 + eps)
//
// and phase carrying the compensation of the control-induced Stark shift.
// For gamma_s > 0 the target is tilted to e(t) e^{gamma_s t} (renormalized)
// so that the decayed emission reproduces the requested shape.
ShapingResult retrieval_control_for_mode(const PhysicalParams& params, const Envelope& target_mode,
                                         double gamma_s, const ShapingOptions& opts = {});

// Closed-form stored amplitude S(T) for a given control and input mode:
// S(T) = sqrt(C/(1+C)) * integral f(t) E_in(t) dt where f is the storage
// response kernel of the control. |integral f E_in|^2 <= 1 with equality only
// for the matched (optimal) control/input pair.
Complex adiabatic_storage_amplitude(const PhysicalParams& params, const Envelope& control,
                                    const Envelope& input);

// Control that stores the given input mode (on [0, T]) with efficiency
// C/(1+C): the time reverse of the retrieval control for the time-reversed
// mode. For gamma_s > 0 the mode is tilted to E_in(t) e^{-gamma_s (T-t)}
// (renormalized) before inversion.
ShapingResult storage_control_for_mode(const PhysicalParams& params, const Envelope& input,
                                       double gamma_s, const ShapingOptions& opts = {});

// Storage response kernel f(t) of a control: the stored amplitude is
// sqrt(C/(1+C)) * integral f(t) E_in(t) dt, and integral |f|^2 <= 1 always,
// with equality approached when the control transfers the whole mode.
Envelope storage_kernel(const PhysicalParams& params, const Envelope& control);

// Diagnostics quantifying how well a run satisfies the smooth-control
// conditions. Rate ratios compare pointwise derivatives against the dressed
// linewidth |gamma C + i delta|; relative rates are measured only where the
// relevant amplitude is above a small fraction of its peak (1e-3 for the
// input, 5e-2 for the control) so the clamped/regularized head and tail of a
// shaped control do not dominate the diagnostic.
struct AdiabaticityMargins {
    double tc_gamma = 0.0;             // T * C * gamma
    double power_ratio = 0.0;          // max|Omega| / |gamma C + i delta|
    double control_rate_ratio = 0.0;   // max|dOmega/dt / Omega| / |gamma C + i delta|
    double magnitude_rate_ratio = 0.0; // max|d|Omega|/dt| / (|Omega| |gamma C + i delta|)
    double phase_rate_ratio = 0.0;     // max|dphi/dt| / |gamma C + i delta|
    double input_rate_ratio = 0.0;     // max|dE_in/dt / E_in| / |gamma C + i delta|; 0 without input
    bool adiabatic = false;            // tc_gamma >= 10 and all ratios <= 0.6
};

AdiabaticityMargins adiabaticity_margins(const PhysicalParams& params, const Envelope& control,
                                         const std::optional<Envelope>& input, double T);

// Duration scale of the retrieved pulse for a control of characteristic Rabi
// frequency omega_scale: (gamma^2 C^2 + delta^2) / (gamma C * omega_scale^2).
double output_duration_estimate(const PhysicalParams& params, double omega_scale);

}  // namespace cavmem
