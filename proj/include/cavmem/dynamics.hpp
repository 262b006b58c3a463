// Exact (non-adiabatic) dynamics of the memory.
//
// Bad-cavity model, complex amplitude equations:
//
//   dP/dt = -(gamma(1+C) + i*delta) P + i Omega S + i sqrt(2 gamma C) E_in
//   dS/dt = -gamma_s S + i conj(Omega) P
//   E_out = E_in + i sqrt(2 gamma C) P
//
// Full cavity model (no adiabatic elimination):
//
//   dE/dt = -kappa E + i gN P + sqrt(2 kappa) E_in
//   dP/dt = -(gamma + i*delta) P + i gN E + i Omega S
//   dS/dt = -gamma_s S + i conj(Omega) P
//   E_out = sqrt(2 kappa) E - E_in
//
// Integrator: classical RK4 on a uniform grid; envelopes are evaluated at
// half-steps by linear interpolation (their declared semantics). Reported
// efficiencies are accepted only once doubling the grid changes them by less
// than eta_tol; otherwise the run keeps refining and eventually throws
// ConvergenceError.
#pragma once

#include "cavmem/types.hpp"

namespace cavmem {

enum class ModelKind { BadCavity, FullCavity };
enum class RunKind { Storage, Retrieval };

struct ConvergenceReport {
    std::size_t n_final = 0;   // samples of the accepted grid
    int refinements = 0;       // doublings applied beyond the requested grid
    double last_delta = 0.0;   // efficiency change at the accepted doubling
    bool checked = false;      // false when convergence checking was disabled
};

struct IntegratorOptions {
    double eta_tol = 1e-6;        // efficiency stability target under doubling
    int max_refinements = 11;     // hard cap on doublings (memory/time guard)
    bool check_convergence = true;
    // Pre-refine the requested grid until dt * (fastest rate) < rate_margin.
    double rate_margin = 0.1;
};

struct Trajectory {
    ModelKind model = ModelKind::BadCavity;
    RunKind kind = RunKind::Storage;
    TimeGrid grid;                 // grid the series are sampled on (after refinement)
    std::vector<Complex> P;
    std::vector<Complex> S;
    std::vector<Complex> E_out;
    std::vector<Complex> E_cav;    // cavity field; full model only
    double eta_s = 0.0;            // |S(end)|^2 (storage convention)
    double eta_r = 0.0;            // trapezoidal integral of |E_out|^2 (retrieval convention)
    double residual_excitation = 0.0;  // |P|^2 + |S|^2 at the end of the run
    bool incomplete_retrieval = false; // retrieval left more than 1e-4 behind
    ConvergenceReport convergence;
};

// Drives the atoms from vacuum, P(0) = S(0) = 0, with the given control and
// input mode; eta_s = |S(T)|^2. Control, input and grid must agree.
Trajectory simulate_storage(const PhysicalParams& params, const Envelope& control,
                            const Envelope& input, const TimeGrid& grid,
                            const IntegratorOptions& opts = {});

// Starts from a stored excitation (default S = 1, P = 0) with no input field;
// eta_r is the trapezoidal integral of |E_out|^2 over the grid. Flags
// incomplete retrieval when |P|^2 + |S|^2 at the end exceeds 1e-4.
Trajectory simulate_retrieval(const PhysicalParams& params, const Envelope& control,
                              const TimeGrid& grid, AtomicState initial = {{0.0, 0.0}, {1.0, 0.0}},
                              const IntegratorOptions& opts = {});

// Full cavity model without adiabatic elimination, storage or retrieval
// depending on the initial state and input. The input envelope may be empty
// (treated as zero) for retrieval runs. Requires params.has_cavity().
Trajectory simulate_full_cavity(const PhysicalParams& params, const Envelope& control,
                                const Envelope& input, const TimeGrid& grid,
                                AtomicState initial = {}, RunKind kind = RunKind::Storage,
                                const IntegratorOptions& opts = {});

// Max over interior grid points of the defect of the excitation drain law
//
//   d/dt (|P|^2 + |S|^2) = -2 gamma (1+C) |P|^2
//
// with the time derivative taken by central differences. Only meaningful for
// bad-cavity retrieval runs with gamma_s = 0; anything else is a domain error.
double conservation_residual(const Trajectory& traj, const PhysicalParams& params);

// Total efficiency of store -> hold -> retrieve with a spin wave decaying at
// gamma_s during the hold of the given duration: eta_s * eta_r * exp(-2 gamma_s * hold).
double composite_efficiency(double eta_s, double eta_r, double gamma_s, double hold_duration);

}  // namespace cavmem
