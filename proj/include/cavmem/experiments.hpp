// Canned parameter scans reproducing the toolkit's headline results:
// storage breakdown vs. pulse duration, control-shape independence of
// retrieval, storage/retrieval time-reversal duality, and validity of the
// bad-cavity elimination. Scans only build tables; serialization is the
// CLI's job.
#pragma once

#include "cavmem/types.hpp"

#include <string>
#include <vector>

namespace cavmem {

// Rectangular table of doubles with named columns plus free-form metadata
// ("key = value" lines) describing how to reproduce the run. Values are
// deterministic: identical inputs produce bit-identical tables regardless of
// the thread count.
struct ScanTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;  // each row has columns.size() entries
    std::string metadata;

    std::size_t column_index(const std::string& name) const;  // throws if absent
};

struct ScanOptions {
    int threads = 1;             // worker threads across rows
    std::size_t base_samples = 2001;  // envelope grid samples before refinement
    double eta_tol = 1e-6;       // efficiency convergence target per run
    double epsilon_boundary = 1e-4;
    bool enforce = true;         // throw ScanAssertionError on built-in checks
};

// Total efficiency of shaped adiabatic storage followed by optimal retrieval,
// eta_tot = eta_s * C/(1+C), as the input duration T = TC_gamma/(C gamma)
// shrinks: the smooth single-bump mode is stored with the shaped control
// (truncated below T/100) and the exact dynamics decide what survives.
// Columns: C, delta, TC_gamma, T, eta_s, eta_tot, eta_plateau, converged, n_final.
// Per-row convergence failures are recorded (converged = 0), not fatal.
ScanTable breakdown_scan(const std::vector<double>& C_list, const std::vector<double>& delta_list,
                         const std::vector<double>& tc_gamma_list, const ScanOptions& opts = {});

// Retrieval efficiency across control families {constant, ramp, gaussian},
// detunings and cooperativities, every control scaled so the completed
// fraction 1 - exp(-margin) leaves residual excitation below 1e-4
// (margin >= 20). Asserts (when enforce) that eta_r spreads per C stay below
// 2e-3 and each row matches C/(1+C) * (1 - exp(-margin_measured)) to 1e-3.
// Columns: C, delta, control, omega_scale, margin, eta_r, eta_predicted,
// residual, complete, converged, n_final.
ScanTable retrieval_universality_scan(const std::vector<double>& C_list,
                                      const std::vector<double>& delta_list, double margin = 20.0,
                                      const ScanOptions& opts = {});

// For each (C, mode): shaped retrieval into the mode, then shaped storage of
// the time-reversed mode; records both efficiencies, the output-mode overlap
// and the pointwise distance between the storage control and the reversed
// retrieval control. Asserts |eta_s - eta_r| < 5e-3 when gamma_s == 0
// (recorded without assertion otherwise). Requires T C gamma >= 10.
// Columns: C, mode, T, TC_gamma, eta_r, eta_s, diff, overlap2,
// control_identity_dev, residual_r, asserted.
ScanTable time_reversal_scan(const std::vector<double>& C_list,
                             const std::vector<Envelope>& modes,
                             const std::vector<std::string>& mode_names, double delta = 0.0,
                             double gamma_s = 0.0, const ScanOptions& opts = {});

// Retrieval efficiency of the full cavity model against the eliminated one
// at fixed C while kappa/gN grows: the elimination error must shrink
// monotonically and drop below 1% at kappa/gN = 100 (asserted when enforce).
// Columns: kappa_over_gN, kappa, coupling_gN, eta_full, eta_eliminated,
// deviation, converged.
ScanTable bad_cavity_scan(const std::vector<double>& kappa_over_gN, double cooperativity = 1.0,
                          const ScanOptions& opts = {});

}  // namespace cavmem
