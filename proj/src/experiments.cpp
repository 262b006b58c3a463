#include "cavmem/experiments.hpp"

#include "cavmem/adiabatic.hpp"
#include "cavmem/dynamics.hpp"
#include "cavmem/modes.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>

namespace cavmem {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void meta_line(std::string& meta, const std::string& key, const std::string& value) {
    meta += key;
    meta += " = ";
    meta += value;
    meta += "\n";
}

IntegratorOptions integrator_options(const ScanOptions& opts) {
    IntegratorOptions io;
    io.eta_tol = opts.eta_tol;
    return io;
}

// Runs fn(0..count-1), spreading rows over a worker pool. Results must be
// written by row index so the table is identical for any thread count.
void run_rows(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
    int pool_size = std::max(1, threads);
    if (count < static_cast<std::size_t>(pool_size)) {
        pool_size = static_cast<int>(std::max<std::size_t>(1, count));
    }
    if (pool_size == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    auto worker = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) break;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(pool_size);
    for (int i = 0; i < pool_size; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

void require_positive_list(const std::vector<double>& values, const char* label) {
    if (values.empty()) {
        throw std::invalid_argument(std::string(label) + " list must not be empty");
    }
    for (double v : values) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument(std::string(label) + " entries must be positive and finite");
        }
    }
}

// Control of the requested family on [t0, t1], scaled so the exact
// piecewise-linear intensity integral equals target_intensity.
Envelope family_control(int family, const TimeGrid& grid, double target_intensity) {
    std::vector<Complex> raw(grid.n);
    const double T = grid.span();
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double t = grid.time(i) - grid.t0;
        double v = 1.0;
        if (family == 1) {
            v = t / T;
        } else if (family == 2) {
            const double sigma = T / 8.0;
            const double arg = (t - 0.5 * T) / sigma;
            v = std::exp(-0.5 * arg * arg);
        }
        raw[i] = Complex{v, 0.0};
    }
    Envelope env(grid, std::move(raw), EnvelopeRole::Control);
    const double have = control_intensity_integral(env, grid.t0, grid.t1);
    const double scale = std::sqrt(target_intensity / have);
    std::vector<Complex> scaled(env.values());
    for (auto& v : scaled) v *= scale;
    return Envelope(grid, std::move(scaled), EnvelopeRole::Control);
}

double max_abs(const Envelope& env) {
    double m = 0.0;
    for (const auto& v : env.values()) m = std::max(m, std::abs(v));
    return m;
}

// A piecewise-linear envelope undersamples a long detuning-compensation
// chirp: a phase step d between adjacent samples biases each interval's
// chord-interpolated intensity by about d^2/6, and the accumulated bias
// times the total chirp phase must stay well below a radian or the shaped
// control no longer cancels its own light shift. The total chirp phase of a
// shaped control is |delta| ln(1/eps) / (2 gamma (1+C)), independent of the
// mode shape, so the sample count needed depends only on the parameters.
std::size_t chirp_resolved_samples(double delta, double gamma, double C, double eps,
                                   std::size_t base) {
    const double phase = std::abs(delta) * std::log(1.0 / eps) / (2.0 * gamma * (1.0 + C));
    if (!(phase > 1.0)) return base;
    const double step = std::min(0.05, std::sqrt(0.03 / phase));
    const double need = std::ceil(phase / step) + 1.0;
    return std::max(base, static_cast<std::size_t>(need));
}

}  // namespace

std::size_t ScanTable::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) return i;
    }
    throw std::invalid_argument("scan table has no column named '" + name + "'");
}

ScanTable breakdown_scan(const std::vector<double>& C_list, const std::vector<double>& delta_list,
                         const std::vector<double>& tc_gamma_list, const ScanOptions& opts) {
    require_positive_list(C_list, "cooperativity");
    require_positive_list(tc_gamma_list, "TC_gamma");
    if (delta_list.empty()) {
        throw std::invalid_argument("detuning list must not be empty");
    }

    ScanTable table;
    table.columns = {"C",       "delta",       "TC_gamma", "T",        "eta_s",
                     "eta_tot", "eta_plateau", "converged", "n_final"};
    const std::size_t count = C_list.size() * delta_list.size() * tc_gamma_list.size();
    table.rows.assign(count, {});

    const ShapingOptions sopts{opts.epsilon_boundary, 0.01};
    const IntegratorOptions io = integrator_options(opts);

    run_rows(count, opts.threads, [&](std::size_t row) {
        const std::size_t n_tc = tc_gamma_list.size();
        const std::size_t n_delta = delta_list.size();
        const double C = C_list[row / (n_delta * n_tc)];
        const double delta = delta_list[(row / n_tc) % n_delta];
        const double tc = tc_gamma_list[row % n_tc];

        const PhysicalParams params = PhysicalParams::bad_cavity(C, delta);
        const double T = tc / (C * params.gamma);
        const std::size_t samples = chirp_resolved_samples(delta, params.gamma, C,
                                                           opts.epsilon_boundary,
                                                           opts.base_samples);
        const TimeGrid grid = TimeGrid::over(0.0, T, samples);
        const Envelope mode = gaussian_like_mode(T, grid);
        const double plateau_each = C / (1.0 + C);

        double eta_s = kNaN;
        double converged = 0.0;
        double n_final = 0.0;
        try {
            const ShapingResult shaped = storage_control_for_mode(params, mode, 0.0, sopts);
            const Trajectory traj = simulate_storage(params, shaped.control, mode, grid, io);
            eta_s = traj.eta_s;
            converged = 1.0;
            n_final = static_cast<double>(traj.convergence.n_final);
        } catch (const ConvergenceError&) {
            // recorded as an unconverged row
        }
        table.rows[row] = {C,     delta,
                           tc,    T,
                           eta_s, eta_s * plateau_each,
                           plateau_each * plateau_each, converged,
                           n_final};
    });

    std::string meta;
    meta_line(meta, "scan", "breakdown");
    meta_line(meta, "gamma", "1");
    meta_line(meta, "base_samples", fmt(static_cast<double>(opts.base_samples)));
    meta_line(meta, "eta_tol", fmt(opts.eta_tol));
    meta_line(meta, "epsilon_boundary", fmt(opts.epsilon_boundary));
    meta_line(meta, "truncation_fraction", fmt(sopts.truncation_fraction));
    table.metadata = std::move(meta);
    return table;
}

ScanTable retrieval_universality_scan(const std::vector<double>& C_list,
                                      const std::vector<double>& delta_list, double margin,
                                      const ScanOptions& opts) {
    require_positive_list(C_list, "cooperativity");
    if (delta_list.empty()) {
        throw std::invalid_argument("detuning list must not be empty");
    }
    if (!(margin >= 20.0) || !std::isfinite(margin)) {
        throw std::invalid_argument("universality scan needs margin >= 20");
    }

    ScanTable table;
    table.columns = {"C",        "delta",    "control",  "omega_scale",
                     "margin",   "eta_r",    "eta_predicted", "residual",
                     "complete", "converged", "n_final"};
    constexpr int kFamilies = 3;
    const std::size_t count = C_list.size() * delta_list.size() * kFamilies;
    table.rows.assign(count, {});

    const IntegratorOptions io = integrator_options(opts);

    run_rows(count, opts.threads, [&](std::size_t row) {
        const std::size_t n_delta = delta_list.size();
        const double C = C_list[row / (n_delta * kFamilies)];
        const double delta = delta_list[(row / kFamilies) % n_delta];
        const int family = static_cast<int>(row % kFamilies);

        const PhysicalParams params = PhysicalParams::bad_cavity(C, delta);
        const double dressed = params.dressed_gamma();
        const double beta = 2.0 * dressed / params.dressed_line();
        const double target_intensity = margin / beta;
        const double T = 3.0 * margin / dressed;
        const TimeGrid grid = TimeGrid::over(0.0, T, opts.base_samples);
        const Envelope control = family_control(family, grid, target_intensity);
        const double margin_measured = beta * control_intensity_integral(control, 0.0, T);
        const double eta_predicted =
            C / (1.0 + C) * (1.0 - std::exp(-margin_measured));

        double eta_r = kNaN;
        double residual = kNaN;
        double complete = 0.0;
        double converged = 0.0;
        double n_final = 0.0;
        try {
            const Trajectory traj = simulate_retrieval(params, control, grid, {{0.0, 0.0}, {1.0, 0.0}}, io);
            eta_r = traj.eta_r;
            residual = traj.residual_excitation;
            complete = traj.incomplete_retrieval ? 0.0 : 1.0;
            converged = 1.0;
            n_final = static_cast<double>(traj.convergence.n_final);
        } catch (const ConvergenceError&) {
            // recorded as an unconverged row
        }
        table.rows[row] = {C,        delta,    static_cast<double>(family),
                           max_abs(control), margin_measured,
                           eta_r,    eta_predicted, residual,
                           complete, converged, n_final};
    });

    if (opts.enforce) {
        const std::size_t c_eta = table.column_index("eta_r");
        const std::size_t c_pred = table.column_index("eta_predicted");
        const std::size_t c_conv = table.column_index("converged");
        for (double C : C_list) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (const auto& r : table.rows) {
                if (r[0] != C || r[c_conv] != 1.0) continue;
                lo = std::min(lo, r[c_eta]);
                hi = std::max(hi, r[c_eta]);
                if (std::abs(r[c_eta] - r[c_pred]) > 1e-3) {
                    throw ScanAssertionError(
                        "retrieval efficiency deviates from the universal value at C = " + fmt(C) +
                        ": eta_r = " + fmt(r[c_eta]) + ", predicted = " + fmt(r[c_pred]));
                }
            }
            if (hi > lo && hi - lo >= 2e-3) {
                throw ScanAssertionError("retrieval efficiency depends on the control shape at C = " +
                                         fmt(C) + ": spread = " + fmt(hi - lo));
            }
        }
    }

    std::string meta;
    meta_line(meta, "scan", "retrieval_universality");
    meta_line(meta, "gamma", "1");
    meta_line(meta, "margin", fmt(margin));
    meta_line(meta, "control_families", "0=constant 1=ramp 2=gaussian");
    meta_line(meta, "base_samples", fmt(static_cast<double>(opts.base_samples)));
    meta_line(meta, "eta_tol", fmt(opts.eta_tol));
    table.metadata = std::move(meta);
    return table;
}

ScanTable time_reversal_scan(const std::vector<double>& C_list, const std::vector<Envelope>& modes,
                             const std::vector<std::string>& mode_names, double delta,
                             double gamma_s, const ScanOptions& opts) {
    require_positive_list(C_list, "cooperativity");
    if (modes.empty() || modes.size() != mode_names.size()) {
        throw std::invalid_argument("time reversal scan needs matching mode and name lists");
    }
    if (!(gamma_s >= 0.0) || !std::isfinite(gamma_s) || !std::isfinite(delta)) {
        throw std::invalid_argument("time reversal scan needs finite delta and gamma_s >= 0");
    }
    for (std::size_t m = 0; m < modes.size(); ++m) {
        const TimeGrid& g = modes[m].grid();
        if (std::abs(g.t0) > 1e-12 * std::max(1.0, std::abs(g.t1))) {
            throw std::invalid_argument("mode '" + mode_names[m] + "' must start at t = 0");
        }
        for (double C : C_list) {
            if (g.t1 * C < 10.0) {
                throw std::invalid_argument("mode '" + mode_names[m] +
                                            "' has T C gamma < 10 at C = " + fmt(C));
            }
        }
    }

    ScanTable table;
    table.columns = {"C",        "mode", "T",    "TC_gamma", "eta_r",      "eta_s",
                     "diff",     "overlap2", "control_identity_dev", "residual_r", "asserted"};
    const std::size_t count = C_list.size() * modes.size();
    table.rows.assign(count, {});

    const ShapingOptions sopts{opts.epsilon_boundary, 0.01};
    const IntegratorOptions io = integrator_options(opts);

    run_rows(count, opts.threads, [&](std::size_t row) {
        const std::size_t n_modes = modes.size();
        const double C = C_list[row / n_modes];
        const std::size_t m = row % n_modes;

        const PhysicalParams params = PhysicalParams::bad_cavity(C, delta, gamma_s);
        Envelope mode = modes[m].normalized();
        // Midpoint refinement preserves the piecewise-linear shape exactly,
        // so refining here only improves how the shaped chirp is carried.
        const std::size_t chirp_n = chirp_resolved_samples(delta, params.gamma, C,
                                                           opts.epsilon_boundary, mode.grid().n);
        while (mode.grid().n < chirp_n) mode = mode.refined();
        const TimeGrid grid = mode.grid();
        const double T = grid.t1;

        double eta_r = kNaN, eta_s = kNaN, diff = kNaN, overlap2 = kNaN;
        double identity_dev = kNaN, residual_r = kNaN;
        try {
            const ShapingResult retr = retrieval_control_for_mode(params, mode, gamma_s, sopts);
            const Trajectory traj_r = simulate_retrieval(params, retr.control, grid,
                                                         {{0.0, 0.0}, {1.0, 0.0}}, io);
            eta_r = traj_r.eta_r;
            residual_r = traj_r.residual_excitation;

            Envelope target = mode;
            while (target.grid().n < traj_r.grid.n) target = target.refined();
            const Envelope out(traj_r.grid, traj_r.E_out, EnvelopeRole::OutputField);
            if (out.norm2() > 0.0) {
                const Complex ov = mode_overlap(target, out.normalized());
                overlap2 = std::norm(ov);
            }

            const Envelope reversed = time_reverse(mode, T);
            const ShapingResult stor = storage_control_for_mode(params, reversed, gamma_s, sopts);
            const Trajectory traj_s = simulate_storage(params, stor.control, reversed, grid, io);
            eta_s = traj_s.eta_s;
            diff = std::abs(eta_s - eta_r);

            const std::size_t n = grid.n;
            double dev = 0.0, peak = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                peak = std::max(peak, std::abs(retr.control[k]));
                dev = std::max(dev, std::abs(stor.control[k] - std::conj(retr.control[n - 1 - k])));
            }
            identity_dev = peak > 0.0 ? dev / peak : 0.0;
        } catch (const ConvergenceError&) {
            // recorded as NaNs
        }
        table.rows[row] = {C,    static_cast<double>(m),
                           T,    T * C * params.gamma,
                           eta_r, eta_s,
                           diff, overlap2,
                           identity_dev, residual_r,
                           gamma_s == 0.0 ? 1.0 : 0.0};
    });

    if (opts.enforce && gamma_s == 0.0) {
        const std::size_t c_diff = table.column_index("diff");
        for (std::size_t row = 0; row < table.rows.size(); ++row) {
            const double diff = table.rows[row][c_diff];
            if (!(diff < 5e-3)) {
                const std::size_t m = row % modes.size();
                throw ScanAssertionError("storage/retrieval efficiencies disagree for mode '" +
                                         mode_names[m] + "' at C = " + fmt(table.rows[row][0]) +
                                         ": |eta_s - eta_r| = " + fmt(diff));
            }
        }
    }

    std::string meta;
    meta_line(meta, "scan", "time_reversal");
    meta_line(meta, "gamma", "1");
    meta_line(meta, "delta", fmt(delta));
    meta_line(meta, "gamma_s", fmt(gamma_s));
    std::string names;
    for (std::size_t m = 0; m < mode_names.size(); ++m) {
        if (m) names += " ";
        names += fmt(static_cast<double>(m)) + "=" + mode_names[m];
    }
    meta_line(meta, "modes", names);
    meta_line(meta, "eta_tol", fmt(opts.eta_tol));
    meta_line(meta, "epsilon_boundary", fmt(opts.epsilon_boundary));
    table.metadata = std::move(meta);
    return table;
}

ScanTable bad_cavity_scan(const std::vector<double>& kappa_over_gN, double cooperativity,
                          const ScanOptions& opts) {
    require_positive_list(kappa_over_gN, "kappa/gN ratio");
    for (std::size_t i = 1; i < kappa_over_gN.size(); ++i) {
        if (!(kappa_over_gN[i] > kappa_over_gN[i - 1])) {
            throw std::invalid_argument("kappa/gN ratios must be strictly increasing");
        }
    }
    if (!(cooperativity > 0.0) || !std::isfinite(cooperativity)) {
        throw std::invalid_argument("cooperativity must be positive and finite");
    }

    ScanTable table;
    table.columns = {"kappa_over_gN", "kappa",       "coupling_gN", "eta_full",
                     "eta_eliminated", "deviation",  "converged"};
    table.rows.assign(kappa_over_gN.size(), {});

    const IntegratorOptions io = integrator_options(opts);
    const double C = cooperativity;
    const double gamma = 1.0;
    const PhysicalParams eliminated = PhysicalParams::bad_cavity(C);

    // One fixed retrieval drive for every row: constant control emptying the
    // spin wave down to exp(-15) of its excitation.
    const double margin = 15.0;
    const double dressed = eliminated.dressed_gamma();
    const double beta = 2.0 * dressed / eliminated.dressed_line();
    const double T = 3.0 * margin / dressed;
    const TimeGrid grid = TimeGrid::over(0.0, T, opts.base_samples);
    const Envelope control = family_control(0, grid, margin / beta);

    const Trajectory reference =
        simulate_retrieval(eliminated, control, grid, {{0.0, 0.0}, {1.0, 0.0}}, io);
    const double eta_eliminated = reference.eta_r;

    run_rows(kappa_over_gN.size(), opts.threads, [&](std::size_t row) {
        const double ratio = kappa_over_gN[row];
        const double gN = C * ratio * gamma;
        const double kappa = C * ratio * ratio * gamma;
        const PhysicalParams full = PhysicalParams::full_cavity(gN, kappa);

        double eta_full = kNaN;
        double deviation = kNaN;
        double converged = 0.0;
        try {
            const Trajectory traj = simulate_full_cavity(full, control, Envelope{}, grid,
                                                         {{0.0, 0.0}, {1.0, 0.0}},
                                                         RunKind::Retrieval, io);
            eta_full = traj.eta_r;
            deviation = std::abs(eta_full - eta_eliminated) / eta_eliminated;
            converged = 1.0;
        } catch (const ConvergenceError&) {
            // recorded as an unconverged row
        }
        table.rows[row] = {ratio, kappa, gN, eta_full, eta_eliminated, deviation, converged};
    });

    if (opts.enforce) {
        const std::size_t c_dev = table.column_index("deviation");
        const std::size_t c_conv = table.column_index("converged");
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t row = 0; row < table.rows.size(); ++row) {
            if (table.rows[row][c_conv] != 1.0) {
                throw ScanAssertionError("full cavity run failed to converge at kappa/gN = " +
                                         fmt(kappa_over_gN[row]));
            }
            const double dev = table.rows[row][c_dev];
            if (!(dev < prev + 1e-12)) {
                throw ScanAssertionError(
                    "elimination error is not shrinking: deviation " + fmt(dev) + " at kappa/gN = " +
                    fmt(kappa_over_gN[row]) + " after " + fmt(prev));
            }
            prev = dev;
            if (kappa_over_gN[row] >= 100.0 && !(dev < 1e-2)) {
                throw ScanAssertionError("elimination error above 1% at kappa/gN = " +
                                         fmt(kappa_over_gN[row]) + ": " + fmt(dev));
            }
        }
    }

    std::string meta;
    meta_line(meta, "scan", "bad_cavity");
    meta_line(meta, "gamma", "1");
    meta_line(meta, "cooperativity", fmt(C));
    meta_line(meta, "margin", fmt(margin));
    meta_line(meta, "base_samples", fmt(static_cast<double>(opts.base_samples)));
    meta_line(meta, "eta_tol", fmt(opts.eta_tol));
    table.metadata = std::move(meta);
    return table;
}

}  // namespace cavmem
