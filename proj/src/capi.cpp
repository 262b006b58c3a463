#include "cavmem/cavmem.h"

#include "cavmem/adiabatic.hpp"
#include "cavmem/dynamics.hpp"
#include "cavmem/experiments.hpp"
#include "cavmem/fast.hpp"
#include "cavmem/modes.hpp"
#include "cavmem/types.hpp"

#include <cstring>
#include <exception>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

struct cavmem_params {
    cavmem::PhysicalParams value;
};
struct cavmem_envelope {
    cavmem::Envelope value;
};
struct cavmem_trajectory {
    cavmem::Trajectory value;
};
struct cavmem_shaping {
    cavmem::ShapingResult value;
};
struct cavmem_fast_result {
    cavmem::FastProtocolResult value;
};
struct cavmem_table {
    cavmem::ScanTable value;
};

namespace {

thread_local std::string g_last_error;

cavmem_status fail(cavmem_status code, const std::string& message) {
    g_last_error = message;
    return code;
}

template <typename Fn>
cavmem_status wrap(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return CAVMEM_OK;
    } catch (const cavmem::ConvergenceError& e) {
        return fail(CAVMEM_ERR_CONVERGENCE, e.what());
    } catch (const cavmem::ScanAssertionError& e) {
        return fail(CAVMEM_ERR_ASSERTION, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(CAVMEM_ERR_DOMAIN, e.what());
    } catch (const std::domain_error& e) {
        return fail(CAVMEM_ERR_DOMAIN, e.what());
    } catch (const std::exception& e) {
        return fail(CAVMEM_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(CAVMEM_ERR_INTERNAL, "unknown error");
    }
}

cavmem::IntegratorOptions to_run_options(const cavmem_run_options* o) {
    cavmem::IntegratorOptions io;
    if (!o) return io;
    if (o->eta_tol > 0.0) io.eta_tol = o->eta_tol;
    if (o->max_refinements > 0) io.max_refinements = o->max_refinements;
    io.check_convergence = o->check_convergence != 0;
    if (o->rate_margin > 0.0) io.rate_margin = o->rate_margin;
    return io;
}

cavmem::ShapingOptions to_shaping_options(const cavmem_shaping_options* o) {
    cavmem::ShapingOptions so;
    if (!o) return so;
    if (o->epsilon_boundary > 0.0) so.epsilon_boundary = o->epsilon_boundary;
    if (o->truncation_fraction >= 0.0) so.truncation_fraction = o->truncation_fraction;
    return so;
}

cavmem::ScanOptions to_scan_options(const cavmem_scan_options* o) {
    cavmem::ScanOptions so;
    if (!o) return so;
    if (o->threads > 0) so.threads = o->threads;
    if (o->base_samples > 0) so.base_samples = o->base_samples;
    if (o->eta_tol > 0.0) so.eta_tol = o->eta_tol;
    if (o->epsilon_boundary > 0.0) so.epsilon_boundary = o->epsilon_boundary;
    so.enforce = o->enforce != 0;
    return so;
}

cavmem::EnvelopeRole to_role(cavmem_role role) {
    switch (role) {
        case CAVMEM_ROLE_INPUT: return cavmem::EnvelopeRole::InputField;
        case CAVMEM_ROLE_OUTPUT: return cavmem::EnvelopeRole::OutputField;
        case CAVMEM_ROLE_CONTROL: return cavmem::EnvelopeRole::Control;
        case CAVMEM_ROLE_SPIN: return cavmem::EnvelopeRole::SpinMode;
    }
    throw std::invalid_argument("unknown envelope role");
}

cavmem::Complex to_complex(double re, double im) { return {re, im}; }

}  // namespace

extern "C" {

const char* cavmem_version(void) { return "1.0.0"; }

const char* cavmem_last_error(void) { return g_last_error.c_str(); }

/* ---- params ---- */

cavmem_status cavmem_params_bad_cavity(double cooperativity, double delta, double gamma_s,
                                       double gamma, cavmem_params** out) {
    if (!out) return fail(CAVMEM_ERR_INVALID_HANDLE, "output handle is NULL");
    return wrap([&] {
        auto value = cavmem::PhysicalParams::bad_cavity(cooperativity, delta, gamma_s, gamma);
        *out = new cavmem_params{value};
    });
}

cavmem_status cavmem_params_full_cavity(double coupling_gN, double kappa, double delta,
                                        double gamma_s, double gamma, cavmem_params** out) {
    if (!out) return fail(CAVMEM_ERR_INVALID_HANDLE, "output handle is NULL");
    return wrap([&] {
        auto value = cavmem::PhysicalParams::full_cavity(coupling_gN, kappa, delta, gamma_s, gamma);
        *out = new cavmem_params{value};
    });
}

cavmem_status cavmem_params_get(const cavmem_params* params, double* cooperativity, double* gamma,
                                double* delta, double* gamma_s, double* kappa,
                                double* coupling_gN) {
    if (!params) return fail(CAVMEM_ERR_INVALID_HANDLE, "params handle is NULL");
    if (cooperativity) *cooperativity = params->value.cooperativity;
    if (gamma) *gamma = params->value.gamma;
    if (delta) *delta = params->value.delta;
    if (gamma_s) *gamma_s = params->value.gamma_s;
    if (kappa) *kappa = params->value.kappa;
    if (coupling_gN) *coupling_gN = params->value.coupling_gN;
    g_last_error.clear();
    return CAVMEM_OK;
}

void cavmem_params_free(cavmem_params* params) { delete params; }

/* ---- envelopes ---- */

cavmem_status cavmem_envelope_create(double t0, double t1, size_t n, const double* re,
                                     const double* im, cavmem_role role, cavmem_envelope** out) {
    if (!out) return fail(CAVMEM_ERR_INVALID_HANDLE, "output handle is NULL");
    if (!re) return fail(CAVMEM_ERR_INVALID_HANDLE, "real part buffer is NULL");
    return wrap([&] {
        const cavmem::TimeGrid grid = cavmem::TimeGrid::over(t0, t1, n);
        std::vector<cavmem::Complex> values(n);
        for (size_t i = 0; i < n; ++i) {
            const double vr = re[i];
            const double vi = im ? im[i] : 0.0;
            if (!std::isfinite(vr) || !std::isfinite(vi)) {
                throw std::invalid_argument("envelope samples must be finite");
            }
            values[i] = to_complex(vr, vi);
        }
        *out = new cavmem_envelope{cavmem::Envelope(grid, std::move(values), to_role(role))};
    });
}

cavmem_status cavmem_envelope_size(const cavmem_envelope* env, size_t* out) {
    if (!env || !out) return fail(CAVMEM_ERR_INVALID_HANDLE, "envelope or output handle is NULL");
    *out = env->value.size();
    g_last_error.clear();
    return CAVMEM_OK;
}

cavmem_status cavmem_envelope_grid(const cavmem_envelope* env, double* t0, double* t1, size_t* n) {
    if (!env) return fail(CAVMEM_ERR_INVALID_HANDLE, "envelope handle is NULL");
    if (t0) *t0 = env->value.grid().t0;
    if (t1) *t1 = env->value.grid().t1;
    if (n) *n = env->value.grid().n;
    g_last_error.clear();
    return CAVMEM_OK;
}

cavmem_status cavmem_envelope_values(const cavmem_envelope* env, double* re, double* im) {
    if (!env) return fail(CAVMEM_ERR_INVALID_HANDLE, "envelope handle is NULL");
    const auto& values = env->value.values();
    for (size_t i = 0; i < values.size(); ++i) {
        if (re) re[i] = values[i].real();
        if (im) im[i] = values[i].imag();
    }
    g_last_error.clear();
    return CAVMEM_OK;
}

cavmem_status cavmem_envelope_times(const cavmem_envelope* env, double* times) {
    if (!env || !times) return fail(CAVMEM_ERR_INVALID_HANDLE, "envelope or output buffer is NULL");
    for (size_t i = 0; i < env->value.grid().n; ++i) times[i] = env->value.grid().time(i);
    g_last_error.clear();
    return CAVMEM_OK;
}

cavmem_status cavmem_envelope_norm2(const cavmem_envelope* env, double* out) {
    if (!env || !out) return fail(CAVMEM_ERR_INVALID_HANDLE, "envelope or output handle is NULL");
    return wrap([&] { *out = env->value.norm2(); });
}

cavmem_status cavmem_envelope_normalized(const cavmem_envelope* env, cavmem_envelope** out) {
    if (!env || !out) return fail(CAVMEM_ERR_INVALID_HANDLE, "envelope or output handle is NULL");
    return wrap([&] { *out = new cavmem_envelope{env->value.normalized()}; });
}

cavmem_status cavmem_gaussian_like_mode(double T, size_t n, cavmem_envelope** out) {
    if (!out) return fail(CAVMEM_ERR_INVALID_HANDLE, "output handle is NULL");
    return wrap([&] {
        const cavmem::TimeGrid grid = cavmem::TimeGrid::over(0.0, T, n);
        *out = new cavmem_envelope{cavmem::gaussian_like_mode(T, grid)};
    });
}

cavmem_status cavmem_time_reverse(const cavmem_envelope* env, double T, cavmem_envelope** out) {
    if (!env || !out) return fail(CAVMEM_ERR_INVALID_HANDLE, "envelope or output handle is NULL");
    return wrap([&] { *out = new cavmem_envelope{cavmem::time_reverse(env->value, T)}; });
}

cavmem_status cavmem_mode_overlap(const cavmem_envelope* a, const cavmem_envelope* b, double* re,
                                  double* im) {
    if (!a || !b) return fail(CAVMEM_ERR_INVALID_HANDLE, "envelope handle is NULL");
    return wrap([&] {
        const cavmem::Complex value = cavmem::mode_overlap(a->value, b->value);
        if (re) *re = value.real();
        if (im) *im = value.imag();
    });
}

void cavmem_envelope_free(cavmem_envelope* env) { delete env; }

/* ---- dynamics ---- */

cavmem_status cavmem_simulate_storage(const cavmem_params* params, const cavmem_envelope* control,
                                      const cavmem_envelope* input,
                                      const cavmem_run_options* options, cavmem_trajectory** out) {
    if (!params || !control || !input || !out) {
        return fail(CAVMEM_ERR_INVALID_HANDLE, "params, control, input or output handle is NULL");
    }
    return wrap([&] {
        auto traj = cavmem::simulate_storage(params->value, control->value, input->value,
                                             control->value.grid(), to_run_options(options));
        *out = new cavmem_trajectory{std::move(traj)};
    });
}

cavmem_status cavmem_simulate_retrieval(const cavmem_params* params, const cavmem_envelope* control,
                                        double initial_P_re, double initial_P_im,
                                        double initial_S_re, double initial_S_im,
                                        const cavmem_run_options* options,
                                        cavmem_trajectory** out) {
    if (!params || !control || !out) {
        return fail(CAVMEM_ERR_INVALID_HANDLE, "params, control or output handle is NULL");
    }
    return wrap([&] {
        const cavmem::AtomicState initial{to_complex(initial_P_re, initial_P_im),
                                          to_complex(initial_S_re, initial_S_im)};
        auto traj = cavmem::simulate_retrieval(params->value, control->value,
                                               control->value.grid(), initial,
                                               to_run_options(options));
        *out = new cavmem_trajectory{std::move(traj)};
    });
}

cavmem_status cavmem_simulate_full_cavity(const cavmem_params* params,
                                          const cavmem_envelope* control,
                                          const cavmem_envelope* input, double initial_P_re,
                                          double initial_P_im, double initial_S_re,
                                          double initial_S_im, cavmem_run_kind kind,
                                          const cavmem_run_options* options,
                                          cavmem_trajectory** out) {
    if (!params || !control || !out) {
        return fail(CAVMEM_ERR_INVALID_HANDLE, "params, control or output handle is NULL");
    }
    return wrap([&] {
        const cavmem::AtomicState initial{to_complex(initial_P_re, initial_P_im),
                                          to_complex(initial_S_re, initial_S_im)};
        const cavmem::RunKind run_kind =
            kind == CAVMEM_RUN_RETRIEVAL ? cavmem::RunKind::Retrieval : cavmem::RunKind::Storage;
        auto traj = cavmem::simulate_full_cavity(params->value, control->value,
                                                 input ? input->value : cavmem::Envelope{},
                                                 control->value.grid(), initial, run_kind,
                                                 to_run_options(options));
        *out = new cavmem_trajectory{std::move(traj)};
    });
}

cavmem_status cavmem_trajectory_size(const cavmem_trajectory* traj, size_t* out) {
    if (!traj || !out) return fail(CAVMEM_ERR_INVALID_HANDLE, "trajectory or output handle is NULL");
    *out = traj->value.grid.n;
    g_last_error.clear();
    return CAVMEM_OK;
}

cavmem_status cavmem_trajectory_grid(const cavmem_trajectory* traj, double* t0, double* t1,
                                     size_t* n) {
    if (!traj) return fail(CAVMEM_ERR_INVALID_HANDLE, "trajectory handle is NULL");
    if (t0) *t0 = traj->value.grid.t0;
    if (t1) *t1 = traj->value.grid.t1;
    if (n) *n = traj->value.grid.n;
    g_last_error.clear();
    return CAVMEM_OK;
}

cavmem_status cavmem_trajectory_series(const cavmem_trajectory* traj, cavmem_series which,
                                       double* re, double* im) {
    if (!traj) return fail(CAVMEM_ERR_INVALID_HANDLE, "trajectory handle is NULL");
    return wrap([&] {
        const std::vector<cavmem::Complex>* series = nullptr;
        switch (which) {
            case CAVMEM_SERIES_P: series = &traj->value.P; break;
            case CAVMEM_SERIES_S: series = &traj->value.S; break;
            case CAVMEM_SERIES_E_OUT: series = &traj->value.E_out; break;
            case CAVMEM_SERIES_E_CAV: series = &traj->value.E_cav; break;
        }
        if (!series) throw std::invalid_argument("unknown trajectory series");
        if (which == CAVMEM_SERIES_E_CAV && series->empty()) {
            throw std::invalid_argument("trajectory has no cavity field series");
        }
        for (size_t i = 0; i < series->size(); ++i) {
            if (re) re[i] = (*series)[i].real();
            if (im) im[i] = (*series)[i].imag();
        }
    });
}

cavmem_status cavmem_trajectory_metrics(const cavmem_trajectory* traj, double* eta_s,
                                        double* eta_r, double* residual_excitation,
                                        int* incomplete_retrieval) {
    if (!traj) return fail(CAVMEM_ERR_INVALID_HANDLE, "trajectory handle is NULL");
    if (eta_s) *eta_s = traj->value.eta_s;
    if (eta_r) *eta_r = traj->value.eta_r;
    if (residual_excitation) *residual_excitation = traj->value.residual_excitation;
    if (incomplete_retrieval) *incomplete_retrieval = traj->value.incomplete_retrieval ? 1 : 0;
    g_last_error.clear();
    return CAVMEM_OK;
}

cavmem_status cavmem_trajectory_convergence(const cavmem_trajectory* traj, size_t* n_final,
                                            int* refinements, double* last_delta, int* checked) {
    if (!traj) return fail(CAVMEM_ERR_INVALID_HANDLE, "trajectory handle is NULL");
    if (n_final) *n_final = traj->value.convergence.n_final;
    if (refinements) *refinements = traj->value.convergence.refinements;
    if (last_delta) *last_delta = traj->value.convergence.last_delta;
    if (checked) *checked = traj->value.convergence.checked ? 1 : 0;
    g_last_error.clear();
    return CAVMEM_OK;
}

cavmem_status cavmem_conservation_residual(const cavmem_trajectory* traj,
                                           const cavmem_params* params, double* out) {
    if (!traj || !params || !out) {
        return fail(CAVMEM_ERR_INVALID_HANDLE, "trajectory, params or output handle is NULL");
    }
    return wrap([&] { *out = cavmem::conservation_residual(traj->value, params->value); });
}

void cavmem_trajectory_free(cavmem_trajectory* traj) { delete traj; }

cavmem_status cavmem_composite_efficiency(double eta_s, double eta_r, double gamma_s,
                                          double hold_duration, double* out) {
    if (!out) return fail(CAVMEM_ERR_INVALID_HANDLE, "output handle is NULL");
    return wrap([&] { *out = cavmem::composite_efficiency(eta_s, eta_r, gamma_s, hold_duration); });
}

cavmem_status cavmem_fidelity_from_efficiency(double eta, double* out) {
    if (!out) return fail(CAVMEM_ERR_INVALID_HANDLE, "output handle is NULL");
    return wrap([&] { *out = cavmem::fidelity_from_efficiency(eta); });
}

/* ---- adiabatic ---- */

cavmem_status cavmem_shape_retrieval(const cavmem_params* params, const cavmem_envelope* mode,
                                     double gamma_s, const cavmem_shaping_options* options,
                                     cavmem_shaping** out) {
    if (!params || !mode || !out) {
        return fail(CAVMEM_ERR_INVALID_HANDLE, "params, mode or output handle is NULL");
    }
    return wrap([&] {
        auto shaped = cavmem::retrieval_control_for_mode(params->value, mode->value, gamma_s,
                                                         to_shaping_options(options));
        *out = new cavmem_shaping{std::move(shaped)};
    });
}

cavmem_status cavmem_shape_storage(const cavmem_params* params, const cavmem_envelope* input,
                                   double gamma_s, const cavmem_shaping_options* options,
                                   cavmem_shaping** out) {
    if (!params || !input || !out) {
        return fail(CAVMEM_ERR_INVALID_HANDLE, "params, input or output handle is NULL");
    }
    return wrap([&] {
        auto shaped = cavmem::storage_control_for_mode(params->value, input->value, gamma_s,
                                                       to_shaping_options(options));
        *out = new cavmem_shaping{std::move(shaped)};
    });
}

cavmem_status cavmem_shaping_control(const cavmem_shaping* shaping, cavmem_envelope** out) {
    if (!shaping || !out) return fail(CAVMEM_ERR_INVALID_HANDLE, "shaping or output handle is NULL");
    return wrap([&] { *out = new cavmem_envelope{shaping->value.control}; });
}

cavmem_status cavmem_shaping_info(const cavmem_shaping* shaping, double* predicted_efficiency,
                                  int* truncated, double* epsilon_boundary) {
    if (!shaping) return fail(CAVMEM_ERR_INVALID_HANDLE, "shaping handle is NULL");
    if (predicted_efficiency) *predicted_efficiency = shaping->value.predicted_efficiency;
    if (truncated) *truncated = shaping->value.truncated ? 1 : 0;
    if (epsilon_boundary) *epsilon_boundary = shaping->value.epsilon_boundary;
    g_last_error.clear();
    return CAVMEM_OK;
}

void cavmem_shaping_free(cavmem_shaping* shaping) { delete shaping; }

cavmem_status cavmem_adiabatic_retrieval_output(const cavmem_params* params,
                                                const cavmem_envelope* control,
                                                cavmem_envelope** out) {
    if (!params || !control || !out) {
        return fail(CAVMEM_ERR_INVALID_HANDLE, "params, control or output handle is NULL");
    }
    return wrap([&] {
        *out = new cavmem_envelope{cavmem::adiabatic_retrieval_output(params->value, control->value)};
    });
}

cavmem_status cavmem_adiabatic_storage_amplitude(const cavmem_params* params,
                                                 const cavmem_envelope* control,
                                                 const cavmem_envelope* input, double* re,
                                                 double* im) {
    if (!params || !control || !input) {
        return fail(CAVMEM_ERR_INVALID_HANDLE, "params, control or input handle is NULL");
    }
    return wrap([&] {
        const cavmem::Complex s =
            cavmem::adiabatic_storage_amplitude(params->value, control->value, input->value);
        if (re) *re = s.real();
        if (im) *im = s.imag();
    });
}

cavmem_status cavmem_storage_kernel(const cavmem_params* params, const cavmem_envelope* control,
                                    cavmem_envelope** out) {
    if (!params || !control || !out) {
        return fail(CAVMEM_ERR_INVALID_HANDLE, "params, control or output handle is NULL");
    }
    return wrap([&] {
        *out = new cavmem_envelope{cavmem::storage_kernel(params->value, control->value)};
    });
}

cavmem_status cavmem_adiabaticity_margins(const cavmem_params* params,
                                          const cavmem_envelope* control,
                                          const cavmem_envelope* input, double T,
                                          cavmem_margins* out) {
    if (!params || !control || !out) {
        return fail(CAVMEM_ERR_INVALID_HANDLE, "params, control or output handle is NULL");
    }
    return wrap([&] {
        std::optional<cavmem::Envelope> in;
        if (input) in = input->value;
        const cavmem::AdiabaticityMargins m =
            cavmem::adiabaticity_margins(params->value, control->value, in, T);
        out->tc_gamma = m.tc_gamma;
        out->power_ratio = m.power_ratio;
        out->control_rate_ratio = m.control_rate_ratio;
        out->magnitude_rate_ratio = m.magnitude_rate_ratio;
        out->phase_rate_ratio = m.phase_rate_ratio;
        out->input_rate_ratio = m.input_rate_ratio;
        out->adiabatic = m.adiabatic ? 1 : 0;
    });
}

cavmem_status cavmem_output_duration_estimate(const cavmem_params* params, double omega_scale,
                                              double* out) {
    if (!params || !out) return fail(CAVMEM_ERR_INVALID_HANDLE, "params or output handle is NULL");
    return wrap([&] { *out = cavmem::output_duration_estimate(params->value, omega_scale); });
}

/* ---- fast ---- */

cavmem_status cavmem_fast_retrieval_output(const cavmem_params* params, double T, size_t n,
                                           cavmem_envelope** out) {
    if (!params || !out) return fail(CAVMEM_ERR_INVALID_HANDLE, "params or output handle is NULL");
    return wrap([&] {
        const cavmem::TimeGrid grid = cavmem::TimeGrid::over(0.0, T, n);
        *out = new cavmem_envelope{cavmem::fast_retrieval_output(params->value, grid)};
    });
}

cavmem_status cavmem_optimal_fast_input(const cavmem_params* params, double T, size_t n,
                                        cavmem_envelope** mode, double* norm2, int* complete) {
    if (!params || !mode) return fail(CAVMEM_ERR_INVALID_HANDLE, "params or output handle is NULL");
    return wrap([&] {
        const cavmem::TimeGrid grid = cavmem::TimeGrid::over(0.0, T, n);
        cavmem::FastInput input = cavmem::optimal_fast_input(params->value, grid);
        if (norm2) *norm2 = input.norm2;
        if (complete) *complete = input.complete ? 1 : 0;
        *mode = new cavmem_envelope{std::move(input.mode)};
    });
}

cavmem_status cavmem_fast_storage_amplitude(const cavmem_params* params,
                                            const cavmem_envelope* input, double* re, double* im) {
    if (!params || !input) return fail(CAVMEM_ERR_INVALID_HANDLE, "params or input handle is NULL");
    return wrap([&] {
        const cavmem::Complex s = cavmem::fast_storage_amplitude(params->value, input->value);
        if (re) *re = s.real();
        if (im) *im = s.imag();
    });
}

cavmem_status cavmem_simulate_fast_protocol(const cavmem_params* params,
                                            const cavmem_envelope* input, double omega,
                                            double t_end, size_t n, cavmem_fast_result** out) {
    if (!params || !input || !out) {
        return fail(CAVMEM_ERR_INVALID_HANDLE, "params, input or output handle is NULL");
    }
    return wrap([&] {
        const cavmem::PiPulseSpec pulse = cavmem::PiPulseSpec::with_omega(omega);
        const cavmem::TimeGrid grid = cavmem::TimeGrid::over(0.0, t_end, n);
        auto result = cavmem::simulate_fast_protocol(params->value, input->value, pulse, grid);
        *out = new cavmem_fast_result{std::move(result)};
    });
}

cavmem_status cavmem_fast_result_trajectory(const cavmem_fast_result* result,
                                            cavmem_trajectory** out) {
    if (!result || !out) return fail(CAVMEM_ERR_INVALID_HANDLE, "result or output handle is NULL");
    return wrap([&] { *out = new cavmem_trajectory{result->value.trajectory}; });
}

cavmem_status cavmem_fast_result_metrics(const cavmem_fast_result* result, double* eta_s,
                                         double* map_deviation, double* states12) {
    if (!result) return fail(CAVMEM_ERR_INVALID_HANDLE, "result handle is NULL");
    if (eta_s) *eta_s = result->value.eta_s;
    if (map_deviation) *map_deviation = result->value.map_deviation;
    if (states12) {
        const cavmem::AtomicState* states[3] = {&result->value.before_pulse,
                                                &result->value.after_pulse,
                                                &result->value.ideal_after_pulse};
        for (int s = 0; s < 3; ++s) {
            states12[4 * s + 0] = states[s]->P.real();
            states12[4 * s + 1] = states[s]->P.imag();
            states12[4 * s + 2] = states[s]->S.real();
            states12[4 * s + 3] = states[s]->S.imag();
        }
    }
    g_last_error.clear();
    return CAVMEM_OK;
}

void cavmem_fast_result_free(cavmem_fast_result* result) { delete result; }

/* ---- scans ---- */

cavmem_status cavmem_scan_breakdown(const double* C_list, size_t n_C, const double* delta_list,
                                    size_t n_delta, const double* tc_gamma_list, size_t n_tc,
                                    const cavmem_scan_options* options, cavmem_table** out) {
    if (!C_list || !delta_list || !tc_gamma_list || !out) {
        return fail(CAVMEM_ERR_INVALID_HANDLE, "input list or output handle is NULL");
    }
    return wrap([&] {
        auto table = cavmem::breakdown_scan(std::vector<double>(C_list, C_list + n_C),
                                            std::vector<double>(delta_list, delta_list + n_delta),
                                            std::vector<double>(tc_gamma_list, tc_gamma_list + n_tc),
                                            to_scan_options(options));
        *out = new cavmem_table{std::move(table)};
    });
}

cavmem_status cavmem_scan_universality(const double* C_list, size_t n_C, const double* delta_list,
                                       size_t n_delta, double margin,
                                       const cavmem_scan_options* options, cavmem_table** out) {
    if (!C_list || !delta_list || !out) {
        return fail(CAVMEM_ERR_INVALID_HANDLE, "input list or output handle is NULL");
    }
    return wrap([&] {
        auto table = cavmem::retrieval_universality_scan(
            std::vector<double>(C_list, C_list + n_C),
            std::vector<double>(delta_list, delta_list + n_delta), margin, to_scan_options(options));
        *out = new cavmem_table{std::move(table)};
    });
}

cavmem_status cavmem_scan_time_reversal(const double* C_list, size_t n_C,
                                        const cavmem_envelope* const* modes,
                                        const char* const* mode_names, size_t n_modes,
                                        double delta, double gamma_s,
                                        const cavmem_scan_options* options, cavmem_table** out) {
    if (!C_list || !modes || !mode_names || !out) {
        return fail(CAVMEM_ERR_INVALID_HANDLE, "input list or output handle is NULL");
    }
    return wrap([&] {
        std::vector<cavmem::Envelope> mode_list;
        std::vector<std::string> name_list;
        mode_list.reserve(n_modes);
        name_list.reserve(n_modes);
        for (size_t m = 0; m < n_modes; ++m) {
            if (!modes[m] || !mode_names[m]) {
                throw std::invalid_argument("mode list contains a NULL entry");
            }
            mode_list.push_back(modes[m]->value);
            name_list.emplace_back(mode_names[m]);
        }
        auto table =
            cavmem::time_reversal_scan(std::vector<double>(C_list, C_list + n_C), mode_list,
                                       name_list, delta, gamma_s, to_scan_options(options));
        *out = new cavmem_table{std::move(table)};
    });
}

cavmem_status cavmem_scan_bad_cavity(const double* kappa_over_gN, size_t n_ratios,
                                     double cooperativity, const cavmem_scan_options* options,
                                     cavmem_table** out) {
    if (!kappa_over_gN || !out) {
        return fail(CAVMEM_ERR_INVALID_HANDLE, "input list or output handle is NULL");
    }
    return wrap([&] {
        auto table = cavmem::bad_cavity_scan(
            std::vector<double>(kappa_over_gN, kappa_over_gN + n_ratios), cooperativity,
            to_scan_options(options));
        *out = new cavmem_table{std::move(table)};
    });
}

cavmem_status cavmem_table_shape(const cavmem_table* table, size_t* rows, size_t* cols) {
    if (!table) return fail(CAVMEM_ERR_INVALID_HANDLE, "table handle is NULL");
    if (rows) *rows = table->value.rows.size();
    if (cols) *cols = table->value.columns.size();
    g_last_error.clear();
    return CAVMEM_OK;
}

const char* cavmem_table_column_name(const cavmem_table* table, size_t col) {
    if (!table || col >= table->value.columns.size()) return nullptr;
    return table->value.columns[col].c_str();
}

const char* cavmem_table_metadata(const cavmem_table* table) {
    if (!table) return nullptr;
    return table->value.metadata.c_str();
}

cavmem_status cavmem_table_value(const cavmem_table* table, size_t row, size_t col, double* out) {
    if (!table || !out) return fail(CAVMEM_ERR_INVALID_HANDLE, "table or output handle is NULL");
    if (row >= table->value.rows.size() || col >= table->value.columns.size()) {
        return fail(CAVMEM_ERR_DOMAIN, "table index out of range");
    }
    *out = table->value.rows[row][col];
    g_last_error.clear();
    return CAVMEM_OK;
}

void cavmem_table_free(cavmem_table* table) { delete table; }

} /* extern "C" */
