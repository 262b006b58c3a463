#include "cavmem/adiabatic.hpp"

#include <algorithm>
#include <cmath>

namespace cavmem {

namespace {

// Cumulative trapezoidal integral of |values|^2; result[0] = 0.
std::vector<double> cumulative_intensity(const Envelope& env) {
    const double dt = env.grid().dt();
    std::vector<double> cum(env.size(), 0.0);
    for (std::size_t k = 1; k < env.size(); ++k) {
        cum[k] = cum[k - 1] + 0.5 * dt * (std::norm(env[k - 1]) + std::norm(env[k]));
    }
    return cum;
}

void require_starts_at_zero(const Envelope& env, const char* who) {
    const double tol = 1e-12 * std::max(1.0, std::abs(env.grid().span()));
    if (std::abs(env.grid().t0) > tol) {
        throw std::invalid_argument(std::string(who) + ": mode grid must start at t = 0");
    }
}

void check_shaping_options(const ShapingOptions& opts) {
    if (!(opts.epsilon_boundary > 0.0) || !(opts.epsilon_boundary < 1.0)) {
        throw std::invalid_argument("epsilon_boundary must lie in (0, 1)");
    }
    if (!(opts.truncation_fraction >= 0.0) || !(opts.truncation_fraction < 0.5)) {
        throw std::invalid_argument("truncation_fraction must lie in [0, 0.5)");
    }
}

// Number of samples clamped at the head of a storage control (the same count
// is clamped at the tail of a retrieval control, keeping the two exactly
// mirrored): indices k with k < fraction * (n - 1), strictly.
std::size_t head_clamp_count(std::size_t n, double fraction) {
    const double threshold = fraction * static_cast<double>(n - 1);
    auto m = static_cast<std::size_t>(std::ceil(threshold - 1e-9));
    return std::min(m, n - 1);
}

Complex unit_phase(const Complex& v, const Complex& fallback) {
    const double mag = std::abs(v);
    if (mag > 0.0) return v / mag;
    const double fmag = std::abs(fallback);
    return fmag > 0.0 ? fallback / fmag : Complex{1.0, 0.0};
}

// Clamp the magnitudes of control[first..last] (inclusive) to the magnitude
// at the retained reference index, keeping each point's computed phase.
bool clamp_magnitudes(std::vector<Complex>& control, const std::vector<Complex>& phase_only,
                      std::size_t first, std::size_t last, std::size_t reference) {
    const double mag_ref = std::abs(control[reference]);
    bool changed = false;
    for (std::size_t k = first; k <= last; ++k) {
        if (std::abs(std::abs(control[k]) - mag_ref) > 1e-15 * std::max(1.0, mag_ref)) {
            changed = true;
        }
        control[k] = phase_only[k] * mag_ref;
    }
    return changed;
}

double max_abs(const std::vector<Complex>& v) {
    double m = 0.0;
    for (const Complex& x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

double control_intensity_integral(const Envelope& control, double t_from, double t_to) {
    const TimeGrid& g = control.grid();
    const double tol = 1e-9 * std::max(1.0, std::abs(g.span()));
    if (!(t_to >= t_from) || t_from < g.t0 - tol || t_to > g.t1 + tol) {
        throw std::invalid_argument("control_intensity_integral: [t_from, t_to] outside the grid");
    }
    t_from = std::clamp(t_from, g.t0, g.t1);
    t_to = std::clamp(t_to, g.t0, g.t1);
    const double dt = g.dt();
    auto q = [&](std::size_t k) { return std::norm(control[k]); };
    // Piecewise-linear interpolant of |Omega|^2 between nodes, integrated exactly.
    auto partial = [&](std::size_t k, double a, double b) {
        const double qa = q(k) + (q(k + 1) - q(k)) * a;
        const double qb = q(k) + (q(k + 1) - q(k)) * b;
        return 0.5 * (qa + qb) * (b - a) * dt;
    };
    const double xa = (t_from - g.t0) / dt;
    const double xb = (t_to - g.t0) / dt;
    auto ka = std::min(static_cast<std::size_t>(xa), g.n - 2);
    auto kb = std::min(static_cast<std::size_t>(xb), g.n - 2);
    if (ka == kb) return partial(ka, xa - ka, xb - kb);
    double acc = partial(ka, xa - ka, 1.0);
    for (std::size_t k = ka + 1; k < kb; ++k) acc += 0.5 * (q(k) + q(k + 1)) * dt;
    acc += partial(kb, 0.0, xb - kb);
    return acc;
}

Envelope adiabatic_retrieval_output(const PhysicalParams& params, const Envelope& control) {
    params.validate();
    if (!control.all_finite()) {
        throw std::invalid_argument("adiabatic_retrieval_output: non-finite control");
    }
    const Complex dressed = params.dressed_decay();
    const double coupling = params.field_coupling();
    const std::vector<double> H = cumulative_intensity(control);
    std::vector<Complex> out(control.size());
    for (std::size_t k = 0; k < control.size(); ++k) {
        Complex value = -coupling * control[k] / dressed * std::exp(-H[k] / dressed);
        if (params.gamma_s > 0.0) {
            value *= std::exp(-params.gamma_s * (control.grid().time(k) - control.grid().t0));
        }
        out[k] = value;
    }
    return Envelope(control.grid(), std::move(out), EnvelopeRole::OutputField);
}

ShapingResult retrieval_control_for_mode(const PhysicalParams& params, const Envelope& target_mode,
                                         double gamma_s, const ShapingOptions& opts) {
    params.validate();
    check_shaping_options(opts);
    require_starts_at_zero(target_mode, "retrieval_control_for_mode");
    if (!target_mode.all_finite()) {
        throw std::invalid_argument("retrieval_control_for_mode: non-finite target mode");
    }
    if (gamma_s < 0.0) throw std::invalid_argument("gamma_s must be nonnegative");

    const TimeGrid& grid = target_mode.grid();
    Envelope mode = target_mode.normalized();

    // Spin decay tilts the effective target: the physically emitted field is
    // the shaped one times exp(-gamma_s t), so aim at e(t) exp(+gamma_s t).
    double decay_factor = 1.0;
    if (gamma_s > 0.0) {
        std::vector<Complex> tilted(mode.size());
        for (std::size_t k = 0; k < mode.size(); ++k) {
            tilted[k] = mode[k] * std::exp(gamma_s * grid.time(k));
        }
        Envelope tilted_env(grid, std::move(tilted), mode.role());
        decay_factor = 1.0 / tilted_env.norm2();  // = [integral |e|^2 e^{2 gamma_s t}]^-1
        mode = tilted_env.normalized();
    }

    const double dressed_gamma = params.dressed_gamma();
    const double line = params.dressed_line();
    const double beta = 2.0 * dressed_gamma / line;
    const double eps = opts.epsilon_boundary;
    const Complex prefactor = -params.dressed_decay() / std::sqrt(2.0 * dressed_gamma);
    const Complex prefactor_unit = prefactor / std::abs(prefactor);

    const std::vector<double> consumed = cumulative_intensity(mode);
    const std::size_t n = mode.size();
    std::vector<Complex> control(n);
    std::vector<Complex> phase_only(n);
    std::vector<double> profile(n);

    const std::size_t clamp_count = head_clamp_count(n, opts.truncation_fraction);
    const std::size_t last_retained = n - 1 - clamp_count;
    for (std::size_t k = 0; k < n; ++k) {
        const double remaining = 1.0 - consumed[k] + eps;
        const double h = std::max(0.0, -std::log(remaining) / beta);
        profile[k] = h;
        const Complex stark = std::exp(Complex{0.0, -params.delta * h / line});
        control[k] = prefactor * mode[k] / std::sqrt(remaining) * stark;
        const Complex mode_unit = unit_phase(mode[k], mode[last_retained]);
        phase_only[k] = prefactor_unit * mode_unit * stark;
    }

    ShapingResult result;
    result.truncated = clamp_count > 0 && clamp_magnitudes(control, phase_only, last_retained + 1,
                                                           n - 1, last_retained);
    result.control = Envelope(grid, std::move(control), EnvelopeRole::Control);
    result.intensity_profile = std::move(profile);
    result.epsilon_boundary = eps;
    result.predicted_efficiency =
        params.cooperativity / (1.0 + params.cooperativity) * decay_factor;
    return result;
}

ShapingResult storage_control_for_mode(const PhysicalParams& params, const Envelope& input,
                                       double gamma_s, const ShapingOptions& opts) {
    params.validate();
    check_shaping_options(opts);
    require_starts_at_zero(input, "storage_control_for_mode");
    if (!input.all_finite()) {
        throw std::invalid_argument("storage_control_for_mode: non-finite input mode");
    }
    if (gamma_s < 0.0) throw std::invalid_argument("gamma_s must be nonnegative");

    const TimeGrid& grid = input.grid();
    const double T = grid.t1;
    Envelope mode = input.normalized();

    // Spin decay during storage weights early arrival: store the tilted mode
    // E_in(t) exp(-gamma_s (T - t)) as well as possible.
    double decay_factor = 1.0;
    if (gamma_s > 0.0) {
        std::vector<Complex> tilted(mode.size());
        for (std::size_t k = 0; k < mode.size(); ++k) {
            tilted[k] = mode[k] * std::exp(-gamma_s * (T - grid.time(k)));
        }
        Envelope tilted_env(grid, std::move(tilted), mode.role());
        decay_factor = tilted_env.norm2();  // = integral |E_in|^2 e^{-2 gamma_s (T-t)}
        mode = tilted_env.normalized();
    }

    const double dressed_gamma = params.dressed_gamma();
    const double line = params.dressed_line();
    const double beta = 2.0 * dressed_gamma / line;
    const double eps = opts.epsilon_boundary;
    const Complex prefactor = -std::conj(params.dressed_decay()) / std::sqrt(2.0 * dressed_gamma);
    const Complex prefactor_unit = prefactor / std::abs(prefactor);

    const std::vector<double> arrived = cumulative_intensity(mode);
    const std::size_t n = mode.size();
    std::vector<Complex> control(n);
    std::vector<Complex> phase_only(n);
    std::vector<double> profile(n);

    const std::size_t clamp_count = head_clamp_count(n, opts.truncation_fraction);
    const std::size_t first_retained = clamp_count;
    for (std::size_t k = 0; k < n; ++k) {
        const double collected = arrived[k] + eps;
        const double h = std::max(0.0, -std::log(collected) / beta);  // remaining transfer h(t, T)
        profile[k] = h;
        const Complex stark = std::exp(Complex{0.0, params.delta * h / line});
        control[k] = prefactor * mode[k] / std::sqrt(collected) * stark;
        const Complex mode_unit = unit_phase(mode[k], mode[first_retained]);
        phase_only[k] = prefactor_unit * mode_unit * stark;
    }

    ShapingResult result;
    result.truncated = clamp_count > 0 &&
                       clamp_magnitudes(control, phase_only, 0, clamp_count - 1, first_retained);
    result.control = Envelope(grid, std::move(control), EnvelopeRole::Control);
    result.intensity_profile = std::move(profile);
    result.epsilon_boundary = eps;
    result.predicted_efficiency =
        params.cooperativity / (1.0 + params.cooperativity) * decay_factor;
    return result;
}

Envelope storage_kernel(const PhysicalParams& params, const Envelope& control) {
    params.validate();
    if (!control.all_finite()) {
        throw std::invalid_argument("storage_kernel: non-finite control");
    }
    const TimeGrid& grid = control.grid();
    const Complex dressed = params.dressed_decay();
    const double scale = std::sqrt(2.0 * params.dressed_gamma());
    const std::vector<double> H = cumulative_intensity(control);
    const double H_total = H.back();
    std::vector<Complex> kernel(control.size());
    for (std::size_t k = 0; k < control.size(); ++k) {
        Complex value = -std::conj(control[k]) * scale / dressed *
                        std::exp(-(H_total - H[k]) / dressed);
        if (params.gamma_s > 0.0) {
            value *= std::exp(-params.gamma_s * (grid.t1 - grid.time(k)));
        }
        kernel[k] = value;
    }
    return Envelope(grid, std::move(kernel), EnvelopeRole::SpinMode);
}

Complex adiabatic_storage_amplitude(const PhysicalParams& params, const Envelope& control,
                                    const Envelope& input) {
    if (!control.grid().matches(input.grid())) {
        throw std::invalid_argument(
            "adiabatic_storage_amplitude: control and input sampled on different grids");
    }
    const Envelope kernel = storage_kernel(params, control);
    // Overlap without conjugating the kernel: S = sqrt(C/(1+C)) integral f E_in.
    const double dt = control.grid().dt();
    Complex acc = 0.5 * (kernel[0] * input[0] +
                         kernel[kernel.size() - 1] * input[input.size() - 1]);
    for (std::size_t k = 1; k + 1 < kernel.size(); ++k) acc += kernel[k] * input[k];
    acc *= dt;
    return std::sqrt(params.cooperativity / (1.0 + params.cooperativity)) * acc;
}

AdiabaticityMargins adiabaticity_margins(const PhysicalParams& params, const Envelope& control,
                                         const std::optional<Envelope>& input, double T) {
    params.validate();
    if (!(T > 0.0)) throw std::invalid_argument("adiabaticity_margins: T must be positive");
    if (!control.all_finite()) {
        throw std::invalid_argument("adiabaticity_margins: non-finite control");
    }

    AdiabaticityMargins m;
    m.tc_gamma = T * params.cooperativity * params.gamma;
    const double line = std::hypot(params.gamma * params.cooperativity, params.delta);

    const std::vector<Complex>& om = control.values();
    const double dt = control.grid().dt();
    const double om_max = max_abs(om);
    m.power_ratio = om_max / line;

    // Relative-rate diagnostics are read off the bulk of the pulse only; the
    // regularized head/tail of a shaped control has tiny amplitude but large
    // logarithmic slope and would otherwise dominate meaninglessly.
    const double control_floor = 5e-2 * om_max;
    const std::size_t n = om.size();
    for (std::size_t k = 0; k < n; ++k) {
        const double mag = std::abs(om[k]);
        if (mag <= control_floor || mag == 0.0) continue;
        const std::size_t lo = k == 0 ? 0 : k - 1;
        const std::size_t hi = k + 1 == n ? k : k + 1;
        const double window = static_cast<double>(hi - lo) * dt;
        const Complex dom = (om[hi] - om[lo]) / window;
        const double dmag = (std::abs(om[hi]) - std::abs(om[lo])) / window;
        m.control_rate_ratio = std::max(m.control_rate_ratio, std::abs(dom) / (mag * line));
        m.magnitude_rate_ratio = std::max(m.magnitude_rate_ratio, std::abs(dmag) / (mag * line));
        if (std::abs(om[lo]) > 0.0 && std::abs(om[hi]) > 0.0) {
            const double dphi = std::arg(om[hi] * std::conj(om[lo])) / window;
            m.phase_rate_ratio = std::max(m.phase_rate_ratio, std::abs(dphi) / line);
        }
    }

    if (input && input->size() > 0) {
        if (!input->all_finite()) {
            throw std::invalid_argument("adiabaticity_margins: non-finite input");
        }
        const std::vector<Complex>& ein = input->values();
        const double ein_dt = input->grid().dt();
        const double ein_floor = 1e-3 * max_abs(ein);
        for (std::size_t k = 0; k < ein.size(); ++k) {
            const double mag = std::abs(ein[k]);
            if (mag <= ein_floor || mag == 0.0) continue;
            const std::size_t lo = k == 0 ? 0 : k - 1;
            const std::size_t hi = k + 1 == ein.size() ? k : k + 1;
            const double window = static_cast<double>(hi - lo) * ein_dt;
            const double rate = std::abs((ein[hi] - ein[lo]) / window) / mag;
            m.input_rate_ratio = std::max(m.input_rate_ratio, rate / line);
        }
    }

    const double worst =
        std::max({m.power_ratio, m.control_rate_ratio, m.magnitude_rate_ratio, m.phase_rate_ratio,
                  m.input_rate_ratio});
    m.adiabatic = m.tc_gamma >= 10.0 && worst <= 0.6;
    return m;
}

double output_duration_estimate(const PhysicalParams& params, double omega_scale) {
    params.validate();
    if (!(omega_scale > 0.0)) {
        throw std::invalid_argument("output_duration_estimate: omega_scale must be positive");
    }
    const double gc = params.gamma * params.cooperativity;
    return (gc * gc + params.delta * params.delta) / (gc * omega_scale * omega_scale);
}

}  // namespace cavmem
