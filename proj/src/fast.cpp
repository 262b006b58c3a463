#include "cavmem/fast.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace cavmem {

namespace {

// exp(-a h) together with the first two phi functions of the exponential
// integrator: phi1 = (1 - exp(-a h))/a, phi2 = (h - phi1)/a. Small |a h| is
// evaluated by series to dodge the cancellation in 1 - exp(-a h).
struct StepKernels {
    Complex decay;  // exp(-a h)
    Complex phi1;
    Complex phi2;
};

StepKernels step_kernels(Complex a, double h) {
    StepKernels k;
    const Complex z = a * h;
    k.decay = std::exp(-z);
    if (std::abs(z) < 0.05) {
        // phi1/h = sum (-z)^j/(j+1)!, phi2/h^2 = sum (-z)^j/(j+2)!
        Complex term{1.0, 0.0};
        Complex s1{0.0, 0.0};
        Complex s2{0.0, 0.0};
        double fact = 1.0;
        for (int j = 0; j < 9; ++j) {
            s1 += term / (fact * (j + 1));
            s2 += term / (fact * (j + 1) * (j + 2));
            term *= -z;
            fact *= (j + 1);
        }
        k.phi1 = h * s1;
        k.phi2 = h * h * s2;
    } else {
        k.phi1 = (1.0 - k.decay) / a;
        k.phi2 = (h - k.phi1) / a;
    }
    return k;
}

// Advance dP/dt = -a P + i g E_in(t) by u with E_in linear: value e0 at the
// step start, slope (e1 - e0)/h over the full step.
Complex advance_polarization(Complex p, Complex a, double g, Complex e0, Complex slope, double u) {
    const StepKernels k = step_kernels(a, u);
    return k.decay * p + Complex{0.0, g} * (e0 * k.phi1 + slope * k.phi2);
}

struct Mat2 {
    Complex m00, m01, m10, m11;
};

// exp(tau * M) for the rectangular-pulse generator
// M = [[-a, i w], [i w, -gs]] via its eigenvalue pair; near-degenerate
// spectra fall back to the first-order expansion about the mean eigenvalue.
Mat2 pulse_propagator(Complex a, double gamma_s, double omega, double tau) {
    const Complex m00 = -a;
    const Complex m11{-gamma_s, 0.0};
    const Complex off{0.0, omega};
    const Complex tr = m00 + m11;
    const Complex disc = (m00 - m11) * (m00 - m11) - 4.0 * omega * omega;
    const Complex sq = std::sqrt(disc);
    Mat2 out;
    if (std::abs(sq) * tau < 1e-8) {
        const Complex lam = 0.5 * tr;
        const Complex e = std::exp(lam * tau);
        out.m00 = e * (1.0 + tau * (m00 - lam));
        out.m11 = e * (1.0 + tau * (m11 - lam));
        out.m01 = e * tau * off;
        out.m10 = out.m01;
        return out;
    }
    const Complex lam_p = 0.5 * (tr + sq);
    const Complex lam_m = 0.5 * (tr - sq);
    const Complex cp = std::exp(lam_p * tau) / (lam_p - lam_m);
    const Complex cm = std::exp(lam_m * tau) / (lam_m - lam_p);
    out.m00 = cp * (m00 - lam_m) + cm * (m00 - lam_p);
    out.m11 = cp * (m11 - lam_m) + cm * (m11 - lam_p);
    out.m01 = (cp + cm) * off;
    out.m10 = out.m01;
    return out;
}

AtomicState apply(const Mat2& m, const AtomicState& s) {
    return {m.m00 * s.P + m.m01 * s.S, m.m10 * s.P + m.m11 * s.S};
}

void require_starts_at_origin(const TimeGrid& grid, const char* label) {
    const double scale = std::max(1.0, std::abs(grid.t1));
    if (std::abs(grid.t0) > 1e-12 * scale) {
        throw std::invalid_argument(std::string(label) + " must start at t = 0");
    }
}

}  // namespace

PiPulseSpec PiPulseSpec::with_omega(double omega) {
    if (!(omega > 0.0) || !std::isfinite(omega)) {
        throw std::invalid_argument("pi pulse Rabi frequency must be positive and finite");
    }
    return PiPulseSpec{omega};
}

double PiPulseSpec::duration() const {
    if (!(omega > 0.0) || !std::isfinite(omega)) {
        throw std::invalid_argument("pi pulse Rabi frequency must be positive and finite");
    }
    return std::numbers::pi / (2.0 * omega);
}

AtomicState pi_pulse_map(const AtomicState& state) {
    const Complex i{0.0, 1.0};
    return {i * state.S, i * state.P};
}

Envelope fast_retrieval_output(const PhysicalParams& params, const TimeGrid& grid) {
    params.validate();
    require_starts_at_origin(grid, "fast retrieval grid");
    const double g = params.field_coupling();
    const double rate = params.dressed_gamma();
    std::vector<Complex> values(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) {
        values[i] = Complex{-g * std::exp(-rate * grid.time(i)), 0.0};
    }
    return Envelope(grid, std::move(values), EnvelopeRole::OutputField);
}

FastInput optimal_fast_input(const PhysicalParams& params, const TimeGrid& grid) {
    params.validate();
    require_starts_at_origin(grid, "fast input grid");
    const double rate = params.dressed_gamma();
    const double amp = std::sqrt(2.0 * params.gamma * (1.0 + params.cooperativity));
    std::vector<Complex> values(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) {
        values[i] = Complex{-amp * std::exp(rate * (grid.time(i) - grid.t1)), 0.0};
    }
    FastInput out{Envelope(grid, std::move(values), EnvelopeRole::InputField),
                  1.0 - std::exp(-2.0 * rate * grid.t1), false};
    out.complete = out.norm2 >= 1.0 - 1e-4;
    return out;
}

Complex fast_storage_amplitude(const PhysicalParams& params, const Envelope& input) {
    params.validate();
    if (input.size() < 2) {
        throw std::invalid_argument("fast storage needs an input envelope");
    }
    require_starts_at_origin(input.grid(), "fast storage input");
    const TimeGrid& grid = input.grid();
    const double rate = params.dressed_gamma();
    const double amp = std::sqrt(2.0 * params.gamma * (1.0 + params.cooperativity));
    const double dt = grid.dt();
    // trapezoid of f(t) E_in(t) with f the rising-exponential kernel
    Complex acc{0.0, 0.0};
    Complex prev;
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double f = -amp * std::exp(rate * (grid.time(i) - grid.t1));
        const Complex cur = f * input[i];
        if (i > 0) acc += 0.5 * dt * (prev + cur);
        prev = cur;
    }
    const double root = std::sqrt(params.cooperativity / (1.0 + params.cooperativity));
    return root * acc;
}

FastProtocolResult simulate_fast_protocol(const PhysicalParams& params, const Envelope& input,
                                          const PiPulseSpec& pulse, const TimeGrid& grid) {
    params.validate();
    if (input.size() < 2) {
        throw std::invalid_argument("fast protocol needs an input envelope");
    }
    if (!input.all_finite()) {
        throw std::invalid_argument("fast protocol input must be finite");
    }
    require_starts_at_origin(input.grid(), "fast protocol input");
    require_starts_at_origin(grid, "fast protocol grid");
    const double T = input.grid().t1;
    const double dur = pulse.duration();
    const double t_end_pulse = T + dur;
    if (grid.t1 < t_end_pulse * (1.0 - 1e-12)) {
        throw std::invalid_argument("fast protocol grid must span the pulse window");
    }

    const Complex a = params.dressed_decay();
    const double g = params.field_coupling();
    const std::size_t n_in = input.grid().n;
    const double h = input.grid().dt();

    // Absorption phase: S stays zero, P obeys a driven scalar ODE that the
    // exponential integrator solves exactly for the piecewise-linear input.
    std::vector<Complex> p_knots(n_in);
    p_knots[0] = Complex{0.0, 0.0};
    const StepKernels full = step_kernels(a, h);
    for (std::size_t k = 0; k + 1 < n_in; ++k) {
        const Complex e0 = input[k];
        const Complex slope = (input[k + 1] - e0) / h;
        p_knots[k + 1] =
            full.decay * p_knots[k] + Complex{0.0, g} * (e0 * full.phi1 + slope * full.phi2);
    }

    const AtomicState before{p_knots[n_in - 1], Complex{0.0, 0.0}};
    const Mat2 full_pulse = pulse_propagator(a, params.gamma_s, pulse.omega, dur);
    const AtomicState after = apply(full_pulse, before);
    const AtomicState ideal = pi_pulse_map(before);

    Trajectory traj;
    traj.model = ModelKind::BadCavity;
    traj.kind = RunKind::Storage;
    traj.grid = grid;
    traj.P.resize(grid.n);
    traj.S.resize(grid.n);
    traj.E_out.resize(grid.n);
    const double boundary_slack = 1e-12 * std::max(1.0, grid.t1);
    for (std::size_t j = 0; j < grid.n; ++j) {
        const double t = grid.time(j);
        Complex p, s, e_in{0.0, 0.0};
        if (t <= T + boundary_slack) {
            const double clamped = std::min(t, T);
            std::size_t k = static_cast<std::size_t>(
                std::min(std::floor(clamped / h), static_cast<double>(n_in - 2)));
            const double u = std::max(0.0, clamped - static_cast<double>(k) * h);
            const Complex e0 = input[k];
            const Complex slope = (input[k + 1] - e0) / h;
            p = advance_polarization(p_knots[k], a, g, e0, slope, u);
            s = Complex{0.0, 0.0};
            e_in = e0 + slope * u;
        } else if (t <= t_end_pulse + boundary_slack) {
            const AtomicState st = apply(pulse_propagator(a, params.gamma_s, pulse.omega, t - T), before);
            p = st.P;
            s = st.S;
        } else {
            const double tau = t - t_end_pulse;
            p = std::exp(-a * tau) * after.P;
            s = std::exp(-params.gamma_s * tau) * after.S;
        }
        traj.P[j] = p;
        traj.S[j] = s;
        traj.E_out[j] = e_in + Complex{0.0, g} * p;
    }

    const double dt = grid.dt();
    double leak = 0.0;
    for (std::size_t j = 0; j + 1 < grid.n; ++j) {
        leak += 0.5 * dt * (std::norm(traj.E_out[j]) + std::norm(traj.E_out[j + 1]));
    }
    traj.eta_r = leak;
    traj.eta_s = std::norm(traj.S.back());
    traj.residual_excitation = std::norm(traj.P.back()) + std::norm(traj.S.back());
    traj.incomplete_retrieval = false;
    traj.convergence = ConvergenceReport{grid.n, 0, 0.0, false};

    FastProtocolResult result;
    result.before_pulse = before;
    result.after_pulse = after;
    result.ideal_after_pulse = ideal;
    result.map_deviation = std::sqrt(std::norm(after.P - ideal.P) + std::norm(after.S - ideal.S));
    result.eta_s = std::norm(after.S);
    result.trajectory = std::move(traj);
    return result;
}

}  // namespace cavmem
