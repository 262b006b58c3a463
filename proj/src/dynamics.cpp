#include "cavmem/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cavmem {

namespace {

constexpr std::size_t kMaxGridSamples = (1u << 24) + 1;  // memory guard (~16M samples)
constexpr double kIncompleteRetrievalThreshold = 1e-4;

double max_abs(const Envelope& env) {
    double m = 0.0;
    for (const Complex& v : env.values()) m = std::max(m, std::abs(v));
    return m;
}

void require_finite(const Envelope& env, const char* what) {
    if (env.size() > 0 && !env.all_finite()) {
        throw std::invalid_argument(std::string(what) + " contains non-finite samples");
    }
}

// Trapezoidal accumulation of |E_out|^2.
double trapezoid_norm2(const std::vector<Complex>& v, double dt) {
    double acc = 0.5 * (std::norm(v.front()) + std::norm(v.back()));
    for (std::size_t i = 1; i + 1 < v.size(); ++i) acc += std::norm(v[i]);
    return acc * dt;
}

struct BadCavityRates {
    Complex dressed;   // gamma(1+C) + i delta
    double gamma_s;
    double coupling;   // sqrt(2 gamma C)
};

// One RK4 pass over the grid for the eliminated model. The control and input
// are piecewise linear; stage values at half-steps are their midpoints.
void integrate_bad_cavity(const BadCavityRates& r, const Envelope& control,
                          const Envelope* input, const TimeGrid& grid, AtomicState init,
                          Trajectory& out) {
    const std::size_t n = grid.n;
    const double dt = grid.dt();
    out.P.assign(n, Complex{});
    out.S.assign(n, Complex{});
    out.E_out.assign(n, Complex{});

    const Complex i_unit{0.0, 1.0};
    Complex P = init.P, S = init.S;
    auto deriv = [&](Complex p, Complex s, Complex om, Complex ein, Complex& dp, Complex& ds) {
        dp = -r.dressed * p + i_unit * om * s + i_unit * r.coupling * ein;
        ds = -r.gamma_s * s + i_unit * std::conj(om) * p;
    };

    auto ein_at = [&](std::size_t k) -> Complex {
        return input ? (*input)[k] : Complex{};
    };

    out.P[0] = P;
    out.S[0] = S;
    out.E_out[0] = ein_at(0) + i_unit * r.coupling * P;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const Complex om0 = control[k], om1 = control[k + 1], omm = 0.5 * (om0 + om1);
        const Complex e0 = ein_at(k), e1 = ein_at(k + 1), em = 0.5 * (e0 + e1);
        Complex dp1, ds1, dp2, ds2, dp3, ds3, dp4, ds4;
        deriv(P, S, om0, e0, dp1, ds1);
        deriv(P + 0.5 * dt * dp1, S + 0.5 * dt * ds1, omm, em, dp2, ds2);
        deriv(P + 0.5 * dt * dp2, S + 0.5 * dt * ds2, omm, em, dp3, ds3);
        deriv(P + dt * dp3, S + dt * ds3, om1, e1, dp4, ds4);
        P += dt / 6.0 * (dp1 + 2.0 * dp2 + 2.0 * dp3 + dp4);
        S += dt / 6.0 * (ds1 + 2.0 * ds2 + 2.0 * ds3 + ds4);
        out.P[k + 1] = P;
        out.S[k + 1] = S;
        out.E_out[k + 1] = e1 + i_unit * r.coupling * P;
    }
    if (!std::isfinite(P.real()) || !std::isfinite(P.imag()) || !std::isfinite(S.real()) ||
        !std::isfinite(S.imag())) {
        throw ConvergenceError("integration diverged (non-finite state)");
    }
    out.eta_s = std::norm(S);
    out.eta_r = trapezoid_norm2(out.E_out, dt);
    out.residual_excitation = std::norm(P) + std::norm(S);
}

struct FullCavityRates {
    double kappa;
    double gN;
    Complex bare;      // gamma + i delta
    double gamma_s;
    double in_coupling;  // sqrt(2 kappa)
};

void integrate_full_cavity(const FullCavityRates& r, const Envelope& control,
                           const Envelope* input, const TimeGrid& grid, AtomicState init,
                           Trajectory& out) {
    const std::size_t n = grid.n;
    const double dt = grid.dt();
    out.P.assign(n, Complex{});
    out.S.assign(n, Complex{});
    out.E_out.assign(n, Complex{});
    out.E_cav.assign(n, Complex{});

    const Complex i_unit{0.0, 1.0};
    Complex E{}, P = init.P, S = init.S;
    auto deriv = [&](Complex e, Complex p, Complex s, Complex om, Complex ein, Complex& de,
                     Complex& dp, Complex& ds) {
        de = -r.kappa * e + i_unit * r.gN * p + r.in_coupling * ein;
        dp = -r.bare * p + i_unit * r.gN * e + i_unit * om * s;
        ds = -r.gamma_s * s + i_unit * std::conj(om) * p;
    };
    auto ein_at = [&](std::size_t k) -> Complex { return input ? (*input)[k] : Complex{}; };

    out.E_cav[0] = E;
    out.P[0] = P;
    out.S[0] = S;
    out.E_out[0] = r.in_coupling * E - ein_at(0);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const Complex om0 = control[k], om1 = control[k + 1], omm = 0.5 * (om0 + om1);
        const Complex e0 = ein_at(k), e1 = ein_at(k + 1), em = 0.5 * (e0 + e1);
        Complex de1, dp1, ds1, de2, dp2, ds2, de3, dp3, ds3, de4, dp4, ds4;
        deriv(E, P, S, om0, e0, de1, dp1, ds1);
        deriv(E + 0.5 * dt * de1, P + 0.5 * dt * dp1, S + 0.5 * dt * ds1, omm, em, de2, dp2, ds2);
        deriv(E + 0.5 * dt * de2, P + 0.5 * dt * dp2, S + 0.5 * dt * ds2, omm, em, de3, dp3, ds3);
        deriv(E + dt * de3, P + dt * dp3, S + dt * ds3, om1, e1, de4, dp4, ds4);
        E += dt / 6.0 * (de1 + 2.0 * de2 + 2.0 * de3 + de4);
        P += dt / 6.0 * (dp1 + 2.0 * dp2 + 2.0 * dp3 + dp4);
        S += dt / 6.0 * (ds1 + 2.0 * ds2 + 2.0 * ds3 + ds4);
        out.E_cav[k + 1] = E;
        out.P[k + 1] = P;
        out.S[k + 1] = S;
        out.E_out[k + 1] = r.in_coupling * E - e1;
    }
    if (!std::isfinite(P.real()) || !std::isfinite(S.real()) || !std::isfinite(E.real()) ||
        !std::isfinite(P.imag()) || !std::isfinite(S.imag()) || !std::isfinite(E.imag())) {
        throw ConvergenceError("integration diverged (non-finite state)");
    }
    out.eta_s = std::norm(S);
    out.eta_r = trapezoid_norm2(out.E_out, dt);
    out.residual_excitation = std::norm(P) + std::norm(S);
}

// Number of refinements needed before dt * rate < margin, respecting the cap.
int prerefine_count(const TimeGrid& grid, double rate, double margin) {
    int extra = 0;
    double dt = grid.dt();
    std::size_t n = grid.n;
    while (dt * rate >= margin) {
        n = 2 * n - 1;
        if (n > kMaxGridSamples) {
            std::ostringstream err;
            err << "grid of " << n << " samples exceeds the memory guard (rate " << rate << ")";
            throw ConvergenceError(err.str());
        }
        dt *= 0.5;
        ++extra;
    }
    return extra;
}

double driven_efficiency(const Trajectory& t) {
    return t.kind == RunKind::Storage ? t.eta_s : t.eta_r;
}

// Shared refinement loop: integrate, double the grid until the reported
// efficiency is stable to opts.eta_tol, keep the finer answer.
template <typename IntegrateFn>
Trajectory converge(IntegrateFn&& integrate, Envelope control, Envelope input, bool has_input,
                    TimeGrid grid, const IntegratorOptions& opts, double rate, RunKind kind,
                    ModelKind model) {
    int pre = prerefine_count(grid, rate, opts.rate_margin);
    for (int i = 0; i < pre; ++i) {
        grid = grid.refined();
        control = control.refined();
        if (has_input) input = input.refined();
    }

    Trajectory current;
    current.model = model;
    current.kind = kind;
    current.grid = grid;
    integrate(control, has_input ? &input : nullptr, grid, current);
    current.convergence = {grid.n, 0, 0.0, false};

    if (!opts.check_convergence) return current;

    for (int r = 1; r <= opts.max_refinements; ++r) {
        if (2 * grid.n - 1 > kMaxGridSamples) {
            throw ConvergenceError("efficiency not converged before hitting the memory guard");
        }
        grid = grid.refined();
        control = control.refined();
        if (has_input) input = input.refined();
        Trajectory next;
        next.model = model;
        next.kind = kind;
        next.grid = grid;
        integrate(control, has_input ? &input : nullptr, grid, next);
        const double delta = std::abs(driven_efficiency(next) - driven_efficiency(current));
        next.convergence = {grid.n, r, delta, true};
        if (delta < opts.eta_tol) return next;
        current = std::move(next);
    }
    std::ostringstream err;
    err << "efficiency changed by " << current.convergence.last_delta << " (> " << opts.eta_tol
        << ") at the deepest allowed refinement (" << current.grid.n << " samples)";
    throw ConvergenceError(err.str());
}

}  // namespace

Trajectory simulate_storage(const PhysicalParams& params, const Envelope& control,
                            const Envelope& input, const TimeGrid& grid,
                            const IntegratorOptions& opts) {
    params.validate();
    if (!control.grid().matches(grid) || !input.grid().matches(grid)) {
        throw std::invalid_argument("simulate_storage: control, input and grid must agree");
    }
    require_finite(control, "control");
    require_finite(input, "input");
    const BadCavityRates rates{params.dressed_decay(), params.gamma_s, params.field_coupling()};
    const double rate = params.dressed_gamma() + std::abs(params.delta) + max_abs(control);
    auto integrate = [&](const Envelope& c, const Envelope* in, const TimeGrid& g, Trajectory& t) {
        integrate_bad_cavity(rates, c, in, g, AtomicState{}, t);
    };
    Trajectory traj = converge(integrate, control, input, true, grid, opts, rate,
                               RunKind::Storage, ModelKind::BadCavity);
    return traj;
}

Trajectory simulate_retrieval(const PhysicalParams& params, const Envelope& control,
                              const TimeGrid& grid, AtomicState initial,
                              const IntegratorOptions& opts) {
    params.validate();
    if (!control.grid().matches(grid)) {
        throw std::invalid_argument("simulate_retrieval: control and grid must agree");
    }
    require_finite(control, "control");
    if (!std::isfinite(initial.excitation())) {
        throw std::invalid_argument("simulate_retrieval: non-finite initial state");
    }
    const BadCavityRates rates{params.dressed_decay(), params.gamma_s, params.field_coupling()};
    const double rate = params.dressed_gamma() + std::abs(params.delta) + max_abs(control);
    auto integrate = [&](const Envelope& c, const Envelope* in, const TimeGrid& g, Trajectory& t) {
        integrate_bad_cavity(rates, c, in, g, initial, t);
    };
    Trajectory traj = converge(integrate, control, Envelope{}, false, grid, opts, rate,
                               RunKind::Retrieval, ModelKind::BadCavity);
    traj.incomplete_retrieval = traj.residual_excitation > kIncompleteRetrievalThreshold;
    return traj;
}

Trajectory simulate_full_cavity(const PhysicalParams& params, const Envelope& control,
                                const Envelope& input, const TimeGrid& grid, AtomicState initial,
                                RunKind kind, const IntegratorOptions& opts) {
    params.validate();
    if (!params.has_cavity()) {
        throw std::invalid_argument("simulate_full_cavity: params lack kappa / coupling_gN");
    }
    if (!control.grid().matches(grid)) {
        throw std::invalid_argument("simulate_full_cavity: control and grid must agree");
    }
    const bool has_input = input.size() > 0;
    if (has_input && !input.grid().matches(grid)) {
        throw std::invalid_argument("simulate_full_cavity: input and grid must agree");
    }
    require_finite(control, "control");
    require_finite(input, "input");
    const FullCavityRates rates{params.kappa,
                                params.coupling_gN,
                                Complex{params.gamma, params.delta},
                                params.gamma_s,
                                std::sqrt(2.0 * params.kappa)};
    const double rate = params.kappa + params.gamma + std::abs(params.delta) + params.coupling_gN +
                        max_abs(control);
    auto integrate = [&](const Envelope& c, const Envelope* in, const TimeGrid& g, Trajectory& t) {
        integrate_full_cavity(rates, c, in, g, initial, t);
    };
    Trajectory traj = converge(integrate, control, input, has_input, grid, opts, rate, kind,
                               ModelKind::FullCavity);
    if (kind == RunKind::Retrieval) {
        traj.incomplete_retrieval = traj.residual_excitation > kIncompleteRetrievalThreshold;
    }
    return traj;
}

double conservation_residual(const Trajectory& traj, const PhysicalParams& params) {
    params.validate();
    if (traj.model != ModelKind::BadCavity || traj.kind != RunKind::Retrieval) {
        throw std::invalid_argument(
            "conservation_residual: only defined for bad-cavity retrieval runs");
    }
    if (params.gamma_s != 0.0) {
        throw std::invalid_argument("conservation_residual: requires gamma_s = 0");
    }
    if (traj.P.size() < 3) {
        throw std::invalid_argument("conservation_residual: trajectory too short");
    }
    const double dt = traj.grid.dt();
    const double drain = 2.0 * params.dressed_gamma();
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < traj.P.size(); ++k) {
        const double exc_prev = std::norm(traj.P[k - 1]) + std::norm(traj.S[k - 1]);
        const double exc_next = std::norm(traj.P[k + 1]) + std::norm(traj.S[k + 1]);
        const double lhs = (exc_next - exc_prev) / (2.0 * dt);
        const double rhs = -drain * std::norm(traj.P[k]);
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

double composite_efficiency(double eta_s, double eta_r, double gamma_s, double hold_duration) {
    if (!(eta_s >= 0.0 && eta_s <= 1.0) || !(eta_r >= 0.0 && eta_r <= 1.0)) {
        throw std::invalid_argument("composite_efficiency: efficiencies must lie in [0, 1]");
    }
    if (gamma_s < 0.0 || hold_duration < 0.0) {
        throw std::invalid_argument("composite_efficiency: gamma_s and hold must be nonnegative");
    }
    return eta_s * eta_r * std::exp(-2.0 * gamma_s * hold_duration);
}

}  // namespace cavmem
