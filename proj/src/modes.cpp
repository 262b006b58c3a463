#include "cavmem/modes.hpp"

#include <cmath>

namespace cavmem {

namespace {

void require_span(const TimeGrid& grid, double T, const char* who) {
    const double tol = 1e-12 * std::max(1.0, std::abs(T));
    if (std::abs(grid.t0) > tol || std::abs(grid.t1 - T) > tol) {
        throw std::invalid_argument(std::string(who) + ": grid must span [0, T]");
    }
}

}  // namespace

Envelope gaussian_like_mode(double T, const TimeGrid& grid) {
    if (!(T > 0.0)) throw std::invalid_argument("gaussian_like_mode: T must be positive");
    require_span(grid, T, "gaussian_like_mode");
    const double floor = std::exp(-30.0 * 0.25);  // value of the bump at the endpoints
    std::vector<Complex> values(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double x = grid.time(i) / T - 0.5;
        values[i] = Complex{std::exp(-30.0 * x * x) - floor, 0.0};
    }
    Envelope raw(grid, std::move(values), EnvelopeRole::InputField);
    // Normalizing on the actual grid makes norm2() == 1 exact there; the
    // scale constant divided by sqrt(T) is about 2.09 for any T.
    return raw.normalized();
}

Envelope time_reverse(const Envelope& env, double T) {
    require_span(env.grid(), T, "time_reverse");
    std::vector<Complex> rev(env.size());
    for (std::size_t i = 0; i < env.size(); ++i) {
        rev[i] = std::conj(env[env.size() - 1 - i]);
    }
    return Envelope(env.grid(), std::move(rev), env.role());
}

Complex mode_overlap(const Envelope& a, const Envelope& b) {
    if (!a.grid().matches(b.grid())) {
        throw std::invalid_argument("mode_overlap: envelopes sampled on different grids");
    }
    const double dt = a.grid().dt();
    Complex acc = 0.5 * (std::conj(a[0]) * b[0] +
                         std::conj(a[a.size() - 1]) * b[b.size() - 1]);
    for (std::size_t i = 1; i + 1 < a.size(); ++i) acc += std::conj(a[i]) * b[i];
    return acc * dt;
}

double fidelity_from_efficiency(double eta) {
    if (!(eta >= 0.0) || !(eta <= 1.0)) {
        throw std::invalid_argument("fidelity_from_efficiency: efficiency must lie in [0, 1]");
    }
    return 0.5 * (1.0 + eta);
}

}  // namespace cavmem
