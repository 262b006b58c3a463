#include "cavmem/adiabatic.hpp"
#include "cavmem/dynamics.hpp"
#include "cavmem/modes.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

using namespace cavmem;

namespace {

Envelope sampled(const TimeGrid& grid, EnvelopeRole role,
                 const std::function<Complex(double)>& f) {
    std::vector<Complex> values(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) values[i] = f(grid.time(i));
    return Envelope(grid, std::move(values), role);
}

// Smooth normalized mode with a quadratic phase chirp; exercises complex
// conventions that a real mode cannot distinguish.
Envelope chirped_mode(double T, const TimeGrid& grid) {
    const Envelope base = gaussian_like_mode(T, grid);
    std::vector<Complex> values(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double t = grid.time(i);
        values[i] = base[i] * std::exp(Complex{0.0, 0.8 * t + 0.3 * t * t / T});
    }
    return Envelope(grid, std::move(values), EnvelopeRole::InputField).normalized();
}

double beta_of(const PhysicalParams& p) {
    return 2.0 * p.dressed_gamma() / p.dressed_line();
}

std::size_t index_of(const TimeGrid& grid, double t) {
    return static_cast<std::size_t>(std::llround((t - grid.t0) / grid.dt()));
}

double overlap2(const Envelope& a, const Envelope& b) {
    return std::norm(mode_overlap(a.normalized(), b.normalized()));
}

}  // namespace

TEST_CASE("control intensity integral is exact for piecewise-linear |Omega|^2") {
    const TimeGrid grid = TimeGrid::over(0.0, 4.0, 41);
    const Envelope sqrt_ramp = sampled(grid, EnvelopeRole::Control, [](double t) {
        return Complex{std::sqrt(t), 0.0};
    });

    // |Omega|^2 = t between nodes, so the integral over [a, b] is (b^2-a^2)/2.
    CHECK(control_intensity_integral(sqrt_ramp, 0.0, 4.0) == doctest::Approx(8.0).epsilon(1e-13));
    CHECK(control_intensity_integral(sqrt_ramp, 0.37, 3.11) ==
          doctest::Approx(0.5 * (3.11 * 3.11 - 0.37 * 0.37)).epsilon(1e-12));
    const double split = control_intensity_integral(sqrt_ramp, 0.3, 1.7) +
                         control_intensity_integral(sqrt_ramp, 1.7, 3.2);
    CHECK(split == doctest::Approx(control_intensity_integral(sqrt_ramp, 0.3, 3.2)).epsilon(1e-13));

    const Envelope flat = sampled(grid, EnvelopeRole::Control, [](double) {
        return Complex{1.5, 0.0};
    });
    CHECK(control_intensity_integral(flat, 0.25, 3.85) ==
          doctest::Approx(2.25 * 3.6).epsilon(1e-13));

    CHECK_THROWS_AS(control_intensity_integral(flat, -0.5, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(control_intensity_integral(flat, 1.0, 4.5), std::invalid_argument);
    CHECK_THROWS_AS(control_intensity_integral(flat, 2.0, 1.0), std::invalid_argument);
}

TEST_CASE("a shaped retrieval control reproduces the requested mode in closed form") {
    const double T = 4.0;
    const TimeGrid grid = TimeGrid::over(0.0, T, 2001);
    const Envelope mode = gaussian_like_mode(T, grid);

    for (double delta : {0.0, 30.0}) {
        CAPTURE(delta);
        const PhysicalParams params = PhysicalParams::bad_cavity(10.0, delta);
        const ShapingResult shaped = retrieval_control_for_mode(params, mode, 0.0);
        CHECK(shaped.predicted_efficiency ==
              doctest::Approx(10.0 / 11.0).epsilon(1e-14));
        CHECK(shaped.truncated);
        CHECK(shaped.epsilon_boundary == doctest::Approx(1e-4));

        // The transfer profile starts at zero and only grows.
        REQUIRE(shaped.intensity_profile.size() == grid.n);
        CHECK(shaped.intensity_profile.front() == 0.0);
        for (std::size_t k = 1; k < grid.n; ++k) {
            CHECK(shaped.intensity_profile[k] >= shaped.intensity_profile[k - 1]);
        }

        const Envelope out = adiabatic_retrieval_output(params, shaped.control);
        CHECK(overlap2(out, mode) > 0.9999);
        CHECK(std::abs(out.norm2() - 10.0 / 11.0) < 2e-3);
    }
}

TEST_CASE("shaped square target makes the remaining-energy law explicit") {
    const double T = 2.0;
    const TimeGrid grid = TimeGrid::over(0.0, T, 1001);
    const Envelope square = sampled(grid, EnvelopeRole::InputField, [&](double) {
        return Complex{1.0 / std::sqrt(T), 0.0};
    });
    const PhysicalParams params = PhysicalParams::bad_cavity(4.0);
    const ShapingResult shaped = retrieval_control_for_mode(params, square, 0.0);

    const double beta = beta_of(params);
    const double eps = shaped.epsilon_boundary;
    // |Omega(t)|^2 = |e|^2 / (beta * (1 - t/T + eps)) on the retained samples.
    for (std::size_t k : {std::size_t{0}, std::size_t{250}, std::size_t{500}, std::size_t{900}}) {
        const double t = grid.time(k);
        const double expected = (1.0 / T) / (beta * (1.0 - t / T + eps));
        CHECK(std::norm(shaped.control[k]) == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("detuning rescales the shaped control amplitude like the dressed line") {
    const double T = 4.0;
    const TimeGrid grid = TimeGrid::over(0.0, T, 1001);
    const Envelope mode = gaussian_like_mode(T, grid);
    const double delta = 50.0;
    const PhysicalParams resonant = PhysicalParams::bad_cavity(10.0, 0.0);
    const PhysicalParams detuned = PhysicalParams::bad_cavity(10.0, delta);

    auto peak = [](const Envelope& env) {
        double m = 0.0;
        for (std::size_t i = 0; i < env.size(); ++i) m = std::max(m, std::abs(env[i]));
        return m;
    };
    const double p0 = peak(retrieval_control_for_mode(resonant, mode, 0.0).control);
    const double pd = peak(retrieval_control_for_mode(detuned, mode, 0.0).control);

    const double dressed = resonant.dressed_gamma();
    const double exact = std::hypot(dressed, delta) / dressed;
    CHECK(pd / p0 == doctest::Approx(exact).epsilon(1e-12));
    // Far off resonance this is the linear-in-delta power scaling.
    CHECK(pd / p0 == doctest::Approx(delta / dressed).epsilon(0.2));
}

TEST_CASE("shaped retrieval survives the exact dynamics, on and off resonance") {
    // Long enough that the residual mode distortion, which shrinks as
    // 1/(T gamma (1+C))^2, sits comfortably under the overlap bound below.
    const double T = 12.0;
    const TimeGrid grid = TimeGrid::over(0.0, T, 2001);
    const Envelope mode = gaussian_like_mode(T, grid);

    for (double delta : {0.0, 30.0}) {
        CAPTURE(delta);
        const PhysicalParams params = PhysicalParams::bad_cavity(10.0, delta);
        const ShapingResult shaped = retrieval_control_for_mode(params, mode, 0.0);
        const Trajectory traj = simulate_retrieval(params, shaped.control, grid);

        CHECK(std::abs(traj.eta_r - shaped.predicted_efficiency) < 1e-2);
        // The emitted field must match the requested mode even off resonance:
        // the shaping pre-compensates the detuning phase. Compare on the
        // trajectory grid, which is a refinement of the mode's grid.
        const Envelope out(traj.grid, traj.E_out, EnvelopeRole::OutputField);
        Envelope target = mode;
        while (target.size() < out.size()) target = target.refined();
        REQUIRE(target.size() == out.size());
        CHECK(std::norm(mode_overlap(target.normalized(), out.normalized())) > 0.995);
    }
}

TEST_CASE("an unshaped control leaves the detuning phase ramp in the output") {
    const PhysicalParams params = PhysicalParams::bad_cavity(1.0, 10.0);
    const double omega = 1.0, T = 6.0;
    const TimeGrid grid = TimeGrid::over(0.0, T, 1201);
    const Envelope control = sampled(grid, EnvelopeRole::Control, [&](double) {
        return Complex{omega, 0.0};
    });
    const Trajectory traj = simulate_retrieval(params, control, grid);

    // After the initial transient the output rotates at +|Omega|^2 delta / D.
    const double expected = omega * omega * params.delta / params.dressed_line();
    const std::size_t k1 = index_of(traj.grid, 3.0);
    const std::size_t k2 = index_of(traj.grid, 5.0);
    const double measured =
        std::arg(traj.E_out[k2] * std::conj(traj.E_out[k1])) /
        (traj.grid.time(k2) - traj.grid.time(k1));
    CHECK(measured == doctest::Approx(expected).epsilon(0.03));
}

TEST_CASE("the storage kernel is normalized by the transferred fraction and bounded") {
    const double T = 4.0;
    const TimeGrid grid = TimeGrid::over(0.0, T, 4001);
    const Envelope control = sampled(grid, EnvelopeRole::Control, [&](double t) {
        const double x = (t - 2.0) / 0.5;
        return Complex{2.0 * std::exp(-0.5 * x * x), 0.0};
    });
    const PhysicalParams params = PhysicalParams::bad_cavity(10.0);

    const Envelope kernel = storage_kernel(params, control);
    const double transferred =
        1.0 - std::exp(-beta_of(params) * control_intensity_integral(control, 0.0, T));
    CHECK(kernel.norm2() == doctest::Approx(transferred).epsilon(1e-6));
    CHECK(kernel.norm2() <= 1.0 + 1e-9);

    SUBCASE("spin decay multiplies the kernel by exp(-gamma_s (T - t)) exactly") {
        PhysicalParams decaying = params;
        decaying.gamma_s = 0.07;
        const Envelope tilted = storage_kernel(decaying, control);
        for (std::size_t k = 0; k < kernel.size(); ++k) {
            const Complex expected = kernel[k] * std::exp(-0.07 * (T - grid.time(k)));
            CHECK(std::abs(tilted[k] - expected) <= 1e-15 + 1e-12 * std::abs(expected));
        }
    }
}

TEST_CASE("matched storage reaches the efficiency bound and agrees with the dynamics") {
    const double T = 6.0;
    const TimeGrid grid = TimeGrid::over(0.0, T, 2001);
    const PhysicalParams params = PhysicalParams::bad_cavity(10.0);
    const double bound = 10.0 / 11.0;

    // A chirped mode catches conjugation mistakes that a real mode hides.
    const Envelope mode = chirped_mode(T, grid);
    const ShapingResult shaped = storage_control_for_mode(params, mode, 0.0);
    CHECK(shaped.predicted_efficiency == doctest::Approx(bound).epsilon(1e-14));

    const Complex amp = adiabatic_storage_amplitude(params, shaped.control, mode);
    CHECK(std::abs(std::norm(amp) - bound) < 2e-2);

    const Trajectory traj = simulate_storage(params, shaped.control, mode, grid);
    CHECK(std::abs(traj.eta_s - std::norm(amp)) < 1e-2);
    // The complex amplitudes themselves must agree, not just the magnitudes.
    CHECK(std::abs(traj.S.back() - amp) < 0.08 * std::abs(amp));

    CHECK_THROWS_AS(adiabatic_storage_amplitude(
                        params, shaped.control,
                        sampled(TimeGrid::over(0.0, T, 11), EnvelopeRole::InputField,
                                [](double) { return Complex{1.0, 0.0}; })),
                    std::invalid_argument);
}

TEST_CASE("storage control is the conjugated time reverse of the retrieval control") {
    const double T = 5.0;
    const TimeGrid grid = TimeGrid::over(0.0, T, 1501);
    const Envelope mode = chirped_mode(T, grid);

    for (double delta : {0.0, 12.0}) {
        CAPTURE(delta);
        const PhysicalParams params = PhysicalParams::bad_cavity(7.0, delta);
        const Envelope retr = retrieval_control_for_mode(params, mode, 0.0).control;
        const Envelope stor =
            storage_control_for_mode(params, time_reverse(mode, T), 0.0).control;

        double peak = 0.0;
        for (std::size_t k = 0; k < retr.size(); ++k) peak = std::max(peak, std::abs(retr[k]));
        double worst = 0.0;
        for (std::size_t k = 0; k < retr.size(); ++k) {
            worst = std::max(worst,
                             std::abs(stor[k] - std::conj(retr[retr.size() - 1 - k])));
        }
        // The two shapers compute their halves independently, so agreement
        // is to rounding accumulated over the integrals, not bit-exact.
        CHECK(worst <= 1e-10 * peak);
    }
}

TEST_CASE("spin decay during retrieval lowers the reachable efficiency as predicted") {
    const double T = 4.0, gamma_s = 0.05;
    const TimeGrid grid = TimeGrid::over(0.0, T, 2001);
    const Envelope mode = gaussian_like_mode(T, grid);
    const PhysicalParams params = PhysicalParams::bad_cavity(10.0, 0.0, gamma_s);

    const ShapingResult shaped = retrieval_control_for_mode(params, mode, gamma_s);

    // predicted = C/(1+C) / integral |e|^2 exp(2 gamma_s t)
    const Envelope tilted = sampled(grid, EnvelopeRole::InputField, [&](double t) {
        return mode.at(t) * std::exp(gamma_s * t);
    });
    CHECK(shaped.predicted_efficiency ==
          doctest::Approx(10.0 / 11.0 / tilted.norm2()).epsilon(1e-12));
    CHECK(shaped.predicted_efficiency < 10.0 / 11.0);

    const Trajectory traj = simulate_retrieval(params, shaped.control, grid);
    CHECK(std::abs(traj.eta_r - shaped.predicted_efficiency) < 2e-2);

    SUBCASE("closed-form output just gains the decay envelope") {
        PhysicalParams frozen = params;
        frozen.gamma_s = 0.0;
        const Envelope with_decay = adiabatic_retrieval_output(params, shaped.control);
        const Envelope without = adiabatic_retrieval_output(frozen, shaped.control);
        for (std::size_t k = 0; k < with_decay.size(); ++k) {
            const Complex expected = without[k] * std::exp(-gamma_s * grid.time(k));
            CHECK(std::abs(with_decay[k] - expected) <= 1e-15 + 1e-12 * std::abs(expected));
        }
    }
}

TEST_CASE("spin decay during storage weights early arrival as predicted") {
    const double T = 4.0, gamma_s = 0.05;
    const TimeGrid grid = TimeGrid::over(0.0, T, 2001);
    const Envelope mode = gaussian_like_mode(T, grid);
    const PhysicalParams params = PhysicalParams::bad_cavity(10.0, 0.0, gamma_s);

    const ShapingResult shaped = storage_control_for_mode(params, mode, gamma_s);
    const Envelope tilted = sampled(grid, EnvelopeRole::InputField, [&](double t) {
        return mode.at(t) * std::exp(-gamma_s * (T - t));
    });
    CHECK(shaped.predicted_efficiency ==
          doctest::Approx(10.0 / 11.0 * tilted.norm2()).epsilon(1e-12));
    CHECK(shaped.predicted_efficiency < 10.0 / 11.0);

    const Trajectory traj = simulate_storage(params, shaped.control, mode, grid);
    CHECK(std::abs(traj.eta_s - shaped.predicted_efficiency) < 2e-2);
}

TEST_CASE("adiabaticity margins gate on both duration and pulse steepness") {
    const PhysicalParams params = PhysicalParams::bad_cavity(10.0);

    SUBCASE("a long shaped pulse is certified") {
        const double T = 10.0;
        const TimeGrid grid = TimeGrid::over(0.0, T, 2001);
        const Envelope mode = gaussian_like_mode(T, grid);
        const ShapingResult shaped = retrieval_control_for_mode(params, mode, 0.0);
        const AdiabaticityMargins m = adiabaticity_margins(params, shaped.control, std::nullopt, T);
        CHECK(m.tc_gamma == doctest::Approx(100.0));
        CHECK(m.power_ratio > 0.0);
        CHECK(m.power_ratio <= 0.6);
        CHECK(m.control_rate_ratio <= 0.6);
        CHECK(m.input_rate_ratio == 0.0);
        CHECK(m.adiabatic);
    }

    SUBCASE("a short pulse fails the duration gate") {
        const double T = 0.5;
        const TimeGrid grid = TimeGrid::over(0.0, T, 2001);
        const Envelope mode = gaussian_like_mode(T, grid);
        const ShapingResult shaped = retrieval_control_for_mode(params, mode, 0.0);
        const AdiabaticityMargins m = adiabaticity_margins(params, shaped.control, std::nullopt, T);
        CHECK(m.tc_gamma == doctest::Approx(5.0));
        CHECK_FALSE(m.adiabatic);
    }

    SUBCASE("the input mode contributes its own rate ratio") {
        const double T = 10.0;
        const TimeGrid grid = TimeGrid::over(0.0, T, 2001);
        const Envelope mode = gaussian_like_mode(T, grid);
        const ShapingResult shaped = storage_control_for_mode(params, mode, 0.0);
        const AdiabaticityMargins m = adiabaticity_margins(params, shaped.control, mode, T);
        CHECK(m.input_rate_ratio > 0.0);
        CHECK(m.adiabatic);
    }

    SUBCASE("domain checks") {
        const TimeGrid grid = TimeGrid::over(0.0, 1.0, 11);
        const Envelope control = sampled(grid, EnvelopeRole::Control,
                                         [](double) { return Complex{1.0, 0.0}; });
        CHECK_THROWS_AS(adiabaticity_margins(params, control, std::nullopt, 0.0),
                        std::invalid_argument);
    }
}

TEST_CASE("output duration estimate scales with the dressed line over the pump power") {
    const PhysicalParams resonant = PhysicalParams::bad_cavity(10.0);
    CHECK(output_duration_estimate(resonant, 2.0) == doctest::Approx(2.5));
    const PhysicalParams detuned = PhysicalParams::bad_cavity(10.0, 30.0);
    CHECK(output_duration_estimate(detuned, 2.0) == doctest::Approx(25.0));
    CHECK_THROWS_AS(output_duration_estimate(resonant, 0.0), std::invalid_argument);
}

TEST_CASE("shaping rejects bad options and misplaced modes") {
    const double T = 2.0;
    const TimeGrid grid = TimeGrid::over(0.0, T, 501);
    const Envelope mode = gaussian_like_mode(T, grid);
    const PhysicalParams params = PhysicalParams::bad_cavity(4.0);

    ShapingOptions opts;
    opts.epsilon_boundary = 0.0;
    CHECK_THROWS_AS(retrieval_control_for_mode(params, mode, 0.0, opts), std::invalid_argument);
    opts.epsilon_boundary = 1.0;
    CHECK_THROWS_AS(retrieval_control_for_mode(params, mode, 0.0, opts), std::invalid_argument);
    opts = ShapingOptions{};
    opts.truncation_fraction = 0.5;
    CHECK_THROWS_AS(storage_control_for_mode(params, mode, 0.0, opts), std::invalid_argument);

    // Disabling truncation is allowed and reported.
    opts = ShapingOptions{};
    opts.truncation_fraction = 0.0;
    const ShapingResult untruncated = retrieval_control_for_mode(params, mode, 0.0, opts);
    CHECK_FALSE(untruncated.truncated);

    CHECK_THROWS_AS(retrieval_control_for_mode(params, mode, -0.1), std::invalid_argument);

    const TimeGrid shifted = TimeGrid::over(1.0, 3.0, 501);
    const Envelope misplaced = sampled(shifted, EnvelopeRole::InputField, [&](double t) {
        return Complex{std::sin((t - 1.0) * 3.14159 / T), 0.0};
    });
    CHECK_THROWS_AS(retrieval_control_for_mode(params, misplaced, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(storage_control_for_mode(params, misplaced, 0.0), std::invalid_argument);
}
