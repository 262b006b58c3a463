// Exercises the shared-library C interface end to end: handle lifecycles,
// error codes, and numerical round-trips against known closed forms.
#include "cavmem/cavmem.h"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

namespace {

cavmem_envelope* make_constant(double amp, double t0, double t1, size_t n, cavmem_role role) {
    std::vector<double> re(n, amp);
    cavmem_envelope* env = nullptr;
    REQUIRE(cavmem_envelope_create(t0, t1, n, re.data(), nullptr, role, &env) == CAVMEM_OK);
    REQUIRE(env != nullptr);
    return env;
}

size_t find_col(const cavmem_table* table, const char* name) {
    size_t rows = 0;
    size_t cols = 0;
    REQUIRE(cavmem_table_shape(table, &rows, &cols) == CAVMEM_OK);
    for (size_t c = 0; c < cols; ++c) {
        const char* got = cavmem_table_column_name(table, c);
        REQUIRE(got != nullptr);
        if (std::strcmp(got, name) == 0) return c;
    }
    const std::string missing = std::string("column not found: ") + name;
    FAIL(missing);
    return 0;
}

}  // namespace

TEST_CASE("version string is a dotted triple") {
    const char* v = cavmem_version();
    REQUIRE(v != nullptr);
    CHECK(std::string(v).find('.') != std::string::npos);
    CHECK(std::string(v) == "1.0.0");
}

TEST_CASE("parameter handles round-trip and domain errors set a message") {
    cavmem_params* p = nullptr;
    REQUIRE(cavmem_params_bad_cavity(2.0, 0.5, 0.01, 1.0, &p) == CAVMEM_OK);
    double C = 0, gamma = 0, delta = 0, gamma_s = 0, kappa = -1, gN = -1;
    REQUIRE(cavmem_params_get(p, &C, &gamma, &delta, &gamma_s, &kappa, &gN) == CAVMEM_OK);
    CHECK(C == 2.0);
    CHECK(gamma == 1.0);
    CHECK(delta == 0.5);
    CHECK(gamma_s == 0.01);
    CHECK(kappa == 0.0);
    CHECK(gN == 0.0);
    CHECK(std::string(cavmem_last_error()).empty());

    cavmem_params* pf = nullptr;
    REQUIRE(cavmem_params_full_cavity(5.0, 100.0, 0.0, 0.0, 1.0, &pf) == CAVMEM_OK);
    double Cf = 0;
    REQUIRE(cavmem_params_get(pf, &Cf, nullptr, nullptr, nullptr, nullptr, nullptr) == CAVMEM_OK);
    CHECK(Cf == doctest::Approx(0.25).epsilon(1e-14));

    cavmem_params* bad = nullptr;
    CHECK(cavmem_params_bad_cavity(-1.0, 0.0, 0.0, 1.0, &bad) == CAVMEM_ERR_DOMAIN);
    CHECK(bad == nullptr);
    CHECK(!std::string(cavmem_last_error()).empty());

    // The next success clears the sticky message.
    REQUIRE(cavmem_params_get(p, &C, nullptr, nullptr, nullptr, nullptr, nullptr) == CAVMEM_OK);
    CHECK(std::string(cavmem_last_error()).empty());

    CHECK(cavmem_params_get(nullptr, &C, nullptr, nullptr, nullptr, nullptr, nullptr) ==
          CAVMEM_ERR_INVALID_HANDLE);
    CHECK(cavmem_params_bad_cavity(1.0, 0.0, 0.0, 1.0, nullptr) == CAVMEM_ERR_INVALID_HANDLE);

    cavmem_params_free(p);
    cavmem_params_free(pf);
    cavmem_params_free(bad);
}

TEST_CASE("envelope buffers round-trip exactly") {
    const size_t n = 5;
    std::vector<double> re(n), im(n);
    for (size_t i = 0; i < n; ++i) {
        re[i] = static_cast<double>(i);
        im[i] = 2.0 * static_cast<double>(i);
    }
    cavmem_envelope* env = nullptr;
    REQUIRE(cavmem_envelope_create(0.0, 2.0, n, re.data(), im.data(), CAVMEM_ROLE_CONTROL, &env) ==
            CAVMEM_OK);

    size_t size = 0;
    REQUIRE(cavmem_envelope_size(env, &size) == CAVMEM_OK);
    CHECK(size == n);
    double t0 = -1, t1 = -1;
    size_t gn = 0;
    REQUIRE(cavmem_envelope_grid(env, &t0, &t1, &gn) == CAVMEM_OK);
    CHECK(t0 == 0.0);
    CHECK(t1 == 2.0);
    CHECK(gn == n);

    std::vector<double> re2(n), im2(n), times(n);
    REQUIRE(cavmem_envelope_values(env, re2.data(), im2.data()) == CAVMEM_OK);
    REQUIRE(cavmem_envelope_times(env, times.data()) == CAVMEM_OK);
    for (size_t i = 0; i < n; ++i) {
        CHECK(re2[i] == re[i]);
        CHECK(im2[i] == im[i]);
        CHECK(times[i] == doctest::Approx(0.5 * static_cast<double>(i)).epsilon(1e-15));
    }

    // Trapezoid of |v|^2 = 5 k^2 on dt = 0.5.
    double norm2 = 0.0;
    REQUIRE(cavmem_envelope_norm2(env, &norm2) == CAVMEM_OK);
    CHECK(norm2 == doctest::Approx(55.0).epsilon(1e-14));

    cavmem_envelope* unit = nullptr;
    REQUIRE(cavmem_envelope_normalized(env, &unit) == CAVMEM_OK);
    double unit_norm2 = 0.0;
    REQUIRE(cavmem_envelope_norm2(unit, &unit_norm2) == CAVMEM_OK);
    CHECK(unit_norm2 == doctest::Approx(1.0).epsilon(1e-12));

    cavmem_envelope* bad = nullptr;
    CHECK(cavmem_envelope_create(0.0, 2.0, 1, re.data(), nullptr, CAVMEM_ROLE_CONTROL, &bad) ==
          CAVMEM_ERR_DOMAIN);
    CHECK(cavmem_envelope_create(0.0, 2.0, n, nullptr, nullptr, CAVMEM_ROLE_CONTROL, &bad) ==
          CAVMEM_ERR_INVALID_HANDLE);
    const double nan = std::nan("");
    std::vector<double> re_nan(n, nan);
    CHECK(cavmem_envelope_create(0.0, 2.0, n, re_nan.data(), nullptr, CAVMEM_ROLE_CONTROL, &bad) ==
          CAVMEM_ERR_DOMAIN);
    CHECK(cavmem_envelope_norm2(nullptr, &norm2) == CAVMEM_ERR_INVALID_HANDLE);

    cavmem_envelope_free(env);
    cavmem_envelope_free(unit);
}

TEST_CASE("mode helpers behave like the native ones") {
    cavmem_envelope* mode = nullptr;
    REQUIRE(cavmem_gaussian_like_mode(4.0, 2001, &mode) == CAVMEM_OK);
    double norm2 = 0.0;
    REQUIRE(cavmem_envelope_norm2(mode, &norm2) == CAVMEM_OK);
    CHECK(norm2 == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<double> re(2001), im(2001);
    REQUIRE(cavmem_envelope_values(mode, re.data(), im.data()) == CAVMEM_OK);
    CHECK(re[0] == 0.0);
    CHECK(im[0] == 0.0);

    // The bump is symmetric, so time reversal reproduces it.
    cavmem_envelope* rev = nullptr;
    REQUIRE(cavmem_time_reverse(mode, 4.0, &rev) == CAVMEM_OK);
    double ov_re = 0.0, ov_im = 0.0;
    REQUIRE(cavmem_mode_overlap(mode, rev, &ov_re, &ov_im) == CAVMEM_OK);
    CHECK(ov_re == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(ov_im) < 1e-12);

    cavmem_envelope* other = nullptr;
    REQUIRE(cavmem_gaussian_like_mode(4.0, 1001, &other) == CAVMEM_OK);
    CHECK(cavmem_mode_overlap(mode, other, &ov_re, &ov_im) == CAVMEM_ERR_DOMAIN);

    double f = 0.0;
    REQUIRE(cavmem_fidelity_from_efficiency(0.0, &f) == CAVMEM_OK);
    CHECK(f == 0.5);
    CHECK(cavmem_fidelity_from_efficiency(1.5, &f) == CAVMEM_ERR_DOMAIN);

    double eta = 0.0;
    REQUIRE(cavmem_composite_efficiency(0.9, 0.8, 0.1, 3.0, &eta) == CAVMEM_OK);
    CHECK(eta == doctest::Approx(0.72 * std::exp(-0.6)).epsilon(1e-14));

    cavmem_envelope_free(mode);
    cavmem_envelope_free(rev);
    cavmem_envelope_free(other);
}

TEST_CASE("retrieval through the C interface recovers the universal efficiency") {
    cavmem_params* p = nullptr;
    REQUIRE(cavmem_params_bad_cavity(1.0, 0.0, 0.0, 1.0, &p) == CAVMEM_OK);
    cavmem_envelope* control = make_constant(1.0, 0.0, 30.0, 3001, CAVMEM_ROLE_CONTROL);

    cavmem_trajectory* traj = nullptr;
    REQUIRE(cavmem_simulate_retrieval(p, control, 0.0, 0.0, 1.0, 0.0, nullptr, &traj) == CAVMEM_OK);

    double eta_s = -1, eta_r = -1, residual = -1;
    int incomplete = -1;
    REQUIRE(cavmem_trajectory_metrics(traj, &eta_s, &eta_r, &residual, &incomplete) == CAVMEM_OK);
    CHECK(eta_r == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(residual < 1e-10);
    CHECK(incomplete == 0);

    size_t n_final = 0;
    int refinements = -1, checked = -1;
    double last_delta = -1;
    REQUIRE(cavmem_trajectory_convergence(traj, &n_final, &refinements, &last_delta, &checked) ==
            CAVMEM_OK);
    CHECK(checked == 1);
    CHECK(refinements >= 1);
    CHECK(n_final >= 3001);
    CHECK(last_delta <= 1e-6);

    size_t tn = 0;
    REQUIRE(cavmem_trajectory_size(traj, &tn) == CAVMEM_OK);
    CHECK(tn == n_final);
    std::vector<double> s_re(tn), s_im(tn);
    REQUIRE(cavmem_trajectory_series(traj, CAVMEM_SERIES_S, s_re.data(), s_im.data()) == CAVMEM_OK);
    CHECK(s_re[0] == 1.0);
    CHECK(std::abs(s_re[tn - 1]) < 1e-10);
    REQUIRE(cavmem_trajectory_series(traj, CAVMEM_SERIES_E_OUT, s_re.data(), nullptr) == CAVMEM_OK);

    // The eliminated model stores no cavity field series.
    CHECK(cavmem_trajectory_series(traj, CAVMEM_SERIES_E_CAV, s_re.data(), nullptr) ==
          CAVMEM_ERR_DOMAIN);

    double defect = -1.0;
    REQUIRE(cavmem_conservation_residual(traj, p, &defect) == CAVMEM_OK);
    CHECK(defect < 1e-2);

    cavmem_trajectory_free(traj);
    cavmem_envelope_free(control);
    cavmem_params_free(p);
}

TEST_CASE("storage runs reject the conservation diagnostic") {
    cavmem_params* p = nullptr;
    REQUIRE(cavmem_params_bad_cavity(1.0, 0.0, 0.0, 1.0, &p) == CAVMEM_OK);
    cavmem_envelope* control = make_constant(0.5, 0.0, 2.0, 201, CAVMEM_ROLE_CONTROL);
    cavmem_envelope* input = nullptr;
    REQUIRE(cavmem_gaussian_like_mode(2.0, 201, &input) == CAVMEM_OK);

    cavmem_run_options opts{0.0, 0, 0, 0.0};  // single pass on the given grid
    cavmem_trajectory* traj = nullptr;
    REQUIRE(cavmem_simulate_storage(p, control, input, &opts, &traj) == CAVMEM_OK);
    double eta_s = -1;
    REQUIRE(cavmem_trajectory_metrics(traj, &eta_s, nullptr, nullptr, nullptr) == CAVMEM_OK);
    CHECK(eta_s > 0.0);

    double defect = 0.0;
    CHECK(cavmem_conservation_residual(traj, p, &defect) == CAVMEM_ERR_DOMAIN);
    CHECK(!std::string(cavmem_last_error()).empty());

    cavmem_trajectory_free(traj);
    cavmem_envelope_free(input);
    cavmem_envelope_free(control);
    cavmem_params_free(p);
}

TEST_CASE("control shaping through the C interface") {
    cavmem_params* p = nullptr;
    REQUIRE(cavmem_params_bad_cavity(10.0, 0.0, 0.0, 1.0, &p) == CAVMEM_OK);
    cavmem_envelope* mode = nullptr;
    REQUIRE(cavmem_gaussian_like_mode(10.0, 2001, &mode) == CAVMEM_OK);

    cavmem_shaping* shaping = nullptr;
    REQUIRE(cavmem_shape_retrieval(p, mode, 0.0, nullptr, &shaping) == CAVMEM_OK);
    double predicted = 0.0, eps = 0.0;
    int truncated = -1;
    REQUIRE(cavmem_shaping_info(shaping, &predicted, &truncated, &eps) == CAVMEM_OK);
    CHECK(predicted == doctest::Approx(10.0 / 11.0).epsilon(1e-12));
    CHECK(truncated == 1);
    CHECK(eps == 1e-4);

    cavmem_envelope* control = nullptr;
    REQUIRE(cavmem_shaping_control(shaping, &control) == CAVMEM_OK);
    size_t cn = 0;
    REQUIRE(cavmem_envelope_size(control, &cn) == CAVMEM_OK);
    CHECK(cn == 2001);

    // Closed-form output of the shaped control reproduces the requested mode.
    cavmem_envelope* out = nullptr;
    REQUIRE(cavmem_adiabatic_retrieval_output(p, control, &out) == CAVMEM_OK);
    double out_norm2 = 0.0, ov_re = 0.0, ov_im = 0.0;
    REQUIRE(cavmem_envelope_norm2(out, &out_norm2) == CAVMEM_OK);
    REQUIRE(cavmem_mode_overlap(out, mode, &ov_re, &ov_im) == CAVMEM_OK);
    CHECK(out_norm2 == doctest::Approx(10.0 / 11.0).epsilon(5e-3));
    CHECK((ov_re * ov_re + ov_im * ov_im) / out_norm2 > 0.9999);

    // Dual storage: the mirrored control stores the time-reversed mode.
    cavmem_envelope* rev = nullptr;
    REQUIRE(cavmem_time_reverse(mode, 10.0, &rev) == CAVMEM_OK);
    cavmem_shaping* storing = nullptr;
    REQUIRE(cavmem_shape_storage(p, rev, 0.0, nullptr, &storing) == CAVMEM_OK);
    cavmem_envelope* store_control = nullptr;
    REQUIRE(cavmem_shaping_control(storing, &store_control) == CAVMEM_OK);
    double amp_re = 0.0, amp_im = 0.0;
    REQUIRE(cavmem_adiabatic_storage_amplitude(p, store_control, rev, &amp_re, &amp_im) ==
            CAVMEM_OK);
    CHECK(amp_re * amp_re + amp_im * amp_im == doctest::Approx(10.0 / 11.0).epsilon(2e-2));

    cavmem_envelope* kernel = nullptr;
    REQUIRE(cavmem_storage_kernel(p, store_control, &kernel) == CAVMEM_OK);
    double k_norm2 = 0.0;
    REQUIRE(cavmem_envelope_norm2(kernel, &k_norm2) == CAVMEM_OK);
    CHECK(k_norm2 <= 1.0 + 1e-9);
    CHECK(k_norm2 > 0.8);

    cavmem_margins margins{};
    REQUIRE(cavmem_adiabaticity_margins(p, control, nullptr, 10.0, &margins) == CAVMEM_OK);
    CHECK(margins.tc_gamma == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(margins.input_rate_ratio == 0.0);
    CHECK(margins.adiabatic == 1);

    double duration = 0.0;
    REQUIRE(cavmem_output_duration_estimate(p, 2.0, &duration) == CAVMEM_OK);
    CHECK(duration == doctest::Approx(2.5).epsilon(1e-14));

    CHECK(cavmem_shape_retrieval(nullptr, mode, 0.0, nullptr, &shaping) ==
          CAVMEM_ERR_INVALID_HANDLE);
    CHECK(cavmem_shape_retrieval(p, mode, -0.5, nullptr, &shaping) == CAVMEM_ERR_DOMAIN);

    cavmem_envelope_free(kernel);
    cavmem_envelope_free(store_control);
    cavmem_shaping_free(storing);
    cavmem_envelope_free(rev);
    cavmem_envelope_free(out);
    cavmem_envelope_free(control);
    cavmem_shaping_free(shaping);
    cavmem_envelope_free(mode);
    cavmem_params_free(p);
}

TEST_CASE("fast protocol through the C interface") {
    cavmem_params* p = nullptr;
    REQUIRE(cavmem_params_bad_cavity(3.0, 0.0, 0.0, 1.0, &p) == CAVMEM_OK);
    const double rate = 4.0;  // gamma (1 + C)

    cavmem_envelope* out = nullptr;
    REQUIRE(cavmem_fast_retrieval_output(p, 2.0, 2001, &out) == CAVMEM_OK);
    std::vector<double> re(2001);
    REQUIRE(cavmem_envelope_values(out, re.data(), nullptr) == CAVMEM_OK);
    CHECK(re[0] == doctest::Approx(-std::sqrt(6.0)).epsilon(1e-15));
    double out_norm2 = 0.0;
    REQUIRE(cavmem_envelope_norm2(out, &out_norm2) == CAVMEM_OK);
    CHECK(out_norm2 == doctest::Approx(0.75 * (1.0 - std::exp(-2.0 * rate * 2.0))).epsilon(1e-4));

    cavmem_envelope* input = nullptr;
    double in_norm2 = 0.0;
    int complete = -1;
    REQUIRE(cavmem_optimal_fast_input(p, 1.5, 4001, &input, &in_norm2, &complete) == CAVMEM_OK);
    CHECK(complete == 1);
    CHECK(in_norm2 == doctest::Approx(1.0 - std::exp(-2.0 * rate * 1.5)).epsilon(1e-5));

    cavmem_envelope* unit = nullptr;
    REQUIRE(cavmem_envelope_normalized(input, &unit) == CAVMEM_OK);
    // The unit-norm matched input is captured with weight C/(1+C) times the
    // raw mode's grid energy (the incomplete exponential), exactly.
    double grid_norm2 = 0.0;
    REQUIRE(cavmem_envelope_norm2(input, &grid_norm2) == CAVMEM_OK);
    double amp_re = 0.0, amp_im = 0.0;
    REQUIRE(cavmem_fast_storage_amplitude(p, unit, &amp_re, &amp_im) == CAVMEM_OK);
    CHECK(amp_re * amp_re + amp_im * amp_im == doctest::Approx(0.75 * grid_norm2).epsilon(1e-9));

    cavmem_fast_result* result = nullptr;
    REQUIRE(cavmem_simulate_fast_protocol(p, unit, 2000.0, 3.0, 3001, &result) == CAVMEM_OK);
    double eta_s = -1, map_dev = -1, states[12] = {};
    REQUIRE(cavmem_fast_result_metrics(result, &eta_s, &map_dev, states) == CAVMEM_OK);
    // Before the pulse the spin wave is untouched; the ideal pulse maps P -> i P.
    CHECK(states[2] == 0.0);
    CHECK(states[3] == 0.0);
    CHECK(states[10] == -states[1]);
    CHECK(states[11] == states[0]);
    const double p2 = states[0] * states[0] + states[1] * states[1];
    CHECK(p2 == doctest::Approx(0.75).epsilon(1e-2));
    CHECK(map_dev < 1e-2);
    CHECK(eta_s == doctest::Approx(p2).epsilon(2e-2));

    cavmem_trajectory* traj = nullptr;
    REQUIRE(cavmem_fast_result_trajectory(result, &traj) == CAVMEM_OK);
    size_t tn = 0;
    REQUIRE(cavmem_trajectory_size(traj, &tn) == CAVMEM_OK);
    CHECK(tn == 3001);

    CHECK(cavmem_simulate_fast_protocol(p, unit, 2000.0, 1.0, 1001, &result) == CAVMEM_ERR_DOMAIN);

    cavmem_trajectory_free(traj);
    cavmem_fast_result_free(result);
    cavmem_envelope_free(unit);
    cavmem_envelope_free(input);
    cavmem_envelope_free(out);
    cavmem_params_free(p);
}

TEST_CASE("scan tables through the C interface") {
    const double C_list[] = {1.0};
    const double delta_list[] = {0.0};
    const double tc_list[] = {100.0};
    cavmem_scan_options opts{1, 1001, 0.0, 0.0, 1};
    cavmem_table* table = nullptr;
    REQUIRE(cavmem_scan_breakdown(C_list, 1, delta_list, 1, tc_list, 1, &opts, &table) ==
            CAVMEM_OK);

    size_t rows = 0, cols = 0;
    REQUIRE(cavmem_table_shape(table, &rows, &cols) == CAVMEM_OK);
    CHECK(rows == 1);
    CHECK(cols >= 8);

    double eta_tot = 0.0;
    REQUIRE(cavmem_table_value(table, 0, find_col(table, "eta_tot"), &eta_tot) == CAVMEM_OK);
    CHECK(eta_tot == doctest::Approx(0.25).epsilon(8e-2));
    double converged = 0.0;
    REQUIRE(cavmem_table_value(table, 0, find_col(table, "converged"), &converged) == CAVMEM_OK);
    CHECK(converged == 1.0);

    const char* meta = cavmem_table_metadata(table);
    REQUIRE(meta != nullptr);
    CHECK(std::string(meta).find("scan = breakdown") != std::string::npos);

    CHECK(cavmem_table_value(table, 5, 0, &eta_tot) == CAVMEM_ERR_DOMAIN);
    CHECK(cavmem_table_column_name(table, 999) == nullptr);
    CHECK(cavmem_table_metadata(nullptr) == nullptr);

    SUBCASE("time reversal scan with C-owned modes") {
        // Long enough that the non-adiabatic storage/retrieval asymmetry
        // (which shrinks as 1/(T gamma (1+C))^2) sits inside the scan's
        // built-in 5e-3 duality assertion at C = 1.
        cavmem_envelope* mode = nullptr;
        REQUIRE(cavmem_gaussian_like_mode(36.0, 1201, &mode) == CAVMEM_OK);
        const cavmem_envelope* modes[] = {mode};
        const char* names[] = {"gauss"};
        cavmem_table* tr = nullptr;
        REQUIRE(cavmem_scan_time_reversal(C_list, 1, modes, names, 1, 0.0, 0.0, nullptr, &tr) ==
                CAVMEM_OK);
        size_t tr_rows = 0;
        REQUIRE(cavmem_table_shape(tr, &tr_rows, nullptr) == CAVMEM_OK);
        CHECK(tr_rows == 1);
        double diff = 1.0, asserted = 0.0;
        REQUIRE(cavmem_table_value(tr, 0, find_col(tr, "diff"), &diff) == CAVMEM_OK);
        REQUIRE(cavmem_table_value(tr, 0, find_col(tr, "asserted"), &asserted) == CAVMEM_OK);
        CHECK(diff < 5e-3);
        CHECK(asserted == 1.0);
        CHECK(std::string(cavmem_table_metadata(tr)).find("0=gauss") != std::string::npos);

        const cavmem_envelope* holed[] = {nullptr};
        CHECK(cavmem_scan_time_reversal(C_list, 1, holed, names, 1, 0.0, 0.0, nullptr, &tr) ==
              CAVMEM_ERR_DOMAIN);

        cavmem_table_free(tr);
        cavmem_envelope_free(mode);
    }

    SUBCASE("scan validation surfaces as a domain error") {
        cavmem_table* bad = nullptr;
        CHECK(cavmem_scan_universality(C_list, 1, delta_list, 1, 5.0, &opts, &bad) ==
              CAVMEM_ERR_DOMAIN);
        CHECK(!std::string(cavmem_last_error()).empty());
        CHECK(cavmem_scan_universality(nullptr, 1, delta_list, 1, 20.0, &opts, &bad) ==
              CAVMEM_ERR_INVALID_HANDLE);
    }

    cavmem_table_free(table);
}
