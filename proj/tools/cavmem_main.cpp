// Command-line front end: reads a key = value config file, runs one command
// against the shared-library C interface, and writes deterministic CSV/text
// outputs next to the requested prefix.
//
//   cavmem <config-path> [--out <prefix>] [--threads N] [--grid-scale K]
//
// Exit codes: 0 success, 2 usage error, 3 config error, 4 runtime failure.
#include "cavmem/cavmem.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace {

// ---- error channels -> exit codes ------------------------------------------

struct UsageError {
    std::string message;
};

struct ConfigError {
    std::string message;
    int line = -1;  // 1-based config line, -1 when not tied to a line
};

struct RunError {
    std::string message;
};

// ---- handle RAII ------------------------------------------------------------

struct ParamsDeleter {
    void operator()(cavmem_params* p) const { cavmem_params_free(p); }
};
struct EnvelopeDeleter {
    void operator()(cavmem_envelope* e) const { cavmem_envelope_free(e); }
};
struct TrajectoryDeleter {
    void operator()(cavmem_trajectory* t) const { cavmem_trajectory_free(t); }
};
struct ShapingDeleter {
    void operator()(cavmem_shaping* s) const { cavmem_shaping_free(s); }
};
struct FastResultDeleter {
    void operator()(cavmem_fast_result* r) const { cavmem_fast_result_free(r); }
};
struct TableDeleter {
    void operator()(cavmem_table* t) const { cavmem_table_free(t); }
};

using ParamsPtr = std::unique_ptr<cavmem_params, ParamsDeleter>;
using EnvelopePtr = std::unique_ptr<cavmem_envelope, EnvelopeDeleter>;
using TrajectoryPtr = std::unique_ptr<cavmem_trajectory, TrajectoryDeleter>;
using ShapingPtr = std::unique_ptr<cavmem_shaping, ShapingDeleter>;
using FastResultPtr = std::unique_ptr<cavmem_fast_result, FastResultDeleter>;
using TablePtr = std::unique_ptr<cavmem_table, TableDeleter>;

void check_run(cavmem_status status, const char* context) {
    if (status != CAVMEM_OK) {
        throw RunError{std::string(context) + ": " + cavmem_last_error()};
    }
}

void check_config(cavmem_status status, const char* context) {
    if (status != CAVMEM_OK) {
        throw ConfigError{std::string(context) + ": " + cavmem_last_error()};
    }
}

// ---- formatting --------------------------------------------------------------

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_size(size_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%zu", v);
    return buf;
}

// ---- command line -------------------------------------------------------------

struct CliArgs {
    std::string config_path;
    std::string out_prefix;
    int threads = 1;
    int grid_scale = 1;
};

const char* kUsage =
    "usage: cavmem <config-path> [--out <prefix>] [--threads N] [--grid-scale K]\n"
    "\n"
    "Runs one command described by a 'key = value' config file ('#' starts a\n"
    "comment). The 'command' key selects the operation: store, retrieve, fast,\n"
    "shape, scan-breakdown, scan-universality, scan-timereversal, scan-badcavity.\n"
    "Outputs are written as <prefix>_trajectory.csv / _scan.csv / _control.csv /\n"
    "_meta.txt depending on the command; the prefix defaults to the config path\n"
    "without its extension.\n"
    "\n"
    "  --out <prefix>    output path prefix\n"
    "  --threads N       worker threads for scan rows (default 1)\n"
    "  --grid-scale K    multiply every configured grid resolution by K\n";

int parse_positive_int(const std::string& text, const std::string& flag) {
    size_t used = 0;
    int value = 0;
    try {
        value = std::stoi(text, &used);
    } catch (...) {
        throw UsageError{flag + " expects a positive integer, got '" + text + "'"};
    }
    if (used != text.size() || value <= 0) {
        throw UsageError{flag + " expects a positive integer, got '" + text + "'"};
    }
    return value;
}

CliArgs parse_cli(int argc, char** argv) {
    CliArgs args;
    std::vector<std::string> positional;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        auto next = [&](const char* flag) -> std::string {
            if (i + 1 >= argc) throw UsageError{std::string(flag) + " needs a value"};
            return argv[++i];
        };
        if (arg == "--out") {
            args.out_prefix = next("--out");
        } else if (arg == "--threads") {
            args.threads = parse_positive_int(next("--threads"), "--threads");
        } else if (arg == "--grid-scale") {
            args.grid_scale = parse_positive_int(next("--grid-scale"), "--grid-scale");
        } else if (arg == "--help" || arg == "-h") {
            std::fputs(kUsage, stdout);
            std::exit(0);
        } else if (!arg.empty() && arg[0] == '-') {
            throw UsageError{"unknown option '" + arg + "'"};
        } else {
            positional.push_back(arg);
        }
    }
    if (positional.size() != 1) {
        throw UsageError{positional.empty() ? "missing config path"
                                            : "expected exactly one config path"};
    }
    args.config_path = positional[0];
    if (args.out_prefix.empty()) {
        std::string stem = args.config_path;
        const size_t slash = stem.find_last_of('/');
        const size_t dot = stem.find_last_of('.');
        if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
            stem = stem.substr(0, dot);
        }
        args.out_prefix = stem;
    }
    return args;
}

// ---- config file ---------------------------------------------------------------

struct ConfigEntry {
    std::string value;
    int line = 0;
};

class Config {
public:
    static Config load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError{"cannot open config file '" + path + "'"};
        Config config;
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            const size_t eq = trimmed.find('=');
            if (eq == std::string::npos) {
                throw ConfigError{"expected 'key = value'", line_no};
            }
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty()) throw ConfigError{"empty key", line_no};
            if (config.entries_.count(key)) {
                throw ConfigError{"duplicate key '" + key + "'", line_no};
            }
            config.entries_[key] = ConfigEntry{value, line_no};
        }
        return config;
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    std::string require_string(const std::string& key) {
        auto it = entries_.find(key);
        if (it == entries_.end()) {
            missing_.insert(key);
            return {};
        }
        consumed_.insert(key);
        return it->second.value;
    }

    std::string opt_string(const std::string& key, const std::string& fallback) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        consumed_.insert(key);
        return it->second.value;
    }

    double require_double(const std::string& key) {
        auto it = entries_.find(key);
        if (it == entries_.end()) {
            missing_.insert(key);
            return 0.0;
        }
        consumed_.insert(key);
        return parse_double(it->second.value, key, it->second.line);
    }

    double opt_double(const std::string& key, double fallback) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        consumed_.insert(key);
        return parse_double(it->second.value, key, it->second.line);
    }

    size_t opt_size(const std::string& key, size_t fallback) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        consumed_.insert(key);
        const double v = parse_double(it->second.value, key, it->second.line);
        if (!(v >= 2.0) || v != std::floor(v) || v > 1e9) {
            throw ConfigError{"'" + key + "' must be an integer sample count >= 2",
                              it->second.line};
        }
        return static_cast<size_t>(v);
    }

    bool opt_bool(const std::string& key, bool fallback) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        consumed_.insert(key);
        const std::string& v = it->second.value;
        if (v == "1" || v == "true" || v == "yes") return true;
        if (v == "0" || v == "false" || v == "no") return false;
        throw ConfigError{"'" + key + "' must be a boolean (0/1/true/false), got '" + v + "'",
                          it->second.line};
    }

    std::vector<double> require_list(const std::string& key) {
        auto it = entries_.find(key);
        if (it == entries_.end()) {
            missing_.insert(key);
            return {};
        }
        consumed_.insert(key);
        return parse_list(it->second.value, key, it->second.line);
    }

    std::vector<double> opt_list(const std::string& key, std::vector<double> fallback) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        consumed_.insert(key);
        return parse_list(it->second.value, key, it->second.line);
    }

    // Call after every key has been requested: reports missing keys first,
    // then any key the command does not understand.
    void finish(const std::string& command) const {
        if (!missing_.empty()) {
            std::string list;
            for (const auto& key : missing_) {
                if (!list.empty()) list += ", ";
                list += key;
            }
            throw ConfigError{"missing required keys for '" + command + "': " + list};
        }
        const ConfigEntry* first_unknown = nullptr;
        std::string unknown_key;
        for (const auto& [key, entry] : entries_) {
            if (consumed_.count(key)) continue;
            if (!first_unknown || entry.line < first_unknown->line) {
                first_unknown = &entry;
                unknown_key = key;
            }
        }
        if (first_unknown) {
            throw ConfigError{"unknown key '" + unknown_key + "' for command '" + command + "'",
                              first_unknown->line};
        }
    }

private:
    static std::string trim(const std::string& s) {
        size_t a = 0;
        size_t b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }

    static double parse_double(const std::string& text, const std::string& key, int line) {
        size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(text, &used);
        } catch (...) {
            throw ConfigError{"malformed number for '" + key + "': '" + text + "'", line};
        }
        if (used != text.size()) {
            throw ConfigError{"malformed number for '" + key + "': '" + text + "'", line};
        }
        return value;
    }

    static std::vector<double> parse_list(const std::string& text, const std::string& key,
                                          int line) {
        std::string spaced = text;
        std::replace(spaced.begin(), spaced.end(), ',', ' ');
        std::istringstream in(spaced);
        std::vector<double> values;
        std::string token;
        while (in >> token) {
            values.push_back(parse_double(token, key, line));
        }
        if (values.empty()) {
            throw ConfigError{"'" + key + "' must contain at least one number", line};
        }
        return values;
    }

    std::map<std::string, ConfigEntry> entries_;
    std::set<std::string> consumed_;
    std::set<std::string> missing_;
};

// ---- output files ----------------------------------------------------------------

class OutputFile {
public:
    explicit OutputFile(const std::string& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw RunError{"cannot open output file '" + path + "'"};
    }

    void write(const std::string& text) { out_ << text; }

    void close() {
        out_.flush();
        if (!out_) throw RunError{"failed writing output file '" + path_ + "'"};
        out_.close();
    }

private:
    std::string path_;
    std::ofstream out_;
};

struct MetaWriter {
    std::vector<std::pair<std::string, std::string>> lines;

    void add(const std::string& key, const std::string& value) { lines.emplace_back(key, value); }
    void add(const std::string& key, double value) { lines.emplace_back(key, fmt17(value)); }

    void write(const std::string& prefix) const {
        OutputFile file(prefix + "_meta.txt");
        std::string text;
        for (const auto& [key, value] : lines) {
            text += key;
            text += " = ";
            text += value;
            text += "\n";
        }
        file.write(text);
        file.close();
    }
};

std::vector<double> grid_times(double t0, double t1, size_t n) {
    std::vector<double> times(n);
    const double dt = (t1 - t0) / static_cast<double>(n - 1);
    for (size_t i = 0; i < n; ++i) {
        times[i] = (i + 1 == n) ? t1 : t0 + static_cast<double>(i) * dt;
    }
    return times;
}

void write_trajectory_csv(const std::string& prefix, const cavmem_trajectory* traj,
                          size_t max_rows) {
    size_t n = 0;
    double t0 = 0.0, t1 = 0.0;
    check_run(cavmem_trajectory_grid(traj, &t0, &t1, &n), "trajectory grid");
    std::vector<double> p_re(n), p_im(n), s_re(n), s_im(n), e_re(n), e_im(n);
    check_run(cavmem_trajectory_series(traj, CAVMEM_SERIES_P, p_re.data(), p_im.data()),
              "trajectory series P");
    check_run(cavmem_trajectory_series(traj, CAVMEM_SERIES_S, s_re.data(), s_im.data()),
              "trajectory series S");
    check_run(cavmem_trajectory_series(traj, CAVMEM_SERIES_E_OUT, e_re.data(), e_im.data()),
              "trajectory series E_out");
    const std::vector<double> times = grid_times(t0, t1, n);

    size_t stride = 1;
    if (max_rows >= 2 && n > max_rows) {
        stride = (n - 2) / (max_rows - 1) + 1;  // ceil((n-1)/(max_rows-1))
    }
    OutputFile file(prefix + "_trajectory.csv");
    std::string text = "t,P_re,P_im,S_re,S_im,E_out_re,E_out_im\n";
    auto emit = [&](size_t i) {
        text += fmt17(times[i]);
        text += ',';
        text += fmt17(p_re[i]);
        text += ',';
        text += fmt17(p_im[i]);
        text += ',';
        text += fmt17(s_re[i]);
        text += ',';
        text += fmt17(s_im[i]);
        text += ',';
        text += fmt17(e_re[i]);
        text += ',';
        text += fmt17(e_im[i]);
        text += '\n';
    };
    for (size_t i = 0; i + 1 < n; i += stride) emit(i);
    emit(n - 1);
    file.write(text);
    file.close();
}

void write_control_csv(const std::string& prefix, const cavmem_envelope* control) {
    size_t n = 0;
    double t0 = 0.0, t1 = 0.0;
    check_run(cavmem_envelope_grid(control, &t0, &t1, &n), "control grid");
    std::vector<double> re(n), im(n);
    check_run(cavmem_envelope_values(control, re.data(), im.data()), "control values");
    const std::vector<double> times = grid_times(t0, t1, n);
    OutputFile file(prefix + "_control.csv");
    std::string text = "t,omega_re,omega_im\n";
    for (size_t i = 0; i < n; ++i) {
        text += fmt17(times[i]);
        text += ',';
        text += fmt17(re[i]);
        text += ',';
        text += fmt17(im[i]);
        text += '\n';
    }
    file.write(text);
    file.close();
}

void write_summary_csv(const std::string& prefix, const std::vector<std::string>& columns,
                       const std::vector<std::vector<double>>& rows) {
    OutputFile file(prefix + "_scan.csv");
    std::string text;
    for (size_t c = 0; c < columns.size(); ++c) {
        if (c) text += ',';
        text += columns[c];
    }
    text += '\n';
    for (const auto& row : rows) {
        for (size_t c = 0; c < row.size(); ++c) {
            if (c) text += ',';
            text += fmt17(row[c]);
        }
        text += '\n';
    }
    file.write(text);
    file.close();
}

void write_table_csv(const std::string& prefix, const cavmem_table* table) {
    size_t rows = 0, cols = 0;
    check_run(cavmem_table_shape(table, &rows, &cols), "table shape");
    std::vector<std::string> columns(cols);
    for (size_t c = 0; c < cols; ++c) {
        const char* name = cavmem_table_column_name(table, c);
        if (!name) throw RunError{"table column name unavailable"};
        columns[c] = name;
    }
    std::vector<std::vector<double>> data(rows, std::vector<double>(cols));
    for (size_t r = 0; r < rows; ++r) {
        for (size_t c = 0; c < cols; ++c) {
            check_run(cavmem_table_value(table, r, c, &data[r][c]), "table value");
        }
    }
    write_summary_csv(prefix, columns, data);
}

// ---- envelope construction ---------------------------------------------------------

// Piecewise-linear-exact integral of |values|^2 on a uniform grid.
double control_intensity(const std::vector<double>& re, const std::vector<double>& im, double dt) {
    double total = 0.0;
    for (size_t i = 0; i + 1 < re.size(); ++i) {
        const std::complex<double> a{re[i], im[i]};
        const std::complex<double> b{re[i + 1], im[i + 1]};
        total += dt / 3.0 * (std::norm(a) + std::norm(b) + (conj(a) * b).real());
    }
    return total;
}

std::vector<std::pair<double, double>> read_csv_samples(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError{"cannot open csv file '" + path + "'"};
    std::vector<std::pair<double, double>> samples;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string spaced = line;
        std::replace(spaced.begin(), spaced.end(), ',', ' ');
        std::istringstream fields(spaced);
        std::vector<std::string> tokens;
        std::string token;
        while (fields >> token) tokens.push_back(token);
        if (tokens.empty()) continue;
        std::vector<double> values;
        bool numeric = true;
        for (const auto& t : tokens) {
            size_t used = 0;
            try {
                values.push_back(std::stod(t, &used));
            } catch (...) {
                numeric = false;
                break;
            }
            if (used != t.size()) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (line_no == 1) continue;  // tolerate a header line
            throw ConfigError{"csv file '" + path + "' line " + std::to_string(line_no) +
                              ": malformed number"};
        }
        if (values.size() == 1) {
            samples.emplace_back(values[0], 0.0);
        } else if (values.size() == 2) {
            samples.emplace_back(values[0], values[1]);
        } else {
            throw ConfigError{"csv file '" + path + "' line " + std::to_string(line_no) +
                              ": expected one or two columns (re[,im])"};
        }
    }
    if (samples.size() < 2) {
        throw ConfigError{"csv file '" + path + "' needs at least two sample rows"};
    }
    return samples;
}

// Linear resample of csv samples (assumed uniform over [0, T]) onto n points.
void resample(const std::vector<std::pair<double, double>>& samples, size_t n,
              std::vector<double>& re, std::vector<double>& im) {
    re.resize(n);
    im.resize(n);
    const size_t m = samples.size();
    for (size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(n - 1) *
                         static_cast<double>(m - 1);
        size_t k = static_cast<size_t>(x);
        if (k >= m - 1) k = m - 2;
        const double w = x - static_cast<double>(k);
        re[i] = (1.0 - w) * samples[k].first + w * samples[k + 1].first;
        im[i] = (1.0 - w) * samples[k].second + w * samples[k + 1].second;
    }
}

EnvelopePtr make_envelope(double T, size_t n, const std::vector<double>& re,
                          const std::vector<double>& im, cavmem_role role) {
    cavmem_envelope* raw = nullptr;
    check_config(cavmem_envelope_create(0.0, T, n, re.data(), im.data(), role, &raw),
                 "envelope construction");
    return EnvelopePtr(raw);
}

// Builtin mode names: gaussian, square, sine, expdecay, csv:<path>.
// Every mode is normalized to unit norm on its grid.
EnvelopePtr build_mode(const std::string& name, double T, size_t n) {
    if (name == "gaussian") {
        cavmem_envelope* raw = nullptr;
        check_config(cavmem_gaussian_like_mode(T, n, &raw), "mode construction");
        return EnvelopePtr(raw);
    }
    std::vector<double> re(n, 0.0), im(n, 0.0);
    const std::vector<double> times = grid_times(0.0, T, n);
    if (name == "square") {
        std::fill(re.begin(), re.end(), 1.0);
    } else if (name == "sine") {
        for (size_t i = 0; i < n; ++i) {
            re[i] = std::sin(std::numbers::pi * times[i] / T);
        }
    } else if (name == "expdecay") {
        for (size_t i = 0; i < n; ++i) {
            re[i] = std::exp(-4.0 * times[i] / T);
        }
    } else if (name.rfind("csv:", 0) == 0) {
        resample(read_csv_samples(name.substr(4)), n, re, im);
    } else {
        throw ConfigError{"unknown mode '" + name +
                          "' (expected gaussian, square, sine, expdecay or csv:<path>)"};
    }
    EnvelopePtr env = make_envelope(T, n, re, im, CAVMEM_ROLE_INPUT);
    cavmem_envelope* normalized = nullptr;
    check_config(cavmem_envelope_normalized(env.get(), &normalized), "mode normalization");
    return EnvelopePtr(normalized);
}

// Builtin retrieval controls: constant, ramp, gauss — scaled so the
// intensity integral drains the excitation by exp(-margin) — or csv:<path>
// taken literally.
EnvelopePtr build_control(const std::string& name, const cavmem_params* params, double T, size_t n,
                          double margin) {
    if (name.rfind("csv:", 0) == 0) {
        std::vector<double> re, im;
        resample(read_csv_samples(name.substr(4)), n, re, im);
        return make_envelope(T, n, re, im, CAVMEM_ROLE_CONTROL);
    }
    std::vector<double> re(n, 0.0), im(n, 0.0);
    const std::vector<double> times = grid_times(0.0, T, n);
    if (name == "constant") {
        std::fill(re.begin(), re.end(), 1.0);
    } else if (name == "ramp") {
        for (size_t i = 0; i < n; ++i) re[i] = times[i] / T;
    } else if (name == "gauss") {
        const double sigma = T / 8.0;
        for (size_t i = 0; i < n; ++i) {
            const double arg = (times[i] - 0.5 * T) / sigma;
            re[i] = std::exp(-0.5 * arg * arg);
        }
    } else {
        throw ConfigError{"unknown control '" + name +
                          "' (expected shaped, constant, ramp, gauss or csv:<path>)"};
    }
    double C = 0.0, gamma = 0.0, delta = 0.0;
    check_run(cavmem_params_get(params, &C, &gamma, &delta, nullptr, nullptr, nullptr),
              "parameter access");
    const double dressed = gamma * (1.0 + C);
    const double line = dressed * dressed + delta * delta;
    const double beta = 2.0 * dressed / line;
    const double dt = T / static_cast<double>(n - 1);
    const double have = control_intensity(re, im, dt);
    const double scale = std::sqrt(margin / beta / have);
    for (size_t i = 0; i < n; ++i) re[i] *= scale;
    return make_envelope(T, n, re, im, CAVMEM_ROLE_CONTROL);
}

size_t scale_samples(size_t samples, int grid_scale) {
    return (samples - 1) * static_cast<size_t>(grid_scale) + 1;
}

// ---- shared config fragments -----------------------------------------------------

ParamsPtr params_from_config(Config& config) {
    const double C = config.require_double("cooperativity");
    const double delta = config.opt_double("delta", 0.0);
    const double gamma_s = config.opt_double("gamma_s", 0.0);
    const double gamma = config.opt_double("gamma", 1.0);
    if (config.has("cooperativity")) {
        cavmem_params* raw = nullptr;
        check_config(cavmem_params_bad_cavity(C, delta, gamma_s, gamma, &raw), "parameters");
        return ParamsPtr(raw);
    }
    return nullptr;  // missing keys reported by config.finish()
}

cavmem_scan_options scan_options_from_config(Config& config, const CliArgs& args) {
    cavmem_scan_options opts;
    opts.threads = args.threads;
    opts.base_samples = scale_samples(config.opt_size("base_samples", 2001), args.grid_scale);
    opts.eta_tol = config.opt_double("eta_tol", 1e-6);
    opts.epsilon_boundary = config.opt_double("epsilon_boundary", 1e-4);
    opts.enforce = config.opt_bool("enforce", true) ? 1 : 0;
    return opts;
}

void add_margins_meta(MetaWriter& meta, const cavmem_margins& margins) {
    meta.add("tc_gamma", margins.tc_gamma);
    meta.add("power_ratio", margins.power_ratio);
    meta.add("control_rate_ratio", margins.control_rate_ratio);
    meta.add("magnitude_rate_ratio", margins.magnitude_rate_ratio);
    meta.add("phase_rate_ratio", margins.phase_rate_ratio);
    meta.add("input_rate_ratio", margins.input_rate_ratio);
    meta.add("adiabatic", margins.adiabatic ? "1" : "0");
}

double envelope_peak(const cavmem_envelope* env) {
    size_t n = 0;
    check_run(cavmem_envelope_size(env, &n), "envelope size");
    std::vector<double> re(n), im(n);
    check_run(cavmem_envelope_values(env, re.data(), im.data()), "envelope values");
    double peak = 0.0;
    for (size_t i = 0; i < n; ++i) peak = std::max(peak, std::hypot(re[i], im[i]));
    return peak;
}

// ---- commands ----------------------------------------------------------------------

void run_store(Config& config, const CliArgs& args) {
    ParamsPtr params = params_from_config(config);
    const double T = config.require_double("duration");
    const size_t samples = scale_samples(config.opt_size("samples", 2001), args.grid_scale);
    const std::string mode_name = config.opt_string("mode", "gaussian");
    const std::string control_name = config.opt_string("control", "shaped");
    const double eta_tol = config.opt_double("eta_tol", 1e-6);
    const double epsilon = config.opt_double("epsilon_boundary", 1e-4);
    const double truncation = config.opt_double("truncation_fraction", 0.01);
    const size_t max_rows = config.opt_size("trajectory_rows", 2001);
    config.finish("store");
    if (!params) return;

    EnvelopePtr input = build_mode(mode_name, T, samples);

    EnvelopePtr control;
    double predicted = 0.0;
    int truncated = 0;
    if (control_name == "shaped") {
        double gamma_s = 0.0;
        check_run(cavmem_params_get(params.get(), nullptr, nullptr, nullptr, &gamma_s, nullptr,
                                    nullptr),
                  "parameter access");
        cavmem_shaping_options sopts{epsilon, truncation};
        cavmem_shaping* raw_shaping = nullptr;
        check_run(cavmem_shape_storage(params.get(), input.get(), gamma_s, &sopts, &raw_shaping),
                  "storage control shaping");
        ShapingPtr shaping(raw_shaping);
        cavmem_envelope* raw_control = nullptr;
        check_run(cavmem_shaping_control(shaping.get(), &raw_control), "shaped control");
        control = EnvelopePtr(raw_control);
        check_run(cavmem_shaping_info(shaping.get(), &predicted, &truncated, nullptr),
                  "shaping info");
    } else {
        control = build_control(control_name, params.get(), T, samples, 20.0);
        double re = 0.0, im = 0.0;
        check_run(cavmem_adiabatic_storage_amplitude(params.get(), control.get(), input.get(), &re,
                                                     &im),
                  "storage amplitude estimate");
        predicted = re * re + im * im;
    }

    cavmem_run_options ropts{eta_tol, 0, 1, 0.0};
    cavmem_trajectory* raw_traj = nullptr;
    check_run(cavmem_simulate_storage(params.get(), control.get(), input.get(), &ropts, &raw_traj),
              "storage run");
    TrajectoryPtr traj(raw_traj);

    double eta_s = 0.0, residual = 0.0;
    check_run(cavmem_trajectory_metrics(traj.get(), &eta_s, nullptr, &residual, nullptr),
              "trajectory metrics");
    size_t n_final = 0;
    int refinements = 0;
    check_run(cavmem_trajectory_convergence(traj.get(), &n_final, &refinements, nullptr, nullptr),
              "trajectory convergence");
    cavmem_margins margins;
    check_run(cavmem_adiabaticity_margins(params.get(), control.get(), input.get(), T, &margins),
              "margins");

    write_trajectory_csv(args.out_prefix, traj.get(), max_rows);
    write_summary_csv(args.out_prefix,
                      {"duration", "eta_s", "predicted", "max_control", "tc_gamma", "adiabatic",
                       "truncated", "n_final", "refinements"},
                      {{T, eta_s, predicted, envelope_peak(control.get()), margins.tc_gamma,
                        margins.adiabatic ? 1.0 : 0.0, static_cast<double>(truncated),
                        static_cast<double>(n_final), static_cast<double>(refinements)}});

    MetaWriter meta;
    meta.add("command", "store");
    meta.add("version", cavmem_version());
    meta.add("mode", mode_name);
    meta.add("control", control_name);
    meta.add("duration", T);
    meta.add("samples", fmt_size(samples));
    meta.add("eta_tol", eta_tol);
    meta.add("epsilon_boundary", epsilon);
    meta.add("truncation_fraction", truncation);
    meta.add("eta_s", eta_s);
    meta.add("predicted_efficiency", predicted);
    meta.add("residual_excitation", residual);
    meta.add("n_final", fmt_size(n_final));
    add_margins_meta(meta, margins);
    meta.write(args.out_prefix);
}

void run_retrieve(Config& config, const CliArgs& args) {
    ParamsPtr params = params_from_config(config);
    const double T = config.require_double("duration");
    const size_t samples = scale_samples(config.opt_size("samples", 2001), args.grid_scale);
    const std::string control_name = config.opt_string("control", "shaped");
    const std::string mode_name = config.opt_string("mode", "gaussian");
    const double margin = config.opt_double("margin", 20.0);
    const double eta_tol = config.opt_double("eta_tol", 1e-6);
    const double epsilon = config.opt_double("epsilon_boundary", 1e-4);
    const double truncation = config.opt_double("truncation_fraction", 0.01);
    const size_t max_rows = config.opt_size("trajectory_rows", 2001);
    config.finish("retrieve");
    if (!params) return;

    EnvelopePtr control;
    double predicted = 0.0;
    if (control_name == "shaped") {
        EnvelopePtr mode = build_mode(mode_name, T, samples);
        double gamma_s = 0.0;
        check_run(cavmem_params_get(params.get(), nullptr, nullptr, nullptr, &gamma_s, nullptr,
                                    nullptr),
                  "parameter access");
        cavmem_shaping_options sopts{epsilon, truncation};
        cavmem_shaping* raw_shaping = nullptr;
        check_run(cavmem_shape_retrieval(params.get(), mode.get(), gamma_s, &sopts, &raw_shaping),
                  "retrieval control shaping");
        ShapingPtr shaping(raw_shaping);
        cavmem_envelope* raw_control = nullptr;
        check_run(cavmem_shaping_control(shaping.get(), &raw_control), "shaped control");
        control = EnvelopePtr(raw_control);
        check_run(cavmem_shaping_info(shaping.get(), &predicted, nullptr, nullptr), "shaping info");
    } else {
        control = build_control(control_name, params.get(), T, samples, margin);
        double C = 0.0, gamma = 0.0, delta = 0.0;
        check_run(cavmem_params_get(params.get(), &C, &gamma, &delta, nullptr, nullptr, nullptr),
                  "parameter access");
        size_t n = 0;
        check_run(cavmem_envelope_size(control.get(), &n), "control size");
        std::vector<double> re(n), im(n);
        check_run(cavmem_envelope_values(control.get(), re.data(), im.data()), "control values");
        const double dressed = gamma * (1.0 + C);
        const double beta = 2.0 * dressed / (dressed * dressed + delta * delta);
        const double measured =
            beta * control_intensity(re, im, T / static_cast<double>(n - 1));
        predicted = C / (1.0 + C) * (1.0 - std::exp(-measured));
    }

    cavmem_run_options ropts{eta_tol, 0, 1, 0.0};
    cavmem_trajectory* raw_traj = nullptr;
    check_run(cavmem_simulate_retrieval(params.get(), control.get(), 0.0, 0.0, 1.0, 0.0, &ropts,
                                        &raw_traj),
              "retrieval run");
    TrajectoryPtr traj(raw_traj);

    double eta_r = 0.0, residual = 0.0;
    int incomplete = 0;
    check_run(cavmem_trajectory_metrics(traj.get(), nullptr, &eta_r, &residual, &incomplete),
              "trajectory metrics");
    size_t n_final = 0;
    int refinements = 0;
    check_run(cavmem_trajectory_convergence(traj.get(), &n_final, &refinements, nullptr, nullptr),
              "trajectory convergence");
    cavmem_margins margins;
    check_run(cavmem_adiabaticity_margins(params.get(), control.get(), nullptr, T, &margins),
              "margins");

    write_trajectory_csv(args.out_prefix, traj.get(), max_rows);
    write_summary_csv(args.out_prefix,
                      {"duration", "eta_r", "predicted", "residual", "incomplete", "max_control",
                       "tc_gamma", "adiabatic", "n_final", "refinements"},
                      {{T, eta_r, predicted, residual, static_cast<double>(incomplete),
                        envelope_peak(control.get()), margins.tc_gamma,
                        margins.adiabatic ? 1.0 : 0.0, static_cast<double>(n_final),
                        static_cast<double>(refinements)}});

    MetaWriter meta;
    meta.add("command", "retrieve");
    meta.add("version", cavmem_version());
    meta.add("control", control_name);
    if (control_name == "shaped") meta.add("mode", mode_name);
    if (control_name != "shaped" && control_name.rfind("csv:", 0) != 0) {
        meta.add("margin", margin);
    }
    meta.add("duration", T);
    meta.add("samples", fmt_size(samples));
    meta.add("eta_tol", eta_tol);
    meta.add("eta_r", eta_r);
    meta.add("predicted_efficiency", predicted);
    meta.add("residual_excitation", residual);
    meta.add("incomplete_retrieval", incomplete ? "1" : "0");
    meta.add("n_final", fmt_size(n_final));
    add_margins_meta(meta, margins);
    meta.write(args.out_prefix);
}

void run_fast(Config& config, const CliArgs& args) {
    ParamsPtr params = params_from_config(config);
    const double T = config.require_double("duration");
    const double omega = config.require_double("omega");
    const size_t samples = scale_samples(config.opt_size("samples", 4001), args.grid_scale);
    const std::string mode_name = config.opt_string("mode", "optimal");
    const double t_end_config = config.opt_double("t_end", 0.0);
    const size_t max_rows = config.opt_size("trajectory_rows", 2001);
    config.finish("fast");
    if (!params) return;

    double C = 0.0, gamma = 0.0;
    check_run(cavmem_params_get(params.get(), &C, &gamma, nullptr, nullptr, nullptr, nullptr),
              "parameter access");
    const double pulse_duration = std::numbers::pi / (2.0 * omega);
    const double default_t_end = T + pulse_duration + 8.0 / (gamma * (1.0 + C));
    const double t_end = t_end_config > 0.0 ? t_end_config : default_t_end;

    EnvelopePtr input;
    double input_norm2 = 1.0;
    int input_complete = 1;
    if (mode_name == "optimal") {
        cavmem_envelope* raw = nullptr;
        check_run(cavmem_optimal_fast_input(params.get(), T, samples, &raw, &input_norm2,
                                            &input_complete),
                  "optimal fast input");
        input = EnvelopePtr(raw);
    } else {
        input = build_mode(mode_name, T, samples);
    }

    cavmem_fast_result* raw_result = nullptr;
    check_run(cavmem_simulate_fast_protocol(params.get(), input.get(), omega, t_end, samples,
                                            &raw_result),
              "fast protocol run");
    FastResultPtr result(raw_result);

    double eta_s = 0.0, deviation = 0.0, states[12];
    check_run(cavmem_fast_result_metrics(result.get(), &eta_s, &deviation, states),
              "fast protocol metrics");
    cavmem_trajectory* raw_traj = nullptr;
    check_run(cavmem_fast_result_trajectory(result.get(), &raw_traj), "fast trajectory");
    TrajectoryPtr traj(raw_traj);
    double leak = 0.0, residual = 0.0;
    check_run(cavmem_trajectory_metrics(traj.get(), nullptr, &leak, &residual, nullptr),
              "trajectory metrics");

    write_trajectory_csv(args.out_prefix, traj.get(), max_rows);
    write_summary_csv(args.out_prefix,
                      {"duration", "omega", "pulse_duration", "t_end", "eta_s", "map_deviation",
                       "input_norm2", "input_complete", "field_leak", "residual_end"},
                      {{T, omega, pulse_duration, t_end, eta_s, deviation, input_norm2,
                        static_cast<double>(input_complete), leak, residual}});

    MetaWriter meta;
    meta.add("command", "fast");
    meta.add("version", cavmem_version());
    meta.add("mode", mode_name);
    meta.add("duration", T);
    meta.add("omega", omega);
    meta.add("pulse_duration", pulse_duration);
    meta.add("t_end", t_end);
    meta.add("samples", fmt_size(samples));
    meta.add("eta_s", eta_s);
    meta.add("map_deviation", deviation);
    meta.add("input_norm2", input_norm2);
    meta.add("before_pulse_P", fmt17(states[0]) + (states[1] < 0 ? "" : "+") + fmt17(states[1]) + "i");
    meta.add("after_pulse_S", fmt17(states[6]) + (states[7] < 0 ? "" : "+") + fmt17(states[7]) + "i");
    meta.write(args.out_prefix);
}

void run_shape(Config& config, const CliArgs& args) {
    ParamsPtr params = params_from_config(config);
    const std::string direction = config.require_string("direction");
    const double T = config.require_double("duration");
    const size_t samples = scale_samples(config.opt_size("samples", 2001), args.grid_scale);
    const std::string mode_name = config.opt_string("mode", "gaussian");
    const double epsilon = config.opt_double("epsilon_boundary", 1e-4);
    const double truncation = config.opt_double("truncation_fraction", 0.01);
    config.finish("shape");
    if (!params) return;
    if (direction != "storage" && direction != "retrieval") {
        throw ConfigError{"'direction' must be storage or retrieval, got '" + direction + "'"};
    }

    EnvelopePtr mode = build_mode(mode_name, T, samples);
    double gamma_s = 0.0;
    check_run(
        cavmem_params_get(params.get(), nullptr, nullptr, nullptr, &gamma_s, nullptr, nullptr),
        "parameter access");

    cavmem_shaping_options sopts{epsilon, truncation};
    cavmem_shaping* raw_shaping = nullptr;
    if (direction == "storage") {
        check_run(cavmem_shape_storage(params.get(), mode.get(), gamma_s, &sopts, &raw_shaping),
                  "storage control shaping");
    } else {
        check_run(cavmem_shape_retrieval(params.get(), mode.get(), gamma_s, &sopts, &raw_shaping),
                  "retrieval control shaping");
    }
    ShapingPtr shaping(raw_shaping);
    cavmem_envelope* raw_control = nullptr;
    check_run(cavmem_shaping_control(shaping.get(), &raw_control), "shaped control");
    EnvelopePtr control(raw_control);
    double predicted = 0.0, eps_used = 0.0;
    int truncated = 0;
    check_run(cavmem_shaping_info(shaping.get(), &predicted, &truncated, &eps_used),
              "shaping info");

    cavmem_margins margins;
    const cavmem_envelope* margin_input = direction == "storage" ? mode.get() : nullptr;
    check_run(cavmem_adiabaticity_margins(params.get(), control.get(), margin_input, T, &margins),
              "margins");

    write_control_csv(args.out_prefix, control.get());
    write_summary_csv(args.out_prefix,
                      {"duration", "predicted", "truncated", "epsilon_boundary", "max_control",
                       "tc_gamma", "adiabatic"},
                      {{T, predicted, static_cast<double>(truncated), eps_used,
                        envelope_peak(control.get()), margins.tc_gamma,
                        margins.adiabatic ? 1.0 : 0.0}});

    MetaWriter meta;
    meta.add("command", "shape");
    meta.add("version", cavmem_version());
    meta.add("direction", direction);
    meta.add("mode", mode_name);
    meta.add("duration", T);
    meta.add("samples", fmt_size(samples));
    meta.add("epsilon_boundary", eps_used);
    meta.add("truncation_fraction", truncation);
    meta.add("predicted_efficiency", predicted);
    meta.add("truncated", truncated ? "1" : "0");
    add_margins_meta(meta, margins);
    meta.write(args.out_prefix);
}

void write_scan_outputs(const std::string& prefix, const std::string& command,
                        const cavmem_table* table) {
    write_table_csv(prefix, table);
    MetaWriter meta;
    meta.add("command", command);
    meta.add("version", cavmem_version());
    const char* table_meta = cavmem_table_metadata(table);
    if (!table_meta) throw RunError{"table metadata unavailable"};
    std::istringstream lines(table_meta);
    std::string line;
    while (std::getline(lines, line)) {
        const size_t eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        meta.add(line.substr(0, eq), line.substr(eq + 3));
    }
    meta.write(prefix);
}

void run_scan_breakdown(Config& config, const CliArgs& args) {
    const std::vector<double> C_list = config.require_list("cooperativity_list");
    const std::vector<double> delta_list = config.opt_list("delta_list", {0.0});
    const double tc_min = config.opt_double("tc_min", 0.1);
    const double tc_max = config.opt_double("tc_max", 1000.0);
    const size_t points = config.opt_size("tc_points", 40);
    std::vector<double> tc_list;
    if (config.has("tc_gamma_list")) {
        tc_list = config.require_list("tc_gamma_list");
    } else {
        if (!(tc_min > 0.0) || !(tc_max > tc_min)) {
            throw ConfigError{"tc_min must be positive and below tc_max"};
        }
        for (size_t i = 0; i < points; ++i) {
            const double x = points == 1 ? 0.0
                                         : static_cast<double>(i) / static_cast<double>(points - 1);
            tc_list.push_back(tc_min * std::pow(tc_max / tc_min, x));
        }
    }
    cavmem_scan_options opts = scan_options_from_config(config, args);
    config.finish("scan-breakdown");

    cavmem_table* raw = nullptr;
    check_run(cavmem_scan_breakdown(C_list.data(), C_list.size(), delta_list.data(),
                                    delta_list.size(), tc_list.data(), tc_list.size(), &opts, &raw),
              "breakdown scan");
    TablePtr table(raw);
    write_scan_outputs(args.out_prefix, "scan-breakdown", table.get());
}

void run_scan_universality(Config& config, const CliArgs& args) {
    const std::vector<double> C_list = config.require_list("cooperativity_list");
    const std::vector<double> delta_list = config.opt_list("delta_list", {0.0});
    const double margin = config.opt_double("margin", 20.0);
    cavmem_scan_options opts = scan_options_from_config(config, args);
    config.finish("scan-universality");

    cavmem_table* raw = nullptr;
    check_run(cavmem_scan_universality(C_list.data(), C_list.size(), delta_list.data(),
                                       delta_list.size(), margin, &opts, &raw),
              "universality scan");
    TablePtr table(raw);
    write_scan_outputs(args.out_prefix, "scan-universality", table.get());
}

void run_scan_timereversal(Config& config, const CliArgs& args) {
    const std::vector<double> C_list = config.require_list("cooperativity_list");
    const double T = config.require_double("duration");
    const size_t samples = scale_samples(config.opt_size("samples", 2001), args.grid_scale);
    const std::string modes_value = config.opt_string("modes", "gaussian sine");
    const double delta = config.opt_double("delta", 0.0);
    const double gamma_s = config.opt_double("gamma_s", 0.0);
    cavmem_scan_options opts = scan_options_from_config(config, args);
    config.finish("scan-timereversal");

    std::istringstream mode_stream(modes_value);
    std::vector<std::string> names;
    std::string name;
    while (mode_stream >> name) names.push_back(name);
    if (names.empty()) throw ConfigError{"'modes' must list at least one mode name"};

    std::vector<EnvelopePtr> modes;
    std::vector<const cavmem_envelope*> mode_handles;
    std::vector<const char*> name_handles;
    for (const auto& n : names) {
        modes.push_back(build_mode(n, T, samples));
        mode_handles.push_back(modes.back().get());
        name_handles.push_back(n.c_str());
    }

    cavmem_table* raw = nullptr;
    check_run(cavmem_scan_time_reversal(C_list.data(), C_list.size(), mode_handles.data(),
                                        name_handles.data(), names.size(), delta, gamma_s, &opts,
                                        &raw),
              "time reversal scan");
    TablePtr table(raw);
    write_scan_outputs(args.out_prefix, "scan-timereversal", table.get());
}

void run_scan_badcavity(Config& config, const CliArgs& args) {
    const std::vector<double> ratios = config.require_list("kappa_over_gN_list");
    const double cooperativity = config.opt_double("cooperativity", 1.0);
    cavmem_scan_options opts = scan_options_from_config(config, args);
    config.finish("scan-badcavity");

    cavmem_table* raw = nullptr;
    check_run(cavmem_scan_bad_cavity(ratios.data(), ratios.size(), cooperativity, &opts, &raw),
              "bad cavity scan");
    TablePtr table(raw);
    write_scan_outputs(args.out_prefix, "scan-badcavity", table.get());
}

}  // namespace

int main(int argc, char** argv) {
    try {
        const CliArgs args = parse_cli(argc, argv);
        Config config = Config::load(args.config_path);
        const std::string command = config.require_string("command");
        if (command.empty()) {
            throw ConfigError{"missing required key 'command'"};
        }
        if (command == "store") {
            run_store(config, args);
        } else if (command == "retrieve") {
            run_retrieve(config, args);
        } else if (command == "fast") {
            run_fast(config, args);
        } else if (command == "shape") {
            run_shape(config, args);
        } else if (command == "scan-breakdown") {
            run_scan_breakdown(config, args);
        } else if (command == "scan-universality") {
            run_scan_universality(config, args);
        } else if (command == "scan-timereversal") {
            run_scan_timereversal(config, args);
        } else if (command == "scan-badcavity") {
            run_scan_badcavity(config, args);
        } else {
            throw ConfigError{"unknown command '" + command + "'"};
        }
        return 0;
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.message.c_str());
        std::fputs(kUsage, stderr);
        return 2;
    } catch (const ConfigError& e) {
        if (e.line > 0) {
            std::fprintf(stderr, "error: config line %d: %s\n", e.line, e.message.c_str());
        } else {
            std::fprintf(stderr, "error: config: %s\n", e.message.c_str());
        }
        return 3;
    } catch (const RunError& e) {
        std::fprintf(stderr, "error: %s\n", e.message.c_str());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
}
