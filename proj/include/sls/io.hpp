#pragma once

// Batch-run I/O: INI-style run configuration, the T1-vs-frequency table
// loader, and deterministic CSV serialization. Files speak Hz and seconds;
// the 2*pi conversion to angular units happens only when a SystemModel is
// built, and frequency grids are generated and written in Hz so outputs
// round-trip exactly.

#include "sls/analysis.hpp"
#include "sls/model.hpp"
#include "sls/protocols.hpp"

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace sls {

class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Shortest round-trip decimal representation; locale-independent.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last)
        throw config_error(where + ": expected a number, got '" + std::string(s) + "'");
    return v;
}

inline long parse_long(std::string_view s, const std::string& where) {
    long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw config_error(where + ": expected an integer, got '" + std::string(s) + "'");
    return v;
}

struct GridSpec {
    double start = 0.0;
    double stop = 0.0;
    int count = 0;

    std::vector<double> points() const {
        std::vector<double> out;
        out.reserve(static_cast<std::size_t>(count));
        if (count == 1) {
            out.push_back(start);
            return out;
        }
        for (int i = 0; i < count; ++i)
            out.push_back(start + (stop - start) * static_cast<double>(i) /
                                      static_cast<double>(count - 1));
        return out;
    }
};

struct DefectConfig {
    double delta_hz = 0.0;     // signed (omega_TLS - omega_q)/2pi
    double gamma1 = 0.0;       // 1/s
    double gamma2 = 0.0;       // 1/s
    double coupling_hz = 0.0;  // g/2pi
};

struct RatesConfig {
    std::string table_path;
    GridSpec rabi_hz;
};

struct RunConfig {
    double qubit_freq_hz = 0.0;
    double qubit_gamma1 = 0.0;
    double qubit_gamma2 = 0.0;
    std::vector<DefectConfig> defects;
    std::optional<double> drive_rabi_hz;     // simulate
    std::optional<GridSpec> rabi_grid_hz;    // scan
    std::optional<GridSpec> duration_grid_s;
    PulseMode pulse_mode = PulseMode::Ideal;
    double pi_half_duration_s = 100e-9;
    int workers = 0;  // 0 = hardware concurrency
    std::uint64_t seed = 0;
    std::string output_dir;
    std::optional<RatesConfig> rates;
};

inline DefectParams to_defect_params(const DefectConfig& d) {
    DefectParams p;
    p.delta_tls = two_pi * d.delta_hz;
    p.gamma1 = d.gamma1;
    p.gamma2 = d.gamma2;
    p.coupling_g = two_pi * d.coupling_hz;
    return p;
}

// SystemModel in angular units; the defect slot is left empty (scan
// attaches defects pairwise, simulate attaches the configured ones).
inline SystemModel to_system_model(const RunConfig& cfg) {
    SystemModel m;
    m.qubit.omega_q = two_pi * cfg.qubit_freq_hz;
    m.qubit.gamma1 = cfg.qubit_gamma1;
    m.qubit.gamma2 = cfg.qubit_gamma2;
    m.drive.rabi = two_pi * cfg.drive_rabi_hz.value_or(0.0);
    return m;
}

namespace detail {

struct ConfigLine {
    std::string key;
    std::string value;
    int line = 0;
    mutable bool used = false;
};

struct ConfigSection {
    std::string name;
    int line = 0;
    std::vector<ConfigLine> entries;

    const ConfigLine* find(const std::string& key) const {
        for (const auto& e : entries)
            if (e.key == key) {
                e.used = true;
                return &e;
            }
        return nullptr;
    }

    double number(const std::string& key) const {
        const ConfigLine* e = find(key);
        if (!e)
            throw config_error("section [" + name + "]: missing key '" + key + "'");
        return parse_double(e->value, "line " + std::to_string(e->line));
    }

    double number_or(const std::string& key, double fallback) const {
        const ConfigLine* e = find(key);
        return e ? parse_double(e->value, "line " + std::to_string(e->line)) : fallback;
    }
};

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<ConfigSection> tokenize_config(std::istream& in) {
    std::vector<ConfigSection> sections;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find_first_of("#;");
        std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw config_error("line " + std::to_string(line_no) +
                                   ": malformed section header");
            sections.push_back({trim(line.substr(1, line.size() - 2)), line_no, {}});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("line " + std::to_string(line_no) +
                               ": expected 'key = value'");
        if (sections.empty())
            throw config_error("line " + std::to_string(line_no) +
                               ": key outside of any [section]");
        sections.back().entries.push_back(
            {trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no, false});
    }
    return sections;
}

inline GridSpec parse_grid(const ConfigSection& s, const std::string& prefix,
                           const std::string& unit) {
    GridSpec g;
    g.start = s.number(prefix + "_start_" + unit);
    g.stop = s.number(prefix + "_stop_" + unit);
    g.count = static_cast<int>(parse_long(
        s.find(prefix + "_count") ? s.find(prefix + "_count")->value : "",
        "section [" + s.name + "] key '" + prefix + "_count'"));
    if (g.count < 1)
        throw config_error("section [" + s.name + "]: " + prefix + "_count must be >= 1");
    if (g.start > g.stop)
        throw config_error("section [" + s.name + "]: " + prefix + " start > stop");
    return g;
}

}  // namespace detail

inline RunConfig parse_config(std::istream& in) {
    const auto sections = detail::tokenize_config(in);
    RunConfig cfg;
    bool have_qubit = false;

    for (const auto& s : sections) {
        if (s.name == "qubit") {
            have_qubit = true;
            cfg.qubit_freq_hz = s.number("freq_hz");
            cfg.qubit_gamma1 = s.number_or("gamma1", 0.0);
            cfg.qubit_gamma2 = s.number_or("gamma2", 0.0);
        } else if (s.name == "defect" || s.name.starts_with("defect.")) {
            DefectConfig d;
            d.delta_hz = s.number("delta_hz");
            d.gamma1 = s.number_or("gamma1", 0.0);
            d.gamma2 = s.number_or("gamma2", 0.0);
            d.coupling_hz = s.number("coupling_hz");
            cfg.defects.push_back(d);
        } else if (s.name == "drive") {
            cfg.drive_rabi_hz = s.number("rabi_hz");
        } else if (s.name == "grid") {
            if (s.find("rabi_start_hz"))
                cfg.rabi_grid_hz = detail::parse_grid(s, "rabi", "hz");
            if (s.find("duration_start_s"))
                cfg.duration_grid_s = detail::parse_grid(s, "duration", "s");
        } else if (s.name == "run") {
            if (const auto* e = s.find("pulse_mode")) {
                if (e->value == "ideal")
                    cfg.pulse_mode = PulseMode::Ideal;
                else if (e->value == "finite")
                    cfg.pulse_mode = PulseMode::FiniteRect;
                else
                    throw config_error("line " + std::to_string(e->line) +
                                       ": pulse_mode must be 'ideal' or 'finite'");
            }
            cfg.pi_half_duration_s = s.number_or("pi_half_duration_s", cfg.pi_half_duration_s);
            if (const auto* e = s.find("workers"))
                cfg.workers = static_cast<int>(
                    parse_long(e->value, "line " + std::to_string(e->line)));
            if (const auto* e = s.find("seed"))
                cfg.seed = static_cast<std::uint64_t>(
                    parse_long(e->value, "line " + std::to_string(e->line)));
            if (const auto* e = s.find("output_dir")) cfg.output_dir = e->value;
        } else if (s.name == "rates") {
            RatesConfig r;
            const auto* e = s.find("table");
            if (!e)
                throw config_error("section [rates]: missing key 'table'");
            r.table_path = e->value;
            r.rabi_hz = detail::parse_grid(s, "rabi", "hz");
            cfg.rates = r;
        } else {
            throw config_error("line " + std::to_string(s.line) + ": unknown section [" +
                               s.name + "]");
        }
    }

    for (const auto& s : sections)
        for (const auto& e : s.entries)
            if (!e.used)
                throw config_error("line " + std::to_string(e.line) + ": unknown key '" +
                                   e.key + "' in section [" + s.name + "]");

    if (!have_qubit) throw config_error("missing [qubit] section");
    if (!(cfg.qubit_freq_hz > 0.0))
        throw config_error("[qubit] freq_hz must be positive");
    if (cfg.qubit_gamma1 < 0.0 || cfg.qubit_gamma2 < 0.0)
        throw config_error("[qubit] rates must be nonnegative");
    for (const auto& d : cfg.defects)
        if (d.gamma1 < 0.0 || d.gamma2 < 0.0 || d.coupling_hz < 0.0)
            throw config_error("[defect] rates and coupling must be nonnegative");
    if (cfg.duration_grid_s && cfg.duration_grid_s->start < 0.0)
        throw config_error("[grid] durations must be nonnegative");
    if (cfg.rabi_grid_hz && cfg.rabi_grid_hz->start < 0.0)
        throw config_error("[grid] Rabi frequencies must be nonnegative");
    if (cfg.workers < 0) throw config_error("[run] workers must be >= 0");
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path.string());
    try {
        return parse_config(in);
    } catch (const config_error& e) {
        throw config_error(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// T1 table (CSV: flux,freq_hz,t1_s)

struct T1Row {
    double flux = 0.0;     // Phi/Phi_0, label only
    double freq_hz = 0.0;  // qubit frequency
    double t1_s = 0.0;     // energy-relaxation time
};

struct T1Table {
    std::vector<T1Row> rows;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    return out;
}

}  // namespace detail

inline T1Table load_t1_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open T1 table: " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw config_error(path.string() + ": empty file");
    const auto header = detail::split_csv_line(line);
    if (header != std::vector<std::string>{"flux", "freq_hz", "t1_s"})
        throw config_error(path.string() + ": expected header 'flux,freq_hz,t1_s'");
    T1Table table;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 3)
            throw config_error(path.string() + " line " + std::to_string(line_no) +
                               ": expected 3 fields");
        const std::string where = path.string() + " line " + std::to_string(line_no);
        T1Row row{parse_double(fields[0], where), parse_double(fields[1], where),
                  parse_double(fields[2], where)};
        if (!(row.freq_hz > 0.0) || !(row.t1_s > 0.0))
            throw config_error(where + ": freq_hz and t1_s must be positive");
        table.rows.push_back(row);
    }
    if (table.rows.size() < 2)
        throw config_error(path.string() + ": need at least 2 rows");
    return table;
}

// Sorted by frequency; exact duplicate frequencies are averaged.
inline RelaxationSpectrum to_spectrum(const T1Table& table) {
    std::map<double, std::pair<double, int>> acc;
    for (const auto& row : table.rows) {
        auto& slot = acc[row.freq_hz];
        slot.first += 1.0 / row.t1_s;
        slot.second += 1;
    }
    RelaxationSpectrum spec;
    for (const auto& [freq, slot] : acc) {
        spec.frequencies.push_back(two_pi * freq);
        spec.gamma1.push_back(slot.first / slot.second);
    }
    spec.validate();
    return spec;
}

// ---------------------------------------------------------------------------
// CSV serialization

inline void write_trace_csv(const std::filesystem::path& path, const DecayTrace& trace) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot write " + path.string());
    out << "tau_s,population\n";
    for (std::size_t i = 0; i < trace.durations.size(); ++i)
        out << format_double(trace.durations[i]) << ','
            << format_double(trace.populations[i]) << '\n';
}

inline DecayTrace read_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != "tau_s,population")
        throw config_error(path.string() + ": expected header 'tau_s,population'");
    DecayTrace trace;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 2)
            throw config_error(path.string() + " line " + std::to_string(line_no) +
                               ": expected 2 fields");
        const std::string where = path.string() + " line " + std::to_string(line_no);
        trace.durations.push_back(parse_double(fields[0], where));
        trace.populations.push_back(parse_double(fields[1], where));
    }
    return trace;
}

// Population map: header row 'rabi_hz' + tau values, one row per Rabi point.
inline void write_map_csv(const std::filesystem::path& path,
                          const std::vector<double>& rabi_hz,
                          const std::vector<double>& durations,
                          const std::vector<std::vector<double>>& map) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot write " + path.string());
    out << "rabi_hz";
    for (double tau : durations) out << ',' << format_double(tau);
    out << '\n';
    for (std::size_t i = 0; i < rabi_hz.size(); ++i) {
        out << format_double(rabi_hz[i]);
        for (double v : map[i]) out << ',' << format_double(v);
        out << '\n';
    }
}

inline void write_fits_csv(const std::filesystem::path& path,
                           const std::vector<double>& rabi_hz,
                           const std::vector<ColumnFit>& fits) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot write " + path.string());
    out << "rabi_hz,gamma_1rho,t1rho_s,converged\n";
    for (std::size_t i = 0; i < fits.size(); ++i) {
        const ExpFit& f = fits[i].fit;
        const double t1rho = f.converged ? 1.0 / f.gamma
                                         : std::numeric_limits<double>::quiet_NaN();
        out << format_double(rabi_hz[i]) << ',' << format_double(f.gamma) << ','
            << format_double(t1rho) << ',' << (f.converged ? 1 : 0) << '\n';
    }
}

}  // namespace sls
