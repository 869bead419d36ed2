#pragma once

// Flat key=value run manifests: one experiment (or sequence file) per
// manifest, one output file per run.
//
// Keys: mode, j_hz, t_d_ms, t1s_ms, dt_ms, tau_xy_ms, tau_z_ms, n_reps,
//       alpha, measurement, sign, output, format, experiment, sequence,
//       pulse_tau_ms, interval_ms, pulse_target, p_e, axis_mode, seed,
//       initial, time_axis, fit, validate, gamma, total_t, n_meas,
//       alpha_re, alpha_im, beta_re, beta_im.
// '#' starts a comment; blank lines are ignored.  All durations are ms.

#include <qzsim/experiments.hpp>
#include <qzsim/protect.hpp>
#include <qzsim/seq.hpp>
#include <qzsim/trace_io.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

namespace qzsim {

enum class ExperimentKind { fid, zeno, xy4, protect_run_kind, sequence };

struct RunManifest {
    ExperimentConfig config = ExperimentConfig::nmr_defaults();
    ExperimentKind experiment = ExperimentKind::fid;
    MeasurementSpec measurement = MeasurementSpec::entangler(MeasurementSign::minus, 1.0);
    std::string sequence_path;       // experiment = sequence
    double interval_ms = 0.2;        // xy4
    PulseTarget pulse_target = PulseTarget::E;
    ProtectParams protect;           // experiment = protect
    std::string output;
    EmitFormat format = EmitFormat::csv;
    bool fit_requested = false;
    bool validate_steps = false;
    bool p_e_overridden = false;
    std::filesystem::path base_dir;  // relative sequence paths resolve here
};

namespace detail {

inline double parse_num(const std::string& key, const std::string& v) {
    if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw ValidationError("manifest: key '" + key + "' has a bad numeric value '" + v + "'");
    return out;
}

inline long parse_int(const std::string& key, const std::string& v) {
    long out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw ValidationError("manifest: key '" + key + "' has a bad integer value '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw ValidationError("manifest: key '" + key + "' has a bad boolean value '" + v + "'");
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return (a == std::string::npos) ? std::string{} : s.substr(a, b - a + 1);
}

}  // namespace detail

inline void apply_manifest_key(RunManifest& m, const std::string& key, const std::string& value) {
    using detail::parse_bool;
    using detail::parse_int;
    using detail::parse_num;

    if (key == "mode") {
        if (value == "nmr") {
            m.config.mode = Mode::nmr;
        } else if (value == "theory") {
            // theory defaults, then let later keys override
            const ExperimentConfig keep = m.config;
            m.config = ExperimentConfig::theory_defaults();
            m.config.time_axis = keep.time_axis;
        } else {
            throw ValidationError("manifest: key 'mode' must be nmr or theory");
        }
    } else if (key == "j_hz") {
        m.config.params.j_hz = parse_num(key, value);
    } else if (key == "t_d_ms") {
        m.config.params.t_d_ms = parse_num(key, value);
        if (!m.p_e_overridden) m.config.noise.p_e = m.config.params.p_e_per_ms();
    } else if (key == "t1s_ms") {
        m.config.params.t1s_ms = parse_num(key, value);
    } else if (key == "dt_ms") {
        m.config.dt_ms = parse_num(key, value);
    } else if (key == "tau_xy_ms") {
        m.config.tau_xy_ms = parse_num(key, value);
    } else if (key == "tau_z_ms") {
        m.config.tau_z_ms = parse_num(key, value);
    } else if (key == "n_reps") {
        m.config.n_reps = static_cast<int>(parse_int(key, value));
    } else if (key == "alpha") {
        m.config.alpha = parse_num(key, value);
    } else if (key == "pulse_tau_ms") {
        m.config.pulse_tau_ms = parse_num(key, value);
    } else if (key == "p_e") {
        m.config.noise.p_e = parse_num(key, value);
        m.p_e_overridden = true;
    } else if (key == "axis_mode") {
        if (value == "fixed_y")
            m.config.noise.mode = AxisMode::fixed_y;
        else if (value == "random_theta")
            m.config.noise.mode = AxisMode::random_theta;
        else
            throw ValidationError("manifest: key 'axis_mode' must be fixed_y or random_theta");
    } else if (key == "seed") {
        m.config.noise.seed = static_cast<std::uint64_t>(parse_int(key, value));
    } else if (key == "initial") {
        if (value == "pseudopure_plus" || value == "plus")
            m.config.initial = InitialState::pseudopure_plus;
        else if (value == "pseudopure_zero" || value == "zero")
            m.config.initial = InitialState::pseudopure_zero;
        else
            throw ValidationError("manifest: key 'initial' must be plus or zero");
    } else if (key == "time_axis") {
        if (value == "wall")
            m.config.time_axis = TimeAxis::wall;
        else if (value == "cycle_alpha")
            m.config.time_axis = TimeAxis::cycle_alpha;
        else if (value == "tau_xy_only")
            m.config.time_axis = TimeAxis::tau_xy_only;
        else
            throw ValidationError("manifest: key 'time_axis' is invalid");
    } else if (key == "experiment") {
        if (value == "fid")
            m.experiment = ExperimentKind::fid;
        else if (value == "zeno")
            m.experiment = ExperimentKind::zeno;
        else if (value == "xy4")
            m.experiment = ExperimentKind::xy4;
        else if (value == "protect")
            m.experiment = ExperimentKind::protect_run_kind;
        else if (value == "sequence")
            m.experiment = ExperimentKind::sequence;
        else
            throw ValidationError("manifest: key 'experiment' has unknown value '" + value + "'");
    } else if (key == "sequence") {
        m.sequence_path = value;
        m.experiment = ExperimentKind::sequence;
    } else if (key == "measurement") {
        if (value == "ideal")
            m.measurement.kind = MeasurementKind::ideal;
        else if (value == "entangler")
            m.measurement.kind = MeasurementKind::entangler;
        else
            throw ValidationError("manifest: key 'measurement' must be ideal or entangler");
    } else if (key == "sign") {
        if (value == "plus")
            m.measurement.sign = MeasurementSign::plus;
        else if (value == "minus")
            m.measurement.sign = MeasurementSign::minus;
        else
            throw ValidationError("manifest: key 'sign' must be plus or minus");
    } else if (key == "interval_ms") {
        m.interval_ms = parse_num(key, value);
    } else if (key == "pulse_target") {
        if (value == "S")
            m.pulse_target = PulseTarget::S;
        else if (value == "E")
            m.pulse_target = PulseTarget::E;
        else
            throw ValidationError("manifest: key 'pulse_target' must be S or E");
    } else if (key == "gamma") {
        m.protect.gamma = parse_num(key, value);
    } else if (key == "total_t") {
        m.protect.total_t = parse_num(key, value);
    } else if (key == "n_meas") {
        m.protect.n_meas = static_cast<int>(parse_int(key, value));
    } else if (key == "alpha_re") {
        m.protect.alpha = cx(parse_num(key, value), m.protect.alpha.imag());
    } else if (key == "alpha_im") {
        m.protect.alpha = cx(m.protect.alpha.real(), parse_num(key, value));
    } else if (key == "beta_re") {
        m.protect.beta = cx(parse_num(key, value), m.protect.beta.imag());
    } else if (key == "beta_im") {
        m.protect.beta = cx(m.protect.beta.real(), parse_num(key, value));
    } else if (key == "output") {
        m.output = value;
    } else if (key == "format") {
        if (value == "csv")
            m.format = EmitFormat::csv;
        else if (value == "json")
            m.format = EmitFormat::json;
        else
            throw ValidationError("manifest: key 'format' must be csv or json");
    } else if (key == "fit") {
        m.fit_requested = parse_bool(key, value);
    } else if (key == "validate") {
        m.validate_steps = parse_bool(key, value);
    } else {
        throw ValidationError("manifest: unknown key '" + key + "'");
    }
}

inline RunManifest parse_manifest_text(const std::string& text) {
    RunManifest m;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ValidationError("manifest line " + std::to_string(line_no) +
                                  ": expected key=value, got '" + t + "'");
        apply_manifest_key(m, detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
    }
    return m;
}

inline RunManifest parse_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    RunManifest m = parse_manifest_text(buf.str());
    m.base_dir = path.parent_path();
    return m;
}

struct RunSummary {
    std::string output_path;  // empty when no file was written
    std::vector<std::string> lines;
};

// Execute one manifest: run the experiment (or compiled sequence), write the
// trace, and collect the human-readable summary lines.
inline RunSummary run_manifest(const RunManifest& manifest,
                               const std::filesystem::path& output_dir = {}) {
    set_validation(manifest.validate_steps);
    RunSummary summary;

    if (manifest.experiment == ExperimentKind::protect_run_kind) {
        const ProtectResult r = protect_run(manifest.protect);
        summary.lines.push_back("survival_probability = " + format_double(r.survival_probability));
        summary.lines.push_back("final_fidelity = " + format_double(r.final_fidelity));
        if (!manifest.output.empty()) {
            nlohmann::json j;
            j["survival_probability"] = r.survival_probability;
            j["final_fidelity"] = r.final_fidelity;
            const auto path = output_dir.empty() ? std::filesystem::path(manifest.output)
                                                 : output_dir / manifest.output;
            write_file_atomic(path, j.dump(2) + "\n");
            summary.output_path = path.string();
        }
        return summary;
    }

    SignalTrace trace;
    switch (manifest.experiment) {
        case ExperimentKind::fid: trace = run_fid(manifest.config); break;
        case ExperimentKind::zeno: trace = run_zeno(manifest.config, manifest.measurement); break;
        case ExperimentKind::xy4:
            trace = run_xy4(manifest.config, manifest.pulse_target, manifest.interval_ms);
            break;
        case ExperimentKind::sequence: {
            if (manifest.sequence_path.empty())
                throw ValidationError("manifest: key 'sequence' is required");
            std::filesystem::path seq_path(manifest.sequence_path);
            if (seq_path.is_relative() && !manifest.base_dir.empty())
                seq_path = manifest.base_dir / seq_path;
            std::ifstream in(seq_path);
            if (!in) throw IoError("cannot open sequence '" + seq_path.string() + "'");
            std::stringstream buf;
            buf << in.rdbuf();
            const SequenceProgram prog = parse_sequence(buf.str());
            trace = run_compiled(compile_sequence(prog, manifest.config));
            break;
        }
        default: throw ValidationError("manifest: unhandled experiment kind");
    }

    summary.lines.push_back("points = " + std::to_string(trace.points.size()));
    if (!trace.points.empty()) {
        const TracePoint& last = trace.points.back();
        summary.lines.push_back("final t = " + format_double(last.t_ms) +
                                ", |s| = " + format_double(last.magnitude));
    }
    if (manifest.fit_requested) {
        const EnvelopeFit fit = fit_envelope(trace);
        if (fit.no_decay)
            summary.lines.push_back("fit: no decay over the sampled span");
        else
            summary.lines.push_back("fit: T2 = " + format_double(fit.t2_ms) +
                                    " ms, amplitude = " + format_double(fit.amplitude) +
                                    ", residual_rms = " + format_double(fit.residual_rms));
    }

    if (manifest.output.empty())
        throw ValidationError("manifest: key 'output' is required for trace experiments");
    const auto path = output_dir.empty() ? std::filesystem::path(manifest.output)
                                         : output_dir / manifest.output;
    write_trace(trace, path, manifest.format);
    summary.output_path = path.string();
    return summary;
}

// Exit-code policy: 0 success, 2 parse/validation, 3 simulation, 4 I/O.
inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const IoError*>(&e) != nullptr) return 4;
    if (dynamic_cast<const ParseError*>(&e) != nullptr) return 2;
    if (dynamic_cast<const ValidationError*>(&e) != nullptr) return 2;
    if (dynamic_cast<const SimulationError*>(&e) != nullptr) return 3;
    return 3;
}

}  // namespace qzsim
