#pragma once

// Trace emission: CSV with shortest round-trip decimals, JSON mirroring the
// SignalTrace plus the config echo.  Files are written to a temp path and
// renamed into place so readers never observe a partial file.

#include <qzsim/experiments.hpp>

#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace qzsim {

inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string mode_name(Mode m) { return m == Mode::theory ? "theory" : "nmr"; }
inline std::string time_axis_name(TimeAxis a) {
    switch (a) {
        case TimeAxis::wall: return "wall";
        case TimeAxis::cycle_alpha: return "cycle_alpha";
        case TimeAxis::tau_xy_only: return "tau_xy_only";
    }
    return "wall";
}
inline std::string initial_name(InitialState s) {
    switch (s) {
        case InitialState::pseudopure_plus: return "pseudopure_plus";
        case InitialState::pseudopure_zero: return "pseudopure_zero";
        case InitialState::custom: return "custom";
    }
    return "custom";
}

inline std::string trace_to_csv(const SignalTrace& trace) {
    std::string out = "t_ms,s_x,s_y,magnitude,fidelity\n";
    for (const TracePoint& p : trace.points) {
        out += format_double(p.t_ms) + ',' + format_double(p.s_x) + ',' + format_double(p.s_y) +
               ',' + format_double(p.magnitude) + ',' + format_double(p.fidelity) + '\n';
    }
    return out;
}

inline std::vector<TracePoint> trace_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "t_ms,s_x,s_y,magnitude,fidelity")
        throw IoError("trace CSV: missing or wrong header row");
    std::vector<TracePoint> pts;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        TracePoint p{};
        double* fields[5] = {&p.t_ms, &p.s_x, &p.s_y, &p.magnitude, &p.fidelity};
        const char* ptr = line.data();
        const char* end = line.data() + line.size();
        for (int f = 0; f < 5; ++f) {
            const auto res = std::from_chars(ptr, end, *fields[f]);
            if (res.ec != std::errc{}) throw IoError("trace CSV: bad number in '" + line + "'");
            ptr = res.ptr;
            if (f < 4) {
                if (ptr >= end || *ptr != ',')
                    throw IoError("trace CSV: expected 5 columns in '" + line + "'");
                ++ptr;
            }
        }
        pts.push_back(p);
    }
    return pts;
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["mode"] = mode_name(cfg.mode);
    j["j_hz"] = cfg.params.j_hz;
    j["t_d_ms"] = cfg.params.t_d_ms;
    j["t1s_ms"] = std::isinf(cfg.params.t1s_ms) ? nlohmann::json("inf")
                                                : nlohmann::json(cfg.params.t1s_ms);
    j["p_e"] = cfg.noise.p_e;
    j["axis_mode"] = cfg.noise.mode == AxisMode::fixed_y ? "fixed_y" : "random_theta";
    j["seed"] = cfg.noise.seed;
    j["dt_ms"] = cfg.dt_ms;
    j["tau_xy_ms"] = cfg.tau_xy_ms;
    j["tau_z_ms"] = cfg.tau_z_ms;
    j["n_reps"] = cfg.n_reps;
    j["pulse_tau_ms"] = cfg.pulse_tau_ms;
    j["alpha"] = cfg.alpha;
    j["initial"] = initial_name(cfg.initial);
    j["time_axis"] = time_axis_name(cfg.time_axis);
    return j;
}

inline nlohmann::json trace_to_json(const SignalTrace& trace) {
    nlohmann::json j;
    j["config"] = config_to_json(trace.config);
    nlohmann::json pts = nlohmann::json::array();
    for (const TracePoint& p : trace.points)
        pts.push_back({{"t_ms", p.t_ms},
                       {"s_x", p.s_x},
                       {"s_y", p.s_y},
                       {"magnitude", p.magnitude},
                       {"fidelity", p.fidelity}});
    j["points"] = pts;
    return j;
}

inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
        out << content;
        if (!out) throw IoError("write failed on '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "'");
}

enum class EmitFormat { csv, json };

inline void write_trace(const SignalTrace& trace, const std::filesystem::path& path,
                        EmitFormat format) {
    if (format == EmitFormat::csv)
        write_file_atomic(path, trace_to_csv(trace));
    else
        write_file_atomic(path, trace_to_json(trace).dump(2) + "\n");
}

}  // namespace qzsim
