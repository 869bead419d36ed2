#pragma once

// Named experiment harnesses: free-induction decay, repeated-measurement
// (Zeno) cycles, XY-4 decoupling scans, and exponential envelope fitting.
//
// Two operating modes share the same channel stack:
//   nmr    - laboratory units (ms, Hz); evolve_step with relaxation; pulsed,
//            finite-duration measurements; E starts maximally mixed.
//   theory - abstract units with one coupling period per unit time
//            (expressed as j_hz = 1000 so "ms" reads as "unit");
//            dephasing_step only, instantaneous ideal measurements,
//            E starts in |0><0|.

#include <qzsim/channels.hpp>
#include <qzsim/qmat.hpp>

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace qzsim {

enum class Mode { theory, nmr };
enum class InitialState { pseudopure_plus, pseudopure_zero, custom };

// Reporting convention for the trace time column.
//   wall        - accumulated simulated time, measurements included
//   cycle_alpha - n (tau_M alpha + tau_xy) with tau_M = 2 pulse_tau
//   tau_xy_only - n tau_xy, measurement time ignored
enum class TimeAxis { wall, cycle_alpha, tau_xy_only };

struct ExperimentConfig {
    Mode mode = Mode::nmr;
    SpinSystemParams params{};
    FlipNoise noise{};
    double dt_ms = 0.1;          // integration step T/N_t
    double tau_xy_ms = 0.3;      // free-decoherence block
    double tau_z_ms = 1.0;       // entangler delay
    int n_reps = 100;            // N
    double pulse_tau_ms = 0.058; // composite-pulse duration
    double alpha = 0.4;          // x-axis fitting parameter (reporting only)
    InitialState initial = InitialState::pseudopure_plus;
    Mat custom_initial = kron(proj_plus(), mixed2());
    TimeAxis time_axis = TimeAxis::wall;

    static ExperimentConfig nmr_defaults() {
        ExperimentConfig c;
        c.noise.p_e = c.params.p_e_per_ms();
        return c;
    }

    // One coupling period per unit time: J_ang = 2 pi / unit.
    static ExperimentConfig theory_defaults() {
        ExperimentConfig c;
        c.mode = Mode::theory;
        c.params.j_hz = 1000.0;
        c.params.t1s_ms = std::numeric_limits<double>::infinity();
        c.noise.p_e = 0.05;
        c.dt_ms = 1.0 / 160.0;
        c.tau_xy_ms = 1.0 / 160.0;
        c.n_reps = 1600;
        c.pulse_tau_ms = 0.0;
        return c;
    }

    void validate() const {
        params.validate();
        if (!(dt_ms > 0)) throw ValidationError("ExperimentConfig: dt_ms must be > 0");
        if (tau_xy_ms < 0 || tau_z_ms < 0 || pulse_tau_ms < 0)
            throw ValidationError("ExperimentConfig: durations must be >= 0");
        if (n_reps < 1) throw ValidationError("ExperimentConfig: n_reps must be >= 1");
        if (noise.p_e < 0) throw ValidationError("ExperimentConfig: noise.p_e must be >= 0");
        require_on_grid(tau_xy_ms, "tau_xy_ms");
        require_on_grid(tau_z_ms, "tau_z_ms");
        if (initial == InitialState::custom && custom_initial.dim() != 4)
            throw ValidationError("ExperimentConfig: custom initial state must be dim 4");
    }

    // duration must be an integer multiple of dt (1e-9 slack, no rounding)
    int steps_for(double duration_ms, const char* what) const {
        const double ratio = duration_ms / dt_ms;
        const double rounded = std::round(ratio);
        if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, std::abs(ratio)))
            throw ValidationError(std::string(what) + " = " + std::to_string(duration_ms) +
                                  " is not a multiple of dt_ms = " + std::to_string(dt_ms));
        return static_cast<int>(rounded);
    }

    Density initial_state() const {
        if (initial == InitialState::custom) return Density(custom_initial);
        const Mat& s = (initial == InitialState::pseudopure_plus) ? proj_plus() : proj0();
        const Mat& e = (mode == Mode::theory) ? proj0() : mixed2();
        return Density(kron(s, e));
    }

  private:
    void require_on_grid(double v, const char* what) const {
        if (v > 0) (void)steps_for(v, what);
    }
};

struct TracePoint {
    double t_ms;
    double s_x;
    double s_y;
    double magnitude;
    double fidelity;
};

struct SignalTrace {
    std::vector<TracePoint> points;
    ExperimentConfig config;  // echo of the run parameters
};

// ---------------------------------------------------------------------------
// Run machinery
// ---------------------------------------------------------------------------

namespace detail {

// Drives the channel maps for one run and owns the wall clock.  The clock
// advances by one addition per elementary step, always in the same order, so
// harness runs and compiled sequence runs produce bit-identical time columns.
class Stepper {
  public:
    explicit Stepper(const ExperimentConfig& cfg) : cfg_(cfg) {
        if (cfg.noise.mode == AxisMode::random_theta)
            sampler_ = std::make_unique<ThetaSampler>(cfg.noise.seed);
    }

    // one integration step of dt; flavor chosen by mode
    void free_step(Density& rho) {
        rho = (cfg_.mode == Mode::theory)
                  ? dephasing_step(rho, cfg_.params, cfg_.noise, cfg_.dt_ms, sampler_.get())
                  : evolve_step(rho, cfg_.params, cfg_.noise, cfg_.dt_ms, sampler_.get());
        wall_ += cfg_.dt_ms;
        tick();
    }

    void free_block(Density& rho, int n_steps) {
        for (int i = 0; i < n_steps; ++i) free_step(rho);
    }

    void pulse(Density& rho, PulseAxis axis, PulseTarget target, double angle_rad) {
        rho = pulse_step(rho, cfg_.params, cfg_.noise, axis, target, angle_rad,
                         cfg_.pulse_tau_ms, sampler_.get());
        wall_ += cfg_.pulse_tau_ms;
        tick();
    }

    void measure(Density& rho, const MeasurementSpec& spec) {
        if (spec.kind == MeasurementKind::ideal) {
            // attach a fresh pointer as the last qubit, measure, discard it;
            // the ideal measurement is instantaneous
            const Density reg(kron(rho.mat(), spec.pointer_prep));
            rho = Density(ptrace(ideal_measurement(reg, spec).mat(), {0, 1}));
        } else {
            rho = entangler_measurement(rho, cfg_.params, cfg_.noise, spec, cfg_.dt_ms,
                                        cfg_.pulse_tau_ms, sampler_.get());
            // clock additions mirror the pulse / delay / pulse decomposition
            wall_ += cfg_.pulse_tau_ms;
            if (spec.tau_z_ms > 0) {
                const int n = cfg_.steps_for(spec.tau_z_ms, "tau_z_ms");
                for (int i = 0; i < n; ++i) wall_ += cfg_.dt_ms;
            }
            wall_ += cfg_.pulse_tau_ms;
        }
        tick();
    }

    double wall() const { return wall_; }
    ThetaSampler* sampler() { return sampler_.get(); }

  private:
    // hermiticity drift is re-checked on long runs only
    void tick() {
        if (++steps_ % 10000 == 0) pending_check_ = true;
    }

  public:
    void maybe_resymmetrize(Density& rho) {
        if (pending_check_) {
            rho.resymmetrize_if_drifted();
            pending_check_ = false;
        }
    }

  private:
    const ExperimentConfig& cfg_;
    std::unique_ptr<ThetaSampler> sampler_;
    double wall_ = 0.0;
    long steps_ = 0;
    bool pending_check_ = false;
};

inline TracePoint sample_point(double t, const Density& rho, const Mat& target_s) {
    const Mat rs = ptrace(rho.mat(), {0});
    const double sx = expect(sigma_x(), rs).real();
    const double sy = expect(sigma_y(), rs).real();
    return {t, sx, sy, std::hypot(sx, sy), expect(target_s, rs).real()};
}

}  // namespace detail

// Free-induction decay: iterate the free-evolution step over n_reps blocks of
// tau_xy, sampling the reduced S state after each block (and once at t = 0).
inline SignalTrace run_fid(const ExperimentConfig& cfg) {
    cfg.validate();
    const int block = cfg.steps_for(cfg.tau_xy_ms, "tau_xy_ms");
    if (block < 1) throw ValidationError("run_fid: tau_xy_ms must be positive");

    detail::Stepper stepper(cfg);
    Density rho = cfg.initial_state();
    const Mat target = ptrace(rho.mat(), {0});

    SignalTrace trace;
    trace.config = cfg;
    trace.points.push_back(detail::sample_point(0.0, rho, target));
    for (int n = 1; n <= cfg.n_reps; ++n) {
        stepper.free_block(rho, block);
        stepper.maybe_resymmetrize(rho);
        trace.points.push_back(detail::sample_point(stepper.wall(), rho, target));
    }
    return trace;
}

// Repeated-measurement run: [tau_xy - measurement]^N, sampling the reduced S
// state after each cycle.  The time column follows cfg.time_axis.
inline SignalTrace run_zeno(const ExperimentConfig& cfg, const MeasurementSpec& spec) {
    cfg.validate();
    spec.validate();
    if (cfg.mode == Mode::theory && spec.kind != MeasurementKind::ideal)
        throw ValidationError("run_zeno: theory mode uses ideal measurements");
    const int block = cfg.steps_for(cfg.tau_xy_ms, "tau_xy_ms");

    MeasurementSpec cycle_spec = spec;
    if (spec.kind == MeasurementKind::entangler) cycle_spec.tau_z_ms = cfg.tau_z_ms;

    const double tau_m = 2.0 * cfg.pulse_tau_ms;

    detail::Stepper stepper(cfg);
    Density rho = cfg.initial_state();
    const Mat target = ptrace(rho.mat(), {0});

    SignalTrace trace;
    trace.config = cfg;
    for (int n = 1; n <= cfg.n_reps; ++n) {
        stepper.free_block(rho, block);
        stepper.measure(rho, cycle_spec);
        stepper.maybe_resymmetrize(rho);
        double t = 0.0;
        switch (cfg.time_axis) {
            case TimeAxis::wall: t = stepper.wall(); break;
            case TimeAxis::cycle_alpha: t = n * (tau_m * cfg.alpha + cfg.tau_xy_ms); break;
            case TimeAxis::tau_xy_only: t = n * cfg.tau_xy_ms; break;
        }
        trace.points.push_back(detail::sample_point(t, rho, target));
    }
    return trace;
}

// XY-4 scan: n_reps blocks of [interval - piX - interval - piY] x 2 on the
// chosen spin, sampled after each block.
inline SignalTrace run_xy4(const ExperimentConfig& cfg, PulseTarget target, double interval_ms) {
    cfg.validate();
    if (cfg.mode == Mode::theory)
        throw ValidationError("run_xy4: pulses are an nmr-mode construct");
    if (interval_ms < cfg.pulse_tau_ms)
        throw ValidationError("run_xy4: interval must be >= pulse_tau");
    const int gap = cfg.steps_for(interval_ms, "interval_ms");

    detail::Stepper stepper(cfg);
    Density rho = cfg.initial_state();
    const Mat target_state = ptrace(rho.mat(), {0});

    SignalTrace trace;
    trace.config = cfg;
    const PulseAxis pattern[4] = {PulseAxis::x, PulseAxis::y, PulseAxis::x, PulseAxis::y};
    for (int n = 1; n <= cfg.n_reps; ++n) {
        for (const PulseAxis axis : pattern) {
            stepper.free_block(rho, gap);
            stepper.pulse(rho, axis, target, kPi);
        }
        stepper.maybe_resymmetrize(rho);
        trace.points.push_back(detail::sample_point(stepper.wall(), rho, target_state));
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Envelope fitting
// ---------------------------------------------------------------------------

struct EnvelopeFit {
    double t2_ms = std::numeric_limits<double>::infinity();
    double amplitude = 0.0;
    double residual_rms = 0.0;
    bool no_decay = false;  // set when the trace does not decay over its span
};

// Least-squares fit of A e^{-t/T2} through the local maxima of |s(t)| (or
// through |s| directly when the trace is non-oscillatory, i.e. has fewer
// than 4 interior peaks).  Ties in peak detection resolve to the earlier
// sample.  A fit whose T2 exceeds 100x the data span (or does not decay at
// all) is reported as a no-decay result rather than a number.
inline EnvelopeFit fit_envelope(const SignalTrace& trace) {
    const auto& pts = trace.points;
    if (pts.size() < 8) throw ValidationError("fit_envelope: need at least 8 sample points");

    std::vector<double> ts, as;
    for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
        if (pts[i].magnitude >= pts[i - 1].magnitude && pts[i].magnitude > pts[i + 1].magnitude) {
            ts.push_back(pts[i].t_ms);
            as.push_back(pts[i].magnitude);
        }
    }
    if (ts.size() < 4) {  // non-oscillatory: fit every point directly
        ts.clear();
        as.clear();
        for (const auto& p : pts)
            if (p.magnitude > 1e-12) {
                ts.push_back(p.t_ms);
                as.push_back(p.magnitude);
            }
    }

    EnvelopeFit fit;
    if (ts.size() < 2) {
        fit.no_decay = true;
        return fit;
    }

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto n = static_cast<double>(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double y = std::log(as[i]);
        sx += ts[i];
        sy += y;
        sxx += ts[i] * ts[i];
        sxy += ts[i] * y;
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) {
        fit.no_decay = true;
        return fit;
    }
    const double slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / n;
    fit.amplitude = std::exp(intercept);

    const double span = ts.back() - ts.front();
    if (slope >= 0.0 || -1.0 / slope > 100.0 * span) {
        fit.no_decay = true;
        return fit;
    }
    fit.t2_ms = -1.0 / slope;

    double ss = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double r = fit.amplitude * std::exp(-ts[i] / fit.t2_ms) - as[i];
        ss += r * r;
    }
    fit.residual_rms = std::sqrt(ss / n);
    return fit;
}

}  // namespace qzsim
