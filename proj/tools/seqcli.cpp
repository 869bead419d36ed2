// seqcli: drive the spin-register simulator from the command line.
//
//   seqcli fid      free-induction decay run
//   seqcli zeno     repeated-measurement run (tau_z sweeps fan out in parallel)
//   seqcli xy4      XY-4 decoupling scan (interval sweeps fan out in parallel)
//   seqcli theory   theory-mode runs in coupling-period units
//   seqcli protect  parity-projection protection scheme
//   seqcli run F    execute a key=value manifest file
//
// Exit codes: 0 success, 2 parse/validation error, 3 simulation error, 4 I/O.

#include <qzsim/manifest.hpp>

#include <CLI11.hpp>

#include <future>
#include <iostream>
#include <utility>
#include <vector>

using namespace qzsim;

namespace {

struct KeyValues {
    std::vector<std::pair<std::string, std::string>> items;
    void set(const std::string& key, const std::string& value) { items.emplace_back(key, value); }
};

// "mode" must be applied before the keys it would otherwise reset
RunManifest build_manifest(const KeyValues& kv) {
    RunManifest m;
    for (const auto& [k, v] : kv.items)
        if (k == "mode") apply_manifest_key(m, k, v);
    for (const auto& [k, v] : kv.items)
        if (k != "mode") apply_manifest_key(m, k, v);
    return m;
}

void print_summary(const RunSummary& s) {
    for (const auto& line : s.lines) std::cout << line << "\n";
    if (!s.output_path.empty()) std::cout << "wrote " << s.output_path << "\n";
}

std::string with_suffix(const std::string& path, const std::string& tag) {
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos) return path + "_" + tag;
    return path.substr(0, dot) + "_" + tag + path.substr(dot);
}

// independent runs, one worker each
int run_fanout(const std::vector<RunManifest>& manifests) {
    std::vector<std::future<RunSummary>> jobs;
    jobs.reserve(manifests.size());
    for (const RunManifest& m : manifests)
        jobs.push_back(std::async(std::launch::async, [m] { return run_manifest(m); }));
    int rc = 0;
    for (auto& job : jobs) {
        try {
            print_summary(job.get());
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            rc = std::max(rc, exit_code_for(e));
        }
    }
    return rc;
}

void add_common_options(CLI::App* cmd, KeyValues& kv) {
    auto bind = [cmd, &kv](const std::string& flag, const std::string& key,
                           const std::string& help) {
        cmd->add_option_function<std::string>(
               flag, [&kv, key](const std::string& v) { kv.set(key, v); }, help)
            ->expected(1);
    };
    bind("--j-hz", "j_hz", "scalar coupling J/2pi in Hz");
    bind("--t-d", "t_d_ms", "flip time constant T_d in ms (p_e = 1/(2 T_d))");
    bind("--t1s", "t1s_ms", "1/p_s in ms ('inf' disables relaxation)");
    bind("--dt", "dt_ms", "integration step in ms");
    bind("--tau-xy", "tau_xy_ms", "free-decoherence block in ms");
    bind("--n", "n_reps", "number of repetitions N");
    bind("--p-e", "p_e", "override flip rate (1/ms)");
    bind("--axis-mode", "axis_mode", "fixed_y | random_theta");
    bind("--seed", "seed", "PRNG seed for random_theta");
    bind("--initial", "initial", "plus | zero");
    bind("--pulse-tau", "pulse_tau_ms", "composite-pulse duration in ms");
    bind("--alpha", "alpha", "x-axis fitting parameter (reporting only)");
    bind("--time-axis", "time_axis", "wall | cycle_alpha | tau_xy_only");
    bind("--output", "output", "output trace path");
    bind("--format", "format", "csv | json");
    cmd->add_flag_function(
        "--fit", [&kv](std::int64_t) { kv.set("fit", "1"); }, "print the fitted T2");
    cmd->add_flag_function(
        "--validate", [&kv](std::int64_t) { kv.set("validate", "1"); },
        "enable per-step invariant assertions");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-spin open-system simulator with repeated-measurement protection"};
    app.require_subcommand(1);

    KeyValues fid_kv, zeno_kv, xy4_kv, theory_kv;
    std::vector<std::string> zeno_tau_z{"1.0"};
    std::vector<std::string> xy4_intervals{"0.2"};
    std::string xy4_target = "E";
    std::string theory_experiment = "fid";
    std::string theory_tau_z;

    CLI::App* fid = app.add_subcommand("fid", "free-induction decay");
    fid_kv.set("experiment", "fid");
    add_common_options(fid, fid_kv);

    CLI::App* zeno = app.add_subcommand("zeno", "repeated-measurement run");
    zeno_kv.set("experiment", "zeno");
    add_common_options(zeno, zeno_kv);
    zeno->add_option("--tau-z", zeno_tau_z, "entangler delay(s) in ms; several values sweep");
    zeno->add_option_function<std::string>(
        "--measurement", [&zeno_kv](const std::string& v) { zeno_kv.set("measurement", v); },
        "ideal | entangler");
    zeno->add_option_function<std::string>(
        "--sign", [&zeno_kv](const std::string& v) { zeno_kv.set("sign", v); }, "plus | minus");

    CLI::App* xy4 = app.add_subcommand("xy4", "XY-4 decoupling scan");
    xy4_kv.set("experiment", "xy4");
    add_common_options(xy4, xy4_kv);
    xy4->add_option("--interval", xy4_intervals, "pulse interval(s) in ms; several values sweep");
    xy4->add_option("--target", xy4_target, "pulsed spin: S | E");

    CLI::App* theory = app.add_subcommand("theory", "theory-mode runs (coupling-period units)");
    theory_kv.set("mode", "theory");
    add_common_options(theory, theory_kv);
    theory->add_option("--experiment", theory_experiment, "fid | zeno");
    theory->add_option("--tau-z", theory_tau_z, "entangler delay (zeno only)");
    theory->add_option_function<std::string>(
        "--measurement", [&theory_kv](const std::string& v) { theory_kv.set("measurement", v); },
        "ideal | entangler");
    theory->add_option_function<std::string>(
        "--sign", [&theory_kv](const std::string& v) { theory_kv.set("sign", v); },
        "plus | minus");

    CLI::App* protect_cmd = app.add_subcommand("protect", "parity-projection protection scheme");
    double a_re = 1.0, a_im = 0.0, b_re = 0.0, b_im = 0.0;
    double gamma = 1.0, total_t = 1.0;
    int n_meas = 10;
    std::string protect_output;
    protect_cmd->add_option("--alpha-re", a_re);
    protect_cmd->add_option("--alpha-im", a_im);
    protect_cmd->add_option("--beta-re", b_re);
    protect_cmd->add_option("--beta-im", b_im);
    protect_cmd->add_option("--gamma", gamma, "decay curvature (1/time)");
    protect_cmd->add_option("--total-t", total_t, "protected interval T");
    protect_cmd->add_option("--n-meas", n_meas, "number of parity projections N");
    protect_cmd->add_option("--output", protect_output, "optional JSON result path");

    CLI::App* run = app.add_subcommand("run", "execute a manifest file");
    std::string manifest_path;
    std::string output_dir;
    std::vector<std::string> overrides;
    run->add_option("file", manifest_path, "manifest path")->required();
    run->add_option("--set", overrides, "override manifest keys (key=value)");
    run->add_option("--output-dir", output_dir, "directory for relative output paths");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fid->parsed()) {
            print_summary(run_manifest(build_manifest(fid_kv)));
        } else if (zeno->parsed()) {
            std::vector<RunManifest> runs;
            for (const std::string& tz : zeno_tau_z) {
                KeyValues kv = zeno_kv;
                kv.set("tau_z_ms", tz);
                RunManifest m = build_manifest(kv);
                if (zeno_tau_z.size() > 1 && !m.output.empty())
                    m.output = with_suffix(m.output, "tauz" + tz);
                runs.push_back(std::move(m));
            }
            return run_fanout(runs);
        } else if (xy4->parsed()) {
            std::vector<RunManifest> runs;
            for (const std::string& iv : xy4_intervals) {
                KeyValues kv = xy4_kv;
                kv.set("interval_ms", iv);
                kv.set("pulse_target", xy4_target);
                RunManifest m = build_manifest(kv);
                if (xy4_intervals.size() > 1 && !m.output.empty())
                    m.output = with_suffix(m.output, "iv" + iv);
                runs.push_back(std::move(m));
            }
            return run_fanout(runs);
        } else if (theory->parsed()) {
            KeyValues kv = theory_kv;
            kv.set("experiment", theory_experiment);
            if (!theory_tau_z.empty()) kv.set("tau_z_ms", theory_tau_z);
            print_summary(run_manifest(build_manifest(kv)));
        } else if (protect_cmd->parsed()) {
            RunManifest m;
            m.experiment = ExperimentKind::protect_run_kind;
            m.protect.alpha = cx(a_re, a_im);
            m.protect.beta = cx(b_re, b_im);
            m.protect.gamma = gamma;
            m.protect.total_t = total_t;
            m.protect.n_meas = n_meas;
            m.output = protect_output;
            print_summary(run_manifest(m));
        } else if (run->parsed()) {
            RunManifest m = parse_manifest(manifest_path);
            for (const std::string& kv : overrides) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos)
                    throw ValidationError("--set expects key=value, got '" + kv + "'");
                apply_manifest_key(m, kv.substr(0, eq), kv.substr(eq + 1));
            }
            print_summary(run_manifest(m, output_dir));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
    return 0;
}
