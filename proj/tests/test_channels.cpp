#include <qzsim/channels.hpp>

#include <catch2/catch_amalgamated.hpp>

#include "support/test_rand.hpp"

using namespace qzsim;

// ---------------------------------------------------------------------------
// Independent oracle: a separately coded 4x4 product chain for the combined
// free-evolution map, on raw complex arrays.  Shares nothing with qzsim::Mat.
// ---------------------------------------------------------------------------
namespace oracle {

using C = std::complex<double>;
using M4 = std::array<std::array<C, 4>, 4>;

inline M4 mul(const M4& a, const M4& b) {
    M4 r{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 4; ++k) r[i][j] += a[i][k] * b[k][j];
    return r;
}
inline M4 dagger(const M4& a) {
    M4 r{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) r[i][j] = std::conj(a[j][i]);
    return r;
}
inline M4 sandwich(const M4& u, const M4& rho) { return mul(mul(u, rho), dagger(u)); }

// one combined step: (1-(ps+pe)dt) U rho U+ + pe dt F rho F+ + ps dt rho_th
inline M4 free_step(const M4& rho, double j_ang, double pe, double ps, double dt) {
    const double phase = j_ang * dt / 4.0;
    M4 u{};  // exp(-i H_J dt), diagonal
    u[0][0] = std::exp(C(0, -phase));
    u[1][1] = std::exp(C(0, phase));
    u[2][2] = std::exp(C(0, phase));
    u[3][3] = std::exp(C(0, -phase));
    M4 f{};  // I (x) sigma_y
    f[0][1] = C(0, -1);
    f[1][0] = C(0, 1);
    f[2][3] = C(0, -1);
    f[3][2] = C(0, 1);
    M4 th{};  // |0><0| (x) I/2
    th[0][0] = 0.5;
    th[1][1] = 0.5;

    const M4 a = sandwich(u, rho);
    const M4 b = sandwich(f, rho);
    M4 out{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            out[i][j] = (1.0 - (ps + pe) * dt) * a[i][j] + pe * dt * b[i][j] + ps * dt * th[i][j];
    return out;
}

inline M4 plus_mixed() {
    M4 r{};
    // |+><+| (x) I/2
    r[0][0] = r[0][2] = r[2][0] = r[2][2] = 0.25;
    r[1][1] = r[1][3] = r[3][1] = r[3][3] = 0.25;
    return r;
}

inline double sx(const M4& rho) {
    // Tr((sigma_x (x) I) rho) = 2 Re(rho[2][0] + rho[3][1])
    return 2.0 * (rho[2][0] + rho[3][1]).real();
}

}  // namespace oracle

namespace {

const SpinSystemParams kChloroform{};  // 215 Hz, 6.5 ms, 300 ms
const FlipNoise kSampleNoise{kChloroform.p_e_per_ms(), AxisMode::fixed_y, 0};
const FlipNoise kNoiseOff{0.0, AxisMode::fixed_y, 0};

Density plus_mixed() { return Density(kron(proj_plus(), mixed2())); }

double s_x(const Density& rho) { return expect(kron(sigma_x(), sigma0()), rho.mat()).real(); }

}  // namespace

TEST_CASE("dephasing_step: noiseless limit follows the J oscillation") {
    SpinSystemParams p = kChloroform;
    Density rho = plus_mixed();
    const double dt = 0.1;
    for (int i = 1; i <= 30; ++i) {
        rho = dephasing_step(rho, p, kNoiseOff, dt);
        CHECK(s_x(rho) == Catch::Approx(std::cos(p.j_ang_per_ms() * i * dt / 2.0)).margin(1e-12));
    }
}

TEST_CASE("dephasing_step: flip branch populates the E-excited subspace") {
    SpinSystemParams p = kChloroform;
    const double dt = 0.1;
    const double q = kSampleNoise.p_e * dt;
    const Density rho0 = Density(kron(proj_plus(), proj0()));
    const Density out = dephasing_step(rho0, p, kSampleNoise, dt);
    // population of E = |1>: the flip branch moves all of it there
    const double pop = expect(kron(sigma0(), proj1()), out.mat()).real();
    CHECK(pop == Catch::Approx(q).margin(1e-14));
    CHECK(out.mat().trace().real() == Catch::Approx(1.0).margin(1e-13));
}

TEST_CASE("dephasing_step: rate overflow is a hard error") {
    const FlipNoise hot{2.0, AxisMode::fixed_y, 0};
    CHECK_THROWS_AS(dephasing_step(plus_mixed(), kChloroform, hot, 1.0), SimulationError);
}

TEST_CASE("relax_step: thermal state is a fixed point as J dt -> 0") {
    SpinSystemParams p = kChloroform;
    const Density th(p.thermal);
    const Density out = relax_step(th, p, 1e-9);
    CHECK(out.mat().max_abs_diff(p.thermal) < 1e-12);
}

TEST_CASE("relax_step: ground-state refill rate") {
    SpinSystemParams p = kChloroform;
    const double dt = 0.1;
    const Density rho0 = Density(kron(proj1(), mixed2()));
    const Density out = relax_step(rho0, p, dt);
    const double ground = expect(kron(proj0(), sigma0()), out.mat()).real();
    CHECK(ground == Catch::Approx(p.p_s_per_ms() * dt).margin(1e-14));
}

TEST_CASE("relax_step and evolve_step reduce to the unitary step at zero rates") {
    SpinSystemParams p = kChloroform;
    p.t1s_ms = std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(3);
    const Density rho(testing::random_density(rng, 4));
    const Mat u = pauli_exp(kron(sigma_z(), sigma_z()), p.j_ang_per_ms() * 0.1 / 2.0);
    const Mat expect_out = ad(u, rho.mat());
    CHECK(relax_step(rho, p, 0.1).mat().max_abs_diff(expect_out) < 1e-14);
    CHECK(evolve_step(rho, p, kNoiseOff, 0.1).mat().max_abs_diff(expect_out) < 1e-14);
}

TEST_CASE("evolve_step matches the independent dense-propagation oracle") {
    // 65 steps of 0.1 ms at the paper parameters
    SpinSystemParams p = kChloroform;
    Density rho = plus_mixed();
    oracle::M4 ref = oracle::plus_mixed();
    const double dt = 0.1;
    for (int i = 0; i < 65; ++i) {
        rho = evolve_step(rho, p, kSampleNoise, dt);
        ref = oracle::free_step(ref, p.j_ang_per_ms(), kSampleNoise.p_e, p.p_s_per_ms(), dt);
        CHECK(std::abs(s_x(rho) - oracle::sx(ref)) < 1e-9);
    }
}

TEST_CASE("evolve_step tracks the damped-telegraph closed form") {
    // continuous-time solution of the same map: s_x(t) = e^{-(pe+ps)t}
    // (cos(mu t) + (pe/mu) sin(mu t)), mu = sqrt(w^2 - pe^2), w = J_ang/2.
    SpinSystemParams p = kChloroform;
    const double w = p.j_ang_per_ms() / 2.0;
    const double pe = kSampleNoise.p_e, ps = p.p_s_per_ms();
    const double mu = std::sqrt(w * w - pe * pe);
    Density rho = plus_mixed();
    const double dt = 0.01;  // fine grid to stay near the continuum limit
    for (int i = 1; i <= 2000; ++i) {
        rho = evolve_step(rho, p, kSampleNoise, dt);
        const double t = i * dt;
        const double ref =
            std::exp(-(pe + ps) * t) * (std::cos(mu * t) + (pe / mu) * std::sin(mu * t));
        CHECK(std::abs(s_x(rho) - ref) < 2e-3);
    }
}

TEST_CASE("evolve_step trace preservation on random states") {
    std::mt19937_64 rng(8);
    SpinSystemParams p = kChloroform;
    for (int i = 0; i < 100; ++i) {
        const Density rho(testing::random_density(rng, 4));
        const Density out = evolve_step(rho, p, kSampleNoise, 0.1);
        CHECK(std::abs(out.mat().trace().real() - 1.0) < 1e-12);
        CHECK(std::abs(out.mat().trace().imag()) < 1e-14);
    }
}

TEST_CASE("evolve_step with p_s = 0 equals dephasing with the flip branch's U_J removed") {
    SpinSystemParams p = kChloroform;
    p.t1s_ms = std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(21);
    const double dt = 0.1;
    const double q = kSampleNoise.p_e * dt;
    const Mat u = pauli_exp(kron(sigma_z(), sigma_z()), p.j_ang_per_ms() * dt / 2.0);
    const Mat f = kron(sigma0(), sigma_y());
    for (int i = 0; i < 100; ++i) {
        const Density rho(testing::random_density(rng, 4));
        const Mat lhs = evolve_step(rho, p, kSampleNoise, dt).mat();
        const Mat rhs = (1.0 - q) * ad(u, rho.mat()) + q * ad(f, rho.mat());
        CHECK(lhs.max_abs_diff(rhs) < 1e-14);
        // and the only difference from dephasing_step is U_J inside the flip branch
        const Mat deph = dephasing_step(rho, p, kSampleNoise, dt).mat();
        const Mat flip_term_diff = q * (ad(f * u, rho.mat()) - ad(f, rho.mat()));
        CHECK(deph.max_abs_diff(lhs + flip_term_diff) < 1e-14);
    }
}

TEST_CASE("pulse_step: ideal rotations at tau = 0") {
    SpinSystemParams p = kChloroform;
    const Density rho0 = Density(kron(proj0(), mixed2()));
    const Density out =
        pulse_step(rho0, p, kSampleNoise, PulseAxis::y, PulseTarget::S, kPi / 2.0, 0.0);
    CHECK(out.mat().max_abs_diff(kron(proj_plus(), mixed2())) < 1e-14);

    // two successive +/- y pi/2 pulses compose to the identity
    std::mt19937_64 rng(5);
    const Density rho(testing::random_density(rng, 4));
    const Density fwd = pulse_step(rho, p, kNoiseOff, PulseAxis::y, PulseTarget::S, kPi / 2, 0.0);
    const Density back = pulse_step(fwd, p, kNoiseOff, PulseAxis::y, PulseTarget::S, -kPi / 2, 0.0);
    CHECK(back.mat().max_abs_diff(rho.mat()) < 1e-14);
}

TEST_CASE("pulse_step: finite-duration pulse stays close to the ideal rotation") {
    SpinSystemParams p = kChloroform;
    const double tau = 0.058;
    std::mt19937_64 rng(13);
    for (int i = 0; i < 25; ++i) {
        const Density rho(testing::random_density(rng, 4));
        const Density noisy =
            pulse_step(rho, p, kSampleNoise, PulseAxis::y, PulseTarget::S, kPi / 2.0, tau);
        const Density ideal =
            pulse_step(rho, p, kNoiseOff, PulseAxis::y, PulseTarget::S, kPi / 2.0, 0.0);
        CHECK(std::abs(noisy.mat().trace().real() - 1.0) < 1e-12);
        CHECK(fidelity(noisy.mat(), ideal.mat()) >= 0.985);
    }
}

TEST_CASE("ideal_measurement: z-basis configuration dephases x and y") {
    MeasurementSpec spec = MeasurementSpec::ideal_default();
    spec.control_role = ControlRole::system_controls;
    spec.pointer_prep = proj0();
    std::mt19937_64 rng(31);
    for (int i = 0; i < 20; ++i) {
        const Mat rs = testing::random_density(rng, 2);
        const auto b_in = bloch(rs);
        const Density reg(kron(rs, proj0()));
        const Density out = ideal_measurement(reg, spec);
        const auto b_out = bloch(ptrace(out.mat(), {0}));
        CHECK(std::abs(b_out[0]) < 1e-12);
        CHECK(std::abs(b_out[1]) < 1e-12);
        CHECK(b_out[2] == Catch::Approx(b_in[2]).margin(1e-12));
    }
}

TEST_CASE("ideal_measurement: default configuration measures S in the x basis") {
    const MeasurementSpec spec = MeasurementSpec::ideal_default();
    std::mt19937_64 rng(32);
    for (int i = 0; i < 20; ++i) {
        const Mat rs = testing::random_density(rng, 2);
        const auto b_in = bloch(rs);
        const Density reg(kron(rs, mixed2()));  // pointer state is reset anyway
        const Density out = ideal_measurement(reg, spec);
        const auto b_out = bloch(ptrace(out.mat(), {0}));
        CHECK(b_out[0] == Catch::Approx(b_in[0]).margin(1e-12));
        CHECK(std::abs(b_out[1]) < 1e-12);
        CHECK(std::abs(b_out[2]) < 1e-12);
    }
}

TEST_CASE("ideal_measurement: literal device-controls reading is inert on S") {
    const MeasurementSpec spec = MeasurementSpec::ideal_literal();
    std::mt19937_64 rng(33);
    const Mat rs = testing::random_density(rng, 2);
    const Density reg(kron(rs, proj0()));
    const Density out = ideal_measurement(reg, spec);
    CHECK(ptrace(out.mat(), {0}).max_abs_diff(rs) < 1e-13);
}

TEST_CASE("ideal_measurement on the three-qubit register leaves E alone") {
    const MeasurementSpec spec = MeasurementSpec::ideal_default();
    std::mt19937_64 rng(34);
    const Mat rse = testing::random_density(rng, 4);
    const Density reg(kron(rse, proj0()));
    const Density out = ideal_measurement(reg, spec);
    // E marginal untouched; S x-component preserved
    CHECK(ptrace(out.mat(), {1}).max_abs_diff(ptrace(rse, {1})) < 1e-12);
    const double sx_in = expect(kron(sigma_x(), sigma0()), rse).real();
    const double sx_out = expect(kron(sigma_x(), sigma0()), ptrace(out.mat(), {0, 1})).real();
    CHECK(sx_out == Catch::Approx(sx_in).margin(1e-12));
}

TEST_CASE("entangler_measurement: M(0) is the identity map") {
    SpinSystemParams p = kChloroform;
    std::mt19937_64 rng(41);
    const Density rho(testing::random_density(rng, 4));
    for (auto sign : {MeasurementSign::plus, MeasurementSign::minus}) {
        const auto spec = MeasurementSpec::entangler(sign, 0.0);
        const Density out = entangler_measurement(rho, p, kNoiseOff, spec, 0.1, 0.0);
        CHECK(out.mat().max_abs_diff(rho.mat()) < 1e-13);
    }
}

TEST_CASE("entangler_measurement reproduces the closed form with noise off") {
    SpinSystemParams p = kChloroform;
    p.t1s_ms = std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(42);
    for (double tau_z : {0.8, 1.0, 1.2, 1.5, 2.0, 2.5}) {
        for (auto sign : {MeasurementSign::plus, MeasurementSign::minus}) {
            const auto spec = MeasurementSpec::entangler(sign, tau_z);
            const double s = (sign == MeasurementSign::plus) ? 1.0 : -1.0;
            // M_+/- = exp(-+ i (J tau_z) X(x)Z / 4)
            const Mat closed =
                pauli_exp(kron(sigma_x(), sigma_z()), s * p.j_ang_per_ms() * tau_z / 2.0);
            for (int i = 0; i < 10; ++i) {
                const Density rho(testing::random_density(rng, 4));
                const Density out = entangler_measurement(rho, p, kNoiseOff, spec, 0.1, 0.0);
                CHECK(out.mat().max_abs_diff(ad(closed, rho.mat())) < 1e-9);
            }
        }
    }
}

TEST_CASE("entangler at J tau_z = pi with a scrambled E averages the +/- x rotations") {
    // E maximally mixed and J tau_z = pi: S Bloch (x, y, z) -> (x, 0, 0)
    SpinSystemParams p = kChloroform;
    p.t1s_ms = std::numeric_limits<double>::infinity();
    const double tau_z = kPi / p.j_ang_per_ms();
    const Mat rs = 0.5 * (sigma0() + 0.3 * sigma_x() + 0.5 * sigma_y() + 0.2 * sigma_z());
    const Mat closed = pauli_exp(kron(sigma_x(), sigma_z()), p.j_ang_per_ms() * tau_z / 2.0);
    const Mat out = ad(closed, kron(rs, mixed2()));
    const auto b = bloch(ptrace(out, {0}));
    CHECK(b[0] == Catch::Approx(0.3).margin(1e-12));
    CHECK(std::abs(b[1]) < 1e-12);
    CHECK(std::abs(b[2]) < 1e-12);
}

TEST_CASE("entangler at J tau_z = pi/2 shrinks the y component to cos(pi/4)") {
    SpinSystemParams p = kChloroform;
    p.t1s_ms = std::numeric_limits<double>::infinity();
    const double tau_z = (kPi / 2.0) / p.j_ang_per_ms();
    const auto spec = MeasurementSpec::entangler(MeasurementSign::plus, tau_z);
    // tau_z here is not a multiple of 0.1; use a matching grid
    const Density rho0 = Density(kron(0.5 * (sigma0() + sigma_y()), mixed2()));
    const Density out = entangler_measurement(rho0, p, kNoiseOff, spec, tau_z / 10.0, 0.0);
    const auto b = bloch(ptrace(out.mat(), {0}));
    CHECK(std::abs(b[0]) < 1e-12);
    CHECK(b[1] == Catch::Approx(std::sqrt(0.5)).margin(1e-9));
    CHECK(std::abs(b[2]) < 1e-12);
}

TEST_CASE("random_theta trajectories average to the fixed_y channel") {
    // For E starting in |0><0| and observables diagonal in the S (x) {I, Z}
    // algebra the random rotation axis is equivalent to a fixed sigma_y.
    SpinSystemParams p = kChloroform;
    p.t1s_ms = std::numeric_limits<double>::infinity();
    const double dt = 0.1;
    const int steps = 65;

    Density ref = Density(kron(proj_plus(), proj0()));
    for (int i = 0; i < steps; ++i) ref = evolve_step(ref, p, kSampleNoise, dt);
    const double sx_ref = s_x(ref);

    const int n_traj = 400;
    double sum = 0.0, sum2 = 0.0;
    for (int t = 0; t < n_traj; ++t) {
        FlipNoise noise{kSampleNoise.p_e, AxisMode::random_theta, 1000 + static_cast<unsigned>(t)};
        ThetaSampler sampler(noise.seed);
        Density rho = Density(kron(proj_plus(), proj0()));
        for (int i = 0; i < steps; ++i) rho = evolve_step(rho, p, noise, dt, &sampler);
        const double v = s_x(rho);
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / n_traj;
    const double stderr_est = std::sqrt(std::max(sum2 / n_traj - mean * mean, 0.0) / n_traj);
    CHECK(std::abs(mean - sx_ref) < 4.0 * stderr_est + 1e-4);
}

TEST_CASE("random_theta without a sampler is an error") {
    const FlipNoise noise{0.05, AxisMode::random_theta, 1};
    CHECK_THROWS_AS(dephasing_step(plus_mixed(), kChloroform, noise, 0.1), SimulationError);
}

TEST_CASE("every step map preserves trace, hermiticity and positivity") {
    std::mt19937_64 rng(55);
    SpinSystemParams p = kChloroform;
    const auto spec_e = MeasurementSpec::entangler(MeasurementSign::minus, 1.0);
    const auto spec_i = MeasurementSpec::ideal_default();
    for (int i = 0; i < 250; ++i) {
        const Density rho(testing::random_density(rng, 4));
        const Density outs[] = {
            dephasing_step(rho, p, kSampleNoise, 0.1),
            relax_step(rho, p, 0.1),
            evolve_step(rho, p, kSampleNoise, 0.1),
            pulse_step(rho, p, kSampleNoise, PulseAxis::y, PulseTarget::S, kPi / 2, 0.058),
            pulse_step(rho, p, kSampleNoise, PulseAxis::x, PulseTarget::E, kPi, 0.058),
            ideal_measurement(Density(kron(ptrace(rho.mat(), {0}), mixed2())), spec_i),
            entangler_measurement(rho, p, kSampleNoise, spec_e, 0.1, 0.058),
        };
        for (const Density& out : outs) {
            CHECK(std::abs(out.mat().trace().real() - 1.0) < 1e-10);
            CHECK(out.mat().hermiticity_defect() < 1e-10);
            CHECK(min_eigenvalue(out.mat()) >= -1e-9);
        }
    }
}
