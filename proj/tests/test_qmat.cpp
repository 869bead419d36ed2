#include <qzsim/qmat.hpp>

#include <catch2/catch_amalgamated.hpp>

#include "support/test_rand.hpp"

using namespace qzsim;

namespace {
constexpr double kPi = 3.14159265358979323846;

Mat bell_phi_plus() {
    // (|00> + |11>)/sqrt(2)
    Mat rho(4);
    rho.at(0, 0) = 0.5;
    rho.at(0, 3) = 0.5;
    rho.at(3, 0) = 0.5;
    rho.at(3, 3) = 0.5;
    return rho;
}
}  // namespace

TEST_CASE("kron identity and sign structure") {
    CHECK(kron(sigma0(), sigma0()).max_abs_diff(Mat::identity(4)) == 0.0);

    const Mat zz = kron(sigma_z(), sigma_z());
    CHECK(zz(0, 0) == cx(1, 0));
    CHECK(zz(1, 1) == cx(-1, 0));
    CHECK(zz(2, 2) == cx(-1, 0));
    CHECK(zz(3, 3) == cx(1, 0));

    const Mat xz = kron(sigma_x(), sigma_z());
    CHECK((xz * xz).max_abs_diff(Mat::identity(4)) < 1e-15);

    CHECK_THROWS_AS(kron(kron(sigma0(), sigma0()), kron(sigma0(), sigma0())), SimulationError);
}

TEST_CASE("ad basics") {
    CHECK(ad(Mat::identity(2), proj_plus()).max_abs_diff(proj_plus()) == 0.0);
    CHECK(ad(sigma_x(), proj0()).max_abs_diff(proj1()) < 1e-15);
    // pi/2 rotation about y takes |0> to |+>
    const Mat r = pauli_exp(sigma_y(), kPi / 2.0);
    CHECK(ad(r, proj0()).max_abs_diff(proj_plus()) < 1e-15);
}

TEST_CASE("ptrace on product and entangled states") {
    const Mat prod = kron(proj_plus(), proj0());
    CHECK(ptrace(prod, {0}).max_abs_diff(proj_plus()) < 1e-15);
    CHECK(ptrace(prod, {1}).max_abs_diff(proj0()) < 1e-15);

    CHECK(ptrace(bell_phi_plus(), {0}).max_abs_diff(mixed2()) < 1e-15);

    CHECK_THROWS_AS(ptrace(proj0(), {0}), SimulationError);
    CHECK_THROWS_AS(ptrace(prod, {2}), SimulationError);
}

TEST_CASE("ptrace of entangler output at J*tau_z = pi") {
    // e^{-i pi X(x)Z / 4} on |+><+| (x) I/2 leaves the reduced S state at |+><+|:
    // |+> is an eigenstate of the generator for either Z_E eigenvalue.
    const Mat u = pauli_exp(kron(sigma_x(), sigma_z()), kPi / 2.0);
    const Mat out = ad(u, kron(proj_plus(), mixed2()));
    CHECK(ptrace(out, {0}).max_abs_diff(proj_plus()) < 1e-12);
}

TEST_CASE("pauli_exp closed form") {
    CHECK(pauli_exp(kron(sigma_z(), sigma_z()), 0.0).max_abs_diff(Mat::identity(4)) == 0.0);

    // diagonal phases of exp(-i (Jt/2) ZZ / 2): e^{-iJt/4}, e^{+iJt/4}, ...
    const double jt = 0.73;
    const Mat u = pauli_exp(kron(sigma_z(), sigma_z()), jt / 2.0);
    CHECK(std::abs(u(0, 0) - std::exp(cx(0, -jt / 4.0))) < 1e-15);
    CHECK(std::abs(u(1, 1) - std::exp(cx(0, +jt / 4.0))) < 1e-15);
    CHECK(std::abs(u(2, 2) - std::exp(cx(0, +jt / 4.0))) < 1e-15);
    CHECK(std::abs(u(3, 3) - std::exp(cx(0, -jt / 4.0))) < 1e-15);

    // half-angle: exp(-i pi X/2) = -i sigma_x
    const Mat x_pi = pauli_exp(sigma_x(), kPi);
    CHECK(x_pi.max_abs_diff(cx(0, -1) * sigma_x()) < 1e-15);
}

TEST_CASE("pauli_exp additivity property") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> ang(-3.0, 3.0);
    PauliString p{{Pauli::X, Pauli::Z}};
    for (int i = 0; i < 50; ++i) {
        const double a = ang(rng), b = ang(rng);
        const Mat lhs = pauli_exp(p, a) * pauli_exp(p, b);
        const Mat rhs = pauli_exp(p, a + b);
        CHECK(lhs.max_abs_diff(rhs) < 1e-12);
    }
}

TEST_CASE("PauliString squares to identity") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> lab(0, 3);
    for (int i = 0; i < 30; ++i) {
        PauliString p;
        for (int q = 0; q < 3; ++q) p.factors.push_back(static_cast<Pauli>(lab(rng)));
        const Mat m = p.matrix();
        CHECK((m * m).max_abs_diff(Mat::identity(8)) < 1e-14);
    }
}

TEST_CASE("bloch basics and round trip") {
    auto b = bloch(proj_plus());
    CHECK(b[0] == Catch::Approx(1.0));
    CHECK(std::abs(b[1]) < 1e-15);
    CHECK(std::abs(b[2]) < 1e-15);
    b = bloch(proj0());
    CHECK(b[2] == Catch::Approx(1.0));
    b = bloch(mixed2());
    CHECK(std::abs(b[0]) + std::abs(b[1]) + std::abs(b[2]) < 1e-15);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uni(-0.57, 0.57);
    for (int i = 0; i < 40; ++i) {
        const double x = uni(rng), y = uni(rng), z = uni(rng);
        Mat rho = 0.5 * (sigma0() + x * sigma_x() + y * sigma_y() + z * sigma_z());
        const auto v = bloch(rho);
        CHECK(std::abs(v[0] - x) < 1e-12);
        CHECK(std::abs(v[1] - y) < 1e-12);
        CHECK(std::abs(v[2] - z) < 1e-12);
    }
}

TEST_CASE("expect examples") {
    CHECK(expect(kron(sigma_x(), sigma0()), kron(proj_plus(), mixed2())).real() ==
          Catch::Approx(1.0));
    CHECK(std::abs(expect(sigma_z(), mixed2())) < 1e-15);

    // free evolution under H_J: <sigma_x (x) I>(t) = cos(J_ang t / 2)
    const double j_ang = 2.0 * kPi * 215.0 / 1000.0;  // rad/ms
    const double t = 1.37;                            // ms
    const Mat u = pauli_exp(kron(sigma_z(), sigma_z()), j_ang * t / 2.0);
    const Mat rho = ad(u, kron(proj_plus(), mixed2()));
    CHECK(expect(kron(sigma_x(), sigma0()), rho).real() ==
          Catch::Approx(std::cos(j_ang * t / 2.0)).margin(1e-12));

    CHECK_THROWS_AS(expect(sigma_x(), kron(sigma0(), sigma0())), SimulationError);
}

TEST_CASE("ad preserves trace for random Pauli-built unitaries") {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 60; ++i) {
        const int dim = (i % 3 == 0) ? 2 : (i % 3 == 1 ? 4 : 8);
        const Mat rho = testing::random_density(rng, dim);
        const Mat u = testing::random_unitary(rng, dim);
        CHECK(std::abs(ad(u, rho).trace().real() - 1.0) < 1e-10);
        CHECK(std::abs(ad(u, rho).trace().imag()) < 1e-12);
    }
}

TEST_CASE("ptrace of product states is exact") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 40; ++i) {
        const Mat a = testing::random_density(rng, 2);
        const Mat b = testing::random_density(rng, 2);
        CHECK(ptrace(kron(a, b), {0}).max_abs_diff(a) < 1e-14);
        CHECK(ptrace(kron(a, b), {1}).max_abs_diff(b) < 1e-14);
    }
}

TEST_CASE("eigh reconstructs and orders") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 30; ++i) {
        const int dim = (i % 2) ? 4 : 8;
        const Mat rho = testing::random_density(rng, dim);
        const EigH e = eigh(rho);
        Mat rebuilt(dim);
        for (int k = 0; k < dim; ++k)
            for (int r = 0; r < dim; ++r)
                for (int c = 0; c < dim; ++c)
                    rebuilt.at(r, c) += e.values[k] * e.vectors(r, k) * std::conj(e.vectors(c, k));
        CHECK(rebuilt.max_abs_diff(rho) < 1e-10);
        for (int k = 1; k < dim; ++k) CHECK(e.values[k] >= e.values[k - 1]);
        CHECK(e.values[0] >= -1e-12);  // valid states are positive
    }
}

TEST_CASE("fidelity sanity") {
    CHECK(fidelity(proj0(), proj0()) == Catch::Approx(1.0));
    CHECK(fidelity(proj0(), proj1()) == Catch::Approx(0.0).margin(1e-12));
    CHECK(fidelity(proj0(), mixed2()) == Catch::Approx(0.5));
    // pure target: fidelity reduces to the overlap
    std::mt19937_64 rng(17);
    for (int i = 0; i < 20; ++i) {
        const Mat pure = testing::random_pure_state(rng, 4);
        const Mat rho = testing::random_density(rng, 4);
        CHECK(fidelity(pure, rho) == Catch::Approx(expect(pure, rho).real()).margin(1e-9));
    }
}

TEST_CASE("Density validation") {
    set_validation(true);
    Mat bad = proj0();
    bad.at(0, 1) = cx(0, 1e-3);  // non-Hermitian
    CHECK_THROWS_AS(Density{bad}, ValidationError);
    Mat bad_trace = 2.0 * proj0();
    CHECK_THROWS_AS(Density{bad_trace}, ValidationError);
    CHECK_NOTHROW(Density{kron(proj_plus(), mixed2())});
    set_validation(false);
    CHECK_NOTHROW(Density{bad});  // unchecked when validation is off
}
