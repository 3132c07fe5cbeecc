#include <doctest.h>

#include <cmath>

#include "qdcluster/synthesis.hpp"

using namespace qdc;

namespace {

CMatrix random_su2(Rng& rng) {
    const Axis n{rng.normal(), rng.normal(), rng.normal()};
    return rotation_matrix(n, 2.0 * kPi * rng.uniform());
}

CMatrix cz() {
    CMatrix m = CMatrix::Identity(4, 4);
    m(3, 3) = -1.0;
    return m;
}

CMatrix diag4(cplx a, cplx b, cplx c, cplx d) {
    CMatrix m = CMatrix::Zero(4, 4);
    m(0, 0) = a;
    m(1, 1) = b;
    m(2, 2) = c;
    m(3, 3) = d;
    return m;
}

}  // namespace

TEST_CASE("Makhlin invariants") {
    const auto id = local_invariants(CMatrix::Identity(4, 4));
    CHECK(std::abs(id.G1 - cplx(1.0)) < 1e-12);
    CHECK(id.G2 == doctest::Approx(3.0));
    CHECK(same_local_class(local_invariants(cz()), cz_class()));
    Rng rng(1);
    const CMatrix dressed = kron(random_su2(rng), random_su2(rng)) * cz() * kron(random_su2(rng), random_su2(rng));
    CHECK(same_local_class(local_invariants(dressed), cz_class()));
    CHECK_FALSE(same_local_class(local_invariants(swap_matrix()), cz_class()));
}

TEST_CASE("diagonal decomposition recovers its coefficients") {
    const double alpha = 0.3, b1 = -0.2, b2 = 0.45, gamma = 1.1;
    // Z0 on the least-significant bit.
    const double z0[4] = {1, -1, 1, -1};
    const double z1[4] = {1, 1, -1, -1};
    CMatrix u = CMatrix::Zero(4, 4);
    for (int k = 0; k < 4; ++k) {
        u(k, k) = std::polar(1.0, -(alpha * z0[k] * z1[k] + b1 * z0[k] + b2 * z1[k] + gamma));
    }
    const auto d = diagonal_decomposition(u);
    CHECK(d.alpha == doctest::Approx(alpha));
    CHECK(d.beta1 == doctest::Approx(b1));
    CHECK(d.beta2 == doctest::Approx(b2));
    CHECK(d.offdiag < 1e-15);

    // Near the pi/4 wrap the three coefficients must still agree with each other.
    CMatrix w = CMatrix::Zero(4, 4);
    for (int k = 0; k < 4; ++k) {
        w(k, k) = std::polar(1.0, -(0.7855 * z0[k] * z1[k] - 0.3927 * (z0[k] + z1[k])));
    }
    const auto e = diagonal_decomposition(w);
    for (int k = 0; k < 4; ++k) {
        const cplx r = w(k, k) * std::polar(1.0, e.alpha * z0[k] * z1[k] + e.beta1 * z0[k] + e.beta2 * z1[k]);
        CHECK(std::abs(r - w(0, 0) * std::polar(1.0, e.alpha + e.beta1 + e.beta2)) < 1e-12);
    }
}

TEST_CASE("Ising gate from Heisenberg exchange and a Z pulse") {
    const CMatrix u = recipe_unitary(ising_from_heisenberg(0, 1, 2));
    const cplx m = std::polar(1.0, -kPi / 4.0);
    const cplx p = std::polar(1.0, kPi / 4.0);
    // (Z on site 0) exp(-i pi/4 ZZ)
    const CMatrix target = diag4(m, -p, p, -m);
    CHECK(phase_invariant_distance(u, target) < 1e-10);
    CHECK(same_local_class(local_invariants(u), cz_class()));
}

TEST_CASE("exchange pulse of area pi is SWAP") {
    for (double dJ : {0.5, 1.0, 3.0}) {
        const CMatrix u = recipe_unitary(swap_pair(0, 1, dJ, 2));
        CHECK(phase_invariant_distance(u, swap_matrix()) < 1e-10);
    }
    CHECK_THROWS(swap_pair(0, 1, 0.0, 2));
}

TEST_CASE("calibration finds the exchange and Zeeman periods") {
    SUBCASE("swap time is pi / dJ") {
        const double dJ = 0.7;
        auto objective = [&](double t) {
            CouplingModel m(2);
            m.add_edge(0, 1, dJ);
            return phase_invariant_distance(propagator(m, 0.0, t), swap_matrix());
        };
        const auto cal = calibrate(objective, linspace(0.05, 1.9 * kPi / dJ, 31));
        CHECK(cal.parameters[0] == doctest::Approx(kPi / dJ).epsilon(1e-6));
    }
    SUBCASE("Zeeman flip time is pi / (B dg)") {
        const TwoDotParams p{1.0, 1.0, 0.8, 2.0, 1.5};
        const auto reg = LogicalRegister::contiguous(EncodingKind::TwoDot, 1);
        auto objective = [&](double t) {
            CouplingModel m(2);
            m.set_field(p.B_z).set_site(0, {p.g_A, Species::A}).set_site(1, {p.g_B, Species::B});
            GateRecipe r("z", 2);
            r.evolve(m, t);
            return phase_invariant_distance(extract_logical_unitary(r, reg).logical, pauli::Z());
        };
        const auto cal = calibrate(objective, linspace(0.05, 2.0 * kPi / (p.B_z * 0.5) - 0.1, 41));
        CHECK(cal.parameters[0] == doctest::Approx(kPi / (p.B_z * (p.g_A - p.g_B))).epsilon(1e-6));
    }
    SUBCASE("failure carries the trace") {
        try {
            calibrate([](double) { return 1.0; }, linspace(0.0, 1.0, 5));
            FAIL("expected CalibrationError");
        } catch (const CalibrationError& e) {
            CHECK(e.trace().size() == 5);
        }
    }
}

TEST_CASE("two-dot single-LQ rotations") {
    const auto reg = LogicalRegister::contiguous(EncodingKind::TwoDot, 1);
    const TwoDotParams p;
    const auto x = extract_logical_unitary(two_dot_x_rotation(reg, {0}, 0.9, p), reg);
    CHECK(phase_invariant_distance(x.logical, rotation_matrix(Axis::X(), 0.9)) < 1e-9);
    CHECK(x.leakage < 1e-12);
    const auto z = extract_logical_unitary(two_dot_z_rotation(reg, {0}, -0.4, p), reg);
    CHECK(phase_invariant_distance(z.logical, rotation_matrix(Axis::Z(), -0.4)) < 1e-9);

    Rng rng(12);
    for (int trial = 0; trial < 10; ++trial) {
        const Axis n = Axis{rng.normal(), rng.normal(), rng.normal()}.normalized();
        const double angle = 2.0 * kPi * rng.uniform();
        const auto eff = extract_logical_unitary(two_dot_rotation(reg, 0, n, angle, p), reg);
        CHECK(phase_invariant_distance(eff.logical, rotation_matrix(n, angle)) < 1e-8);
    }
}

TEST_CASE("refocused two-dot Ising gate is CZ-class and leakage-free") {
    const TwoDotParams p;
    const auto cal = calibrate_two_dot_ising(p);
    CHECK(cal.effective.leakage < 1e-8);
    CHECK(invariant_distance(cal.invariants, cz_class()) < 1e-6);
    CHECK(cal.theta == doctest::Approx(kPi / (2.0 * p.J_inter)).epsilon(1e-6));

    const auto reg = LogicalRegister::contiguous(EncodingKind::TwoDot, 2);
    double control_leakage = 0.0;
    try {
        control_leakage = extract_logical_unitary(two_dot_ising(4, {1, 2}, 2, cal.theta, false, p), reg).leakage;
    } catch (const LeakageError& e) {
        control_leakage = e.leakage();
    }
    CHECK(control_leakage > 1e-3);
}

TEST_CASE("supercoherent pair generators") {
    const Axis u = sq_pair_axis(0, 1);
    const Axis w = sq_pair_axis(1, 2);
    CHECK(u.z == doctest::Approx(-1.0));
    CHECK(u.dot(w) == doctest::Approx(std::cos(2.0 * kPi / 3.0)));

    const auto reg = LogicalRegister::contiguous(EncodingKind::Supercoherent, 1);
    const double dJ = 0.3, t = 2.1;
    const auto eff = extract_logical_unitary(sq_rotation(reg, 0, {1, 2}, dJ, t), reg);
    CHECK(eff.leakage < 1e-12);
    CHECK(phase_invariant_distance(eff.logical, rotation_matrix(w, dJ * t)) < 1e-9);
    CHECK_THROWS(sq_rotation(reg, 0, {0, 1}, -4.0, 1.0));
}

TEST_CASE("supercoherent logical unitaries from two generators") {
    const auto reg = LogicalRegister::contiguous(EncodingKind::Supercoherent, 2);
    Rng rng(77);
    for (int trial = 0; trial < 6; ++trial) {
        const CMatrix a = random_su2(rng);
        const CMatrix b = random_su2(rng);
        const auto eff = extract_logical_unitary(sq_logical_unitaries(reg, {{0, a}, {1, b}}), reg);
        CHECK(eff.leakage < 1e-10);
        CHECK(phase_invariant_distance(eff.logical, kron(b, a)) < 1e-7);
    }
    // Targets that need the extra w-pi segment.
    const CMatrix flip = rotation_matrix(Axis::X(), kPi);
    const auto one = LogicalRegister::contiguous(EncodingKind::Supercoherent, 1);
    const auto eff = extract_logical_unitary(sq_logical_unitaries(one, {{0, flip}}), one);
    CHECK(phase_invariant_distance(eff.logical, flip) < 1e-7);
}

TEST_CASE("supercoherent dot swap acts as the projected permutation") {
    const auto reg = LogicalRegister::contiguous(EncodingKind::Supercoherent, 1);
    const auto eff = extract_logical_unitary(sq_swap(reg, {0}, {0, 3}, 1.0), reg);
    const CMatrix perm = projected_operator(LocalOperator({0, 3}, swap_matrix(), OperatorKind::Unitary), reg).matrix;
    CHECK(eff.leakage < 1e-12);
    CHECK(phase_invariant_distance(eff.logical, perm) < 1e-9);
}

TEST_CASE("adiabatic inter-SQ coupling is diagonal") {
    const auto s = default_inter_sq_settings();
    const auto res = adiabatic_inter_sq(s);
    CHECK(res.effective.leakage < 1e-6);
    CHECK(res.phases.offdiag < 1e-3);
    CHECK(std::abs(res.phases.beta1 - res.phases.beta2) < 1e-9);

    InterSqSettings single = s;
    single.edges = {{0, 0}};
    const auto one = adiabatic_inter_sq(single);
    CHECK(std::abs(one.phases.alpha) < 1e-9);
}

TEST_CASE("inter-SQ ZZ rate is quadratic in the coupling") {
    std::vector<double> x, y;
    for (double J : {0.04, 0.08, 0.16}) {
        auto s = default_inter_sq_settings();
        s.J_peak = J;
        double rate = 0.0;
        InterSqGate(s).calibrate_cz(&rate);
        x.push_back(std::log(J));
        y.push_back(std::log(std::abs(rate)));
    }
    const double slope = (y[2] - y[0]) / (x[2] - x[0]);
    CHECK(slope == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("calibrated inter-SQ plateau gives a CZ-class gate") {
    auto s = default_inter_sq_settings();
    s.J_peak = 0.16;
    const InterSqGate gate(s);
    const double T = gate.calibrate_cz();
    const auto eff = gate.effective(T);
    CHECK(eff.leakage < 1e-6);
    CHECK(invariant_distance(local_invariants(eff.logical), cz_class()) < 1e-5);
}
