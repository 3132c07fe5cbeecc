#include <doctest.h>

#include <cmath>

#include "qdcluster/statevec.hpp"

using namespace qdc;

namespace {

QuantumState singlet() {
    CVector v = CVector::Zero(4);
    v[1] = 1.0 / std::sqrt(2.0);
    v[2] = -1.0 / std::sqrt(2.0);
    return QuantumState(2, v);
}

QuantumState random_state(int n, Rng& rng) {
    CVector v(static_cast<Eigen::Index>(dim_of(n)));
    for (auto& a : v) {
        a = cplx(rng.normal(), rng.normal());
    }
    return QuantumState(n, v / v.norm());
}

}  // namespace

TEST_CASE("identity and bit flip") {
    Rng rng(3);
    const auto psi = random_state(3, rng);
    const LocalOperator id({1}, pauli::I(), OperatorKind::Unitary);
    CHECK((apply_unitary(psi, id).amplitudes() - psi.amplitudes()).norm() < 1e-15);

    const auto flipped = apply_unitary(QuantumState(1), LocalOperator({0}, pauli::X(), OperatorKind::Unitary));
    CHECK(std::abs(flipped[1] - cplx(1.0)) < 1e-15);
}

TEST_CASE("singlet picks up exp(+3i pi/8) under exp(-i pi/8 sigma.sigma)") {
    const CMatrix h = sigma_dot_matrix();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    CVector ph(4);
    for (int k = 0; k < 4; ++k) {
        ph[k] = std::polar(1.0, -kPi / 8.0 * es.eigenvalues()[k]);
    }
    const CMatrix u = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
    const auto out = apply_unitary(singlet(), LocalOperator({0, 1}, u, OperatorKind::Unitary));
    const cplx expected = std::polar(1.0, 3.0 * kPi / 8.0);
    CHECK((out.amplitudes() - expected * singlet().amplitudes()).norm() < 1e-12);
}

TEST_CASE("expectation oracles") {
    CHECK(expectation(QuantumState(1), pauli_op(0, 2)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(expectation(QuantumState::plus(1), pauli_op(0, 0)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(expectation(singlet(), sigma_dot_op(0, 1)) == doctest::Approx(-3.0).epsilon(1e-15));
    CHECK_THROWS(LocalOperator({0}, CMatrix::Ones(2, 2) * kI, OperatorKind::Hermitian));
}

TEST_CASE("operator validation") {
    CHECK_THROWS_AS(LocalOperator({0, 0}, CMatrix::Identity(4, 4), OperatorKind::Unitary), std::invalid_argument);
    CHECK_THROWS(LocalOperator({0}, CMatrix::Identity(4, 4), OperatorKind::Unitary));
    CHECK_THROWS(LocalOperator({0}, 2.0 * pauli::X(), OperatorKind::Unitary));
    CHECK_THROWS(apply_unitary(QuantumState(2), LocalOperator({5}, pauli::X(), OperatorKind::Unitary)));
}

TEST_CASE("norm preservation and disjoint commutation") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto psi = random_state(5, rng);
        const auto a = rotation_op(1, Axis{rng.normal(), rng.normal(), rng.normal()}, rng.normal());
        const LocalOperator b({3, 0}, kron(rotation_matrix(Axis::X(), 0.3), rotation_matrix(Axis::Y(), 1.1)),
                              OperatorKind::Unitary);
        const auto ab = apply_unitary(apply_unitary(psi, a), b);
        const auto ba = apply_unitary(apply_unitary(psi, b), a);
        CHECK(std::abs(ab.norm() - 1.0) < 1e-12);
        CHECK((ab.amplitudes() - ba.amplitudes()).norm() < 1e-12);
    }
}

TEST_CASE("support order follows local bit order") {
    // Operator on (2, 0) with X on local bit 0 flips site 2.
    const LocalOperator op({2, 0}, kron(pauli::I(), pauli::X()), OperatorKind::Unitary);
    const auto out = apply_unitary(QuantumState(3), op);
    CHECK(std::abs(out[4] - cplx(1.0)) < 1e-15);
}

TEST_CASE("measurement outcomes and Born probabilities") {
    const auto [rec, post] = measure(singlet(), SingletTripletBasis{0, 1}, 7);
    CHECK(rec.outcome == 0);
    CHECK(rec.probability == doctest::Approx(1.0).epsilon(1e-12));

    CHECK(probability_zero(QuantumState::plus(1), ZBasis{0}) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK_THROWS_AS(measure_forced(QuantumState(1), ZBasis{0}, 1), std::domain_error);

    // Binomial statistics within 3 sigma.
    Rng rng(2024);
    Rng srng(5);
    const auto psi = random_state(2, srng);
    const double p0 = probability_zero(psi, XYBasis{1, 0.7});
    const int shots = 20000;
    int zeros = 0;
    for (int k = 0; k < shots; ++k) {
        zeros += measure(psi, XYBasis{1, 0.7}, rng).first.outcome == 0;
    }
    const double sigma = std::sqrt(p0 * (1.0 - p0) / shots);
    CHECK(std::abs(zeros / double(shots) - p0) < 3.0 * sigma);
}

TEST_CASE("xy measurement equals pre-rotation about phi - 90 degrees then z") {
    Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const auto psi = random_state(3, rng);
        const double phi = 2.0 * kPi * rng.uniform();
        const int site = trial % 3;
        const auto rot = rotation_op(site, xy_prerotation_axis(phi), kPi / 2.0);
        const auto rotated = apply_unitary(psi, rot);
        CHECK(std::abs(probability_zero(psi, XYBasis{site, phi}) - probability_zero(rotated, ZBasis{site})) < 1e-10);
        for (int outcome = 0; outcome < 2; ++outcome) {
            const double p = outcome == 0 ? probability_zero(psi, XYBasis{site, phi})
                                          : 1.0 - probability_zero(psi, XYBasis{site, phi});
            if (p < 1e-6) {
                continue;
            }
            const auto direct = measure_forced(psi, XYBasis{site, phi}, outcome).second;
            const auto via_z = apply_unitary(measure_forced(rotated, ZBasis{site}, outcome).second, rot.adjoint());
            CHECK(direct.fidelity(via_z) == doctest::Approx(1.0).epsilon(1e-10));
        }
    }
}

TEST_CASE("outcome 0 of an xy measurement is the +phi eigenstate") {
    const double phi = 0.4;
    CVector v(2);
    v << 1.0 / std::sqrt(2.0), std::polar(1.0 / std::sqrt(2.0), phi);
    CHECK(probability_zero(QuantumState(1, v), XYBasis{0, phi}) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("seeded measurement is reproducible") {
    Rng srng(1);
    const auto psi = random_state(4, srng);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto a = measure(psi, ZBasis{2}, seed);
        const auto b = measure(psi, ZBasis{2}, seed);
        CHECK(a.first.outcome == b.first.outcome);
        CHECK(a.second.amplitudes() == b.second.amplitudes());
    }
}
