#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "qdcluster/encodings.hpp"
#include "qdcluster/model.hpp"

using namespace qdc;

namespace {

const CMatrix& pauli_of(int axis) {
    static const CMatrix p[3] = {pauli::X(), pauli::Y(), pauli::Z()};
    return p[axis];
}

}  // namespace

TEST_CASE("every encoding has an orthonormal basis and Pauli algebra") {
    for (auto kind : {EncodingKind::Bare, EncodingKind::TwoDot, EncodingKind::Supercoherent}) {
        const auto& enc = Encoding::get(kind);
        CAPTURE(enc.name());
        const CMatrix b = enc.basis();
        CHECK((b.adjoint() * b - CMatrix::Identity(2, 2)).norm() < 1e-14);
        CHECK((enc.X_L * enc.Y_L - kI * enc.Z_L).norm() < 1e-14);
        CHECK((enc.Z_L * enc.X_L - kI * enc.Y_L).norm() < 1e-14);
        CHECK((enc.X_L * enc.X_L - enc.projector).norm() < 1e-14);
        CHECK(encoding_from_string(enc.name()) == kind);
    }
}

TEST_CASE("supercoherent code lies in the K4 ground space") {
    CouplingModel m(4);
    for (int a = 0; a < 4; ++a) {
        for (int b = a + 1; b < 4; ++b) {
            m.add_edge(a, b, 4.0);
        }
    }
    const CMatrix g = ground_space(m, 0.0);
    REQUIRE(g.cols() == 2);
    const auto& enc = Encoding::get(EncodingKind::Supercoherent);
    CHECK((g * g.adjoint() - enc.projector).norm() < 1e-10);
}

TEST_CASE("projected pair exchange and the 120 degree axis") {
    const auto reg = LogicalRegister::contiguous(EncodingKind::Supercoherent, 1);
    const auto p12 = projected_operator(sigma_dot_op(0, 1), reg);
    CMatrix expected = CMatrix::Zero(2, 2);
    expected(0, 0) = -3.0;
    expected(1, 1) = 1.0;
    CHECK((p12.matrix - expected).norm() < 1e-12);

    // P s2.s3 P = -I - 2 m.sigma with m at 120 degrees from z in the x-z plane.
    const auto p23 = projected_operator(sigma_dot_op(1, 2), reg);
    const Axis m = Axis::xz(2.0 * kPi / 3.0);
    const CMatrix target = -CMatrix::Identity(2, 2) - 2.0 * (m.x * pauli::X() + m.z * pauli::Z());
    CHECK((p23.matrix - target).norm() < 1e-12);

    // Single-site Paulis vanish on the code space.
    for (int site = 0; site < 4; ++site) {
        for (int axis = 0; axis < 3; ++axis) {
            const auto p = projected_operator(LocalOperator({site}, pauli_of(axis), OperatorKind::Hermitian), reg);
            CHECK(p.matrix.norm() < 1e-14);
        }
    }
}

TEST_CASE("two-dot projections") {
    const auto reg = LogicalRegister::contiguous(EncodingKind::TwoDot, 1);
    const auto za = projected_operator(pauli_op(0, 2), reg);
    const auto zb = projected_operator(pauli_op(1, 2), reg);
    CHECK((za.matrix - pauli::Z()).norm() < 1e-14);
    CHECK((zb.matrix + pauli::Z()).norm() < 1e-14);
    CHECK(projected_operator(pauli_op(0, 0), reg).matrix.norm() < 1e-14);
}

TEST_CASE("collective rotations leave the supercoherent code invariant") {
    const auto reg = LogicalRegister::contiguous(EncodingKind::Supercoherent, 1);
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        CVector l(2);
        l << cplx(rng.normal(), rng.normal()), cplx(rng.normal(), rng.normal());
        l /= l.norm();
        auto psi = encode(reg, l);
        const Axis axis{rng.normal(), rng.normal(), rng.normal()};
        const double angle = 2.0 * kPi * rng.uniform();
        for (int s = 0; s < 4; ++s) {
            psi = apply_unitary(psi, rotation_op(s, axis, angle));
        }
        const auto proj = project_logical(psi, reg);
        CHECK(proj.leakage < 1e-12);
        CHECK(std::norm(proj.amplitudes.dot(l)) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("local flips leak out of the supercoherent code") {
    const auto reg = LogicalRegister::contiguous(EncodingKind::Supercoherent, 1);
    for (int bit = 0; bit < 2; ++bit) {
        const auto psi = apply_unitary(encode(reg, std::vector<int>{bit}), LocalOperator({2}, pauli::X(), OperatorKind::Unitary));
        CHECK(std::norm(logical_overlaps(psi, reg).norm()) < 1e-24);
        CHECK_THROWS_AS(project_logical(psi, reg), LeakageError);
    }
}

TEST_CASE("logical encoding and reduced density") {
    const auto reg = LogicalRegister::contiguous(EncodingKind::TwoDot, 3);
    const auto psi = encode(reg, std::vector<int>{1, 0, 1});
    const CVector l = logical_overlaps(psi, reg);
    CHECK(std::abs(l[0b101] - cplx(1.0)) < 1e-14);
    const CMatrix rho = reduced_logical_density(l, 3, 1);
    CHECK(rho(0, 0).real() == doctest::Approx(1.0));
    CHECK(expectation(psi, logical_pauli(reg, 0, 2)) == doctest::Approx(-1.0));
    CHECK(expectation(psi, logical_pauli(reg, 1, 2)) == doctest::Approx(1.0));
}

TEST_CASE("register validation and JSON") {
    CHECK_THROWS(LogicalRegister(EncodingKind::TwoDot, {{0, 1}, {1, 2}}));
    CHECK_THROWS(LogicalRegister(EncodingKind::TwoDot, {{0, 1}, {3, 4}}));
    CHECK_THROWS(LogicalRegister(EncodingKind::Supercoherent, {{0, 1, 2}}));
    CHECK_THROWS(LogicalRegister::contiguous(EncodingKind::Supercoherent, 6));
    const LogicalRegister reg(EncodingKind::TwoDot, {{2, 3}, {1, 0}});
    CHECK(reg.owner(1) == 1);
    const auto back = register_from_json(register_to_json(reg));
    CHECK(back.site_map() == reg.site_map());
    CHECK(back.kind() == reg.kind());
}
