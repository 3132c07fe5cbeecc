#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "qdcluster/encodings.hpp"
#include "qdcluster/linalg.hpp"
#include "qdcluster/model.hpp"

using namespace qdc;

namespace {

CouplingModel k4(double J) {
    CouplingModel m(4);
    for (int a = 0; a < 4; ++a) {
        for (int b = a + 1; b < 4; ++b) {
            m.add_edge(a, b, J);
        }
    }
    return m;
}

QuantumState random_state(int n, std::uint64_t seed) {
    Rng rng(seed);
    CVector v(static_cast<Eigen::Index>(dim_of(n)));
    for (auto& a : v) {
        a = cplx(rng.normal(), rng.normal());
    }
    return QuantumState(n, v / v.norm());
}

}  // namespace

TEST_CASE("two-site J = 1 spectrum is {-3/4, 1/4 x3}") {
    CouplingModel m(2);
    m.add_edge(0, 1, 1.0);
    const auto levels = spectrum(m, 0.0, 2);
    REQUIRE(levels.size() == 2);
    CHECK(levels[0].energy == doctest::Approx(-0.75).epsilon(1e-14));
    CHECK(levels[0].degeneracy == 1);
    CHECK(levels[1].energy == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(levels[1].degeneracy == 3);
}

TEST_CASE("K4 spectrum in the sum sigma.sigma normalization") {
    const auto levels = spectrum(k4(4.0), 0.0, 3);
    REQUIRE(levels.size() == 3);
    CHECK(levels[0].energy == doctest::Approx(-6.0));
    CHECK(levels[0].degeneracy == 2);
    CHECK(levels[1].energy == doctest::Approx(-2.0));
    CHECK(levels[1].degeneracy == 9);
    CHECK(levels[2].energy == doctest::Approx(6.0));
    CHECK(levels[2].degeneracy == 5);
    CHECK_THROWS(spectrum(k4(4.0), 0.0, 17));
}

TEST_CASE("K4 gap is linear in J") {
    for (double J : {0.5, 1.0, 2.0}) {
        const auto levels = spectrum(k4(4.0 * J), 0.0, 2);
        CHECK(levels[1].energy - levels[0].energy == doctest::Approx(4.0 * J).epsilon(1e-12));
    }
}

TEST_CASE("raising J_12 splits the doublet by 4 eps and selects |0_L>") {
    const double eps = 0.01;
    auto m = k4(4.0);
    m.mutable_edges()[*m.find_edge(0, 1)].J = 4.0 * (1.0 + eps);
    const auto levels = spectrum(m, 0.0, 2);
    CHECK(levels[0].degeneracy == 1);
    CHECK(levels[1].energy - levels[0].energy == doctest::Approx(4.0 * eps).epsilon(1e-2));
    const CMatrix g = ground_space(m, 0.0);
    REQUIRE(g.cols() == 1);
    const auto& enc = Encoding::get(EncodingKind::Supercoherent);
    CHECK(std::norm(enc.zero.dot(g.col(0))) > 1.0 - 1e-9);
}

TEST_CASE("Zeeman-only model is diagonal") {
    CouplingModel m(3);
    m.set_field(1.0);
    for (int s = 0; s < 3; ++s) {
        m.set_site(s, {2.0, Species::A});
    }
    const CMatrix h = hamiltonian_at(m, 0.0).dense();
    CHECK((h - CMatrix(h.diagonal().asDiagonal())).norm() < 1e-15);
    CHECK(h(0, 0).real() == doctest::Approx(3.0));

    CouplingModel one(1);
    one.set_field(1.0).set_site(0, {2.0, Species::None});
    const auto levels = spectrum(one, 0.0, 2);
    CHECK(levels[0].energy == doctest::Approx(-1.0));
    CHECK(levels[1].energy == doctest::Approx(1.0));
}

TEST_CASE("evolution oracles") {
    SUBCASE("J = 0 is the identity") {
        CouplingModel m(3);
        m.add_edge(0, 1, 0.0);
        const auto psi = random_state(3, 4);
        CHECK(evolve(psi, m, 0.0, 12.3).fidelity(psi) == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("J = 1 for t = pi is SWAP with phase exp(-i pi/4)") {
        CouplingModel m(2);
        m.add_edge(0, 1, 1.0);
        const CMatrix u = propagator(m, 0.0, kPi);
        const CMatrix target = std::polar(1.0, -kPi / 4.0) * swap_matrix();
        CHECK((u - target).norm() < 1e-10);
    }
    SUBCASE("Zeeman g = 2, B = 1, t = pi/2 maps |+> to |->") {
        CouplingModel m(1);
        m.set_field(1.0).set_site(0, {2.0, Species::None});
        const auto out = evolve(QuantumState::plus(1), m, 0.0, kPi / 2.0);
        CVector minus(2);
        minus << 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0);
        CHECK(out.fidelity(QuantumState(1, minus)) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("energy conservation and step halving for constant H") {
    CouplingModel m(6);
    for (int s = 0; s + 1 < 6; ++s) {
        m.add_edge(s, s + 1, 0.7 + 0.1 * s);
    }
    m.add_edge(0, 5, 0.3);
    m.set_field(0.8);
    m.set_site(2, {1.5, Species::A});
    const auto psi = random_state(6, 8);
    const auto h = hamiltonian_at(m, 0.0);
    const auto out = evolve(psi, m, 0.0, 3.7);
    CHECK(std::abs(h.expectation(out) - h.expectation(psi)) < 1e-9);
    const auto two = evolve(evolve(psi, m, 0.0, 1.85), m, 0.0, 1.85);
    CHECK((two.amplitudes() - out.amplitudes()).norm() < 1e-10);
}

TEST_CASE("dense and Krylov paths agree, with and without ramps") {
    CouplingModel m(6);
    RampProfile r;
    r.duration = 1.5;
    r.plateau = 0.5;
    m.add_schedule("ramp", r);
    for (int s = 0; s + 1 < 6; ++s) {
        m.add_edge(s, s + 1, 1.0 + 0.2 * s, s % 2 ? "ramp" : "");
    }
    m.set_field(0.5);
    m.set_site(1, {2.0, Species::A});
    const auto psi = random_state(6, 21);
    EvolveOptions dense;
    EvolveOptions krylov;
    krylov.dense_limit = 2;
    const auto a = evolve(psi, m, 0.0, r.end(), dense);
    const auto b = evolve(psi, m, 0.0, r.end(), krylov);
    CHECK((a.amplitudes() - b.amplitudes()).norm() < 1e-8);
    CHECK(std::abs(a.norm() - 1.0) < 1e-12);
}

TEST_CASE("ramped evolution converges with tolerance") {
    CouplingModel m(3);
    RampProfile r;
    r.duration = 2.0;
    r.peak = 1.0;
    m.add_schedule("s", r);
    m.add_edge(0, 1, 1.0, "s");
    m.add_edge(1, 2, 0.5);
    m.set_field(0.3);
    m.set_site(0, {1.0, Species::None});
    const auto psi = random_state(3, 17);
    EvolveOptions loose;
    loose.tolerance = 1e-6;
    EvolveOptions tight;
    tight.tolerance = 1e-12;
    const auto a = evolve(psi, m, 0.0, r.end(), loose);
    const auto b = evolve(psi, m, 0.0, r.end(), tight);
    CHECK((a.amplitudes() - b.amplitudes()).norm() < 1e-5);
}

TEST_CASE("time outside the schedule horizon is rejected") {
    CouplingModel m(2);
    RampProfile r;
    r.duration = 1.0;
    m.add_schedule("s", r);
    m.add_edge(0, 1, 1.0, "s");
    CHECK_THROWS_AS(hamiltonian_at(m, 3.0), std::out_of_range);
    CHECK_THROWS_AS(hamiltonian_at(m, -0.1), std::out_of_range);
    CHECK_NOTHROW(hamiltonian_at(m, 2.0));
}

TEST_CASE("model validation") {
    CouplingModel m(3);
    CHECK_THROWS(m.add_edge(1, 1, 1.0));
    m.add_edge(0, 1, 1.0);
    CHECK_THROWS(m.add_edge(1, 0, 2.0));
    CHECK_THROWS(m.add_edge(0, 2, std::nan("")));
    CHECK_THROWS(m.add_edge(0, 3, 1.0));
    RampProfile bad;
    bad.duration = 0.0;
    CHECK_THROWS(m.add_schedule("x", bad));
}

TEST_CASE("smoothstep has zero slope at its ends") {
    RampProfile r;
    r.duration = 2.0;
    r.plateau = 1.0;
    const double h = 1e-6;
    CHECK(std::abs(r.value(h) - r.value(0.0)) / h < 1e-5);
    CHECK(std::abs(r.value(2.0) - r.value(2.0 - h)) / h < 1e-5);
    CHECK(r.value(2.5) == doctest::Approx(1.0));
    CHECK(r.value(r.end()) == doctest::Approx(0.0));
}

TEST_CASE("JSON round trip and field-naming errors") {
    CouplingModel m(3);
    RampProfile r;
    r.duration = 3.0;
    m.add_schedule("ramp", r);
    m.add_edge(0, 1, 1.25, "ramp");
    m.add_edge(1, 2, -0.5);
    m.set_field(0.75);
    m.set_site(2, {1.9, Species::B});
    const auto j = model_to_json(m);
    const auto back = model_from_json(j);
    CHECK(model_to_json(back) == j);

    auto broken = j;
    broken["edges"][1].erase("J");
    try {
        model_from_json(broken);
        FAIL("expected an error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("edges[1].J") != std::string::npos);
    }
}

TEST_CASE("spin-multiplet propagation matches Krylov for field-free and uniform-field ramps") {
    for (double field : {0.0, 0.6}) {
        CouplingModel m(7);
        RampProfile r;
        r.duration = 2.0;
        r.plateau = 0.3;
        m.add_schedule("ramp", r);
        for (int s = 0; s + 1 < 7; ++s) {
            m.add_edge(s, s + 1, 0.5 + 0.3 * s, s % 3 == 0 ? "ramp" : "");
        }
        m.add_edge(0, 4, 0.9, "ramp");
        if (field != 0.0) {
            m.set_field(field);
            for (int s = 0; s < 7; ++s) {
                m.set_site(s, {2.0, Species::None});
            }
        }
        const auto psi = random_state(7, 33);
        EvolveOptions krylov;
        krylov.dense_limit = 2;
        const auto a = evolve(psi, m, 0.0, r.end());
        const auto b = evolve(psi, m, 0.0, r.end(), krylov);
        CHECK((a.amplitudes() - b.amplitudes()).norm() < 1e-8);
        const CMatrix u = propagator(m, 0.0, r.end());
        CHECK((u.adjoint() * u - CMatrix::Identity(128, 128)).norm() < 1e-10);
    }
}
