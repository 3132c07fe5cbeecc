#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "qdcluster/cluster.hpp"

using namespace qdc;

TEST_CASE("lattice layouts") {
    const Lattice bare(LatticeKind::TwoSpeciesPlanar, 3, 3);
    CHECK(bare.n_sites() == 9);
    CHECK(bare.adjacency().size() == 12);
    CHECK(bare.neighbors(4) == std::vector<int>{1, 3, 5, 7});
    CHECK(bare.species(0) == Species::A);
    CHECK(bare.species(1) == Species::B);

    const Lattice paired(LatticeKind::PairedDotPlanar, 2, 2);
    CHECK(paired.n_sites() == 8);
    // Odd rows start with the B dot.
    CHECK(paired.logical_register().sites(2) == std::vector<int>{5, 4});
    CHECK(paired.species(4) == Species::B);

    const Lattice sq(LatticeKind::SqPlanar, 2, 2);
    CHECK(sq.n_sites() == 16);
    CHECK(sq.logical_register().sites(3) == std::vector<int>{12, 13, 14, 15});

    CHECK_THROWS(Lattice(LatticeKind::SqPlanar, 1, 5));
    CHECK_THROWS(Lattice(LatticeKind::PairedDotPlanar, 0, 2));
    const auto back = lattice_from_json(lattice_to_json(paired));
    CHECK(back.kind() == paired.kind());
    CHECK(back.rows() == 2);
}

TEST_CASE("schedules are legal and cover every edge once") {
    const Lattice bare(LatticeKind::TwoSpeciesPlanar, 3, 3);
    const auto s = make_schedule(bare);
    CHECK(s.steps.size() == 4);
    std::size_t count = 0;
    for (const auto& step : s.steps) {
        count += step.couplings.size();
    }
    CHECK(count == 12);

    const auto paired = make_schedule(Lattice(LatticeKind::PairedDotPlanar, 2, 2));
    CHECK(paired.steps.size() == 3);
    CHECK(paired.steps[0].couplings.size() + paired.steps[1].couplings.size() + paired.steps[2].couplings.size() ==
          4);

    const auto pair = make_schedule(Lattice(LatticeKind::SqTwoLayer, 1, 2));
    CHECK(pair.steps.size() == 1);
    const auto planar = make_schedule(Lattice(LatticeKind::SqPlanar, 2, 2));
    REQUIRE(planar.steps.size() == 2);
    CHECK(planar.steps[1].conjugating_swaps.size() == 1);

    // Simultaneous couplings overlap on shared sites.
    const auto sim = make_simultaneous_schedule(bare);
    Schedule strict = sim;
    strict.control = false;
    CHECK_THROWS_AS(validate_schedule(bare, strict), ScheduleError);
    CHECK_THROWS_AS(permute_steps(s, {0, 1, 1, 3}), ScheduleError);
    Schedule twice = s;
    twice.steps.push_back(s.steps[0]);
    CHECK_THROWS_AS(validate_schedule(bare, twice), ScheduleError);
}

TEST_CASE("stabilizer oracles on ideal states") {
    const Lattice l(LatticeKind::TwoSpeciesPlanar, 2, 2);
    const CVector c = ideal_cluster(l);
    const auto ok = verify_stabilizers(c, l);
    CHECK(ok.all_pass());
    CHECK(ok.min_expectation() == doctest::Approx(1.0));

    // A Z error on LQ 1 anticommutes with K_1 only.
    CVector flipped = c;
    for (Eigen::Index x = 0; x < c.size(); ++x) {
        if (x & 2) {
            flipped[x] = -flipped[x];
        }
    }
    const auto rep = verify_stabilizers(flipped, l);
    CHECK(rep.expectation[1] == doctest::Approx(-1.0));
    CHECK(rep.expectation[0] == doctest::Approx(1.0));
    CHECK(rep.expectation[3] == doctest::Approx(1.0));

    // |+...+> without entanglement: every K_a averages to zero.
    const CVector plus = CVector::Constant(16, 0.25);
    for (double e : verify_stabilizers(plus, l).expectation) {
        CHECK(std::abs(e) < 1e-14);
    }
    CHECK(stabilizer_csv(ok).rfind("lq_index,expectation,pass\n0,", 0) == 0);
}

TEST_CASE("bare clusters from the staged schedule") {
    for (auto [r, c] : {std::pair{1, 2}, std::pair{2, 2}, std::pair{3, 3}}) {
        CAPTURE(r);
        CAPTURE(c);
        const Lattice l(LatticeKind::TwoSpeciesPlanar, r, c);
        const auto b = build_cluster(l, make_schedule(l));
        const auto rep = verify_stabilizers(b.state, l, 1.0 - 1e-9);
        CHECK(rep.all_pass());
        const CVector ideal = ideal_cluster(l);
        CHECK(std::norm(ideal.dot(logical_overlaps(b.state, l.logical_register()))) ==
              doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("simultaneous couplings fail and step order does not matter") {
    const Lattice l(LatticeKind::TwoSpeciesPlanar, 2, 2);
    const auto sim = build_cluster(l, make_simultaneous_schedule(l));
    CHECK(verify_stabilizers(sim.state, l).min_expectation() < 0.99);

    const auto s = make_schedule(l);
    const auto ref = verify_stabilizers(build_cluster(l, s).state, l);
    const auto perm = verify_stabilizers(build_cluster(l, permute_steps(s, {3, 1, 0, 2})).state, l);
    for (std::size_t q = 0; q < ref.expectation.size(); ++q) {
        CHECK(std::abs(ref.expectation[q] - perm.expectation[q]) < 1e-10);
    }
}

TEST_CASE("cluster with a logical input state") {
    const Lattice l(LatticeKind::TwoSpeciesPlanar, 1, 3);
    CVector in(2);
    in << 0.6, cplx(0.0, 0.8);
    BuildOptions o;
    o.inputs[0] = in;
    const auto b = build_cluster(l, make_schedule(l), o);
    const CVector ideal = ideal_cluster(l, o.inputs);
    CHECK(std::norm(ideal.dot(logical_overlaps(b.state, l.logical_register()))) ==
          doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("paired-dot cluster with refocusing") {
    const Lattice l(LatticeKind::PairedDotPlanar, 2, 2);
    const auto b = build_cluster(l, make_schedule(l));
    const auto rep = verify_stabilizers(b.state, l, 1.0 - 1e-6);
    CHECK(rep.all_pass());
    CHECK(b.leakage < 1e-6);

    BuildOptions bad;
    bad.refocus = false;
    const auto ctl = build_cluster(l, make_schedule(l), bad);
    CHECK(ctl.leakage > 1e-3);
}

TEST_CASE("supercoherent pair cluster") {
    const Lattice l(LatticeKind::SqTwoLayer, 1, 2);
    const auto b = build_cluster(l, make_schedule(l));
    CHECK(b.leakage < 1e-4);
    CHECK(verify_stabilizers(b.state, l, 1.0 - 1e-4).all_pass());
}
