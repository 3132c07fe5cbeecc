#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "qdcluster/errorlab.hpp"

using namespace qdc;

TEST_CASE("error models perturb copies") {
    const auto reg = LogicalRegister::contiguous(EncodingKind::Supercoherent, 1);
    const auto idle = sq_idle_model(reg);

    const auto same = apply_error_model(idle, {ErrorKind::IntraMismatch, 0.0, {{0, 1}}, 0.0});
    CHECK(model_to_json(same.model) == model_to_json(idle));
    CHECK(same.warnings.empty());

    const auto mis = apply_error_model(idle, {ErrorKind::IntraMismatch, 0.01, {{0, 1}}, 0.0});
    CHECK(mis.model.edges()[*mis.model.find_edge(0, 1)].J == doctest::Approx(4.04));
    CHECK(idle.edges()[*idle.find_edge(0, 1)].J == doctest::Approx(4.0));

    // Pushing one coupling far negative collapses the K4 gap.
    const auto bad = apply_error_model(idle, {ErrorKind::IntraMismatch, -1.8, {{0, 1}}, 0.0});
    CHECK(bad.warnings.size() == 1);

    CHECK_THROWS(apply_error_model(idle, {ErrorKind::IntraMismatch, NAN, {{0, 1}}, 0.0}));
    CHECK_THROWS(apply_error_model(idle, {ErrorKind::IntraMismatch, 0.1, {{0, 7}}, 0.0}));

    CouplingModel pair(4);
    pair.add_edge(0, 1, 1.0).add_edge(2, 3, 1.0);
    const auto res = apply_error_model(pair, {ErrorKind::ResidualInter, 0.01, {{1, 2}}, 0.0});
    CHECK(res.model.edges().back().J == doctest::Approx(0.01));

    CouplingModel inter(4);
    inter.add_edge(0, 2, 1.0).add_edge(1, 3, 1.0);
    const auto imb = apply_error_model(inter, {ErrorKind::InterSqImbalance, 0.2, {{0, 2}, {1, 3}}, 0.0});
    CHECK(imb.model.edges()[0].J == doctest::Approx(1.1));
    CHECK(imb.model.edges()[1].J == doctest::Approx(0.9));
    const auto single = apply_error_model(inter, {ErrorKind::SingleInterSqEdge, 0.0, {{0, 2}, {1, 3}}, 0.0});
    CHECK(single.model.edges().size() == 1);

    const ErrorSpec spec{ErrorKind::InterSqImbalance, 0.3, {{0, 4}, {1, 5}}, 0.0};
    const auto back = error_spec_from_json(error_spec_to_json(spec));
    CHECK(back.kind == spec.kind);
    CHECK(back.targets == spec.targets);
    CHECK_THROWS(error_spec_from_json(nlohmann::json{{"kind", "gremlins"}}));
}

TEST_CASE("mismatch drift follows the projected generator") {
    const auto one = measure_drift(0.01, 3.0);
    CHECK(one.rate == doctest::Approx(-0.02).epsilon(1e-8));
    CHECK(one.leakage < 1e-12);
    const auto fit = drift_linearity({0.01, 0.02, 0.03, 0.04, 0.05}, 1.0);
    CHECK(fit.relative_error < 0.01);
    CHECK(fit.fit.r2 > 0.999999);
}

TEST_CASE("line fits") {
    const auto f = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.r2 == doctest::Approx(1.0));
    const auto flat = fit_line({0, 1, 2}, {0.5, 0.5, 0.5});
    CHECK(flat.degenerate);
    CHECK(flat.r2 == 0.0);
    CHECK_THROWS(fit_line({1, 1}, {0, 1}));
}

TEST_CASE("logical pi pulses refocus the mismatch drift") {
    const auto r = refocus_check(0.02, 10.0, {0, 1}, Axis::X());
    CHECK(r.unrefocused > 1e-2);
    CHECK(r.refocused < 1e-8);
    const auto zero = refocus_check(0.0, 10.0, {0, 1}, Axis::X());
    CHECK(zero.unrefocused < 1e-14);
    CHECK(zero.refocused < 1e-14);
    for (double d : {0.005, 0.01, 0.02}) {
        const auto s = refocus_check(d, 10.0, {0, 1}, Axis::X());
        CHECK(s.refocused <= 10.0 * s.unrefocused * s.unrefocused);
    }
}

TEST_CASE("the 120 degree drift needs a perpendicular pulse axis") {
    // Mismatch on dots 2, 3 drifts about m = xz(120 deg).
    const auto x = refocus_check(0.02, 10.0, {1, 2}, Axis::X());
    const auto z = refocus_check(0.02, 10.0, {1, 2}, Axis::Z());
    const auto y = refocus_check(0.02, 10.0, {1, 2}, Axis::Y());
    const auto perp = refocus_check(0.02, 10.0, {1, 2}, Axis::xz(2.0 * kPi / 3.0 + kPi / 2.0));
    const auto along = refocus_check(0.02, 10.0, {1, 2}, Axis::xz(2.0 * kPi / 3.0));
    CHECK(x.refocused > 1e-3);
    CHECK(z.refocused > 1e-3);
    CHECK(y.refocused < 1e-12);
    CHECK(perp.refocused < 1e-12);
    CHECK(along.refocused == doctest::Approx(along.unrefocused).epsilon(1e-6));
}

TEST_CASE("residual bare coupling costs fidelity quadratically") {
    const auto reg = LogicalRegister::contiguous(EncodingKind::Bare, 2);
    auto infid = [&](double eps) {
        CouplingModel m(2);
        return idle_infidelity(apply_error_model(m, {ErrorKind::ResidualInter, eps, {{0, 1}}, 1.0}).model, reg, 1.0);
    };
    const double a = infid(1e-3), b = infid(2e-3);
    CHECK(a > 0.0);
    CHECK(b / a == doctest::Approx(4.0).epsilon(1e-3));
}

TEST_CASE("single inter-SQ edge does nothing adiabatically") {
    const auto s = default_inter_sq_settings();
    const auto zero = single_edge_probe(s, 0.0, s.ramp);
    CHECK(zero.infidelity < 1e-14);

    double last = 1.0;
    for (double d : {5.0, 10.0, 20.0}) {
        RampProfile r = s.ramp;
        r.duration = d;
        const auto c = single_edge_contrast(s, s.J_peak, r);
        CHECK(c.adiabatic.infidelity < 1e-6);
        CHECK(c.adiabatic.infidelity < last);
        CHECK(c.diabatic.infidelity > 1e-6);
        last = c.adiabatic.infidelity;
    }
}

TEST_CASE("imbalance sweep stays diagonal") {
    const auto s = default_inter_sq_settings();
    const auto sweep = imbalance_sweep(s, {-0.1, 0.0, 0.1});
    REQUIRE(sweep.points.size() == 3);
    CHECK(sweep.excluded == 0);
    CHECK(sweep.max_offdiag < 1e-6);
    CHECK(std::abs(sweep.points[1].beta1 - sweep.points[1].beta2) < 1e-8);
    // alpha is even in the imbalance.
    CHECK(sweep.points[0].alpha == doctest::Approx(sweep.points[2].alpha).epsilon(1e-8));
    CHECK(sweep_csv(sweep).rfind("parameter,alpha,beta1,beta2,offdiag_residual,leakage\n", 0) == 0);

    // A point driven too fast is flagged and left out.
    InterSqSettings fast = s;
    fast.ramp.shape = RampShape::Constant;
    const auto flagged = imbalance_sweep(fast, {0.0, 0.1});
    CHECK(flagged.excluded == 2);
    CHECK_FALSE(flagged.points[0].adiabatic);
}
