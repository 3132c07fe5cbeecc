// End-to-end acceptance run: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <nlohmann/json.hpp>

#include "qdcluster/cluster.hpp"
#include "qdcluster/errorlab.hpp"
#include "qdcluster/scenario.hpp"

using namespace qdc;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void need(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
        }
        detail << (ok ? "" : "!") << what << "; ";
    }
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

json experiment(const json& raw, const std::vector<std::string>& overrides = {}) {
    return run_experiment(resolve_scenario(raw, overrides)).summary;
}

// Value of a named check in an experiment summary.
const json& check(const json& summary, const std::string& name) {
    for (const auto& c : summary.at("checks")) {
        if (c.at("name") == name) {
            return c;
        }
    }
    throw std::runtime_error("no check named " + name);
}

double min_stabilizer(const ClusterBuild& b, const Lattice& l) {
    return verify_stabilizers(b.state, l).min_expectation();
}

void criterion1(Outcome& o) {
    const auto s = experiment({{"name", "c1"}, {"experiment", "verify-gate"}});
    const double dev = check(s, "operator_norm_deviation").at("value");
    o.need(dev < 1e-12, "deviation " + num(dev) + " < 1e-12");
}

void criterion2(Outcome& o) {
    const auto s = experiment({{"name", "c2"}, {"experiment", "spectrum"}});
    for (const auto& r : s.at("results")) {
        const double J = r.at("J");
        const int deg = r.at("ground_degeneracy");
        const double gap = r.at("gap");
        const double fid = r.at("subspace_fidelity");
        o.need(deg == 2 && std::abs(gap - 4.0 * J) < 1e-10 * J && fid > 1.0 - 1e-10,
               "J=" + num(J) + " deg " + std::to_string(deg) + " gap " + num(gap) + " fid-1 " + num(fid - 1.0));
    }
}

void criterion3(Outcome& o) {
    const auto reg = LogicalRegister::contiguous(EncodingKind::Supercoherent, 1);
    double worst = 0.0;
    for (int site = 0; site < 4; ++site) {
        for (int axis = 0; axis < 3; ++axis) {
            const auto p = projected_operator(LocalOperator({site}, pauli::by_index(axis), OperatorKind::Hermitian), reg);
            worst = std::max(worst, operator_norm(p.matrix));
        }
    }
    o.need(worst < 1e-12, "max |P s P| over 12 " + num(worst) + " < 1e-12");
    const auto s = experiment({{"name", "c3"}, {"experiment", "single-edge-probe"}}, {"probe.durations=[40]"});
    const double inf = check(s, "max_infidelity").at("value");
    o.need(inf < 1e-6, "single-edge infidelity " + num(inf) + " < 1e-6");
}

void criterion4(Outcome& o) {
    const auto s = default_inter_sq_settings();
    const auto res = adiabatic_inter_sq(s);
    o.need(res.phases.offdiag < 1e-6, "offdiag " + num(res.phases.offdiag) + " < 1e-6");
    const double db = std::abs(res.phases.beta1 - res.phases.beta2);
    o.need(db < 1e-8, "|b1-b2| " + num(db) + " < 1e-8");
    std::vector<double> x, y;
    for (double J : {0.02, 0.04, 0.08, 0.12, 0.16}) {
        auto t = s;
        t.J_peak = J;
        double rate = 0.0;
        InterSqGate(t).calibrate_cz(&rate);
        x.push_back(std::log(J));
        y.push_back(std::log(std::abs(rate)));
    }
    const auto fit = fit_line(x, y);
    o.need(std::abs(fit.slope - 2.0) <= 0.1, "alpha exponent " + num(fit.slope) + " in 2 +- 0.1");
}

void criterion5(Outcome& o) {
    for (int n : {2, 3}) {
        const Lattice l(LatticeKind::TwoSpeciesPlanar, n, n);
        const double m = min_stabilizer(build_cluster(l, make_schedule(l)), l);
        o.need(m >= 1.0 - 1e-9, std::to_string(n) + "x" + std::to_string(n) + " min " + num(m - 1.0) + "+1");
    }
    const Lattice l(LatticeKind::TwoSpeciesPlanar, 2, 2);
    const double sim = min_stabilizer(build_cluster(l, make_simultaneous_schedule(l)), l);
    o.need(sim < 0.99, "simultaneous min " + num(sim) + " < 0.99");
    for (int n : {2, 3}) {
        const Lattice ln(LatticeKind::TwoSpeciesPlanar, n, n);
        const auto sched = make_schedule(ln);
        const auto ref = verify_stabilizers(build_cluster(ln, sched).state, ln).expectation;
        std::vector<int> order(sched.steps.size());
        std::iota(order.begin(), order.end(), 0);
        double spread = 0.0;
        int perms = 0;
        do {
            const auto e = verify_stabilizers(build_cluster(ln, permute_steps(sched, order)).state, ln).expectation;
            for (std::size_t q = 0; q < e.size(); ++q) {
                spread = std::max(spread, std::abs(e[q] - ref[q]));
            }
            ++perms;
        } while (std::next_permutation(order.begin(), order.end()));
        o.need(spread < 1e-10, std::to_string(perms) + " orders on " + std::to_string(n) + "x" + std::to_string(n) +
                                   " spread " + num(spread) + " < 1e-10");
    }
}

void criterion6(Outcome& o) {
    const Lattice l(LatticeKind::PairedDotPlanar, 2, 2);
    const auto b = build_cluster(l, make_schedule(l));
    const double m = verify_stabilizers(b.state, l).min_expectation();
    o.need(m >= 1.0 - 1e-6, "min stabilizer " + num(m - 1.0) + "+1");
    o.need(b.leakage < 1e-6, "leakage " + num(b.leakage) + " < 1e-6");
    BuildOptions bad;
    bad.refocus = false;
    const auto ctl = build_cluster(l, make_schedule(l), bad);
    o.need(ctl.leakage > 1e-3, "unrefocused leakage " + num(ctl.leakage) + " > 1e-3");
}

void criterion7(Outcome& o) {
    for (auto kind : {LatticeKind::SqTwoLayer, LatticeKind::SqPlanar}) {
        const Lattice l(kind, 1, 2);
        const double m = min_stabilizer(build_cluster(l, make_schedule(l)), l);
        o.need(m >= 1.0 - 1e-4, to_string(kind) + " 1x2 min " + num(m));
    }
    const Lattice l(LatticeKind::SqPlanar, 2, 2);
    const auto b = build_cluster(l, make_schedule(l));
    bool pairs = b.pairing_reference && !b.pairing.empty();
    for (const auto& p : b.pairing) {
        pairs = pairs && p.pass;
    }
    o.need(l.n_sites() == 16 && pairs,
           "2x2 (" + std::to_string(l.n_sites()) + " sites) " + std::to_string(b.steps.size()) + " steps, " +
               std::to_string(b.pairing.size()) + " pairing checks pass");
    o.detail << "2x2 min stabilizer " << num(min_stabilizer(b, l)) << "; ";
}

void criterion8(Outcome& o) {
    const json raw = {{"name", "c8"}, {"experiment", "mbqc-rotation"}, {"seed", 8}};
    const auto bare = experiment(raw);
    const double fb = bare.at("results").at("min_fidelity");
    const int nb = bare.at("results").at("branches_run");
    o.need(fb > 1.0 - 1e-6 && nb == 320, "bare " + std::to_string(nb) + " branches min fid-1 " + num(fb - 1.0));
    const auto td = experiment(raw, {"lattice.kind=paired-dot-planar"});
    const double ft = td.at("results").at("min_fidelity");
    const int nt = td.at("results").at("branches_run");
    o.need(ft > 1.0 - 1e-6, "two-dot " + std::to_string(nt) + " sampled branches min fid-1 " + num(ft - 1.0));
}

void criterion9(Outcome& o) {
    const json raw = {{"name", "c9"}, {"experiment", "error-sweep"}};
    const auto drift = experiment(raw);
    const double rel = check(drift, "drift_slope_relative_error").at("value");
    o.need(rel < 0.01, "drift slope rel err " + num(rel) + " < 1%");
    const double ref = check(drift, "refocused_infidelity").at("value");
    o.need(ref < 1e-8, "refocused infidelity " + num(ref) + " < 1e-8");
    const auto sweep = experiment(raw, {"error.kind=inter-sq-imbalance"});
    const double r2 = check(sweep, "beta_difference_r2").at("value");
    const bool flat = sweep.at("results").at("beta_difference_fit").at("degenerate");
    o.need(r2 > 0.999, "b1-b2 fit R2 " + num(r2) + " > 0.999" + (flat ? " (no spread)" : ""));
    const double off = check(sweep, "offdiag_residual_max").at("value");
    o.need(off < 1e-6, "max offdiag " + num(off) + " < 1e-6");
}

void criterion10(Outcome& o) {
#ifdef _OPENMP
    const int saved = omp_get_max_threads();
    auto with_threads = [](int n, const std::function<json()>& f) {
        omp_set_num_threads(n);
        return f();
    };
#else
    auto with_threads = [](int, const std::function<json()>& f) { return f(); };
#endif
    const std::vector<std::pair<json, std::vector<std::string>>> runs = {
        {{{"name", "c10-mbqc"}, {"experiment", "mbqc-rotation"}, {"seed", 1234}},
         {"lattice.kind=paired-dot-planar", "mbqc.rotations=5"}},
        {{{"name", "c10-sweep"}, {"experiment", "error-sweep"}, {"seed", 1234}},
         {"error.kind=inter-sq-imbalance", "error.grid=[-0.1,0.1]"}},
    };
    for (const auto& [raw, ov] : runs) {
        const auto one = with_threads(1, [&] { return experiment(raw, ov); });
        const auto four = with_threads(4, [&] { return experiment(raw, ov); });
        o.need(one.dump() == four.dump(), raw.at("name").get<std::string>() + " summaries at 1 and 4 threads identical");
    }
#ifdef _OPENMP
    omp_set_num_threads(saved);
#endif
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        double limit_s;
        void (*run)(Outcome&);
    };
    const std::vector<Criterion> all = {
        {1, 1.0, criterion1},    {2, 1.0, criterion2},     {3, 60.0, criterion3}, {4, 300.0, criterion4},
        {5, 120.0, criterion5},  {6, 120.0, criterion6},   {7, 1800.0, criterion7}, {8, 300.0, criterion8},
        {9, 600.0, criterion9},  {10, 600.0, criterion10},
    };
    int failed = 0;
    for (const auto& c : all) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.need(false, std::string("threw: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        o.need(secs < c.limit_s, "runtime " + num(secs) + " s < " + num(c.limit_s) + " s");
        std::printf("criterion %2d: %s  %s\n", c.id, o.pass ? "PASS" : "FAIL", o.detail.str().c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
    return failed == 0 ? 0 : 1;
}
