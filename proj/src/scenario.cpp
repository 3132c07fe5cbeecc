#include "qdcluster/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "qdcluster/cluster.hpp"
#include "qdcluster/errorlab.hpp"
#include "qdcluster/mbqc.hpp"

namespace qdc {

using nlohmann::json;

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {"build-cluster", "verify-gate",           "spectrum",
                                                   "mbqc-rotation", "error-sweep",           "single-edge-probe"};
    return names;
}

json load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("", "cannot read scenario file '" + path + "'");
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("", "scenario '" + path + "' is not valid JSON: " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Defaults and resolution

namespace {

json encoding_defaults() {
    const TwoDotParams td;
    const auto is = default_inter_sq_settings();
    return {{"two_dot", {{"J_intra", td.J_intra}, {"J_inter", td.J_inter}, {"B_z", td.B_z}, {"g_A", td.g_A},
                         {"g_B", td.g_B}}},
            {"sq", {{"J_intra", is.sq.J_intra}, {"rotation_dJ", is.sq.rotation_dJ}, {"swap_dJ", 1.0}}},
            {"inter_sq",
             {{"J_peak", is.J_peak},
              {"edges", nullptr},
              {"ramp", {{"shape", to_string(is.ramp.shape)}, {"duration", is.ramp.duration}, {"peak", is.ramp.peak}}}}}};
}

json defaults_for(const std::string& experiment) {
    json d = {{"name", nullptr},
              {"experiment", experiment},
              {"seed", 0},
              {"output_path", nullptr},
              {"evolve", {{"tolerance", 1e-10}, {"dense_limit", 10}}}};
    if (experiment == "build-cluster") {
        d["lattice"] = {{"kind", "two-species-planar"}, {"rows", 2}, {"cols", 2}};
        d["schedule"] = {{"kind", "staged"}, {"order", nullptr}};
        d["encoding"] = encoding_defaults();
        d["build"] = {{"refocus", true},
                      {"apply_corrections", true},
                      {"stabilizer_tolerance", nullptr},
                      {"max_leakage", nullptr}};
    } else if (experiment == "verify-gate") {
        d["gate"] = {{"name", "ising-from-heisenberg"}, {"dJ", 1.0}, {"tolerance", 1e-12}, {"max_leakage", 1e-6}};
        d["encoding"] = encoding_defaults();
    } else if (experiment == "spectrum") {
        d["spectrum"] = {{"J", {0.5, 1.0, 2.0}}, {"tolerance", 1e-10}};
    } else if (experiment == "mbqc-rotation") {
        d["lattice"] = {{"kind", "two-species-planar"}, {"rows", 1}, {"cols", 5}};
        d["encoding"] = encoding_defaults();
        d["mbqc"] = {{"rotations", 20},
                     {"branches", nullptr},
                     {"samples", 4},
                     {"readout", "physical"},
                     {"fidelity_tolerance", 1e-6}};
    } else if (experiment == "error-sweep") {
        d["encoding"] = encoding_defaults();
        d["error"] = {{"kind", "intra-mismatch"},
                      {"grid", nullptr},
                      {"pair", {0, 1}},
                      {"drift_time", 1.0},
                      {"refocus", {{"delta", 0.02}, {"time", 10.0}, {"axis", {1.0, 0.0, 0.0}}}},
                      {"idle_time", 1.0},
                      {"max_leakage", 1e-6},
                      {"tolerances",
                       {{"slope_relative", 0.01},
                        {"refocused", 1e-8},
                        {"r2", 0.999},
                        {"offdiag", 1e-6},
                        {"exponent", 0.1}}}};
    } else if (experiment == "single-edge-probe") {
        d["encoding"] = encoding_defaults();
        d["probe"] = {{"J", nullptr}, {"durations", {10.0, 20.0, 40.0, 80.0}}, {"tolerance", 1e-6}};
    }
    return d;
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_type(const json& def, const json& v, const std::string& path) {
    if (def.is_null()) {
        return;
    }
    auto fail = [&](const char* what) { throw ConfigError(path, std::string("must be ") + what); };
    if (def.is_boolean() && !v.is_boolean()) fail("a boolean");
    if (def.is_number_integer() && !v.is_number_integer()) fail("an integer");
    if (def.is_number() && !v.is_number()) fail("a number");
    if (def.is_string() && !v.is_string()) fail("a string");
    if (def.is_array() && !v.is_array()) fail("an array");
    if (def.is_object() && !v.is_object()) fail("an object");
}

void merge_checked(json& base, const json& user, const std::string& path) {
    if (!user.is_object()) {
        throw ConfigError(path, "must be an object");
    }
    for (const auto& [k, v] : user.items()) {
        const std::string p = join(path, k);
        if (!base.contains(k)) {
            throw ConfigError(p, "unknown field");
        }
        json& b = base[k];
        if (b.is_object()) {
            merge_checked(b, v, p);
        } else {
            check_type(b, v, p);
            b = v;
        }
    }
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("", "override '" + assignment + "' is not key=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    json* node = &doc;
    std::string path;
    for (const auto& part : split(key, '.')) {
        path = join(path, part);
        if (node->is_array()) {
            std::size_t idx = 0;
            try {
                idx = std::stoul(part);
            } catch (const std::exception&) {
                throw ConfigError(path, "array index expected");
            }
            if (idx >= node->size()) {
                throw ConfigError(path, "index out of range");
            }
            node = &(*node)[idx];
        } else if (node->is_object() && node->contains(part)) {
            node = &(*node)[part];
        } else {
            throw ConfigError(path, "unknown field");
        }
    }
    if (node->is_object()) {
        merge_checked(*node, value, key);
    } else {
        check_type(*node, value, key);
        *node = value;
    }
}

template <class T>
T get(const json& root, const std::string& path) {
    const json* node = &root;
    for (const auto& part : split(path, '.')) {
        if (!node->is_object() || !node->contains(part)) {
            throw ConfigError(path, "missing");
        }
        node = &node->at(part);
    }
    try {
        return node->get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path, "has the wrong type");
    }
}

double positive(const json& root, const std::string& path) {
    const double v = get<double>(root, path);
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw ConfigError(path, "must be positive");
    }
    return v;
}

}  // namespace

json resolve_scenario(const json& raw_in, const std::vector<std::string>& overrides, std::optional<std::uint64_t> seed) {
    if (!raw_in.is_object()) {
        throw ConfigError("", "scenario must be a JSON object");
    }
    json raw = raw_in;
    for (const auto& o : overrides) {
        if (o.rfind("experiment=", 0) == 0) {
            raw["experiment"] = o.substr(11);
        }
    }
    if (!raw.contains("experiment") || !raw.at("experiment").is_string()) {
        throw ConfigError("experiment", "missing or not a string");
    }
    const auto exp = raw.at("experiment").get<std::string>();
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), exp) == names.end()) {
        throw ConfigError("experiment", "unknown experiment '" + exp + "'");
    }
    json r = defaults_for(exp);
    merge_checked(r, raw, "");
    for (const auto& o : overrides) {
        if (o.rfind("experiment=", 0) != 0) {
            apply_override(r, o);
        }
    }
    if (seed) {
        r["seed"] = *seed;
    }
    if (!r.at("name").is_string() || r.at("name").get<std::string>().empty()) {
        throw ConfigError("name", "missing or empty");
    }
    if (!r.at("seed").is_number_integer() || r.at("seed").get<long long>() < 0) {
        throw ConfigError("seed", "must be a non-negative integer");
    }
    if (r.at("output_path").is_null()) {
        r["output_path"] = "reports/" + r.at("name").get<std::string>();
    }
    // Values that depend on other fields.
    if (exp == "build-cluster" || exp == "mbqc-rotation") {
        LatticeKind kind;
        try {
            kind = lattice_kind_from_string(get<std::string>(r, "lattice.kind"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError("lattice.kind", e.what());
        }
        const auto enc = encoding_of(kind);
        if (exp == "build-cluster") {
            auto& b = r["build"];
            if (b.at("stabilizer_tolerance").is_null()) {
                b["stabilizer_tolerance"] = enc == EncodingKind::Bare ? 1e-9 : enc == EncodingKind::TwoDot ? 1e-6 : 1e-4;
            }
            if (b.at("max_leakage").is_null()) {
                b["max_leakage"] = enc == EncodingKind::Supercoherent ? 1e-4 : 1e-6;
            }
        } else if (r["mbqc"].at("branches").is_null()) {
            r["mbqc"]["branches"] = enc == EncodingKind::Bare ? "exhaustive" : "sampled";
        }
    }
    if (r.contains("encoding") && r["encoding"]["inter_sq"].at("edges").is_null()) {
        json edges = json::array();
        for (const auto& [a, b] : default_inter_sq_edges()) {
            edges.push_back({a, b});
        }
        r["encoding"]["inter_sq"]["edges"] = edges;
    }
    if (exp == "error-sweep" && r["error"].at("grid").is_null()) {
        const auto kind = get<std::string>(r, "error.kind");
        if (kind == "intra-mismatch") {
            r["error"]["grid"] = {0.01, 0.02, 0.03, 0.04, 0.05};
        } else if (kind == "inter-sq-imbalance") {
            r["error"]["grid"] = {-0.2, -0.1, 0.0, 0.1, 0.2};
        } else if (kind == "residual-inter") {
            r["error"]["grid"] = {0.001, 0.002, 0.004};
        } else {
            throw ConfigError("error.kind", "sweeps support intra-mismatch, inter-sq-imbalance and residual-inter");
        }
    }
    if (exp == "single-edge-probe" && r["probe"].at("J").is_null()) {
        r["probe"]["J"] = r["encoding"]["inter_sq"]["J_peak"];
    }
    return r;
}

std::string scenario_hash(const json& resolved) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : resolved.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

EvolveOptions evolve_options(const json& r) {
    EvolveOptions o;
    o.tolerance = positive(r, "evolve.tolerance");
    o.dense_limit = get<int>(r, "evolve.dense_limit");
    if (o.dense_limit < 2 || o.dense_limit > 14) {
        throw ConfigError("evolve.dense_limit", "must lie in 2..14");
    }
    return o;
}

TwoDotParams two_dot_params(const json& r) {
    return {positive(r, "encoding.two_dot.J_intra"), positive(r, "encoding.two_dot.J_inter"),
            positive(r, "encoding.two_dot.B_z"), get<double>(r, "encoding.two_dot.g_A"),
            get<double>(r, "encoding.two_dot.g_B")};
}

SqParams sq_params(const json& r) {
    return {positive(r, "encoding.sq.J_intra"), positive(r, "encoding.sq.rotation_dJ")};
}

InterSqSettings inter_sq_settings(const json& r) {
    InterSqSettings s = default_inter_sq_settings();
    s.sq = sq_params(r);
    s.J_peak = get<double>(r, "encoding.inter_sq.J_peak");
    try {
        s.ramp.shape = ramp_shape_from_string(get<std::string>(r, "encoding.inter_sq.ramp.shape"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError("encoding.inter_sq.ramp.shape", e.what());
    }
    s.ramp.duration = positive(r, "encoding.inter_sq.ramp.duration");
    s.ramp.peak = get<double>(r, "encoding.inter_sq.ramp.peak");
    s.edges.clear();
    const auto& edges = r.at("encoding").at("inter_sq").at("edges");
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto& e = edges[k];
        const std::string path = "encoding.inter_sq.edges." + std::to_string(k);
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
            throw ConfigError(path, "must be a [dot, dot] pair");
        }
        const int a = e[0].get<int>(), b = e[1].get<int>();
        if (a < 0 || a > 3 || b < 0 || b > 3) {
            throw ConfigError(path, "dots are numbered 0..3");
        }
        s.edges.emplace_back(a, b);
    }
    return s;
}

Lattice lattice_of(const json& r) {
    try {
        return lattice_from_json(r.at("lattice"));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError("lattice", e.what());
    } catch (const json::exception& e) {
        throw ConfigError("lattice", e.what());
    }
}

struct Checks {
    json list = json::array();
    bool pass = true;

    void add(const std::string& name, double value, const std::string& relation, double limit) {
        bool ok = false;
        if (relation == "<") ok = value < limit;
        if (relation == "<=") ok = value <= limit;
        if (relation == ">") ok = value > limit;
        if (relation == ">=") ok = value >= limit;
        list.push_back({{"name", name}, {"value", value}, {"relation", relation}, {"limit", limit}, {"pass", ok}});
        pass = pass && ok;
    }
    void flag(const std::string& name, bool ok) {
        list.push_back({{"name", name}, {"pass", ok}});
        pass = pass && ok;
    }
};

std::string fmt(double v) {
    std::ostringstream o;
    o.precision(17);
    o << v;
    return o.str();
}

ExperimentReport build_cluster_experiment(const json& r) {
    const Lattice l = lattice_of(r);
    Schedule s;
    const auto kind = get<std::string>(r, "schedule.kind");
    try {
        if (kind == "staged") {
            s = make_schedule(l);
        } else if (kind == "simultaneous") {
            s = make_simultaneous_schedule(l);
        } else {
            throw ConfigError("schedule.kind", "must be 'staged' or 'simultaneous'");
        }
        const auto& order = r.at("schedule").at("order");
        if (!order.is_null()) {
            s = permute_steps(s, order.get<std::vector<int>>());
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("schedule", e.what());
    }
    BuildOptions o;
    o.two_dot = two_dot_params(r);
    o.inter_sq = inter_sq_settings(r);
    o.swap_dJ = positive(r, "encoding.sq.swap_dJ");
    o.refocus = get<bool>(r, "build.refocus");
    o.apply_corrections = get<bool>(r, "build.apply_corrections");
    o.evolve = evolve_options(r);
    const double tol = get<double>(r, "build.stabilizer_tolerance");
    const double max_leak = get<double>(r, "build.max_leakage");

    const auto b = build_cluster(l, s, o);
    const auto rep = verify_stabilizers(b.state, l, 1.0 - tol);
    Checks c;
    for (std::size_t q = 0; q < rep.expectation.size(); ++q) {
        c.add("stabilizer[" + std::to_string(q) + "]", rep.expectation[q], ">=", 1.0 - tol);
    }
    if (l.logical_register().kind() != EncodingKind::Bare) {
        c.add("leakage", b.leakage, "<", max_leak);
    }
    for (const auto& p : b.pairing) {
        c.flag("pairing[" + std::to_string(p.lq) + "]", p.pass);
    }
    if (!b.pairing.empty()) {
        c.flag("pairing_reference", b.pairing_reference);
    }
    json steps = json::array();
    for (const auto& st : b.steps) {
        steps.push_back({{"label", st.label}, {"duration", st.duration}, {"leakage", st.leakage}});
    }
    ExperimentReport out;
    out.summary["results"] = {{"stabilizers", rep.expectation},
                              {"min_stabilizer", rep.min_expectation()},
                              {"leakage", b.leakage},
                              {"total_time", b.total_time},
                              {"corrections", b.corrections},
                              {"steps", steps},
                              {"schedule", schedule_to_json(s)}};
    out.summary["checks"] = c.list;
    out.pass = c.pass;
    out.files.emplace_back("stabilizers.csv", stabilizer_csv(rep));
    return out;
}

ExperimentReport verify_gate_experiment(const json& r) {
    const auto name = get<std::string>(r, "gate.name");
    const double tol = get<double>(r, "gate.tolerance");
    const auto opts = evolve_options(r);
    Checks c;
    json res;
    if (name == "ising-from-heisenberg") {
        const CMatrix u = recipe_unitary(ising_from_heisenberg(0, 1, 2), opts);
        CMatrix target = CMatrix::Zero(4, 4);
        const cplx m = std::polar(1.0, -kPi / 4.0), p = std::polar(1.0, kPi / 4.0);
        target(0, 0) = m;
        target(1, 1) = -p;
        target(2, 2) = p;
        target(3, 3) = -m;
        const double dev = operator_norm(u - target);
        res = {{"max_deviation", dev}, {"phase_invariant_distance", phase_invariant_distance(u, target)}};
        c.add("operator_norm_deviation", dev, "<", tol);
    } else if (name == "swap") {
        const double dJ = positive(r, "gate.dJ");
        const CMatrix u = recipe_unitary(swap_pair(0, 1, dJ, 2), opts);
        const double dev = phase_invariant_distance(u, swap_matrix());
        res = {{"phase_invariant_distance", dev}};
        c.add("phase_invariant_distance", dev, "<", tol);
    } else if (name == "two-dot-ising") {
        const auto cal = calibrate_two_dot_ising(two_dot_params(r));
        const double d = invariant_distance(cal.invariants, cz_class());
        res = {{"theta", cal.theta}, {"invariant_distance", d}, {"leakage", cal.effective.leakage}};
        c.add("invariant_distance", d, "<", tol);
        c.add("leakage", cal.effective.leakage, "<", get<double>(r, "gate.max_leakage"));
    } else if (name == "inter-sq-cz") {
        const InterSqGate gate(inter_sq_settings(r), opts);
        double rate = 0.0;
        const double T = gate.calibrate_cz(&rate);
        const auto eff = gate.effective(T);
        const auto ph = diagonal_decomposition(eff.logical);
        const double d = invariant_distance(local_invariants(eff.logical), cz_class());
        res = {{"plateau", T},         {"alpha_rate", rate},      {"alpha", ph.alpha},
               {"beta1", ph.beta1},    {"beta2", ph.beta2},       {"offdiag", ph.offdiag},
               {"leakage", eff.leakage}, {"invariant_distance", d}};
        c.add("invariant_distance", d, "<", tol);
        c.add("leakage", eff.leakage, "<", get<double>(r, "gate.max_leakage"));
    } else {
        throw ConfigError("gate.name",
                          "must be one of ising-from-heisenberg, swap, two-dot-ising, inter-sq-cz");
    }
    ExperimentReport out;
    out.summary["results"] = res;
    out.summary["checks"] = c.list;
    out.pass = c.pass;
    return out;
}

ExperimentReport spectrum_experiment(const json& r) {
    const auto Js = get<std::vector<double>>(r, "spectrum.J");
    const double tol = get<double>(r, "spectrum.tolerance");
    const auto& enc = Encoding::get(EncodingKind::Supercoherent);
    Checks c;
    json res = json::array();
    std::ostringstream csv;
    csv.precision(17);
    csv << "J,level,energy,degeneracy\n";
    for (std::size_t k = 0; k < Js.size(); ++k) {
        const double J = Js[k];
        if (!(J > 0.0)) {
            throw ConfigError("spectrum.J." + std::to_string(k), "must be positive");
        }
        CouplingModel m(4);
        for (int a = 0; a < 4; ++a) {
            for (int b = a + 1; b < 4; ++b) {
                m.add_edge(a, b, 4.0 * J);  // J sigma.sigma
            }
        }
        const auto levels = spectrum(m, 0.0, 3);
        const CMatrix g = ground_space(m, 0.0);
        const double fid = (g * g.adjoint() * enc.projector).trace().real() / 2.0;
        const double gap = levels.at(1).energy - levels.at(0).energy;
        for (std::size_t lv = 0; lv < levels.size(); ++lv) {
            csv << fmt(J) << ',' << lv << ',' << fmt(levels[lv].energy) << ',' << levels[lv].degeneracy << '\n';
        }
        const std::string tag = "[J=" + fmt(J) + "]";
        c.add("ground_degeneracy" + tag, levels.at(0).degeneracy, ">=", 2);
        c.add("ground_degeneracy_max" + tag, levels.at(0).degeneracy, "<=", 2);
        c.add("gap_error" + tag, std::abs(gap - 4.0 * J), "<", 1e-10 * J);
        c.add("subspace_fidelity" + tag, fid, ">", 1.0 - tol);
        res.push_back({{"J", J},
                       {"ground_energy", levels.at(0).energy},
                       {"ground_degeneracy", levels.at(0).degeneracy},
                       {"gap", gap},
                       {"subspace_fidelity", fid}});
    }
    ExperimentReport out;
    out.summary["results"] = res;
    out.summary["checks"] = c.list;
    out.pass = c.pass;
    out.files.emplace_back("spectrum.csv", csv.str());
    return out;
}

ExperimentReport mbqc_experiment(const json& r) {
    const Lattice l = lattice_of(r);
    if (l.rows() != 1 || l.cols() != 5) {
        throw ConfigError("lattice", "the rotation pattern needs a 1x5 chain");
    }
    const int rotations = get<int>(r, "mbqc.rotations");
    if (rotations < 1) {
        throw ConfigError("mbqc.rotations", "must be at least 1");
    }
    const auto branches = get<std::string>(r, "mbqc.branches");
    if (branches != "exhaustive" && branches != "sampled") {
        throw ConfigError("mbqc.branches", "must be 'exhaustive' or 'sampled'");
    }
    const int samples = get<int>(r, "mbqc.samples");
    if (samples < 1) {
        throw ConfigError("mbqc.samples", "must be at least 1");
    }
    ReadoutOptions ro;
    const auto mode = get<std::string>(r, "mbqc.readout");
    if (mode != "physical" && mode != "ideal") {
        throw ConfigError("mbqc.readout", "must be 'physical' or 'ideal'");
    }
    ro.mode = mode == "ideal" ? ReadoutMode::Ideal : ReadoutMode::Physical;
    ro.two_dot = two_dot_params(r);
    ro.sq = sq_params(r);
    ro.evolve = evolve_options(r);
    BuildOptions bo;
    bo.two_dot = ro.two_dot;
    bo.inter_sq = inter_sq_settings(r);
    bo.inter_sq.sq = ro.sq;
    bo.evolve = ro.evolve;
    const double tol = get<double>(r, "mbqc.fidelity_tolerance");
    const auto seed = get<std::uint64_t>(r, "seed");
    const auto& reg = l.logical_register();
    const Schedule sched = make_schedule(l);

    Rng rng(seed);
    std::ostringstream runs_csv, outcomes_csv;
    runs_csv.precision(17);
    runs_csv << "rotation,branch,xi,eta,zeta,fidelity,first_step\n";
    outcomes_csv << "step,lq,basis,angle,outcome,probability\n";
    int step_base = 0;
    double worst = 1.0;
    int branch_count = 0;
    json per_rotation = json::array();
    for (int k = 0; k < rotations; ++k) {
        const double xi = 2.0 * kPi * rng.uniform(), eta = 2.0 * kPi * rng.uniform(), zeta = 2.0 * kPi * rng.uniform();
        CVector in(2);
        in << cplx(rng.normal(), rng.normal()), cplx(rng.normal(), rng.normal());
        in /= in.norm();
        BuildOptions o = bo;
        o.inputs[0] = in;
        const auto b = build_cluster(l, sched, o);
        const auto p = compile_rotation_chain(xi, eta, zeta);
        const CVector target = rotation_chain_target(xi, eta, zeta) * in;
        double worst_here = 1.0;
        const int n_branches = branches == "exhaustive" ? 16 : samples;
        for (int br = 0; br < n_branches; ++br) {
            const auto run = branches == "exhaustive"
                                 ? run_pattern_branch(b.state, p, reg, {br & 1, (br >> 1) & 1, (br >> 2) & 1, (br >> 3) & 1}, ro)
                                 : run_pattern(b.state, p, reg, rng.next(), ro);
            const CMatrix rho = corrected_output(run.state, reg, p, run.frame);
            const double f = (target.adjoint() * rho * target)(0, 0).real();
            worst_here = std::min(worst_here, f);
            runs_csv << k << ',' << br << ',' << fmt(xi) << ',' << fmt(eta) << ',' << fmt(zeta) << ',' << fmt(f) << ','
                     << step_base << '\n';
            const auto csv = pattern_csv(run);
            std::istringstream lines(csv);
            std::string line;
            std::getline(lines, line);  // header
            while (std::getline(lines, line)) {
                const auto comma = line.find(',');
                outcomes_csv << step_base + std::stoi(line.substr(0, comma)) << line.substr(comma) << '\n';
            }
            step_base += static_cast<int>(run.steps.size());
            ++branch_count;
        }
        worst = std::min(worst, worst_here);
        per_rotation.push_back({{"xi", xi}, {"eta", eta}, {"zeta", zeta}, {"min_fidelity", worst_here}});
    }
    Checks c;
    c.add("min_fidelity", worst, ">", 1.0 - tol);
    ExperimentReport out;
    out.summary["results"] = {{"rotations", per_rotation}, {"branches_run", branch_count}, {"min_fidelity", worst}};
    out.summary["checks"] = c.list;
    out.pass = c.pass;
    out.files.emplace_back("mbqc_runs.csv", runs_csv.str());
    out.files.emplace_back("mbqc_outcomes.csv", outcomes_csv.str());
    return out;
}

Axis axis_of(const json& r, const std::string& path) {
    const auto v = get<std::vector<double>>(r, path);
    if (v.size() != 3) {
        throw ConfigError(path, "must have three components");
    }
    const Axis a{v[0], v[1], v[2]};
    if (!(a.norm() > 0.0)) {
        throw ConfigError(path, "must be nonzero");
    }
    return a.normalized();
}

ExperimentReport error_sweep_experiment(const json& r) {
    const auto kind = get<std::string>(r, "error.kind");
    const auto grid = get<std::vector<double>>(r, "error.grid");
    if (grid.size() < 2) {
        throw ConfigError("error.grid", "needs at least two points");
    }
    const auto opts = evolve_options(r);
    const auto sq = sq_params(r);
    Checks c;
    ExperimentReport out;
    json res;
    if (kind == "intra-mismatch") {
        const auto pair = get<std::vector<int>>(r, "error.pair");
        if (pair.size() != 2 || pair[0] == pair[1] || pair[0] < 0 || pair[1] < 0 || pair[0] > 3 || pair[1] > 3) {
            throw ConfigError("error.pair", "must be two distinct dots 0..3");
        }
        const auto drift = drift_linearity(grid, positive(r, "error.drift_time"), sq, opts);
        const double dref = get<double>(r, "error.refocus.delta");
        const double tref = positive(r, "error.refocus.time");
        const Axis axis = axis_of(r, "error.refocus.axis");
        const auto ref = refocus_check(dref, tref, {pair[0], pair[1]}, axis, sq, opts);
        std::ostringstream csv;
        csv.precision(17);
        csv << "delta,rate,predicted,unrefocused,refocused\n";
        json pts = json::array();
        for (const auto& p : drift.points) {
            const auto rc = refocus_check(p.delta, tref, {pair[0], pair[1]}, axis, sq, opts);
            csv << fmt(p.delta) << ',' << fmt(p.rate) << ',' << fmt(p.predicted) << ',' << fmt(rc.unrefocused) << ','
                << fmt(rc.refocused) << '\n';
            pts.push_back({{"delta", p.delta},
                           {"rate", p.rate},
                           {"predicted", p.predicted},
                           {"unrefocused", rc.unrefocused},
                           {"refocused", rc.refocused}});
        }
        res = {{"drift", pts},
               {"slope", drift.fit.slope},
               {"predicted_slope", drift.predicted_slope},
               {"relative_error", drift.relative_error},
               {"refocus", {{"delta", dref}, {"time", tref}, {"unrefocused", ref.unrefocused},
                            {"refocused", ref.refocused}, {"leakage", ref.leakage}}}};
        c.add("drift_slope_relative_error", drift.relative_error, "<", get<double>(r, "error.tolerances.slope_relative"));
        c.add("refocused_infidelity", ref.refocused, "<", get<double>(r, "error.tolerances.refocused"));
        out.files.emplace_back("drift.csv", csv.str());
    } else if (kind == "inter-sq-imbalance") {
        const auto s = inter_sq_settings(r);
        const auto sw = imbalance_sweep(s, grid, get<double>(r, "error.max_leakage"), opts);
        json pts = json::array();
        for (const auto& p : sw.points) {
            pts.push_back({{"parameter", p.parameter}, {"alpha", p.alpha},       {"beta1", p.beta1},
                           {"beta2", p.beta2},         {"offdiag", p.offdiag},   {"leakage", p.leakage},
                           {"adiabatic", p.adiabatic}});
        }
        res = {{"points", pts},
               {"excluded", sw.excluded},
               {"beta_difference_fit",
                {{"slope", sw.beta_fit.slope}, {"intercept", sw.beta_fit.intercept}, {"r2", sw.beta_fit.r2},
                 {"degenerate", sw.beta_fit.degenerate}}},
               {"alpha_vs_square_fit",
                {{"slope", sw.alpha_fit.slope}, {"intercept", sw.alpha_fit.intercept}, {"r2", sw.alpha_fit.r2}}},
               {"max_offdiag", sw.max_offdiag}};
        c.add("offdiag_residual_max", sw.max_offdiag, "<", get<double>(r, "error.tolerances.offdiag"));
        c.add("beta_difference_r2", sw.beta_fit.r2, ">", get<double>(r, "error.tolerances.r2"));
        c.add("points_in_fit", static_cast<double>(sw.points.size()) - sw.excluded, ">=", 2);
        out.files.emplace_back("sweep.csv", sweep_csv(sw));
    } else if (kind == "residual-inter") {
        // Two bare dots with a stray coupling eps * 1.
        const auto reg = LogicalRegister::contiguous(EncodingKind::Bare, 2);
        const double t = positive(r, "error.idle_time");
        std::vector<double> lx, ly;
        std::ostringstream csv;
        csv.precision(17);
        csv << "epsilon,infidelity\n";
        json pts = json::array();
        for (double eps : grid) {
            CouplingModel m(2);
            const auto pm = apply_error_model(m, {ErrorKind::ResidualInter, eps, {{0, 1}}, 1.0});
            const double inf = idle_infidelity(pm.model, reg, t, opts);
            csv << fmt(eps) << ',' << fmt(inf) << '\n';
            pts.push_back({{"epsilon", eps}, {"infidelity", inf}});
            if (eps > 0.0 && inf > 0.0) {
                lx.push_back(std::log(eps));
                ly.push_back(std::log(inf));
            }
        }
        if (lx.size() < 2) {
            throw ConfigError("error.grid", "needs at least two positive epsilons");
        }
        const auto fit = fit_line(lx, ly);
        res = {{"points", pts}, {"exponent", fit.slope}};
        c.add("quadratic_exponent_error", std::abs(fit.slope - 2.0), "<", get<double>(r, "error.tolerances.exponent"));
        out.files.emplace_back("residual.csv", csv.str());
    } else {
        throw ConfigError("error.kind", "sweeps support intra-mismatch, inter-sq-imbalance and residual-inter");
    }
    out.summary["results"] = res;
    out.summary["checks"] = c.list;
    out.pass = c.pass;
    return out;
}

ExperimentReport probe_experiment(const json& r) {
    const auto s = inter_sq_settings(r);
    const double J = get<double>(r, "probe.J");
    const auto durations = get<std::vector<double>>(r, "probe.durations");
    if (durations.empty()) {
        throw ConfigError("probe.durations", "must not be empty");
    }
    const double tol = get<double>(r, "probe.tolerance");
    const auto opts = evolve_options(r);
    Checks c;
    json pts = json::array();
    std::ostringstream csv;
    csv.precision(17);
    csv << "ramp_duration,infidelity,leakage,diabatic_infidelity\n";
    double last = std::numeric_limits<double>::infinity();
    bool monotone = true;
    double worst = 0.0;
    for (std::size_t k = 0; k < durations.size(); ++k) {
        if (!(durations[k] > 0.0)) {
            throw ConfigError("probe.durations." + std::to_string(k), "must be positive");
        }
        RampProfile ramp = s.ramp;
        ramp.duration = durations[k];
        const auto pc = single_edge_contrast(s, J, ramp, opts);
        csv << fmt(durations[k]) << ',' << fmt(pc.adiabatic.infidelity) << ',' << fmt(pc.adiabatic.leakage) << ','
            << fmt(pc.diabatic.infidelity) << '\n';
        pts.push_back({{"duration", durations[k]},
                       {"infidelity", pc.adiabatic.infidelity},
                       {"leakage", pc.adiabatic.leakage},
                       {"diabatic_infidelity", pc.diabatic.infidelity}});
        // Roundoff floor: below 1e-13 the ordering carries no information.
        if (pc.adiabatic.infidelity > 1e-13 && !(pc.adiabatic.infidelity < last)) {
            monotone = false;
        }
        last = pc.adiabatic.infidelity;
        worst = std::max(worst, pc.adiabatic.infidelity);
    }
    c.add("max_infidelity", worst, "<", tol);
    c.flag("monotone_in_duration", monotone);
    ExperimentReport out;
    out.summary["results"] = {{"J", J}, {"points", pts}};
    out.summary["checks"] = c.list;
    out.pass = c.pass;
    out.files.emplace_back("probe.csv", csv.str());
    return out;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream o;
    o << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return o.str();
}

}  // namespace

ExperimentReport run_experiment(const json& resolved) {
    const auto exp = get<std::string>(resolved, "experiment");
    ExperimentReport rep;
    if (exp == "build-cluster") {
        rep = build_cluster_experiment(resolved);
    } else if (exp == "verify-gate") {
        rep = verify_gate_experiment(resolved);
    } else if (exp == "spectrum") {
        rep = spectrum_experiment(resolved);
    } else if (exp == "mbqc-rotation") {
        rep = mbqc_experiment(resolved);
    } else if (exp == "error-sweep") {
        rep = error_sweep_experiment(resolved);
    } else if (exp == "single-edge-probe") {
        rep = probe_experiment(resolved);
    } else {
        throw ConfigError("experiment", "unknown experiment '" + exp + "'");
    }
    json files = json::array();
    for (const auto& f : rep.files) {
        files.push_back(f.first);
    }
    rep.summary["scenario"] = resolved.at("name");
    rep.summary["experiment"] = exp;
    rep.summary["hash"] = scenario_hash(resolved);
    rep.summary["parameters"] = resolved;
    rep.summary["files"] = files;
    rep.summary["pass"] = rep.pass;
    return rep;
}

int run_scenario(const RunOptions& o, std::ostream& out, std::ostream& err) {
    json resolved;
    std::filesystem::path dir;
    try {
        resolved = resolve_scenario(load_scenario_file(o.path), o.overrides, o.seed);
        dir = o.out_dir ? std::filesystem::path(*o.out_dir) : std::filesystem::path(resolved.at("output_path").get<std::string>());
        if (std::filesystem::exists(dir / "summary.json") && !o.force) {
            err << "error: report already exists at " << (dir / "summary.json").string()
                << "; pass --force to overwrite\n";
            return 2;
        }
    } catch (const std::invalid_argument& e) {
        err << "configuration error: " << e.what() << '\n';
        return 2;
    }
#ifdef _OPENMP
    if (o.threads > 0) {
        omp_set_num_threads(o.threads);
    }
#endif
    ExperimentReport rep;
    try {
        rep = run_experiment(resolved);
    } catch (const std::invalid_argument& e) {
        err << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "experiment failed: " << e.what() << '\n';
        return 1;
    }
    rep.summary["timestamp"] = utc_timestamp();
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "summary.json") << rep.summary.dump(2) << '\n';
    for (const auto& [name, body] : rep.files) {
        std::ofstream(dir / name) << body;
    }
    for (const auto& check : rep.summary.at("checks")) {
        out << (check.at("pass").get<bool>() ? "PASS " : "FAIL ") << check.at("name").get<std::string>();
        if (check.contains("value")) {
            out << "  " << fmt(check.at("value").get<double>()) << ' ' << check.at("relation").get<std::string>() << ' '
                << fmt(check.at("limit").get<double>());
        }
        out << '\n';
    }
    out << (rep.pass ? "all checks passed" : "verification failed") << "; report in " << dir.string() << '\n';
    return rep.pass ? 0 : 1;
}

}  // namespace qdc
