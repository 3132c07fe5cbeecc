#include "qdcluster/mbqc.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace qdc {

void validate_pattern(const MeasurementPattern& p, int lq_count) {
    std::set<int> measured;
    const std::set<int> outputs(p.outputs.begin(), p.outputs.end());
    const int n = static_cast<int>(p.measurements.size());
    for (int i = 0; i < n; ++i) {
        const auto& m = p.measurements[static_cast<std::size_t>(i)];
        const std::string where = "measurement " + std::to_string(i);
        if (m.lq < 0 || m.lq >= lq_count) {
            throw PatternError(where + " targets LQ " + std::to_string(m.lq) + " outside the register");
        }
        if (!measured.insert(m.lq).second) {
            throw PatternError(where + " measures LQ " + std::to_string(m.lq) + " a second time");
        }
        if (outputs.count(m.lq)) {
            throw PatternError(where + " measures output LQ " + std::to_string(m.lq));
        }
        for (int d : m.sign_deps) {
            if (d < 0 || d >= i) {
                throw PatternError(where + " depends on measurement " + std::to_string(d) +
                                   ", which is not earlier in the order");
            }
        }
    }
    for (int q : p.outputs) {
        if (q < 0 || q >= lq_count) {
            throw PatternError("output LQ " + std::to_string(q) + " outside the register");
        }
    }
    for (const auto& [q, rule] : p.frame) {
        if (!outputs.count(q)) {
            throw PatternError("frame rule for LQ " + std::to_string(q) + ", which is not an output");
        }
        for (const auto* deps : {&rule.x_deps, &rule.z_deps}) {
            for (int d : *deps) {
                if (d < 0 || d >= n) {
                    throw PatternError("frame rule for LQ " + std::to_string(q) + " references measurement " +
                                       std::to_string(d));
                }
            }
        }
    }
}

int PauliFrame::x(int lq) const {
    auto it = xz.find(lq);
    return it == xz.end() ? 0 : it->second.first;
}

int PauliFrame::z(int lq) const {
    auto it = xz.find(lq);
    return it == xz.end() ? 0 : it->second.second;
}

MeasurementPattern compile_rotation_chain(double xi, double eta, double zeta) {
    MeasurementPattern p;
    p.measurements = {
        {0, PatternBasis::XY, 0.0, {}},
        {1, PatternBasis::XY, -xi, {0}},
        {2, PatternBasis::XY, -eta, {1}},
        {3, PatternBasis::XY, -zeta, {0, 2}},
    };
    p.outputs = {4};
    p.frame[4] = FrameRule{{1, 3}, {0, 2}};
    return p;
}

CMatrix rotation_chain_target(double xi, double eta, double zeta) {
    return rotation_matrix(Axis::X(), zeta) * rotation_matrix(Axis::Z(), eta) * rotation_matrix(Axis::X(), xi);
}

void add_z_removal(MeasurementPattern& p, const Lattice& lattice, int lq) {
    const int index = static_cast<int>(p.measurements.size());
    p.measurements.push_back({lq, PatternBasis::ZRemoval, 0.0, {}});
    for (int nb : lattice.neighbors(lq)) {
        p.frame[nb].z_deps.push_back(index);
    }
}

// ---------------------------------------------------------------------------
// Readout

namespace {

GateRecipe prerotation(const LogicalRegister& reg, int lq, double phi, double sign, const ReadoutOptions& o) {
    const Axis axis = xy_prerotation_axis(phi);
    const double angle = sign * kPi / 2.0;
    GateRecipe r("readout-rotation", reg.n_sites());
    if (o.mode == ReadoutMode::Ideal) {
        r.logical_rotation(reg.sites(lq), reg.kind(), axis, angle);
        return r;
    }
    if (reg.kind() == EncodingKind::TwoDot) {
        return two_dot_rotation(reg, lq, axis, angle, o.two_dot);
    }
    return sq_logical_unitaries(reg, {{lq, rotation_matrix(axis, angle)}}, o.sq);
}

template <class Measure>
std::pair<MeasurementRecord, QuantumState> readout(const QuantumState& state, const LogicalRegister& reg, int lq,
                                                   const std::optional<double>& xy, const ReadoutOptions& o,
                                                   Measure&& measure) {
    if (lq < 0 || lq >= reg.lq_count()) {
        throw std::out_of_range("readout LQ " + std::to_string(lq) + " outside the register");
    }
    const auto& sites = reg.sites(lq);
    if (reg.kind() == EncodingKind::Bare) {
        if (xy) {
            return measure(state, XYBasis{sites[0], *xy});
        }
        return measure(state, ZBasis{sites[0]});
    }
    const double leak = std::max(0.0, 1.0 - logical_overlaps(state, reg).squaredNorm());
    if (leak > o.max_leakage) {
        throw LeakageError("leakage " + std::to_string(leak) + " before the readout of LQ " + std::to_string(lq),
                           leak);
    }
    QuantumState s = xy ? run_recipe(state, prerotation(reg, lq, *xy, 1.0, o), o.evolve) : state;
    // Two-dot: Z_L = Z_A. SQ: |0_L> holds a singlet on dots 1, 2 and |1_L> a triplet.
    const MeasurementBasis basis = reg.kind() == EncodingKind::TwoDot
                                       ? MeasurementBasis{ZBasis{sites[0]}}
                                       : MeasurementBasis{SingletTripletBasis{sites[0], sites[1]}};
    auto [rec, post] = measure(s, basis);
    if (xy) {
        post = run_recipe(post, prerotation(reg, lq, *xy, -1.0, o), o.evolve);
    }
    return {rec, std::move(post)};
}

}  // namespace

std::pair<MeasurementRecord, QuantumState> logical_readout(const QuantumState& state, const LogicalRegister& reg,
                                                           int lq, const std::optional<double>& xy_angle, Rng& rng,
                                                           const ReadoutOptions& opts) {
    return readout(state, reg, lq, xy_angle, opts,
                   [&](const QuantumState& s, const MeasurementBasis& b) { return measure(s, b, rng); });
}

std::pair<MeasurementRecord, QuantumState> logical_readout(const QuantumState& state, const LogicalRegister& reg,
                                                           int lq, const std::optional<double>& xy_angle,
                                                           std::uint64_t seed, const ReadoutOptions& opts) {
    Rng rng(seed);
    return logical_readout(state, reg, lq, xy_angle, rng, opts);
}

std::pair<MeasurementRecord, QuantumState> logical_readout_forced(const QuantumState& state,
                                                                  const LogicalRegister& reg, int lq,
                                                                  const std::optional<double>& xy_angle, int outcome,
                                                                  const ReadoutOptions& opts) {
    return readout(state, reg, lq, xy_angle, opts, [&](const QuantumState& s, const MeasurementBasis& b) {
        return measure_forced(s, b, outcome);
    });
}

// ---------------------------------------------------------------------------
// Patterns

std::vector<int> PatternRun::outcomes() const {
    std::vector<int> out;
    for (const auto& s : steps) {
        out.push_back(s.outcome);
    }
    return out;
}

namespace {

template <class Readout>
PatternRun execute(const QuantumState& state, const MeasurementPattern& p, const LogicalRegister& reg,
                   Readout&& read) {
    validate_pattern(p, reg.lq_count());
    PatternRun run(state);
    auto parity = [&](const std::vector<int>& deps) {
        int s = 0;
        for (int d : deps) {
            s ^= run.steps[static_cast<std::size_t>(d)].outcome;
        }
        return s;
    };
    for (std::size_t i = 0; i < p.measurements.size(); ++i) {
        const auto& m = p.measurements[i];
        std::optional<double> xy;
        double angle = 0.0;
        if (m.basis == PatternBasis::XY) {
            angle = parity(m.sign_deps) ? -m.angle : m.angle;
            xy = angle;
        }
        auto [rec, post] = read(run.state, m.lq, xy, i);
        run.state = std::move(post);
        run.steps.push_back({static_cast<int>(i), m.lq, m.basis, angle, rec.outcome, rec.probability});
    }
    for (const auto& [q, rule] : p.frame) {
        run.frame.xz[q] = {parity(rule.x_deps), parity(rule.z_deps)};
    }
    return run;
}

}  // namespace

PatternRun run_pattern(const QuantumState& state, const MeasurementPattern& pattern, const LogicalRegister& reg,
                       std::uint64_t seed, const ReadoutOptions& opts) {
    Rng rng(seed);
    return execute(state, pattern, reg, [&](const QuantumState& s, int lq, const std::optional<double>& xy,
                                            std::size_t) { return logical_readout(s, reg, lq, xy, rng, opts); });
}

PatternRun run_pattern_branch(const QuantumState& state, const MeasurementPattern& pattern,
                              const LogicalRegister& reg, const std::vector<int>& outcomes,
                              const ReadoutOptions& opts) {
    if (outcomes.size() != pattern.measurements.size()) {
        throw PatternError("branch needs one outcome per measurement");
    }
    return execute(state, pattern, reg,
                   [&](const QuantumState& s, int lq, const std::optional<double>& xy, std::size_t i) {
                       return logical_readout_forced(s, reg, lq, xy, outcomes[i], opts);
                   });
}

CMatrix corrected_output(const QuantumState& state, const LogicalRegister& reg, const MeasurementPattern& pattern,
                         const PauliFrame& frame) {
    const CVector c = logical_overlaps(state, reg);
    const int n = reg.lq_count();
    const int k = static_cast<int>(pattern.outputs.size());
    std::vector<int> rest;
    for (int q = 0; q < n; ++q) {
        if (std::find(pattern.outputs.begin(), pattern.outputs.end(), q) == pattern.outputs.end()) {
            rest.push_back(q);
        }
    }
    CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(dim_of(k)), static_cast<Eigen::Index>(dim_of(n - k)));
    for (std::size_t x = 0; x < dim_of(n); ++x) {
        std::size_t o = 0, r = 0;
        for (int j = 0; j < k; ++j) {
            o |= ((x >> pattern.outputs[static_cast<std::size_t>(j)]) & 1U) << j;
        }
        for (std::size_t j = 0; j < rest.size(); ++j) {
            r |= ((x >> rest[j]) & 1U) << j;
        }
        m(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(r)) = c[static_cast<Eigen::Index>(x)];
    }
    CMatrix rho = m * m.adjoint();
    const double tr = rho.trace().real();
    if (tr <= 0.0) {
        throw std::domain_error("output has no logical weight");
    }
    rho /= tr;
    // Undo X^x Z^z: apply Z^z X^x.
    CMatrix fix = CMatrix::Identity(1, 1);
    for (int j = 0; j < k; ++j) {
        const int q = pattern.outputs[static_cast<std::size_t>(j)];
        CMatrix u = CMatrix::Identity(2, 2);
        if (frame.x(q)) {
            u = pauli::X() * u;
        }
        if (frame.z(q)) {
            u = pauli::Z() * u;
        }
        fix = kron(u, fix);
    }
    return fix * rho * fix.adjoint();
}

std::string pattern_csv(const PatternRun& run) {
    std::ostringstream out;
    out.precision(17);
    out << "step,lq,basis,angle,outcome,probability\n";
    for (const auto& s : run.steps) {
        out << s.step << ',' << s.lq << ',' << (s.basis == PatternBasis::XY ? "xy" : "z") << ',' << s.angle << ','
            << s.outcome << ',' << s.probability << '\n';
    }
    return out.str();
}

nlohmann::json pattern_to_json(const MeasurementPattern& p) {
    nlohmann::json ms = nlohmann::json::array();
    for (const auto& m : p.measurements) {
        ms.push_back({{"lq", m.lq},
                      {"basis", m.basis == PatternBasis::XY ? "xy" : "z"},
                      {"angle", m.angle},
                      {"sign_deps", m.sign_deps}});
    }
    nlohmann::json frame = nlohmann::json::object();
    for (const auto& [q, rule] : p.frame) {
        frame[std::to_string(q)] = {{"x", rule.x_deps}, {"z", rule.z_deps}};
    }
    return {{"measurements", ms}, {"outputs", p.outputs}, {"frame", frame}};
}

MeasurementPattern pattern_from_json(const nlohmann::json& j) {
    MeasurementPattern p;
    try {
        for (const auto& m : j.at("measurements")) {
            const auto basis = m.at("basis").get<std::string>();
            if (basis != "xy" && basis != "z") {
                throw PatternError("pattern basis must be 'xy' or 'z', got '" + basis + "'");
            }
            p.measurements.push_back({m.at("lq").get<int>(), basis == "xy" ? PatternBasis::XY : PatternBasis::ZRemoval,
                                      m.value("angle", 0.0), m.value("sign_deps", std::vector<int>{})});
        }
        p.outputs = j.at("outputs").get<std::vector<int>>();
        if (j.contains("frame")) {
            for (const auto& [key, rule] : j.at("frame").items()) {
                p.frame[std::stoi(key)] = FrameRule{rule.value("x", std::vector<int>{}),
                                                    rule.value("z", std::vector<int>{})};
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw PatternError(std::string("malformed pattern: ") + e.what());
    }
    return p;
}

}  // namespace qdc
