#include "qdcluster/cluster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <mutex>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace qdc {

std::string to_string(LatticeKind k) {
    switch (k) {
        case LatticeKind::TwoSpeciesPlanar: return "two-species-planar";
        case LatticeKind::PairedDotPlanar: return "paired-dot-planar";
        case LatticeKind::SqTwoLayer: return "sq-two-layer";
        case LatticeKind::SqPlanar: return "sq-planar";
    }
    return "?";
}

LatticeKind lattice_kind_from_string(const std::string& s) {
    for (auto k : {LatticeKind::TwoSpeciesPlanar, LatticeKind::PairedDotPlanar, LatticeKind::SqTwoLayer,
                   LatticeKind::SqPlanar}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    throw std::invalid_argument("unknown lattice kind '" + s + "'");
}

EncodingKind encoding_of(LatticeKind k) {
    switch (k) {
        case LatticeKind::TwoSpeciesPlanar: return EncodingKind::Bare;
        case LatticeKind::PairedDotPlanar: return EncodingKind::TwoDot;
        default: return EncodingKind::Supercoherent;
    }
}

int Lattice::site_cap(LatticeKind kind) {
    switch (encoding_of(kind)) {
        case EncodingKind::Bare: return kMaxSites;
        case EncodingKind::TwoDot: return 12;
        case EncodingKind::Supercoherent: return 16;
    }
    return 0;
}

namespace {

LogicalRegister make_register(LatticeKind kind, int rows, int cols) {
    if (rows < 1 || cols < 1) {
        throw std::invalid_argument("lattice needs at least one row and one column");
    }
    const auto enc = encoding_of(kind);
    const int per = Encoding::get(enc).sites_per_lq;
    const int need = rows * cols * per;
    if (need > Lattice::site_cap(kind)) {
        throw std::invalid_argument(std::to_string(rows) + "x" + std::to_string(cols) + " " + to_string(kind) +
                                    " lattice needs " + std::to_string(need) + " sites; the cap is " +
                                    std::to_string(Lattice::site_cap(kind)));
    }
    std::vector<std::vector<int>> map;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const int q = r * cols + c;
            if (enc == EncodingKind::TwoDot) {
                const int left = r * 2 * cols + 2 * c;
                // Site map is always [A, B]; odd rows start with B.
                map.push_back(r % 2 == 0 ? std::vector<int>{left, left + 1} : std::vector<int>{left + 1, left});
            } else {
                std::vector<int> s;
                for (int k = 0; k < per; ++k) {
                    s.push_back(q * per + k);
                }
                map.push_back(s);
            }
        }
    }
    return LogicalRegister(enc, map);
}

}  // namespace

Lattice::Lattice(LatticeKind kind, int rows, int cols)
    : kind_(kind), rows_(rows), cols_(cols), reg_(make_register(kind, rows, cols)) {
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c + 1 < cols; ++c) {
            adjacency_.push_back({lq(r, c), lq(r, c + 1), true});
        }
    }
    for (int r = 0; r + 1 < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            adjacency_.push_back({lq(r, c), lq(r + 1, c), false});
        }
    }
}

std::vector<int> Lattice::neighbors(int q) const {
    std::vector<int> out;
    for (const auto& e : adjacency_) {
        if (e.a == q) {
            out.push_back(e.b);
        } else if (e.b == q) {
            out.push_back(e.a);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

Species Lattice::species(int site) const {
    const int q = reg_.owner(site);
    switch (reg_.kind()) {
        case EncodingKind::Bare: return colored(q) ? Species::A : Species::B;
        case EncodingKind::TwoDot: return reg_.sites(q)[0] == site ? Species::A : Species::B;
        default: return Species::None;
    }
}

nlohmann::json lattice_to_json(const Lattice& l) {
    return {{"kind", to_string(l.kind())}, {"rows", l.rows()}, {"cols", l.cols()}};
}

Lattice lattice_from_json(const nlohmann::json& j) {
    for (const char* key : {"kind", "rows", "cols"}) {
        if (!j.contains(key)) {
            throw std::invalid_argument(std::string("missing field 'lattice.") + key + "'");
        }
    }
    if (!j.at("rows").is_number_integer() || !j.at("cols").is_number_integer()) {
        throw std::invalid_argument("fields 'lattice.rows' and 'lattice.cols' must be integers");
    }
    return Lattice(lattice_kind_from_string(j.at("kind").get<std::string>()), j.at("rows").get<int>(),
                   j.at("cols").get<int>());
}

// ---------------------------------------------------------------------------
// Schedules

namespace {

Coupling bare_coupling(const Lattice& l, int edge) {
    const auto& e = l.adjacency()[static_cast<std::size_t>(edge)];
    return {l.logical_register().sites(e.a)[0], l.logical_register().sites(e.b)[0], edge};
}

/// Physical dots joining two paired-dot LQs: horizontal neighbours meet at the
/// shared column boundary, vertical ones through the left-column dots.
Coupling paired_coupling(const Lattice& l, int edge) {
    const auto& e = l.adjacency()[static_cast<std::size_t>(edge)];
    const int width = 2 * l.cols();
    const int ra = l.row(e.a), ca = l.col(e.a);
    if (e.horizontal) {
        return {ra * width + 2 * ca + 1, ra * width + 2 * ca + 2, edge};
    }
    return {ra * width + 2 * ca, (ra + 1) * width + 2 * ca, edge};
}

/// SQ couplings from dot pairs (dot of a, dot of b).
void add_sq_couplings(const Lattice& l, int edge, const std::vector<std::pair<int, int>>& dots, ScheduleStep& step) {
    const auto& e = l.adjacency()[static_cast<std::size_t>(edge)];
    const auto& reg = l.logical_register();
    for (const auto& [da, db] : dots) {
        step.couplings.push_back({reg.sites(e.a)[static_cast<std::size_t>(da)],
                                  reg.sites(e.b)[static_cast<std::size_t>(db)], edge});
    }
}

}  // namespace

Schedule make_schedule(const Lattice& l) {
    Schedule s;
    s.name = "staged";
    const auto& adj = l.adjacency();
    const int n_edges = static_cast<int>(adj.size());
    switch (l.kind()) {
        case LatticeKind::TwoSpeciesPlanar: {
            // Four edge classes: horizontal from even / odd columns, vertical from even / odd rows.
            const char* labels[4] = {"horizontal-even", "horizontal-odd", "vertical-even", "vertical-odd"};
            for (int cls = 0; cls < 4; ++cls) {
                ScheduleStep step;
                step.label = labels[cls];
                for (int k = 0; k < n_edges; ++k) {
                    const auto& e = adj[static_cast<std::size_t>(k)];
                    const bool horizontal = cls < 2;
                    const int parity = cls % 2;
                    if (e.horizontal != horizontal) {
                        continue;
                    }
                    if ((horizontal ? l.col(e.a) : l.row(e.a)) % 2 == parity) {
                        step.couplings.push_back(bare_coupling(l, k));
                    }
                }
                s.steps.push_back(std::move(step));
            }
            break;
        }
        case LatticeKind::PairedDotPlanar: {
            ScheduleStep h{"horizontal", {}, {}}, v0{"vertical-even", {}, {}}, v1{"vertical-odd", {}, {}};
            for (int k = 0; k < n_edges; ++k) {
                const auto& e = adj[static_cast<std::size_t>(k)];
                auto& step = e.horizontal ? h : (l.row(e.a) % 2 == 0 ? v0 : v1);
                step.couplings.push_back(paired_coupling(l, k));
            }
            s.steps = {h, v0, v1};
            break;
        }
        case LatticeKind::SqPlanar: {
            // Vertical: dots 3,4 of the upper SQ to dots 1,2 of the lower one.
            // Then dots 1 and 4 are swapped in every SQ, the horizontal couplings
            // join dots 2,4 of the left SQ to dots 1,3 of the right one, and the
            // swap is undone.
            ScheduleStep v{"vertical", {}, {}}, h{"horizontal", {}, {{0, 3}}};
            for (int k = 0; k < n_edges; ++k) {
                if (adj[static_cast<std::size_t>(k)].horizontal) {
                    add_sq_couplings(l, k, {{1, 0}, {3, 2}}, h);
                } else {
                    add_sq_couplings(l, k, {{2, 0}, {3, 1}}, v);
                }
            }
            for (auto* step : {&v, &h}) {
                if (!step->couplings.empty()) {
                    s.steps.push_back(*step);
                }
            }
            break;
        }
        case LatticeKind::SqTwoLayer: {
            ScheduleStep h{"horizontal", {}, {}}, v{"vertical", {}, {}};
            for (int k = 0; k < n_edges; ++k) {
                const bool horizontal = adj[static_cast<std::size_t>(k)].horizontal;
                if (l.rows() * l.cols() == 2) {
                    add_sq_couplings(l, k, {{0, 0}, {1, 1}}, horizontal ? h : v);
                } else {
                    add_sq_couplings(l, k, {{2, 0}, {3, 1}}, horizontal ? h : v);
                }
            }
            for (auto* step : {&h, &v}) {
                if (!step->couplings.empty()) {
                    s.steps.push_back(*step);
                }
            }
            break;
        }
    }
    validate_schedule(l, s);
    return s;
}

Schedule make_simultaneous_schedule(const Lattice& l) {
    if (encoding_of(l.kind()) == EncodingKind::Supercoherent) {
        throw std::invalid_argument("the simultaneous control is defined for bare and paired-dot lattices");
    }
    Schedule s;
    s.name = "simultaneous";
    s.control = true;
    ScheduleStep all{"all", {}, {}};
    for (int k = 0; k < static_cast<int>(l.adjacency().size()); ++k) {
        all.couplings.push_back(l.kind() == LatticeKind::TwoSpeciesPlanar ? bare_coupling(l, k)
                                                                          : paired_coupling(l, k));
    }
    s.steps.push_back(std::move(all));
    return s;
}

Schedule permute_steps(const Schedule& s, const std::vector<int>& order) {
    std::vector<int> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        if (sorted[k] != static_cast<int>(k)) {
            break;
        }
        if (k + 1 == sorted.size() && sorted.size() == s.steps.size()) {
            Schedule out = s;
            for (std::size_t m = 0; m < order.size(); ++m) {
                out.steps[m] = s.steps[static_cast<std::size_t>(order[m])];
            }
            return out;
        }
    }
    throw ScheduleError("step order must be a permutation of 0.." + std::to_string(s.steps.size() - 1));
}

void validate_schedule(const Lattice& l, const Schedule& s) {
    if (s.control) {
        return;
    }
    const auto& reg = l.logical_register();
    std::vector<int> covered(l.adjacency().size(), 0);
    for (const auto& step : s.steps) {
        std::set<int> busy;
        std::set<int> edges;
        for (const auto& c : step.couplings) {
            if (c.edge < 0 || c.edge >= static_cast<int>(l.adjacency().size())) {
                throw ScheduleError("step '" + step.label + "' references an unknown edge");
            }
            const auto& e = l.adjacency()[static_cast<std::size_t>(c.edge)];
            const int oa = reg.owner(c.site_a), ob = reg.owner(c.site_b);
            if (!((oa == e.a && ob == e.b) || (oa == e.b && ob == e.a))) {
                throw ScheduleError("step '" + step.label + "': coupling " + std::to_string(c.site_a) + "-" +
                                    std::to_string(c.site_b) + " does not join the LQs of its edge");
            }
            for (int site : {c.site_a, c.site_b}) {
                if (!busy.insert(site).second) {
                    throw ScheduleError("step '" + step.label + "': site " + std::to_string(site) +
                                        " takes part in more than one coupling");
                }
            }
            edges.insert(c.edge);
        }
        for (int e : edges) {
            ++covered[static_cast<std::size_t>(e)];
        }
        if (!step.conjugating_swaps.empty() && reg.kind() != EncodingKind::Supercoherent) {
            throw ScheduleError("conjugating swaps are only defined for SQ lattices");
        }
    }
    for (std::size_t k = 0; k < covered.size(); ++k) {
        if (covered[k] != 1) {
            const auto& e = l.adjacency()[k];
            throw ScheduleError("edge " + std::to_string(e.a) + "-" + std::to_string(e.b) + " is covered " +
                                std::to_string(covered[k]) + " times");
        }
    }
}

nlohmann::json schedule_to_json(const Schedule& s) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& step : s.steps) {
        nlohmann::json couplings = nlohmann::json::array();
        for (const auto& c : step.couplings) {
            couplings.push_back({c.site_a, c.site_b});
        }
        nlohmann::json swaps = nlohmann::json::array();
        for (const auto& [a, b] : step.conjugating_swaps) {
            swaps.push_back({a, b});
        }
        steps.push_back({{"label", step.label}, {"couplings", couplings}, {"conjugating_swaps", swaps}});
    }
    return {{"name", s.name}, {"control", s.control}, {"steps", steps}};
}

// ---------------------------------------------------------------------------
// Building

namespace {

/// Accumulates single-LQ z byproducts and realized ZZ coefficients, and turns
/// them into the R_z corrections that leave exactly CZ on every edge.
///
/// CZ = e^{i pi/4} exp(i pi/4 ZZ) R_z(pi/2) (x) R_z(pi/2). A realized
/// exp(-i c ZZ) with c = -pi/4 + k pi/2 is exp(i pi/4 ZZ) (ZZ)^k up to phase,
/// and (ZZ)^k is R_z(k pi) on both qubits.
class ZLedger {
public:
    explicit ZLedger(int lqs) : theta_(static_cast<std::size_t>(lqs), 0.0), want_(theta_) {}

    void rz(int q, double angle) { theta_[static_cast<std::size_t>(q)] += angle; }

    void zz(int a, int b, double c) {
        const double k = std::round((c + kPi / 4.0) / (kPi / 2.0));
        for (int q : {a, b}) {
            want_[static_cast<std::size_t>(q)] += kPi / 2.0 - k * kPi;
        }
    }

    std::vector<double> corrections() const {
        std::vector<double> out(theta_.size());
        for (std::size_t q = 0; q < out.size(); ++q) {
            out[q] = std::remainder(want_[q] - theta_[q], 2.0 * kPi);
        }
        return out;
    }

private:
    std::vector<double> theta_;
    std::vector<double> want_;
};

/// U with U|0> = psi.
CMatrix preparation(const CVector& psi) {
    if (psi.size() != 2 || psi.norm() == 0.0) {
        throw std::invalid_argument("logical inputs must be nonzero 2-component vectors");
    }
    const CVector v = psi / psi.norm();
    CMatrix u(2, 2);
    u << v[0], -std::conj(v[1]), v[1], std::conj(v[0]);
    return u;
}

CMatrix plus_preparation() { return rotation_matrix(Axis::Y(), kPi / 2.0); }

double logical_leakage(const QuantumState& s, const LogicalRegister& reg) {
    if (reg.kind() == EncodingKind::Bare) {
        return 0.0;
    }
    return std::max(0.0, 1.0 - logical_overlaps(s, reg).squaredNorm());
}

double singlet_weight(const QuantumState& s, int a, int b) {
    return expectation(s, LocalOperator({a, b}, singlet_projector_matrix(), OperatorKind::Hermitian));
}

std::pair<int, int> relabel(std::pair<int, int> dots, const std::vector<std::pair<int, int>>& swaps) {
    auto map = [&](int d) {
        for (const auto& [p, q] : swaps) {
            if (d == p) {
                d = q;
            } else if (d == q) {
                d = p;
            }
        }
        return d;
    };
    return {map(dots.first), map(dots.second)};
}

struct SqEdgeCalibration {
    double plateau = 0.0;
    DiagonalDecomposition phases;
    double leakage = 0.0;
};

/// Calibrated CZ-class plateau for one dot pairing, cached per process.
SqEdgeCalibration sq_edge_calibration(const InterSqEdges& edges, const InterSqSettings& base,
                                      const EvolveOptions& opts) {
    static std::mutex mutex;
    static std::map<std::string, SqEdgeCalibration> cache;
    std::ostringstream key;
    key << std::hexfloat << base.J_peak << '|' << static_cast<int>(base.ramp.shape) << '|' << base.ramp.duration << '|' << base.ramp.peak
        << '|' << base.sq.J_intra << '|' << opts.tolerance;
    for (const auto& [a, b] : edges) {
        key << ';' << a << ',' << b;
    }
    {
        std::lock_guard<std::mutex> lock(mutex);
        auto it = cache.find(key.str());
        if (it != cache.end()) {
            return it->second;
        }
    }
    InterSqSettings s = base;
    s.edges = edges;
    s.edge_scale.clear();
    s.ramp.start = 0.0;
    s.ramp.plateau = 0.0;
    const InterSqGate gate(s, opts);
    SqEdgeCalibration cal;
    cal.plateau = gate.calibrate_cz();
    const auto eff = gate.effective(cal.plateau);
    cal.phases = diagonal_decomposition(eff.logical);
    cal.leakage = eff.leakage;
    std::lock_guard<std::mutex> lock(mutex);
    cache.emplace(key.str(), cal);
    return cal;
}

void run(QuantumState& state, const GateRecipe& r, const EvolveOptions& opts, double& clock) {
    std::vector<QuantumState> batch{state};
    run_recipe_many(batch, r, opts);
    state = std::move(batch.front());
    clock += r.total_time();
}

std::vector<int> all_lqs(const Lattice& l) {
    std::vector<int> out(static_cast<std::size_t>(l.lq_count()));
    for (int q = 0; q < l.lq_count(); ++q) {
        out[static_cast<std::size_t>(q)] = q;
    }
    return out;
}

void prepare(ClusterBuild& b, const Lattice& l, const BuildOptions& o) {
    const auto& reg = l.logical_register();
    auto target = [&](int q) {
        auto it = o.inputs.find(q);
        return it == o.inputs.end() ? plus_preparation() : preparation(it->second);
    };
    GateRecipe r("prepare", reg.n_sites());
    switch (reg.kind()) {
        case EncodingKind::Bare:
            // Global field about y; inputs get their own single-dot rotation.
            for (int q = 0; q < l.lq_count(); ++q) {
                r.gate(LocalOperator({reg.sites(q)[0]}, target(q), OperatorKind::Unitary));
            }
            break;
        case EncodingKind::TwoDot: {
            std::vector<int> plain;
            for (int q = 0; q < l.lq_count(); ++q) {
                if (o.inputs.count(q) == 0) {
                    plain.push_back(q);
                }
            }
            if (!plain.empty()) {
                // |+_L> = R_z(pi/2) R_x(pi/2) |0_L>
                r.append(two_dot_x_rotation(reg, plain, kPi / 2.0, o.two_dot));
                r.append(two_dot_z_rotation(reg, plain, kPi / 2.0, o.two_dot));
            }
            for (const auto& [q, psi] : o.inputs) {
                const auto aa = axis_angle(preparation(psi));
                if (aa.angle > 1e-15) {
                    r.append(two_dot_rotation(reg, q, aa.axis, aa.angle, o.two_dot));
                }
            }
            break;
        }
        case EncodingKind::Supercoherent: {
            std::vector<std::pair<int, CMatrix>> targets;
            for (int q = 0; q < l.lq_count(); ++q) {
                targets.emplace_back(q, target(q));
            }
            r.append(sq_logical_unitaries(reg, targets, o.inter_sq.sq));
            break;
        }
    }
    run(b.state, r, o.evolve, b.total_time);
    b.steps.push_back({"prepare", r.total_time(), logical_leakage(b.state, reg)});
}

void bare_step(ClusterBuild& b, const Lattice& l, const ScheduleStep& step, ZLedger& ledger, const BuildOptions& o) {
    const auto& reg = l.logical_register();
    CouplingModel m(reg.n_sites());
    for (const auto& c : step.couplings) {
        m.add_edge(c.site_a, c.site_b, 1.0);
    }
    GateRecipe r(step.label, reg.n_sites());
    // U1 = exp(-i pi/8 sigma.sigma), a pi pulse on every species-A dot, U1.
    r.evolve(m, kPi / 2.0, "U1");
    for (int q = 0; q < l.lq_count(); ++q) {
        if (l.colored(q)) {
            r.gate(LocalOperator({reg.sites(q)[0]}, pauli::Z(), OperatorKind::Unitary));
            ledger.rz(q, kPi);
        }
    }
    r.evolve(m, kPi / 2.0, "U1");
    for (const auto& c : step.couplings) {
        ledger.zz(reg.owner(c.site_a), reg.owner(c.site_b), kPi / 4.0);
    }
    run(b.state, r, o.evolve, b.total_time);
    b.steps.push_back({step.label, r.total_time(), 0.0});
}

void paired_step(ClusterBuild& b, const Lattice& l, const ScheduleStep& step, ZLedger& ledger, double theta,
                 const BuildOptions& o) {
    const auto& reg = l.logical_register();
    CouplingModel m(reg.n_sites());
    for (const auto& c : step.couplings) {
        m.add_edge(c.site_a, c.site_b, o.two_dot.J_inter);
    }
    GateRecipe r(step.label, reg.n_sites());
    auto sign = [&](int site) { return l.species(site) == Species::A ? 1.0 : -1.0; };
    if (o.refocus) {
        r.evolve(m, theta, "inter");
        for (const auto& c : step.couplings) {
            // Z on the edge dot of the coloured LQ; on the code space it is R_z(pi).
            const int dot = l.colored(reg.owner(c.site_a)) ? c.site_a : c.site_b;
            r.gate(LocalOperator({dot}, pauli::Z(), OperatorKind::Unitary));
            ledger.rz(reg.owner(dot), kPi);
        }
        r.evolve(m, theta, "inter");
    } else {
        r.evolve(m, 2.0 * theta, "inter-unrefocused");
    }
    for (const auto& c : step.couplings) {
        // evolve . Z_x . evolve = Z_x exp(-i (J theta / 2) Z_x Z_y), and Z_B = -Z_L.
        ledger.zz(reg.owner(c.site_a), reg.owner(c.site_b),
                  sign(c.site_a) * sign(c.site_b) * o.two_dot.J_inter * theta / 2.0);
    }
    run(b.state, r, o.evolve, b.total_time);
    b.steps.push_back({step.label, r.total_time(), logical_leakage(b.state, reg)});
}

void sq_step(ClusterBuild& b, const Lattice& l, const ScheduleStep& step, ZLedger& ledger, const BuildOptions& o) {
    const auto& reg = l.logical_register();
    const int n = reg.n_sites();
    auto dot_of = [&](int site) {
        const auto& s = reg.sites(reg.owner(site));
        return static_cast<int>(std::find(s.begin(), s.end(), site) - s.begin());
    };
    const auto lqs = all_lqs(l);
    GateRecipe r(step.label, n);
    for (const auto& pair : step.conjugating_swaps) {
        // Pairing orientation before and after the swap.
        const auto after = relabel({0, 1}, {pair});
        std::vector<double> before(static_cast<std::size_t>(l.lq_count()));
        for (int q = 0; q < l.lq_count(); ++q) {
            before[static_cast<std::size_t>(q)] = singlet_weight(b.state, reg.sites(q)[0], reg.sites(q)[1]);
        }
        run(b.state, sq_swap(reg, lqs, pair, o.swap_dJ, o.inter_sq.sq), o.evolve, b.total_time);
        for (int q = 0; q < l.lq_count(); ++q) {
            const auto& s = reg.sites(q);
            const double w = singlet_weight(b.state, s[static_cast<std::size_t>(after.first)],
                                            s[static_cast<std::size_t>(after.second)]);
            const double w0 = before[static_cast<std::size_t>(q)];
            b.pairing.push_back({q, w0, w, std::abs(w - w0) < 1e-8});
        }
        const auto one = LogicalRegister::contiguous(EncodingKind::Supercoherent, 1);
        const auto ref = run_recipe(encode(one, std::vector<int>{0}), sq_swap(one, {0}, pair, o.swap_dJ, o.inter_sq.sq),
                                    o.evolve);
        b.pairing_reference = b.pairing_reference && singlet_weight(ref, after.first, after.second) > 1.0 - 1e-8;
    }
    // Group couplings by edge; the dot pairing seen by the logical state is the
    // physical one relabelled through the conjugating swaps.
    std::map<int, InterSqEdges> pairing;
    for (const auto& c : step.couplings) {
        const auto& e = l.adjacency()[static_cast<std::size_t>(c.edge)];
        const int sa = reg.owner(c.site_a) == e.a ? c.site_a : c.site_b;
        const int sb = sa == c.site_a ? c.site_b : c.site_a;
        pairing[c.edge].push_back(relabel({dot_of(sa), dot_of(sb)}, step.conjugating_swaps));
    }
    auto m = sq_idle_model(reg, o.inter_sq.sq);
    std::map<std::string, std::string> schedule_of;
    double end = 0.0;
    for (auto& [edge, dots] : pairing) {
        std::sort(dots.begin(), dots.end());
        std::ostringstream id;
        id << "inter";
        for (const auto& [x, y] : dots) {
            id << '-' << x << y;
        }
        const auto cal = sq_edge_calibration(dots, o.inter_sq, o.evolve);
        if (m.schedules().count(id.str()) == 0) {
            RampProfile ramp = o.inter_sq.ramp;
            ramp.start = 0.0;
            ramp.plateau = cal.plateau;
            m.add_schedule(id.str(), ramp);
            end = std::max(end, ramp.end());
        }
        const auto& e = l.adjacency()[static_cast<std::size_t>(edge)];
        ledger.zz(e.a, e.b, cal.phases.alpha);
        ledger.rz(e.a, 2.0 * cal.phases.beta1);
        ledger.rz(e.b, 2.0 * cal.phases.beta2);
        schedule_of[std::to_string(edge)] = id.str();
    }
    for (const auto& c : step.couplings) {
        m.add_edge(c.site_a, c.site_b, o.inter_sq.J_peak, schedule_of.at(std::to_string(c.edge)));
    }
    r.evolve_window(m, 0.0, end, "inter-sq");
    for (const auto& pair : step.conjugating_swaps) {
        r.append(sq_swap(reg, lqs, pair, o.swap_dJ, o.inter_sq.sq));
    }
    run(b.state, r, o.evolve, b.total_time);
    b.steps.push_back({step.label, r.total_time(), logical_leakage(b.state, reg)});
}

void correct(ClusterBuild& b, const Lattice& l, const BuildOptions& o) {
    const auto& reg = l.logical_register();
    GateRecipe r("corrections", reg.n_sites());
    switch (reg.kind()) {
        case EncodingKind::Bare:
        case EncodingKind::TwoDot:
            // R_z on the single dot, or on the A dot where Z_A = Z_L.
            for (int q = 0; q < l.lq_count(); ++q) {
                r.rotate({reg.sites(q)[0]}, Axis::Z(), b.corrections[static_cast<std::size_t>(q)]);
            }
            break;
        case EncodingKind::Supercoherent: {
            std::vector<std::pair<int, CMatrix>> targets;
            for (int q = 0; q < l.lq_count(); ++q) {
                targets.emplace_back(q, rotation_matrix(Axis::Z(), b.corrections[static_cast<std::size_t>(q)]));
            }
            r.append(sq_logical_unitaries(reg, targets, o.inter_sq.sq));
            break;
        }
    }
    run(b.state, r, o.evolve, b.total_time);
    b.steps.push_back({"corrections", r.total_time(), logical_leakage(b.state, reg)});
}

}  // namespace

ClusterBuild build_cluster(const Lattice& l, const Schedule& schedule, const BuildOptions& o) {
    validate_schedule(l, schedule);
    const auto& reg = l.logical_register();
    for (const auto& [q, psi] : o.inputs) {
        if (q < 0 || q >= l.lq_count()) {
            throw std::invalid_argument("input state given for unknown LQ " + std::to_string(q));
        }
    }
    ClusterBuild b(encode(reg, std::vector<int>(static_cast<std::size_t>(l.lq_count()), 0)));
    prepare(b, l, o);
    ZLedger ledger(l.lq_count());
    double theta = 0.0;
    if (reg.kind() == EncodingKind::TwoDot) {
        theta = calibrate_two_dot_ising(o.two_dot).theta;
    }
    for (const auto& step : schedule.steps) {
        switch (reg.kind()) {
            case EncodingKind::Bare: bare_step(b, l, step, ledger, o); break;
            case EncodingKind::TwoDot: paired_step(b, l, step, ledger, theta, o); break;
            case EncodingKind::Supercoherent: sq_step(b, l, step, ledger, o); break;
        }
    }
    b.corrections = ledger.corrections();
    if (o.apply_corrections) {
        correct(b, l, o);
    }
    b.leakage = logical_leakage(b.state, reg);
    return b;
}

CVector ideal_cluster(const Lattice& l, const std::map<int, CVector>& inputs) {
    const int n = l.lq_count();
    std::vector<CVector> per(static_cast<std::size_t>(n), CVector::Constant(2, 1.0 / std::sqrt(2.0)));
    for (const auto& [q, psi] : inputs) {
        per.at(static_cast<std::size_t>(q)) = psi / psi.norm();
    }
    CVector out(static_cast<Eigen::Index>(dim_of(n)));
    for (std::size_t x = 0; x < dim_of(n); ++x) {
        cplx a = 1.0;
        for (int q = 0; q < n; ++q) {
            a *= per[static_cast<std::size_t>(q)][static_cast<Eigen::Index>((x >> q) & 1U)];
        }
        int parity = 0;
        for (const auto& e : l.adjacency()) {
            parity ^= static_cast<int>(((x >> e.a) & (x >> e.b)) & 1U);
        }
        out[static_cast<Eigen::Index>(x)] = parity ? -a : a;
    }
    return out;
}

bool StabilizerReport::all_pass() const {
    return std::all_of(pass.begin(), pass.end(), [](bool p) { return p; });
}

double StabilizerReport::min_expectation() const {
    return expectation.empty() ? 1.0 : *std::min_element(expectation.begin(), expectation.end());
}

StabilizerReport verify_stabilizers(const CVector& c, const Lattice& l, double threshold) {
    const int n = l.lq_count();
    if (c.size() != static_cast<Eigen::Index>(dim_of(n))) {
        throw std::invalid_argument("logical vector does not match the lattice");
    }
    StabilizerReport rep;
    rep.threshold = threshold;
    rep.leakage = std::max(0.0, 1.0 - c.squaredNorm());
    for (int a = 0; a < n; ++a) {
        std::size_t mask = 0;
        for (int b : l.neighbors(a)) {
            mask |= std::size_t{1} << b;
        }
        cplx acc = 0.0;
        for (std::size_t x = 0; x < dim_of(n); ++x) {
            const double sign = (std::popcount(x & mask) % 2) ? -1.0 : 1.0;
            acc += std::conj(c[static_cast<Eigen::Index>(x ^ (std::size_t{1} << a))]) * sign *
                   c[static_cast<Eigen::Index>(x)];
        }
        rep.expectation.push_back(acc.real());
        rep.pass.push_back(acc.real() >= threshold);
    }
    return rep;
}

StabilizerReport verify_stabilizers(const QuantumState& state, const Lattice& l, double threshold) {
    if (state.n_sites() != l.n_sites()) {
        throw std::invalid_argument("state does not match the lattice register");
    }
    return verify_stabilizers(logical_overlaps(state, l.logical_register()), l, threshold);
}

std::string stabilizer_csv(const StabilizerReport& r) {
    std::ostringstream out;
    out.precision(17);
    out << "lq_index,expectation,pass\n";
    for (std::size_t q = 0; q < r.expectation.size(); ++q) {
        out << q << ',' << r.expectation[q] << ',' << (r.pass[q] ? "true" : "false") << '\n';
    }
    return out.str();
}

}  // namespace qdc
