#include "qdcluster/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "detail.hpp"
#include "qdcluster/linalg.hpp"

namespace qdc {

using nlohmann::json;

// ---------------------------------------------------------------------------
// RampProfile

std::string to_string(RampShape s) {
    switch (s) {
        case RampShape::Constant: return "constant";
        case RampShape::Linear: return "linear";
        case RampShape::Smoothstep: return "smoothstep";
    }
    return "?";
}

RampShape ramp_shape_from_string(const std::string& s) {
    if (s == "constant") return RampShape::Constant;
    if (s == "linear") return RampShape::Linear;
    if (s == "smoothstep") return RampShape::Smoothstep;
    throw std::invalid_argument("unknown ramp shape '" + s + "'");
}

void RampProfile::validate() const {
    if (!(duration > 0.0) || !std::isfinite(duration)) {
        throw std::invalid_argument("ramp duration must be positive and finite");
    }
    if (plateau < 0.0 || !std::isfinite(plateau)) {
        throw std::invalid_argument("ramp plateau must be non-negative and finite");
    }
    if (!std::isfinite(peak) || !std::isfinite(start)) {
        throw std::invalid_argument("ramp peak and start must be finite");
    }
}

double RampProfile::value(double t) const {
    if (t < start || t > end()) {
        return 0.0;
    }
    if (shape == RampShape::Constant) {
        return peak;
    }
    const double rise_end = start + duration;
    const double fall_start = rise_end + plateau;
    double x = 1.0;
    if (t < rise_end) {
        x = (t - start) / duration;
    } else if (t > fall_start) {
        x = (end() - t) / duration;
    }
    if (shape == RampShape::Smoothstep) {
        x = x * x * (3.0 - 2.0 * x);
    }
    return peak * x;
}

std::vector<double> RampProfile::breakpoints() const {
    return {start, start + duration, start + duration + plateau, end()};
}

bool RampProfile::constant_on(double a, double b) const {
    if (shape == RampShape::Constant) {
        return true;
    }
    const double rise_end = start + duration;
    const double fall_start = rise_end + plateau;
    const bool before = b <= start;
    const bool after = a >= end();
    const bool on_plateau = a >= rise_end && b <= fall_start;
    return before || after || on_plateau;
}

std::string to_string(Species s) {
    switch (s) {
        case Species::None: return "none";
        case Species::A: return "A";
        case Species::B: return "B";
    }
    return "?";
}

Species species_from_string(const std::string& s) {
    if (s == "A") return Species::A;
    if (s == "B") return Species::B;
    if (s == "none" || s.empty()) return Species::None;
    throw std::invalid_argument("unknown species '" + s + "'");
}

// ---------------------------------------------------------------------------
// CouplingModel

CouplingModel::CouplingModel(int n_sites) : n_sites_(n_sites), sites_(static_cast<std::size_t>(n_sites)) {
    if (n_sites < 1 || n_sites > kMaxSites) {
        throw std::out_of_range("coupling model needs 1.." + std::to_string(kMaxSites) + " sites");
    }
}

CouplingModel& CouplingModel::add_edge(int i, int j, double J, std::string schedule) {
    if (i == j) {
        throw std::invalid_argument("edge endpoints must differ (got " + std::to_string(i) + ")");
    }
    if (i < 0 || j < 0 || i >= n_sites_ || j >= n_sites_) {
        throw std::out_of_range("edge (" + std::to_string(i) + "," + std::to_string(j) + ") outside register");
    }
    if (!std::isfinite(J)) {
        throw std::invalid_argument("edge coupling must be finite");
    }
    if (find_edge(i, j)) {
        throw std::invalid_argument("duplicate edge (" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
    edges_.push_back(Edge{i, j, J, std::move(schedule)});
    return *this;
}

CouplingModel& CouplingModel::add_schedule(const std::string& id, RampProfile profile) {
    if (id.empty()) {
        throw std::invalid_argument("schedule id must be non-empty");
    }
    profile.validate();
    schedules_[id] = profile;
    return *this;
}

CouplingModel& CouplingModel::set_field(double B_z) {
    if (!std::isfinite(B_z)) {
        throw std::invalid_argument("B_z must be finite");
    }
    B_z_ = B_z;
    return *this;
}

CouplingModel& CouplingModel::set_site(int site, SiteZeeman z) {
    if (site < 0 || site >= n_sites_) {
        throw std::out_of_range("Zeeman site outside register");
    }
    sites_[static_cast<std::size_t>(site)] = z;
    return *this;
}

double CouplingModel::coupling_at(const Edge& e, double t) const {
    if (e.schedule.empty()) {
        return e.J;
    }
    const auto it = schedules_.find(e.schedule);
    if (it == schedules_.end()) {
        throw std::invalid_argument("edge references unknown schedule '" + e.schedule + "'");
    }
    return e.J * it->second.value(t);
}

double CouplingModel::horizon() const {
    double h = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (const auto& e : edges_) {
        if (e.schedule.empty()) {
            continue;
        }
        const auto it = schedules_.find(e.schedule);
        if (it == schedules_.end()) {
            throw std::invalid_argument("edge references unknown schedule '" + e.schedule + "'");
        }
        h = std::max(h, it->second.end());
        any = true;
    }
    return any ? h : std::numeric_limits<double>::infinity();
}

std::optional<std::size_t> CouplingModel::find_edge(int i, int j) const {
    for (std::size_t k = 0; k < edges_.size(); ++k) {
        const auto& e = edges_[k];
        if ((e.i == i && e.j == j) || (e.i == j && e.j == i)) {
            return k;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

template <typename T>
T required(const json& j, const std::string& key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) {
        throw std::invalid_argument("missing field '" + where + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw std::invalid_argument("field '" + where + key + "' has the wrong type");
    }
}

template <typename T>
T optional_field(const json& j, const std::string& key, T fallback, const std::string& where) {
    if (!j.contains(key)) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw std::invalid_argument("field '" + where + key + "' has the wrong type");
    }
}

}  // namespace

void to_json(json& j, const RampProfile& r) {
    j = json{{"shape", to_string(r.shape)},
             {"duration", r.duration},
             {"plateau", r.plateau},
             {"peak", r.peak},
             {"start", r.start}};
}

void from_json(const json& j, RampProfile& r) {
    r.shape = ramp_shape_from_string(optional_field<std::string>(j, "shape", "smoothstep", "ramp."));
    r.duration = required<double>(j, "duration", "ramp.");
    r.plateau = optional_field<double>(j, "plateau", 0.0, "ramp.");
    r.peak = optional_field<double>(j, "peak", 1.0, "ramp.");
    r.start = optional_field<double>(j, "start", 0.0, "ramp.");
    r.validate();
}

json model_to_json(const CouplingModel& m) {
    json edges = json::array();
    for (const auto& e : m.edges()) {
        edges.push_back({{"i", e.i}, {"j", e.j}, {"J", e.J}, {"schedule", e.schedule}});
    }
    json sites = json::array();
    for (const auto& s : m.sites()) {
        sites.push_back({{"g", s.g}, {"species", to_string(s.species)}});
    }
    json schedules = json::object();
    for (const auto& [id, r] : m.schedules()) {
        schedules[id] = r;
    }
    return json{{"n_sites", m.n_sites()},
                {"edges", edges},
                {"zeeman", {{"B_z", m.B_z()}, {"sites", sites}}},
                {"schedules", schedules}};
}

CouplingModel model_from_json(const json& j) {
    CouplingModel m(required<int>(j, "n_sites", "model."));
    if (j.contains("schedules")) {
        for (const auto& [id, r] : j.at("schedules").items()) {
            m.add_schedule(id, r.get<RampProfile>());
        }
    }
    const json edges = optional_field<json>(j, "edges", json::array(), "model.");
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const std::string where = "model.edges[" + std::to_string(k) + "].";
        const auto& e = edges[k];
        const std::string schedule = optional_field<std::string>(e, "schedule", "", where);
        if (!schedule.empty() && !m.schedules().contains(schedule)) {
            throw std::invalid_argument("field '" + where + "schedule' names unknown schedule '" + schedule + "'");
        }
        m.add_edge(required<int>(e, "i", where), required<int>(e, "j", where), required<double>(e, "J", where),
                   schedule);
    }
    if (j.contains("zeeman")) {
        const auto& z = j.at("zeeman");
        m.set_field(optional_field<double>(z, "B_z", 0.0, "model.zeeman."));
        const json sites = optional_field<json>(z, "sites", json::array(), "model.zeeman.");
        if (!sites.empty() && static_cast<int>(sites.size()) != m.n_sites()) {
            throw std::invalid_argument("field 'model.zeeman.sites' must list every site");
        }
        for (std::size_t k = 0; k < sites.size(); ++k) {
            const std::string where = "model.zeeman.sites[" + std::to_string(k) + "].";
            m.set_site(static_cast<int>(k),
                       SiteZeeman{optional_field<double>(sites[k], "g", 0.0, where),
                                  species_from_string(optional_field<std::string>(sites[k], "species", "none", where))});
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Hamiltonian

std::vector<LocalOperator> HamiltonianTerms::to_operators() const {
    std::vector<LocalOperator> ops;
    for (const auto& p : pairs) {
        ops.emplace_back(std::vector<int>{p.i, p.j}, p.c * sigma_dot_matrix(), OperatorKind::Hermitian);
    }
    for (const auto& f : fields) {
        ops.emplace_back(std::vector<int>{f.site}, f.h * pauli::Z(), OperatorKind::Hermitian);
    }
    return ops;
}

namespace {

linalg::LocalHamiltonian as_local(const HamiltonianTerms& h) {
    return linalg::LocalHamiltonian{h.n_sites, h.pairs, h.fields};
}

void check_time(const CouplingModel& model, double t) {
    if (!std::isfinite(t) || t < 0.0 || t > model.horizon() * (1.0 + 1e-12) + 1e-12) {
        throw std::out_of_range("time " + std::to_string(t) + " outside the model's schedule horizon");
    }
}

}  // namespace

CMatrix HamiltonianTerms::dense() const { return linalg::dense_matrix(as_local(*this)); }

CVector HamiltonianTerms::apply(const CVector& psi) const { return linalg::apply(as_local(*this), psi); }

double HamiltonianTerms::expectation(const QuantumState& state) const {
    const CVector h_psi = apply(state.amplitudes());
    return state.amplitudes().dot(h_psi).real();
}

HamiltonianTerms hamiltonian_at(const CouplingModel& model, double t) {
    check_time(model, t);
    HamiltonianTerms h;
    h.n_sites = model.n_sites();
    for (const auto& e : model.edges()) {
        const double J = model.coupling_at(e, t);
        if (J != 0.0) {
            h.pairs.push_back({e.i, e.j, J / 4.0});
        }
    }
    for (int s = 0; s < model.n_sites(); ++s) {
        const double c = model.zeeman_coefficient(s);
        if (c != 0.0) {
            h.fields.push_back({s, c});
        }
    }
    return h;
}

// ---------------------------------------------------------------------------
// Evolution

namespace {

struct Component {
    std::vector<int> sites;
    std::vector<std::size_t> edges;  // indices into model.edges()
    bool time_dependent = false;
};

int find_root(std::vector<int>& parent, int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
        parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
        x = parent[static_cast<std::size_t>(x)];
    }
    return x;
}

std::vector<Component> components_on(const CouplingModel& model, double a, double b) {
    const int n = model.n_sites();
    const double mid = 0.5 * (a + b);
    std::vector<int> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    std::vector<bool> touched(static_cast<std::size_t>(n), false);
    std::vector<std::size_t> active;
    for (std::size_t k = 0; k < model.edges().size(); ++k) {
        const auto& e = model.edges()[k];
        if (model.coupling_at(e, mid) == 0.0) {
            continue;
        }
        active.push_back(k);
        touched[static_cast<std::size_t>(e.i)] = touched[static_cast<std::size_t>(e.j)] = true;
        parent[static_cast<std::size_t>(find_root(parent, e.i))] = find_root(parent, e.j);
    }
    for (int s = 0; s < n; ++s) {
        if (model.zeeman_coefficient(s) != 0.0) {
            touched[static_cast<std::size_t>(s)] = true;
        }
    }
    std::map<int, Component> by_root;
    for (int s = 0; s < n; ++s) {
        if (touched[static_cast<std::size_t>(s)]) {
            by_root[find_root(parent, s)].sites.push_back(s);
        }
    }
    for (std::size_t k : active) {
        const auto& e = model.edges()[k];
        Component& c = by_root[find_root(parent, e.i)];
        c.edges.push_back(k);
        if (!e.schedule.empty() && !model.schedules().at(e.schedule).constant_on(a, b)) {
            c.time_dependent = true;
        }
    }
    std::vector<Component> out;
    for (auto& [root, c] : by_root) {
        out.push_back(std::move(c));
    }
    return out;
}

/// Hamiltonian of one component; indices are local when `local` is set.
linalg::HamiltonianAt component_hamiltonian(const CouplingModel& model, const Component& comp, bool local) {
    std::vector<int> to_local(static_cast<std::size_t>(model.n_sites()), -1);
    for (std::size_t k = 0; k < comp.sites.size(); ++k) {
        to_local[static_cast<std::size_t>(comp.sites[k])] = static_cast<int>(k);
    }
    const int n = local ? static_cast<int>(comp.sites.size()) : model.n_sites();
    auto index = [to_local, local](int s) { return local ? to_local[static_cast<std::size_t>(s)] : s; };
    return [&model, comp, n, index](double t) {
        linalg::LocalHamiltonian h;
        h.n = n;
        for (std::size_t k : comp.edges) {
            const auto& e = model.edges()[k];
            h.pairs.push_back({index(e.i), index(e.j), model.coupling_at(e, t) / 4.0});
        }
        for (int s : comp.sites) {
            const double c = model.zeeman_coefficient(s);
            if (c != 0.0) {
                h.fields.push_back({index(s), c});
            }
        }
        return h;
    };
}

std::vector<double> pieces(const CouplingModel& model, double t0, double t1) {
    std::set<double> cuts{t0, t1};
    for (const auto& [id, r] : model.schedules()) {
        for (double b : r.breakpoints()) {
            if (b > t0 && b < t1) {
                cuts.insert(b);
            }
        }
    }
    return {cuts.begin(), cuts.end()};
}

void check_interval(const CouplingModel& model, double t0, double t1) {
    if (!(t1 >= t0)) {
        throw std::invalid_argument("evolution end time precedes start time");
    }
    check_time(model, t0);
    check_time(model, t1);
}

CMatrix component_propagator(const CouplingModel& model, const Component& comp, double a, double b,
                             const EvolveOptions& options) {
    const auto h = component_hamiltonian(model, comp, true);
    if (comp.time_dependent) {
        return linalg::propagate_dense(h, a, b, options.tolerance, options.max_steps);
    }
    return linalg::expm_hermitian(h(0.5 * (a + b)), b - a);
}

/// Key identifying a component's local Hamiltonian over [a, b]. Components
/// with equal keys share a propagator.
std::string component_key(const CouplingModel& model, const Component& comp, double a, double b) {
    std::vector<int> to_local(static_cast<std::size_t>(model.n_sites()), -1);
    for (std::size_t k = 0; k < comp.sites.size(); ++k) {
        to_local[static_cast<std::size_t>(comp.sites[k])] = static_cast<int>(k);
    }
    std::ostringstream key;
    key << std::hexfloat << comp.sites.size() << '|' << a << '|' << b << '|' << comp.time_dependent;
    for (std::size_t k : comp.edges) {
        const auto& e = model.edges()[k];
        key << ';' << to_local[static_cast<std::size_t>(e.i)] << ',' << to_local[static_cast<std::size_t>(e.j)]
            << ',' << e.J;
        if (!e.schedule.empty()) {
            const auto& r = model.schedules().at(e.schedule);
            key << ',' << static_cast<int>(r.shape) << ',' << r.duration << ',' << r.plateau << ',' << r.peak << ','
                << r.start;
        }
    }
    for (int site : comp.sites) {
        key << ';' << model.zeeman_coefficient(site);
    }
    return key.str();
}

}  // namespace

void evolve_many(std::vector<QuantumState>& states, const CouplingModel& model, double t0, double t1,
                 const EvolveOptions& options) {
    for (const auto& s : states) {
        if (s.n_sites() != model.n_sites()) {
            throw std::invalid_argument("state and coupling model have different site counts");
        }
    }
    check_interval(model, t0, t1);
    const auto cuts = pieces(model, t0, t1);
    for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
        const double a = cuts[p];
        const double b = cuts[p + 1];
        std::map<std::string, CMatrix> shared;
        for (const auto& comp : components_on(model, a, b)) {
            if (static_cast<int>(comp.sites.size()) <= options.dense_limit) {
                const auto key = component_key(model, comp, a, b);
                auto it = shared.find(key);
                if (it == shared.end()) {
                    it = shared.emplace(key, component_propagator(model, comp, a, b, options)).first;
                }
                const CMatrix& u = it->second;
                for (auto& s : states) {
                    apply_inplace(s, comp.sites, u);
                }
            } else {
                const auto h = component_hamiltonian(model, comp, false);
                for (auto& s : states) {
                    s.mutable_amplitudes() = linalg::propagate_krylov(h, s.amplitudes(), a, b, comp.time_dependent,
                                                                      options.tolerance, options.max_steps);
                }
            }
        }
    }
    for (auto& s : states) {
        const double drift = std::abs(s.norm() - 1.0);
        if (drift > 1e-10) {
            throw ToleranceError("norm drifted by " + std::to_string(drift) + " during evolution");
        }
        s.renormalize();
    }
}

QuantumState evolve(const QuantumState& state, const CouplingModel& model, double t0, double t1,
                    const EvolveOptions& options) {
    std::vector<QuantumState> batch{state};
    evolve_many(batch, model, t0, t1, options);
    return std::move(batch.front());
}

CMatrix propagator(const CouplingModel& model, double t0, double t1, const EvolveOptions& options) {
    if (model.n_sites() > options.dense_limit) {
        throw std::invalid_argument("full propagator requested for a register above the dense limit");
    }
    check_interval(model, t0, t1);
    const auto d = static_cast<Eigen::Index>(dim_of(model.n_sites()));
    CMatrix u = CMatrix::Identity(d, d);
    const auto cuts = pieces(model, t0, t1);
    for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
        for (const auto& comp : components_on(model, cuts[p], cuts[p + 1])) {
            const CMatrix cu = component_propagator(model, comp, cuts[p], cuts[p + 1], options);
            for (Eigen::Index c = 0; c < d; ++c) {
                detail::apply_kernel(u.col(c).data(), model.n_sites(), comp.sites, cu);
            }
        }
    }
    return u;
}

std::vector<Level> spectrum(const CouplingModel& model, double t, int k) {
    if (model.n_sites() > 12) {
        throw std::invalid_argument("spectrum is limited to 12 sites");
    }
    if (k < 1 || static_cast<std::size_t>(k) > dim_of(model.n_sites())) {
        throw std::invalid_argument("k = " + std::to_string(k) + " exceeds the Hilbert-space dimension");
    }
    const auto values = linalg::eigenvalues(as_local(hamiltonian_at(model, t)));
    std::vector<Level> levels;
    for (double v : values) {
        if (!levels.empty() && std::abs(v - levels.back().energy) <= 1e-9) {
            ++levels.back().degeneracy;
        } else {
            levels.push_back({v, 1});
        }
    }
    // Report each level by the mean of its merged members.
    std::size_t pos = 0;
    for (auto& lvl : levels) {
        double s = 0.0;
        for (int q = 0; q < lvl.degeneracy; ++q) {
            s += values[pos++];
        }
        lvl.energy = s / lvl.degeneracy;
    }
    if (levels.size() > static_cast<std::size_t>(k)) {
        levels.resize(static_cast<std::size_t>(k));
    }
    return levels;
}

CMatrix ground_space(const CouplingModel& model, double t) {
    if (model.n_sites() > 12) {
        throw std::invalid_argument("ground_space is limited to 12 sites");
    }
    return linalg::lowest_eigenspace(as_local(hamiltonian_at(model, t)), 1e-9);
}

}  // namespace qdc
