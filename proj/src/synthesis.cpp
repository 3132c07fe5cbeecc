#include "qdcluster/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "qdcluster/linalg.hpp"

namespace qdc {

// ---------------------------------------------------------------------------
// GateRecipe

GateRecipe::GateRecipe(std::string name, int n_sites) : name_(std::move(name)), n_sites_(n_sites) {
    if (n_sites < 1 || n_sites > kMaxSites) {
        throw std::out_of_range("recipe site count out of range");
    }
}

GateRecipe& GateRecipe::evolve(const CouplingModel& model, double duration, std::string label) {
    return evolve_window(model, 0.0, duration, std::move(label));
}

GateRecipe& GateRecipe::evolve_window(const CouplingModel& model, double t0, double t1, std::string label) {
    if (model.n_sites() != n_sites_) {
        throw std::invalid_argument("evolve step model has the wrong number of sites");
    }
    if (!(t1 >= t0) || !std::isfinite(t1 - t0)) {
        throw std::invalid_argument("evolve step needs a finite non-negative duration");
    }
    if (t1 > t0) {
        steps_.emplace_back(EvolveStep{model, t0, t1, std::move(label)});
    }
    return *this;
}

GateRecipe& GateRecipe::rotate(std::vector<int> sites, const Axis& axis, double angle) {
    for (int s : sites) {
        if (s < 0 || s >= n_sites_) {
            throw std::out_of_range("rotation site " + std::to_string(s) + " not registered");
        }
    }
    steps_.emplace_back(LocalRotationStep{std::move(sites), axis.normalized(), angle});
    return *this;
}

GateRecipe& GateRecipe::gate(const LocalOperator& op) {
    if (op.kind() != OperatorKind::Unitary) {
        throw std::invalid_argument("recipe gates must be unitary");
    }
    for (int s : op.support()) {
        if (s >= n_sites_) {
            throw std::out_of_range("gate site " + std::to_string(s) + " not registered");
        }
    }
    steps_.emplace_back(LocalGateStep{op});
    return *this;
}

GateRecipe& GateRecipe::logical_rotation(std::vector<int> sites, EncodingKind enc, const Axis& axis, double angle) {
    if (static_cast<int>(sites.size()) != Encoding::get(enc).sites_per_lq) {
        throw std::invalid_argument("logical rotation block has the wrong size");
    }
    for (int s : sites) {
        if (s < 0 || s >= n_sites_) {
            throw std::out_of_range("logical rotation site " + std::to_string(s) + " not registered");
        }
    }
    steps_.emplace_back(LogicalRotationStep{std::move(sites), enc, axis.normalized(), angle});
    return *this;
}

GateRecipe& GateRecipe::append(const GateRecipe& other) {
    if (other.n_sites_ != n_sites_) {
        throw std::invalid_argument("cannot append a recipe over a different register");
    }
    steps_.insert(steps_.end(), other.steps_.begin(), other.steps_.end());
    return *this;
}

double GateRecipe::total_time() const {
    double t = 0.0;
    for (const auto& s : steps_) {
        if (const auto* e = std::get_if<EvolveStep>(&s)) {
            t += e->t1 - e->t0;
        }
    }
    return t;
}

namespace {

nlohmann::json axis_json(const Axis& a) { return nlohmann::json::array({a.x, a.y, a.z}); }

}  // namespace

nlohmann::json recipe_to_json(const GateRecipe& recipe) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : recipe.steps()) {
        std::visit(
            [&](const auto& step) {
                using T = std::decay_t<decltype(step)>;
                if constexpr (std::is_same_v<T, EvolveStep>) {
                    steps.push_back({{"kind", "evolve"},
                                     {"label", step.label},
                                     {"t0", step.t0},
                                     {"t1", step.t1},
                                     {"model", model_to_json(step.model)}});
                } else if constexpr (std::is_same_v<T, LocalRotationStep>) {
                    steps.push_back({{"kind", "local-rotation"},
                                     {"sites", step.sites},
                                     {"axis", axis_json(step.axis)},
                                     {"angle", step.angle}});
                } else if constexpr (std::is_same_v<T, LocalGateStep>) {
                    steps.push_back({{"kind", "local-gate"}, {"sites", step.op.support()}});
                } else {
                    steps.push_back({{"kind", "logical-rotation"},
                                     {"sites", step.sites},
                                     {"encoding", to_string(step.encoding)},
                                     {"axis", axis_json(step.axis)},
                                     {"angle", step.angle}});
                }
            },
            s);
    }
    return {{"name", recipe.name()}, {"n_sites", recipe.n_sites()}, {"steps", steps}};
}

void run_recipe_many(std::vector<QuantumState>& states, const GateRecipe& recipe, const EvolveOptions& opts) {
    for (const auto& s : states) {
        if (s.n_sites() != recipe.n_sites()) {
            throw std::invalid_argument("state does not match the recipe register");
        }
    }
    for (const auto& step : recipe.steps()) {
        std::visit(
            [&](const auto& st) {
                using T = std::decay_t<decltype(st)>;
                if constexpr (std::is_same_v<T, EvolveStep>) {
                    evolve_many(states, st.model, st.t0, st.t1, opts);
                } else if constexpr (std::is_same_v<T, LocalRotationStep>) {
                    const CMatrix r = rotation_matrix(st.axis, st.angle);
                    for (auto& s : states) {
                        for (int site : st.sites) {
                            const int sup[1] = {site};
                            apply_inplace(s, sup, r);
                        }
                    }
                } else if constexpr (std::is_same_v<T, LocalGateStep>) {
                    for (auto& s : states) {
                        apply_inplace(s, st.op.support(), st.op.matrix());
                    }
                } else {
                    const CMatrix u = Encoding::get(st.encoding).embed(rotation_matrix(st.axis, st.angle));
                    for (auto& s : states) {
                        apply_inplace(s, st.sites, u);
                    }
                }
            },
            step);
    }
}

QuantumState run_recipe(const QuantumState& state, const GateRecipe& recipe, const EvolveOptions& opts) {
    std::vector<QuantumState> batch{state};
    run_recipe_many(batch, recipe, opts);
    return std::move(batch.front());
}

CMatrix recipe_unitary(const GateRecipe& recipe, const EvolveOptions& opts) {
    if (recipe.n_sites() > 10) {
        throw std::invalid_argument("recipe_unitary is limited to 10 sites");
    }
    const auto d = dim_of(recipe.n_sites());
    std::vector<QuantumState> cols;
    cols.reserve(d);
    for (std::size_t k = 0; k < d; ++k) {
        cols.push_back(QuantumState::basis(recipe.n_sites(), k));
    }
    run_recipe_many(cols, recipe, opts);
    CMatrix u(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < d; ++k) {
        u.col(static_cast<Eigen::Index>(k)) = cols[k].amplitudes();
    }
    return u;
}

// ---------------------------------------------------------------------------
// Effective unitaries and diagnostics

namespace {

std::vector<QuantumState> logical_inputs(const LogicalRegister& reg) {
    std::vector<QuantumState> in;
    const std::size_t ldim = std::size_t{1} << reg.lq_count();
    for (std::size_t x = 0; x < ldim; ++x) {
        CVector v = CVector::Zero(static_cast<Eigen::Index>(ldim));
        v[static_cast<Eigen::Index>(x)] = 1.0;
        in.push_back(encode(reg, v));
    }
    return in;
}

EffectiveUnitary assemble(const std::vector<CVector>& overlaps) {
    const auto ldim = static_cast<Eigen::Index>(overlaps.size());
    CMatrix m(ldim, ldim);
    double leakage = 0.0;
    for (Eigen::Index x = 0; x < ldim; ++x) {
        m.col(x) = overlaps[static_cast<std::size_t>(x)];
        leakage = std::max(leakage, std::clamp(1.0 - m.col(x).squaredNorm(), 0.0, 1.0));
    }
    if (leakage >= 0.5) {
        throw LeakageError("logical leakage " + std::to_string(leakage) + " too large to extract a gate", leakage);
    }
    return {remove_global_phase(m), leakage, true};
}

}  // namespace

EffectiveUnitary extract_logical_unitary(const GateRecipe& recipe, const LogicalRegister& reg,
                                         const EvolveOptions& opts) {
    if (recipe.n_sites() != reg.n_sites()) {
        throw std::invalid_argument("recipe and register sizes differ");
    }
    auto states = logical_inputs(reg);
    run_recipe_many(states, recipe, opts);
    std::vector<CVector> overlaps;
    for (const auto& s : states) {
        overlaps.push_back(logical_overlaps(s, reg));
    }
    return assemble(overlaps);
}

EffectiveUnitary effective_from_unitary(const CMatrix& u, const LogicalRegister& reg) {
    if (u.rows() != static_cast<Eigen::Index>(dim_of(reg.n_sites()))) {
        throw std::invalid_argument("unitary dimension does not match register");
    }
    std::vector<CVector> overlaps;
    for (const auto& s : logical_inputs(reg)) {
        overlaps.push_back(logical_overlaps(QuantumState(reg.n_sites(), u * s.amplitudes()), reg));
    }
    return assemble(overlaps);
}

CMatrix remove_global_phase(const CMatrix& u) {
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
        for (Eigen::Index c = 0; c < u.cols(); ++c) {
            if (std::abs(u(r, c)) > 1e-8) {
                return u * std::polar(1.0, -std::arg(u(r, c)));
            }
        }
    }
    return u;
}

double operator_norm(const CMatrix& m) {
    Eigen::JacobiSVD<CMatrix> svd(m);
    return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
}

double phase_invariant_distance(const CMatrix& u, const CMatrix& v) {
    const cplx t = (v.adjoint() * u).trace();
    const cplx ph = std::abs(t) > 0.0 ? t / std::abs(t) : cplx(1.0);
    return operator_norm(u - ph * v);
}

double gate_infidelity(const CMatrix& u, const CMatrix& target) {
    const double d = static_cast<double>(u.rows());
    const cplx t = (target.adjoint() * u).trace() / d;
    return std::max(0.0, 1.0 - std::norm(t));
}

LocalInvariants local_invariants(const CMatrix& u) {
    if (u.rows() != 4 || u.cols() != 4) {
        throw std::invalid_argument("local invariants need a 4x4 matrix");
    }
    const double s = 1.0 / std::sqrt(2.0);
    CMatrix q(4, 4);
    q << s, 0, 0, cplx(0, s),  //
        0, cplx(0, s), s, 0,    //
        0, cplx(0, s), -s, 0,   //
        s, 0, 0, cplx(0, -s);
    const CMatrix ub = q.adjoint() * u * q;
    const CMatrix m = ub.transpose() * ub;
    const cplx det = u.determinant();
    const cplx tr = m.trace();
    const cplx tr2 = (m * m).trace();
    return {tr * tr / (16.0 * det), ((tr * tr - tr2) / (4.0 * det)).real()};
}

double invariant_distance(const LocalInvariants& a, const LocalInvariants& b) {
    return std::abs(a.G1 - b.G1) + std::abs(a.G2 - b.G2);
}

bool same_local_class(const LocalInvariants& a, const LocalInvariants& b, double tol) {
    return std::abs(a.G1 - b.G1) < tol && std::abs(a.G2 - b.G2) < tol;
}

LocalInvariants cz_class() { return {cplx(0.0), 1.0}; }

namespace {

/// SO(3) image of a unit vector under the SU(2) action of u.
std::array<double, 3> rotate_vector(const CMatrix& u, const Axis& v) {
    const CMatrix m = u * (v.x * pauli::X() + v.y * pauli::Y() + v.z * pauli::Z()) * u.adjoint();
    return {(m * pauli::X()).trace().real() / 2.0, (m * pauli::Y()).trace().real() / 2.0,
            (m * pauli::Z()).trace().real() / 2.0};
}

}  // namespace

AxisAngle axis_angle(const CMatrix& u2) {
    CMatrix v = u2 / std::sqrt(u2.determinant());
    if (v.trace().real() < 0.0) {
        v = -v;
    }
    const double c = std::clamp(v.trace().real() / 2.0, -1.0, 1.0);
    const double angle = 2.0 * std::acos(c);
    const double s = std::sin(angle / 2.0);
    if (s < 1e-14) {
        return {Axis::Z(), 0.0};
    }
    Axis n{-(v * pauli::X()).trace().imag() / (2.0 * s), -(v * pauli::Y()).trace().imag() / (2.0 * s),
           -(v * pauli::Z()).trace().imag() / (2.0 * s)};
    return {n.normalized(), angle};
}

DiagonalDecomposition diagonal_decomposition(const CMatrix& u4) {
    if (u4.rows() != 4 || u4.cols() != 4) {
        throw std::invalid_argument("diagonal decomposition needs a 4x4 matrix");
    }
    const cplx d0 = u4(0, 0), d1 = u4(1, 1), d2 = u4(2, 2), d3 = u4(3, 3);
    DiagonalDecomposition out;
    out.alpha = -std::arg(d0 * d3 * std::conj(d1) * std::conj(d2)) / 4.0;
    out.beta1 = -std::arg(d0 * d2 * std::conj(d1) * std::conj(d3)) / 4.0;
    out.beta2 = -std::arg(d0 * d1 * std::conj(d2) * std::conj(d3)) / 4.0;
    // Each coefficient is only fixed modulo pi/2 on its own; pick the fewest
    // pi/2 shifts that reproduce the diagonal up to a global phase.
    const cplx d[4] = {d0, d1, d2, d3};
    double best = std::numeric_limits<double>::infinity();
    DiagonalDecomposition pick = out;
    for (int shift : {0, 1, 2, 4, 3, 5, 6, 7}) {
        const double a = out.alpha + ((shift & 1) ? kPi / 2.0 : 0.0);
        const double b1 = out.beta1 + ((shift & 2) ? kPi / 2.0 : 0.0);
        const double b2 = out.beta2 + ((shift & 4) ? kPi / 2.0 : 0.0);
        cplx ref = 0.0;
        double spread = 0.0;
        for (int k = 0; k < 4; ++k) {
            const double z0 = (k & 1) ? -1.0 : 1.0, z1 = (k & 2) ? -1.0 : 1.0;
            const cplx r = d[k] * std::polar(1.0, a * z0 * z1 + b1 * z0 + b2 * z1) / std::max(std::abs(d[k]), 1e-300);
            if (k == 0) {
                ref = r;
            }
            spread = std::max(spread, std::abs(r - ref));
        }
        if (spread < best - 1e-9) {
            best = spread;
            pick.alpha = a;
            pick.beta1 = b1;
            pick.beta2 = b2;
        }
    }
    out = pick;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            if (r != c) {
                out.offdiag = std::max(out.offdiag, std::abs(u4(r, c)));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Calibration

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out;
    if (n == 1) {
        return {a};
    }
    for (int k = 0; k < n; ++k) {
        out.push_back(a + (b - a) * k / (n - 1));
    }
    return out;
}

namespace {

std::pair<double, double> golden(const std::function<double(double)>& f, double lo, double hi, double xtol) {
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > xtol * std::max(1.0, std::abs(a) + std::abs(b))) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    return fc <= fd ? std::pair{c, fc} : std::pair{d, fd};
}

}  // namespace

CalibrationResult calibrate(const std::function<double(double)>& objective, const std::vector<double>& grid,
                            double accept, double xtol) {
    if (grid.empty()) {
        throw std::invalid_argument("calibration grid is empty");
    }
    CalibrationResult res;
    std::size_t best = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double v = objective(grid[k]);
        res.trace.emplace_back(grid[k], v);
        const double bv = res.trace[best].second;
        // Strictly better wins; on ties keep the lower parameter.
        if (v < bv || (v == bv && grid[k] < grid[best])) {
            best = k;
        }
    }
    if (!(res.trace[best].second < accept)) {
        throw CalibrationError("no grid point reached objective below " + std::to_string(accept), res.trace);
    }
    double x = grid[best];
    double fx = res.trace[best].second;
    if (grid.size() > 1) {
        const double lo = grid[best == 0 ? 0 : best - 1];
        const double hi = grid[std::min(best + 1, grid.size() - 1)];
        const auto [gx, gf] = golden(objective, lo, hi, xtol);
        if (gf < fx) {
            x = gx;
            fx = gf;
        }
    }
    res.parameters = {x};
    res.objective = fx;
    return res;
}

CalibrationResult calibrate2(const std::function<double(double, double)>& objective, const std::vector<double>& grid_a,
                             const std::vector<double>& grid_b, double accept, double xtol) {
    if (grid_a.empty() || grid_b.empty()) {
        throw std::invalid_argument("calibration grid is empty");
    }
    double best = std::numeric_limits<double>::infinity();
    std::size_t ia = 0, ib = 0;
    CalibrationResult res;
    for (std::size_t i = 0; i < grid_a.size(); ++i) {
        for (std::size_t j = 0; j < grid_b.size(); ++j) {
            const double v = objective(grid_a[i], grid_b[j]);
            if (v < best) {
                best = v;
                ia = i;
                ib = j;
            }
        }
    }
    if (!(best < accept)) {
        throw CalibrationError("no grid point reached objective below " + std::to_string(accept), {});
    }
    double a = grid_a[ia], b = grid_b[ib];
    double step_a = grid_a.size() > 1 ? std::abs(grid_a[1] - grid_a[0]) : 0.0;
    double step_b = grid_b.size() > 1 ? std::abs(grid_b[1] - grid_b[0]) : 0.0;
    for (int round = 0; round < 6; ++round) {
        if (step_a > 0.0) {
            const auto [x, f] = golden([&](double t) { return objective(t, b); }, a - step_a, a + step_a, xtol);
            if (f <= best) {
                a = x;
                best = f;
            }
        }
        if (step_b > 0.0) {
            const auto [x, f] = golden([&](double t) { return objective(a, t); }, b - step_b, b + step_b, xtol);
            if (f <= best) {
                b = x;
                best = f;
            }
        }
        step_a /= 4.0;
        step_b /= 4.0;
    }
    res.parameters = {a, b};
    res.objective = best;
    return res;
}

// ---------------------------------------------------------------------------
// Bare dots

GateRecipe ising_from_heisenberg(int a, int b, int n_sites) {
    CouplingModel m(n_sites);
    m.add_edge(a, b, 1.0);
    GateRecipe r("ising-from-heisenberg", n_sites);
    // J = 1 for t = pi/2 gives exp(-i pi/8 sigma.sigma).
    r.evolve(m, kPi / 2.0, "U1");
    r.gate(LocalOperator({a}, pauli::Z(), OperatorKind::Unitary));  // pi rotation about z, up to phase
    r.evolve(m, kPi / 2.0, "U1");
    return r;
}

GateRecipe swap_pair(int a, int b, double dJ, int n_sites) {
    if (!(dJ > 0.0)) {
        throw std::invalid_argument("swap_pair needs dJ > 0");
    }
    CouplingModel m(n_sites);
    m.add_edge(a, b, dJ);
    GateRecipe r("swap-pair", n_sites);
    r.evolve(m, kPi / dJ, "swap");
    return r;
}

// ---------------------------------------------------------------------------
// Two-dot code

namespace {

double wrap_positive(double angle) {
    double a = std::fmod(angle, 2.0 * kPi);
    if (a < 0.0) {
        a += 2.0 * kPi;
    }
    return a;
}

void require(const LogicalRegister& reg, EncodingKind kind) {
    if (reg.kind() != kind) {
        throw std::invalid_argument("operation needs a " + to_string(kind) + " register");
    }
}

/// Euler angles with u proportional to R_z(a) R_y(b) R_z(c).
std::array<double, 3> euler_zyz(const CMatrix& u) {
    const CMatrix v = u / std::sqrt(u.determinant());
    const double b = 2.0 * std::atan2(std::abs(v(1, 0)), std::abs(v(0, 0)));
    const double sum = 2.0 * std::arg(v(1, 1));
    const double diff = std::abs(v(1, 0)) > 1e-12 ? 2.0 * std::arg(v(1, 0)) : 0.0;
    return {(sum + diff) / 2.0, b, (sum - diff) / 2.0};
}

}  // namespace

GateRecipe two_dot_x_rotation(const LogicalRegister& reg, const std::vector<int>& lqs, double angle,
                              const TwoDotParams& p) {
    require(reg, EncodingKind::TwoDot);
    CouplingModel m(reg.n_sites());
    for (int q : lqs) {
        m.add_edge(reg.sites(q)[0], reg.sites(q)[1], p.J_intra);
    }
    GateRecipe r("two-dot-x", reg.n_sites());
    r.evolve(m, wrap_positive(angle) / p.J_intra, "intra");
    return r;
}

GateRecipe two_dot_z_rotation(const LogicalRegister& reg, const std::vector<int>& lqs, double angle,
                              const TwoDotParams& p) {
    require(reg, EncodingKind::TwoDot);
    const double rate = p.B_z * (p.g_A - p.g_B);
    if (rate == 0.0) {
        throw std::invalid_argument("z rotations need B_z != 0 and g_A != g_B");
    }
    CouplingModel m(reg.n_sites());
    m.set_field(p.B_z);
    for (int q : lqs) {
        m.set_site(reg.sites(q)[0], {p.g_A, Species::A});
        m.set_site(reg.sites(q)[1], {p.g_B, Species::B});
    }
    GateRecipe r("two-dot-z", reg.n_sites());
    r.evolve(m, wrap_positive(rate > 0 ? angle : -angle) / std::abs(rate), "zeeman");
    return r;
}

GateRecipe two_dot_rotation(const LogicalRegister& reg, int lq, const Axis& axis, double angle,
                            const TwoDotParams& p) {
    // R_y(b) = R_z(pi/2) R_x(b) R_z(-pi/2)
    const auto [a, b, c] = euler_zyz(rotation_matrix(axis, angle));
    GateRecipe r("two-dot-rotation", reg.n_sites());
    r.append(two_dot_z_rotation(reg, {lq}, c - kPi / 2.0, p));
    r.append(two_dot_x_rotation(reg, {lq}, b, p));
    r.append(two_dot_z_rotation(reg, {lq}, a + kPi / 2.0, p));
    return r;
}

GateRecipe two_dot_ising(int n_sites, std::pair<int, int> edge, int refocus_site, double theta, bool refocus,
                         const TwoDotParams& p) {
    CouplingModel m(n_sites);
    m.add_edge(edge.first, edge.second, p.J_inter);
    GateRecipe r(refocus ? "two-dot-ising" : "two-dot-ising-unrefocused", n_sites);
    if (refocus) {
        r.evolve(m, theta, "inter");
        r.gate(LocalOperator({refocus_site}, pauli::Z(), OperatorKind::Unitary));
        r.evolve(m, theta, "inter");
    } else {
        r.evolve(m, 2.0 * theta, "inter");
    }
    return r;
}

TwoDotIsingResult calibrate_two_dot_ising(const TwoDotParams& p, int grid_points) {
    const auto reg = LogicalRegister::contiguous(EncodingKind::TwoDot, 2);
    const std::pair<int, int> edge{reg.sites(0)[1], reg.sites(1)[0]};
    const int refocus = reg.sites(1)[0];
    auto objective = [&](double theta) {
        const auto eff = extract_logical_unitary(two_dot_ising(reg.n_sites(), edge, refocus, theta, true, p), reg);
        return invariant_distance(local_invariants(eff.logical), cz_class()) + eff.leakage;
    };
    const auto cal = calibrate(objective, linspace(0.0, kPi / p.J_inter, grid_points));
    const double theta = cal.parameters[0];
    auto recipe = two_dot_ising(reg.n_sites(), edge, refocus, theta, true, p);
    auto eff = extract_logical_unitary(recipe, reg);
    return {recipe, eff, theta, local_invariants(eff.logical), cal.trace};
}

// ---------------------------------------------------------------------------
// Supercoherent code

CouplingModel sq_idle_model(const LogicalRegister& reg, const SqParams& p) {
    require(reg, EncodingKind::Supercoherent);
    CouplingModel m(reg.n_sites());
    for (int q = 0; q < reg.lq_count(); ++q) {
        const auto& s = reg.sites(q);
        for (int a = 0; a < 4; ++a) {
            for (int b = a + 1; b < 4; ++b) {
                m.add_edge(s[a], s[b], p.J_intra);
            }
        }
    }
    return m;
}

Axis sq_pair_axis(int a, int b) {
    static const auto reg = LogicalRegister::contiguous(EncodingKind::Supercoherent, 1);
    const CMatrix m = projected_operator(sigma_dot_op(a, b), reg).matrix;
    Axis n{(m * pauli::X()).trace().real() / 2.0, (m * pauli::Y()).trace().real() / 2.0,
           (m * pauli::Z()).trace().real() / 2.0};
    return n.normalized();
}

namespace {

void bump_edge(CouplingModel& m, int i, int j, double dJ) {
    const auto e = m.find_edge(i, j);
    if (!e) {
        throw std::invalid_argument("no intra-SQ edge between sites " + std::to_string(i) + " and " +
                                    std::to_string(j));
    }
    m.mutable_edges()[*e].J += dJ;
}

}  // namespace

GateRecipe sq_rotation(const LogicalRegister& reg, int lq, std::pair<int, int> pair, double dJ, double duration,
                       const SqParams& p) {
    require(reg, EncodingKind::Supercoherent);
    if (dJ <= -p.J_intra) {
        throw std::invalid_argument("dJ <= -J closes the supercoherent gap");
    }
    auto m = sq_idle_model(reg, p);
    const auto& s = reg.sites(lq);
    bump_edge(m, s.at(static_cast<std::size_t>(pair.first)), s.at(static_cast<std::size_t>(pair.second)), dJ);
    GateRecipe r("sq-rotation", reg.n_sites());
    r.evolve(m, duration, "sq-rotation");
    return r;
}

namespace {

struct TwoAxisPlan {
    // Time-ordered (use_w, angle) rotations.
    std::vector<std::pair<bool, double>> steps;
};

/// u proportional to [R_w(pi)] R_u(a) R_w(b) R_u(c), applied right to left.
TwoAxisPlan two_axis_decomposition(const CMatrix& target, const Axis& u, const Axis& w) {
    TwoAxisPlan plan;
    CMatrix rest = target;
    const double uw = u.dot(w);
    auto image = [&](const CMatrix& m) {
        const auto v = rotate_vector(m, u);
        return Axis{v[0], v[1], v[2]};
    };
    bool flip = false;
    if (image(rest).dot(u) < 2.0 * uw * uw - 1.0 + 1e-12) {
        rest = rotation_matrix(w, -kPi) * rest;
        flip = true;
    }
    const Axis v = image(rest);
    const double cb = std::clamp((v.dot(u) - uw * uw) / (1.0 - uw * uw), -1.0, 1.0);
    const double b = std::acos(cb);
    const auto pv = rotate_vector(rotation_matrix(w, b), u);
    const Axis pvec{pv[0], pv[1], pv[2]};
    // Components orthogonal to u.
    auto perp = [&](const Axis& x) {
        const double d = x.dot(u);
        return Axis{x.x - d * u.x, x.y - d * u.y, x.z - d * u.z};
    };
    const Axis pp = perp(pvec), vp = perp(v);
    const Axis cross{pp.y * vp.z - pp.z * vp.y, pp.z * vp.x - pp.x * vp.z, pp.x * vp.y - pp.y * vp.x};
    const double a = (pp.norm() < 1e-12 || vp.norm() < 1e-12) ? 0.0 : std::atan2(cross.dot(u), pp.dot(vp));
    const CMatrix left = rotation_matrix(u, a) * rotation_matrix(w, b);
    const auto aa = axis_angle(left.adjoint() * rest);
    const double c = aa.axis.dot(u) >= 0.0 ? aa.angle : -aa.angle;
    plan.steps = {{false, c}, {true, b}, {false, a}};
    if (flip) {
        plan.steps.emplace_back(true, kPi);
    }
    return plan;
}

}  // namespace

GateRecipe sq_logical_unitaries(const LogicalRegister& reg, const std::vector<std::pair<int, CMatrix>>& targets,
                                const SqParams& p) {
    require(reg, EncodingKind::Supercoherent);
    const std::pair<int, int> pair_u{0, 1}, pair_w{1, 2};
    const Axis u = sq_pair_axis(pair_u.first, pair_u.second);
    const Axis w = sq_pair_axis(pair_w.first, pair_w.second);
    std::vector<std::pair<int, TwoAxisPlan>> plans;
    std::size_t segments = 0;
    for (const auto& [lq, target] : targets) {
        plans.emplace_back(lq, two_axis_decomposition(target, u, w));
        segments = std::max(segments, plans.back().second.steps.size());
    }
    GateRecipe r("sq-logical-rotation", reg.n_sites());
    for (std::size_t k = 0; k < segments; ++k) {
        // Segments alternate u, w, u, w for every plan.
        const bool use_w = (k % 2) == 1;
        const auto pair = use_w ? pair_w : pair_u;
        std::vector<std::pair<int, double>> angles;
        double largest = 0.0;
        for (const auto& [lq, plan] : plans) {
            if (k < plan.steps.size()) {
                // The pair generator realizes R_axis(dJ t); angles are taken mod 2 pi.
                const double a = wrap_positive(plan.steps[k].second);
                if (a > 1e-14) {
                    angles.emplace_back(lq, a);
                    largest = std::max(largest, a);
                }
            }
        }
        if (angles.empty()) {
            continue;
        }
        const double T = largest / p.rotation_dJ;
        auto m = sq_idle_model(reg, p);
        for (const auto& [lq, a] : angles) {
            const auto& s = reg.sites(lq);
            bump_edge(m, s[static_cast<std::size_t>(pair.first)], s[static_cast<std::size_t>(pair.second)], a / T);
        }
        r.evolve(m, T, use_w ? "sq-w" : "sq-u");
    }
    return r;
}

GateRecipe sq_swap(const LogicalRegister& reg, const std::vector<int>& lqs, std::pair<int, int> pair, double dJ,
                   const SqParams& p) {
    require(reg, EncodingKind::Supercoherent);
    if (!(dJ > 0.0)) {
        throw std::invalid_argument("sq_swap needs dJ > 0");
    }
    auto m = sq_idle_model(reg, p);
    for (int q : lqs) {
        const auto& s = reg.sites(q);
        bump_edge(m, s[static_cast<std::size_t>(pair.first)], s[static_cast<std::size_t>(pair.second)], dJ);
    }
    GateRecipe r("sq-swap", reg.n_sites());
    r.evolve(m, kPi / dJ, "swap");
    return r;
}

InterSqEdges default_inter_sq_edges() { return {{0, 0}, {1, 1}}; }

InterSqSettings default_inter_sq_settings() {
    InterSqSettings s;
    s.ramp.shape = RampShape::Smoothstep;
    s.ramp.duration = 40.0;
    s.ramp.plateau = 0.0;
    s.ramp.peak = 1.0;
    s.J_peak = 0.02 * s.sq.J_intra;  // gap of the K4 block equals J_intra
    return s;
}

namespace {

CouplingModel inter_sq_model(const LogicalRegister& reg, const InterSqSettings& s) {
    auto m = sq_idle_model(reg, s.sq);
    m.add_schedule("inter", s.ramp);
    for (std::size_t k = 0; k < s.edges.size(); ++k) {
        const double scale = k < s.edge_scale.size() ? s.edge_scale[k] : 1.0;
        m.add_edge(reg.sites(0).at(static_cast<std::size_t>(s.edges[k].first)),
                   reg.sites(1).at(static_cast<std::size_t>(s.edges[k].second)), s.J_peak * scale, "inter");
    }
    return m;
}

}  // namespace

InterSqResult adiabatic_inter_sq(const InterSqSettings& s, double max_leakage, const EvolveOptions& opts) {
    const auto reg = LogicalRegister::contiguous(EncodingKind::Supercoherent, 2);
    const auto m = inter_sq_model(reg, s);
    GateRecipe r("adiabatic-inter-sq", reg.n_sites());
    r.evolve_window(m, s.ramp.start, s.ramp.end(), "inter-sq");
    auto eff = extract_logical_unitary(r, reg, opts);
    if (eff.leakage > max_leakage) {
        throw LeakageError("inter-SQ ramp is not adiabatic: leakage " + std::to_string(eff.leakage) +
                               " over ramp duration " + std::to_string(s.ramp.duration) + ", peak J " +
                               std::to_string(s.J_peak),
                           eff.leakage);
    }
    const auto phases = diagonal_decomposition(eff.logical);
    return {r, eff, phases};
}

InterSqGate::InterSqGate(const InterSqSettings& s, const EvolveOptions& opts)
    : reg_(LogicalRegister::contiguous(EncodingKind::Supercoherent, 2)) {
    InterSqSettings base = s;
    base.ramp.plateau = 0.0;
    base.ramp.start = 0.0;
    const auto m = inter_sq_model(reg_, base);
    const double d = base.ramp.duration;
    const CMatrix rise = propagator(m, 0.0, d, opts);
    down_ = propagator(m, d, 2.0 * d, opts);
    up_ = CMatrix(rise.rows(), 4);
    for (int x = 0; x < 4; ++x) {
        CVector v = CVector::Zero(4);
        v[x] = 1.0;
        up_.col(x) = rise * encode(reg_, v).amplitudes();
    }
    const auto h = hamiltonian_at(m, d);
    const linalg::LocalHamiltonian lh{h.n_sites, h.pairs, h.fields};
    sectors_ = linalg::sectors(reg_.n_sites());
    for (std::size_t k = 0; k < sectors_.size(); ++k) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
            linalg::sector_matrix(lh, static_cast<int>(k), sectors_[k]));
        vecs_.push_back(es.eigenvectors());
        vals_.push_back(es.eigenvalues());
    }
}

EffectiveUnitary InterSqGate::effective(double plateau) const {
    std::vector<CVector> overlaps;
    for (int x = 0; x < 4; ++x) {
        CVector v = up_.col(x);
        for (std::size_t k = 0; k < sectors_.size(); ++k) {
            const auto& idx = sectors_[k];
            const auto n = static_cast<Eigen::Index>(idx.size());
            CVector local(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                local[i] = v[static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)])];
            }
            CVector c = vecs_[k].transpose().cast<cplx>() * local;
            for (Eigen::Index i = 0; i < n; ++i) {
                c[i] *= std::polar(1.0, -vals_[k][i] * plateau);
            }
            local = vecs_[k].cast<cplx>() * c;
            for (Eigen::Index i = 0; i < n; ++i) {
                v[static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)])] = local[i];
            }
        }
        overlaps.push_back(logical_overlaps(QuantumState(reg_.n_sites(), down_ * v), reg_));
    }
    return assemble(overlaps);
}

double InterSqGate::calibrate_cz(double* alpha_rate) const {
    // alpha grows linearly with the plateau; find the first plateau with
    // alpha = pi/4 mod pi/2, then polish on the exact cross-ratio phase.
    const double probe = 10.0;
    const double a0 = diagonal_decomposition(effective(0.0).logical).alpha;
    const double a1 = diagonal_decomposition(effective(probe).logical).alpha;
    const double rate = (a1 - a0) / probe;
    if (rate == 0.0) {
        throw CalibrationError("inter-SQ coupling produces no ZZ phase", {});
    }
    if (alpha_rate) {
        *alpha_rate = rate;
    }
    double best = std::numeric_limits<double>::infinity();
    for (int k = -4; k <= 4; ++k) {
        const double t = (kPi / 4.0 + k * kPi / 2.0 - a0) / rate;
        if (t >= 0.0 && t < best) {
            best = t;
        }
    }
    auto cross = [&](double t) {
        const CMatrix u = effective(t).logical;
        const cplx c = u(0, 0) * u(3, 3) * std::conj(u(1, 1)) * std::conj(u(2, 2));
        return 1.0 + c.real() / std::max(std::abs(c), 1e-300);
    };
    const double span = (kPi / 16.0) / std::abs(rate);
    const auto cal = calibrate(cross, linspace(std::max(0.0, best - span), best + span, 9), 0.5, 1e-13);
    return cal.parameters[0];
}

}  // namespace qdc
