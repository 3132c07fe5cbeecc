#include "qdcluster/linalg.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <bit>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

namespace qdc::linalg {

namespace {

// Fourth-order commutator-free Magnus nodes and weights.
const double kSqrt3 = std::sqrt(3.0);
const double kNode1 = 0.5 - kSqrt3 / 6.0;
const double kNode2 = 0.5 + kSqrt3 / 6.0;
const double kWeightSmall = 0.25 - kSqrt3 / 6.0;
const double kWeightLarge = 0.25 + kSqrt3 / 6.0;

double norm_estimate(const LocalHamiltonian& h) {
    double s = 0.0;
    for (const auto& p : h.pairs) {
        s += 3.0 * std::abs(p.c);
    }
    for (const auto& f : h.fields) {
        s += std::abs(f.h);
    }
    return s;
}

}  // namespace

LocalHamiltonian LocalHamiltonian::scaled(double s) const {
    LocalHamiltonian out = *this;
    for (auto& p : out.pairs) {
        p.c *= s;
    }
    for (auto& f : out.fields) {
        f.h *= s;
    }
    return out;
}

LocalHamiltonian LocalHamiltonian::combined(double a, const LocalHamiltonian& other, double b) const {
    if (other.n != n || other.pairs.size() != pairs.size() || other.fields.size() != fields.size()) {
        throw std::invalid_argument("cannot combine Hamiltonians with different term layouts");
    }
    LocalHamiltonian out = *this;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        out.pairs[k].c = a * pairs[k].c + b * other.pairs[k].c;
    }
    for (std::size_t k = 0; k < fields.size(); ++k) {
        out.fields[k].h = a * fields[k].h + b * other.fields[k].h;
    }
    return out;
}

double LocalHamiltonian::max_abs_coefficient() const {
    double m = 0.0;
    for (const auto& p : pairs) {
        m = std::max(m, std::abs(p.c));
    }
    for (const auto& f : fields) {
        m = std::max(m, std::abs(f.h));
    }
    return m;
}

std::vector<std::vector<std::size_t>> sectors(int n) {
    std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(n) + 1);
    for (std::size_t s = 0; s < dim_of(n); ++s) {
        out[static_cast<std::size_t>(std::popcount(s))].push_back(s);
    }
    return out;
}

Eigen::MatrixXd sector_matrix(const LocalHamiltonian& h, int /*ones*/, const std::vector<std::size_t>& states) {
    const auto m = static_cast<Eigen::Index>(states.size());
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(m, m);
    std::vector<Eigen::Index> position(dim_of(h.n), -1);
    for (Eigen::Index k = 0; k < m; ++k) {
        position[states[static_cast<std::size_t>(k)]] = k;
    }
    for (Eigen::Index k = 0; k < m; ++k) {
        const std::size_t s = states[static_cast<std::size_t>(k)];
        for (const auto& p : h.pairs) {
            const bool a = (s >> p.i) & 1U;
            const bool b = (s >> p.j) & 1U;
            if (a == b) {
                block(k, k) += p.c;
            } else {
                block(k, k) -= p.c;
                const std::size_t flipped = s ^ ((std::size_t{1} << p.i) | (std::size_t{1} << p.j));
                block(position[flipped], k) += 2.0 * p.c;
            }
        }
        for (const auto& f : h.fields) {
            block(k, k) += ((s >> f.site) & 1U) ? -f.h : f.h;
        }
    }
    return block;
}

CMatrix dense_matrix(const LocalHamiltonian& h) {
    const auto d = static_cast<Eigen::Index>(dim_of(h.n));
    CMatrix out = CMatrix::Zero(d, d);
    const auto secs = sectors(h.n);
    for (std::size_t ones = 0; ones < secs.size(); ++ones) {
        const auto& states = secs[ones];
        const Eigen::MatrixXd block = sector_matrix(h, static_cast<int>(ones), states);
        for (std::size_t a = 0; a < states.size(); ++a) {
            for (std::size_t b = 0; b < states.size(); ++b) {
                out(static_cast<Eigen::Index>(states[a]), static_cast<Eigen::Index>(states[b])) =
                    block(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            }
        }
    }
    return out;
}

CMatrix expm_hermitian(const LocalHamiltonian& h, double dt) {
    const auto d = static_cast<Eigen::Index>(dim_of(h.n));
    CMatrix out = CMatrix::Zero(d, d);
    const auto secs = sectors(h.n);
    for (std::size_t ones = 0; ones < secs.size(); ++ones) {
        const auto& states = secs[ones];
        const Eigen::MatrixXd block = sector_matrix(h, static_cast<int>(ones), states);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block);
        const Eigen::MatrixXd& v = es.eigenvectors();
        Eigen::VectorXcd phases(v.cols());
        for (Eigen::Index k = 0; k < v.cols(); ++k) {
            phases[k] = std::polar(1.0, -dt * es.eigenvalues()[k]);
        }
        const CMatrix vc = v.cast<cplx>();
        const CMatrix ub = vc * phases.asDiagonal() * vc.transpose();
        for (std::size_t a = 0; a < states.size(); ++a) {
            for (std::size_t b = 0; b < states.size(); ++b) {
                out(static_cast<Eigen::Index>(states[a]), static_cast<Eigen::Index>(states[b])) =
                    ub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            }
        }
    }
    return out;
}

std::vector<double> eigenvalues(const LocalHamiltonian& h) {
    std::vector<double> out;
    out.reserve(dim_of(h.n));
    const auto secs = sectors(h.n);
    for (std::size_t ones = 0; ones < secs.size(); ++ones) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sector_matrix(h, static_cast<int>(ones), secs[ones]),
                                                          Eigen::EigenvaluesOnly);
        for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
            out.push_back(es.eigenvalues()[k]);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

CMatrix lowest_eigenspace(const LocalHamiltonian& h, double tol) {
    const auto secs = sectors(h.n);
    std::vector<Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>> solvers;
    double e_min = std::numeric_limits<double>::infinity();
    for (std::size_t ones = 0; ones < secs.size(); ++ones) {
        solvers.emplace_back(sector_matrix(h, static_cast<int>(ones), secs[ones]));
        e_min = std::min(e_min, solvers.back().eigenvalues()[0]);
    }
    std::vector<CVector> cols;
    for (std::size_t ones = 0; ones < secs.size(); ++ones) {
        const auto& es = solvers[ones];
        for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
            if (es.eigenvalues()[k] > e_min + tol) {
                break;
            }
            CVector col = CVector::Zero(static_cast<Eigen::Index>(dim_of(h.n)));
            for (std::size_t a = 0; a < secs[ones].size(); ++a) {
                col[static_cast<Eigen::Index>(secs[ones][a])] = es.eigenvectors()(static_cast<Eigen::Index>(a), k);
            }
            cols.push_back(std::move(col));
        }
    }
    CMatrix out(static_cast<Eigen::Index>(dim_of(h.n)), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) {
        out.col(static_cast<Eigen::Index>(c)) = cols[c];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dense time-dependent propagation

namespace {

CMatrix expm_block(const Eigen::MatrixXd& block, double dt) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block);
    const CMatrix v = es.eigenvectors().cast<cplx>();
    Eigen::VectorXcd phases(v.cols());
    for (Eigen::Index k = 0; k < v.cols(); ++k) {
        phases[k] = std::polar(1.0, -dt * es.eigenvalues()[k]);
    }
    return v * phases.asDiagonal() * v.transpose();
}

double initial_step(const LocalHamiltonian& h0, double span) {
    const double norm = norm_estimate(h0);
    return norm > 0.0 ? std::min(span, 0.5 / norm) : span;
}

bool spin_rotation_invariant(const LocalHamiltonian& h) {
    if (h.fields.empty()) {
        return true;
    }
    if (h.fields.size() != static_cast<std::size_t>(h.n)) {
        return false;
    }
    // A uniform field is constant on each sector.
    return std::all_of(h.fields.begin(), h.fields.end(), [&](const auto& f) { return f.h == h.fields[0].h; });
}

/// Orthonormal bases of the total-spin eigenspaces inside one sector, cached per (n, ones).
const std::vector<Eigen::MatrixXd>& total_spin_blocks(int n, int ones, const std::vector<std::size_t>& states) {
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::vector<Eigen::MatrixXd>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find({n, ones});
    if (it != cache.end()) {
        return it->second;
    }
    // S^2 = 3n/4 + (1/2) sum_{i<j} sigma^i.sigma^j
    LocalHamiltonian s2{n, {}, {}};
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            s2.pairs.push_back({i, j, 0.5});
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sector_matrix(s2, ones, states));
    std::vector<Eigen::MatrixXd> blocks;
    Eigen::Index begin = 0;
    const Eigen::Index m = es.eigenvalues().size();
    for (Eigen::Index k = 1; k <= m; ++k) {
        if (k == m || es.eigenvalues()[k] - es.eigenvalues()[begin] > 0.5) {
            blocks.push_back(es.eigenvectors().middleCols(begin, k - begin));
            begin = k;
        }
    }
    return cache.emplace(std::make_pair(n, ones), std::move(blocks)).first->second;
}

/// Field-free Heisenberg exchange acts identically on every S_z member of a
/// spin multiplet. Bases obtained by repeated lowering from the highest-weight
/// sector make that block the same matrix in every sector.
struct SpinMultiplets {
    struct Multiplet {
        int ones_hw = 0;
        /// (sector, basis columns over that sector's states)
        std::vector<std::pair<int, Eigen::MatrixXd>> members;
    };
    std::vector<Multiplet> multiplets;
};

const SpinMultiplets& spin_multiplets(int n) {
    static std::mutex mutex;
    static std::map<int, SpinMultiplets> cache;
    {
        std::lock_guard<std::mutex> lock(mutex);
        auto it = cache.find(n);
        if (it != cache.end()) {
            return it->second;
        }
    }
    const auto secs = sectors(n);
    SpinMultiplets out;
    for (int ones_hw = 0; 2 * ones_hw <= n; ++ones_hw) {
        const auto& states = secs[static_cast<std::size_t>(ones_hw)];
        SpinMultiplets::Multiplet mult;
        mult.ones_hw = ones_hw;
        // Highest-weight states are the lowest total-spin block of their sector.
        Eigen::MatrixXd q = total_spin_blocks(n, ones_hw, states).front();
        const double S = (n - 2.0 * ones_hw) / 2.0;
        for (int k = ones_hw; k <= n - ones_hw; ++k) {
            mult.members.emplace_back(k, q);
            if (k == n - ones_hw) {
                break;
            }
            const auto& from = secs[static_cast<std::size_t>(k)];
            const auto& to = secs[static_cast<std::size_t>(k) + 1];
            std::vector<Eigen::Index> position(dim_of(n), -1);
            for (std::size_t a = 0; a < to.size(); ++a) {
                position[to[a]] = static_cast<Eigen::Index>(a);
            }
            Eigen::MatrixXd next = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(to.size()), q.cols());
            for (std::size_t a = 0; a < from.size(); ++a) {
                for (int i = 0; i < n; ++i) {
                    if (((from[a] >> i) & 1U) == 0U) {
                        next.row(position[from[a] | (std::size_t{1} << i)]) += q.row(static_cast<Eigen::Index>(a));
                    }
                }
            }
            const double m = (n - 2.0 * k) / 2.0;
            q = next / std::sqrt(S * (S + 1.0) - m * (m - 1.0));
        }
        out.multiplets.push_back(std::move(mult));
    }
    std::lock_guard<std::mutex> lock(mutex);
    return cache.emplace(n, std::move(out)).first->second;
}

CMatrix propagate_block(const std::function<Eigen::MatrixXd(double)>& block_at, Eigen::Index m, double norm,
                        double t0, double t1, double tol, std::size_t max_steps, AdaptiveStats* stats) {
    auto cf4 = [&](double t, double dt) {
        const Eigen::MatrixXd h1 = block_at(t + kNode1 * dt);
        const Eigen::MatrixXd h2 = block_at(t + kNode2 * dt);
        const CMatrix first = expm_block(kWeightLarge * h1 + kWeightSmall * h2, dt);
        const CMatrix second = expm_block(kWeightSmall * h1 + kWeightLarge * h2, dt);
        return CMatrix(second * first);
    };
    CMatrix u = CMatrix::Identity(m, m);
    const double span = t1 - t0;
    double t = t0;
    double dt = norm > 0.0 ? std::min(span, 0.5 / norm) : span;
    std::size_t attempts = 0;
    while (t < t1) {
        dt = std::min(dt, t1 - t);
        if (++attempts > max_steps) {
            throw ToleranceError("time-dependent propagation exceeded " + std::to_string(max_steps) +
                                 " steps before reaching tolerance " + std::to_string(tol));
        }
        const CMatrix full = cf4(t, dt);
        const CMatrix halves = cf4(t + dt / 2.0, dt / 2.0) * cf4(t, dt / 2.0);
        const double err = (full - halves).cwiseAbs().maxCoeff();
        // Error per unit time, floored at what double arithmetic can resolve.
        const double local_tol = std::max(tol * dt / span, 1e3 * std::numeric_limits<double>::epsilon());
        if (err <= local_tol || dt <= 1e-12 * span) {
            u = halves * u;
            t += dt;
            if (stats != nullptr) {
                ++stats->accepted;
            }
        } else if (stats != nullptr) {
            ++stats->rejected;
        }
        const double factor = err > 0.0 ? 0.9 * std::pow(local_tol / err, 0.2) : 4.0;
        dt *= std::clamp(factor, 0.2, 4.0);
    }
    return u;
}

}  // namespace

CMatrix propagate_dense(const HamiltonianAt& h, double t0, double t1, double tol, std::size_t max_steps,
                        AdaptiveStats* stats) {
    const LocalHamiltonian h0 = h(t0);
    const auto d = static_cast<Eigen::Index>(dim_of(h0.n));
    if (t1 - t0 <= 0.0) {
        return CMatrix::Identity(d, d);
    }
    // Every term conserves the number of flipped spins, so sectors evolve
    // independently. Without a field gradient total spin is conserved as well,
    // which splits each sector further.
    const bool su2 = spin_rotation_invariant(h0) && spin_rotation_invariant(h((t0 + t1) / 2.0));
    const double norm = norm_estimate(h0);
    CMatrix out = CMatrix::Zero(d, d);
    const auto secs = sectors(h0.n);
    if (su2 && h0.fields.empty() && h((t0 + t1) / 2.0).fields.empty()) {
        for (const auto& mult : spin_multiplets(h0.n).multiplets) {
            const auto& hw_states = secs[static_cast<std::size_t>(mult.ones_hw)];
            const Eigen::MatrixXd& q_hw = mult.members.front().second;
            auto block_at = [&](double t) -> Eigen::MatrixXd {
                return q_hw.transpose() * sector_matrix(h(t), mult.ones_hw, hw_states) * q_hw;
            };
            const CMatrix ub = propagate_block(block_at, q_hw.cols(), norm, t0, t1, tol, max_steps, stats);
            for (const auto& [k, q] : mult.members) {
                const auto& states = secs[static_cast<std::size_t>(k)];
                const CMatrix qc = q.cast<cplx>();
                const CMatrix piece = qc * ub * qc.transpose();
                for (std::size_t a = 0; a < states.size(); ++a) {
                    for (std::size_t b = 0; b < states.size(); ++b) {
                        out(static_cast<Eigen::Index>(states[a]), static_cast<Eigen::Index>(states[b])) +=
                            piece(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
                    }
                }
            }
        }
        return out;
    }
    for (std::size_t ones = 0; ones < secs.size(); ++ones) {
        const auto& states = secs[ones];
        const int k = static_cast<int>(ones);
        const auto m = static_cast<Eigen::Index>(states.size());
        CMatrix ub;
        if (su2) {
            ub = CMatrix::Zero(m, m);
            for (const auto& q : total_spin_blocks(h0.n, k, states)) {
                auto block_at = [&](double t) -> Eigen::MatrixXd {
                    return q.transpose() * sector_matrix(h(t), k, states) * q;
                };
                const CMatrix qc = q.cast<cplx>();
                ub += qc * propagate_block(block_at, q.cols(), norm, t0, t1, tol, max_steps, stats) * qc.transpose();
            }
        } else {
            auto block_at = [&](double t) { return sector_matrix(h(t), k, states); };
            ub = propagate_block(block_at, m, norm, t0, t1, tol, max_steps, stats);
        }
        for (std::size_t a = 0; a < states.size(); ++a) {
            for (std::size_t b = 0; b < states.size(); ++b) {
                out(static_cast<Eigen::Index>(states[a]), static_cast<Eigen::Index>(states[b])) =
                    ub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Krylov

CVector apply(const LocalHamiltonian& h, const CVector& v) {
    const auto d = static_cast<std::int64_t>(v.size());
    if (static_cast<std::size_t>(d) != dim_of(h.n)) {
        throw std::invalid_argument("vector length does not match Hamiltonian register");
    }
    CVector out(v.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t idx = 0; idx < d; ++idx) {
        const auto s = static_cast<std::size_t>(idx);
        cplx acc = 0.0;
        for (const auto& p : h.pairs) {
            const bool a = (s >> p.i) & 1U;
            const bool b = (s >> p.j) & 1U;
            if (a == b) {
                acc += p.c * v[idx];
            } else {
                const std::size_t flipped = s ^ ((std::size_t{1} << p.i) | (std::size_t{1} << p.j));
                acc += p.c * (2.0 * v[static_cast<Eigen::Index>(flipped)] - v[idx]);
            }
        }
        for (const auto& f : h.fields) {
            acc += (((s >> f.site) & 1U) ? -f.h : f.h) * v[idx];
        }
        out[idx] = acc;
    }
    return out;
}

CVector krylov_expmv(const LocalHamiltonian& h, const CVector& v, double dt, double tol, std::size_t max_steps) {
    constexpr int kMaxDim = 30;
    CVector w = v;
    if (dt == 0.0) {
        return w;
    }
    const double span = std::abs(dt);
    const double sign = dt > 0.0 ? 1.0 : -1.0;
    double t = 0.0;
    double tau = initial_step(h, span) * 8.0;
    std::size_t steps = 0;
    while (t < span) {
        tau = std::min(tau, span - t);
        const double beta0 = w.norm();
        if (beta0 == 0.0) {
            return w;
        }
        std::vector<CVector> basis;
        basis.push_back(w / beta0);
        std::vector<double> alpha, beta;
        bool exhausted = false;
        for (int j = 0; j < kMaxDim; ++j) {
            CVector u = linalg::apply(h, basis.back());
            alpha.push_back(basis.back().dot(u).real());
            for (const auto& b : basis) {  // full reorthogonalization
                u -= b.dot(u) * b;
            }
            const double bn = u.norm();
            if (bn < 1e-13 * std::max(1.0, std::abs(alpha.back()))) {
                exhausted = true;
                break;
            }
            beta.push_back(bn);
            if (j + 1 < kMaxDim) {
                basis.push_back(u / bn);
            }
        }
        const auto m = static_cast<Eigen::Index>(alpha.size());
        Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
        for (Eigen::Index k = 0; k < m; ++k) {
            tri(k, k) = alpha[static_cast<std::size_t>(k)];
            if (k + 1 < m) {
                tri(k, k + 1) = tri(k + 1, k) = beta[static_cast<std::size_t>(k)];
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
        const CMatrix q = es.eigenvectors().cast<cplx>();
        const double residual = exhausted ? 0.0 : beta.back();
        while (true) {
            if (++steps > max_steps) {
                throw ToleranceError("Krylov propagation exceeded step cap");
            }
            CVector ph(m);
            for (Eigen::Index k = 0; k < m; ++k) {
                ph[k] = std::polar(1.0, -sign * tau * es.eigenvalues()[k]);
            }
            const CVector y = q * ph.asDiagonal() * q.row(0).transpose();
            const double err = beta0 * residual * std::abs(y[m - 1]) * tau;
            if (exhausted || err <= tol * tau / span || tau < 1e-12 * span) {
                CVector next = CVector::Zero(w.size());
                for (Eigen::Index k = 0; k < m; ++k) {
                    next += y[k] * basis[static_cast<std::size_t>(k)];
                }
                w = beta0 * next;
                t += tau;
                if (err < 0.1 * tol * tau / span) {
                    tau *= 1.5;
                }
                break;
            }
            tau /= 2.0;
        }
    }
    return w;
}

CVector propagate_krylov(const HamiltonianAt& h, const CVector& v, double t0, double t1, bool time_dependent,
                         double tol, std::size_t max_steps) {
    const double span = t1 - t0;
    if (span <= 0.0) {
        return v;
    }
    if (!time_dependent) {
        return krylov_expmv(h(t0), v, span, tol, max_steps);
    }
    auto step = [&](const CVector& x, double t, double dt) {
        const LocalHamiltonian h1 = h(t + kNode1 * dt);
        const LocalHamiltonian h2 = h(t + kNode2 * dt);
        const double inner_tol = tol * 1e-2;
        CVector y = krylov_expmv(h1.combined(kWeightLarge, h2, kWeightSmall), x, dt, inner_tol, max_steps);
        return krylov_expmv(h1.combined(kWeightSmall, h2, kWeightLarge), y, dt, inner_tol, max_steps);
    };
    CVector w = v;
    double t = t0;
    double dt = initial_step(h(t0), span);
    std::size_t attempts = 0;
    while (t < t1) {
        dt = std::min(dt, t1 - t);
        if (++attempts > max_steps) {
            throw ToleranceError("time-dependent Krylov propagation exceeded step cap");
        }
        const CVector full = step(w, t, dt);
        const CVector halves = step(step(w, t, dt / 2.0), t + dt / 2.0, dt / 2.0);
        const double err = (full - halves).cwiseAbs().maxCoeff();
        // Error per unit time, floored at what double arithmetic can resolve.
        const double local_tol = std::max(tol * dt / span, 1e3 * std::numeric_limits<double>::epsilon());
        if (err <= local_tol || dt <= 1e-12 * span) {
            w = halves;
            t += dt;
        }
        const double factor = err > 0.0 ? 0.9 * std::pow(local_tol / err, 0.2) : 4.0;
        dt *= std::clamp(factor, 0.2, 4.0);
    }
    return w;
}

CMatrix expm_hermitian_dense(const CMatrix& h) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    CVector ph(h.rows());
    for (Eigen::Index k = 0; k < h.rows(); ++k) {
        ph[k] = std::polar(1.0, -es.eigenvalues()[k]);
    }
    return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

CMatrix log_unitary(const CMatrix& u) {
    Eigen::ComplexSchur<CMatrix> schur(u);
    const CMatrix& tri = schur.matrixT();
    CVector g(tri.rows());
    for (Eigen::Index k = 0; k < tri.rows(); ++k) {
        g[k] = -std::arg(tri(k, k));
    }
    return schur.matrixU() * g.asDiagonal() * schur.matrixU().adjoint();
}

}  // namespace qdc::linalg
