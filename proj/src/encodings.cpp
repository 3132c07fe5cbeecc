#include "qdcluster/encodings.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <nlohmann/json.hpp>

#include "detail.hpp"

namespace qdc {

std::string to_string(EncodingKind k) {
    switch (k) {
        case EncodingKind::Bare: return "bare";
        case EncodingKind::TwoDot: return "two-dot";
        case EncodingKind::Supercoherent: return "supercoherent";
    }
    return "?";
}

EncodingKind encoding_from_string(const std::string& s) {
    if (s == "bare") return EncodingKind::Bare;
    if (s == "two-dot") return EncodingKind::TwoDot;
    if (s == "supercoherent") return EncodingKind::Supercoherent;
    throw std::invalid_argument("unknown encoding '" + s + "'");
}

CMatrix Encoding::basis() const {
    CMatrix b(block_dim(), 2);
    b.col(0) = zero;
    b.col(1) = one;
    return b;
}

CMatrix Encoding::embed(const CMatrix& u) const {
    const CMatrix b = basis();
    return b * u * b.adjoint() + (CMatrix::Identity(block_dim(), block_dim()) - projector);
}

namespace {

Encoding finish(EncodingKind kind, int k, CVector zero, CVector one) {
    Encoding e;
    e.kind = kind;
    e.sites_per_lq = k;
    e.zero = std::move(zero);
    e.one = std::move(one);
    const CMatrix b = e.basis();
    e.X_L = b * pauli::X() * b.adjoint();
    e.Y_L = b * pauli::Y() * b.adjoint();
    e.Z_L = b * pauli::Z() * b.adjoint();
    e.projector = b * b.adjoint();
    return e;
}

CVector unit(int dim, int idx) {
    CVector v = CVector::Zero(dim);
    v[idx] = 1.0;
    return v;
}

Encoding make_supercoherent() {
    // Pair index = bit(first dot) + 2*bit(second dot); up = 0.
    const int up_down = 2;  // first dot up, second down
    const int down_up = 1;
    auto pair = [](double a, double b) {
        CVector v = CVector::Zero(4);
        v[up_down] = a;
        v[down_up] = b;
        return v;
    };
    auto product = [](const CVector& p12, const CVector& p34) {
        CVector v = CVector::Zero(16);
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                v[i + 4 * j] = p12[i] * p34[j];
            }
        }
        return v;
    };
    // Signs exactly as declared for the code: (ud - du)_12 (x) (-ud + du)_34 / 2.
    CVector zero = 0.5 * product(pair(1.0, -1.0), pair(-1.0, 1.0));
    const double r3 = std::sqrt(3.0);
    CVector one = CVector::Zero(16);
    one[0b1100] = 1.0 / r3;  // up up down down
    one[0b0011] = 1.0 / r3;  // down down up up
    one -= product(pair(1.0, 1.0), pair(1.0, 1.0)) / (2.0 * r3);
    return finish(EncodingKind::Supercoherent, 4, zero, one);
}

}  // namespace

const Encoding& Encoding::get(EncodingKind kind) {
    static const Encoding bare = finish(EncodingKind::Bare, 1, unit(2, 0), unit(2, 1));
    // |0_L> = |0_A 1_B>: bit A = 0, bit B = 1 -> local index 2.
    static const Encoding two_dot = finish(EncodingKind::TwoDot, 2, unit(4, 2), unit(4, 1));
    static const Encoding sq = make_supercoherent();
    switch (kind) {
        case EncodingKind::Bare: return bare;
        case EncodingKind::TwoDot: return two_dot;
        case EncodingKind::Supercoherent: return sq;
    }
    throw std::invalid_argument("unknown encoding kind");
}

// ---------------------------------------------------------------------------

LogicalRegister::LogicalRegister(EncodingKind kind, std::vector<std::vector<int>> site_map)
    : encoding_(&Encoding::get(kind)), site_map_(std::move(site_map)) {
    if (site_map_.empty()) {
        throw std::invalid_argument("register needs at least one logical qubit");
    }
    int max_site = -1;
    for (const auto& block : site_map_) {
        if (static_cast<int>(block.size()) != encoding_->sites_per_lq) {
            throw std::invalid_argument("site block size does not match the " + encoding_->name() + " encoding");
        }
        for (int s : block) {
            if (s < 0) {
                throw std::out_of_range("negative site index in register");
            }
            max_site = std::max(max_site, s);
        }
    }
    n_sites_ = max_site + 1;
    if (n_sites_ > kMaxSites) {
        throw std::out_of_range("register exceeds the " + std::to_string(kMaxSites) + "-site budget");
    }
    owner_.assign(static_cast<std::size_t>(n_sites_), -1);
    for (std::size_t q = 0; q < site_map_.size(); ++q) {
        for (int s : site_map_[q]) {
            if (owner_[static_cast<std::size_t>(s)] != -1) {
                throw std::invalid_argument("site " + std::to_string(s) + " belongs to two logical qubits");
            }
            owner_[static_cast<std::size_t>(s)] = static_cast<int>(q);
        }
    }
    if (std::find(owner_.begin(), owner_.end(), -1) != owner_.end()) {
        throw std::invalid_argument("register leaves physical sites unassigned");
    }
}

LogicalRegister LogicalRegister::contiguous(EncodingKind kind, int lq_count) {
    const int k = Encoding::get(kind).sites_per_lq;
    std::vector<std::vector<int>> map(static_cast<std::size_t>(lq_count));
    for (int q = 0; q < lq_count; ++q) {
        for (int s = 0; s < k; ++s) {
            map[static_cast<std::size_t>(q)].push_back(q * k + s);
        }
    }
    return LogicalRegister(kind, std::move(map));
}

const std::vector<int>& LogicalRegister::sites(int lq) const {
    if (lq < 0 || lq >= lq_count()) {
        throw std::out_of_range("logical qubit " + std::to_string(lq) + " not in register");
    }
    return site_map_[static_cast<std::size_t>(lq)];
}

int LogicalRegister::owner(int site) const {
    if (site < 0 || site >= n_sites_) {
        return -1;
    }
    return owner_[static_cast<std::size_t>(site)];
}

nlohmann::json register_to_json(const LogicalRegister& reg) {
    return {{"encoding", reg.encoding().name()}, {"site_map", reg.site_map()}};
}

LogicalRegister register_from_json(const nlohmann::json& j) {
    if (!j.contains("encoding")) {
        throw std::invalid_argument("missing field 'register.encoding'");
    }
    const auto kind = encoding_from_string(j.at("encoding").get<std::string>());
    if (j.contains("site_map")) {
        return LogicalRegister(kind, j.at("site_map").get<std::vector<std::vector<int>>>());
    }
    if (!j.contains("lq_count")) {
        throw std::invalid_argument("register needs 'site_map' or 'lq_count'");
    }
    return LogicalRegister::contiguous(kind, j.at("lq_count").get<int>());
}

// ---------------------------------------------------------------------------

namespace {

struct SparseEntry {
    std::size_t offset;  // physical bit pattern of the block
    cplx coeff;
};

/// Nonzero entries of |v_L> for each LQ, mapped onto physical bits.
std::vector<std::array<std::vector<SparseEntry>, 2>> sparse_blocks(const LogicalRegister& reg) {
    const Encoding& enc = reg.encoding();
    std::vector<std::array<std::vector<SparseEntry>, 2>> out(static_cast<std::size_t>(reg.lq_count()));
    for (int q = 0; q < reg.lq_count(); ++q) {
        detail::SubspaceIndexer idx(reg.sites(q));
        for (int v = 0; v < 2; ++v) {
            const CVector& vec = v == 0 ? enc.zero : enc.one;
            for (int l = 0; l < enc.block_dim(); ++l) {
                if (std::abs(vec[l]) > 0.0) {
                    out[static_cast<std::size_t>(q)][static_cast<std::size_t>(v)].push_back(
                        {idx.offset(static_cast<std::size_t>(l)), vec[l]});
                }
            }
        }
    }
    return out;
}

template <typename F>
void for_each_term(const std::vector<std::array<std::vector<SparseEntry>, 2>>& blocks, std::size_t logical,
                   F&& f) {
    // Iterative product over the per-LQ supports.
    const std::size_t L = blocks.size();
    std::vector<std::size_t> pos(L, 0);
    while (true) {
        std::size_t index = 0;
        cplx coeff = 1.0;
        for (std::size_t q = 0; q < L; ++q) {
            const auto& entry = blocks[q][(logical >> q) & 1U][pos[q]];
            index |= entry.offset;
            coeff *= entry.coeff;
        }
        f(index, coeff);
        std::size_t q = 0;
        while (q < L) {
            if (++pos[q] < blocks[q][(logical >> q) & 1U].size()) {
                break;
            }
            pos[q] = 0;
            ++q;
        }
        if (q == L) {
            return;
        }
    }
}

void check_register(const QuantumState& state, const LogicalRegister& reg) {
    if (state.n_sites() != reg.n_sites()) {
        throw std::invalid_argument("state has " + std::to_string(state.n_sites()) + " sites but register has " +
                                    std::to_string(reg.n_sites()));
    }
}

}  // namespace

QuantumState encode(const LogicalRegister& reg, const CVector& logical) {
    const std::size_t ldim = std::size_t{1} << reg.lq_count();
    if (static_cast<std::size_t>(logical.size()) != ldim) {
        throw std::invalid_argument("logical amplitude vector has length " + std::to_string(logical.size()) +
                                    ", expected " + std::to_string(ldim));
    }
    if (std::abs(logical.norm() - 1.0) > 1e-10) {
        throw std::invalid_argument("logical amplitude vector is not normalized");
    }
    const auto blocks = sparse_blocks(reg);
    CVector amps = CVector::Zero(static_cast<Eigen::Index>(dim_of(reg.n_sites())));
    for (std::size_t x = 0; x < ldim; ++x) {
        if (logical[static_cast<Eigen::Index>(x)] == cplx(0.0)) {
            continue;
        }
        const cplx a = logical[static_cast<Eigen::Index>(x)];
        for_each_term(blocks, x, [&](std::size_t idx, cplx c) { amps[static_cast<Eigen::Index>(idx)] += a * c; });
    }
    return QuantumState(reg.n_sites(), std::move(amps));
}

QuantumState encode(const LogicalRegister& reg, const std::vector<int>& bits) {
    if (static_cast<int>(bits.size()) != reg.lq_count()) {
        throw std::invalid_argument("bitstring length does not match the register");
    }
    std::size_t x = 0;
    for (std::size_t q = 0; q < bits.size(); ++q) {
        if (bits[q] != 0 && bits[q] != 1) {
            throw std::invalid_argument("logical bits must be 0 or 1");
        }
        x |= static_cast<std::size_t>(bits[q]) << q;
    }
    CVector logical = CVector::Zero(static_cast<Eigen::Index>(std::size_t{1} << reg.lq_count()));
    logical[static_cast<Eigen::Index>(x)] = 1.0;
    return encode(reg, logical);
}

QuantumState encode_product(const LogicalRegister& reg, const std::vector<CVector>& per_lq) {
    if (static_cast<int>(per_lq.size()) != reg.lq_count()) {
        throw std::invalid_argument("one 2-vector per logical qubit required");
    }
    CVector logical = CVector::Ones(1);
    for (const auto& v : per_lq) {
        if (v.size() != 2 || std::abs(v.norm() - 1.0) > 1e-10) {
            throw std::invalid_argument("per-LQ state must be a normalized 2-vector");
        }
        CVector next(logical.size() * 2);
        for (Eigen::Index b = 0; b < 2; ++b) {
            next.segment(b * logical.size(), logical.size()) = v[b] * logical;
        }
        logical = next;
    }
    return encode(reg, logical);
}

CVector logical_overlaps(const QuantumState& state, const LogicalRegister& reg) {
    check_register(state, reg);
    const auto blocks = sparse_blocks(reg);
    const std::size_t ldim = std::size_t{1} << reg.lq_count();
    CVector out(static_cast<Eigen::Index>(ldim));
    for (std::size_t x = 0; x < ldim; ++x) {
        cplx acc = 0.0;
        for_each_term(blocks, x, [&](std::size_t idx, cplx c) { acc += std::conj(c) * state[idx]; });
        out[static_cast<Eigen::Index>(x)] = acc;
    }
    return out;
}

LogicalProjection project_logical(const QuantumState& state, const LogicalRegister& reg) {
    const CVector raw = logical_overlaps(state, reg);
    const double kept = raw.squaredNorm();
    const double leakage = std::clamp(1.0 - kept, 0.0, 1.0);
    if (kept < 1e-14) {
        throw LeakageError("state has no component in the logical subspace", leakage);
    }
    return {raw / std::sqrt(kept), leakage};
}

ProjectedOperator projected_operator(const LocalOperator& op, const LogicalRegister& reg) {
    std::vector<int> lqs;
    for (int s : op.support()) {
        const int q = reg.owner(s);
        if (q < 0) {
            throw std::out_of_range("operator touches unregistered site " + std::to_string(s));
        }
        if (std::find(lqs.begin(), lqs.end(), q) == lqs.end()) {
            lqs.push_back(q);
        }
    }
    std::sort(lqs.begin(), lqs.end());
    if (lqs.size() > 2) {
        throw std::invalid_argument("projected_operator supports at most two logical qubits");
    }
    const Encoding& enc = reg.encoding();
    const int k = enc.sites_per_lq;
    const int local_n = k * static_cast<int>(lqs.size());
    // Local position of each physical site.
    std::vector<int> local_support;
    for (int s : op.support()) {
        const int q = reg.owner(s);
        const auto& block = reg.sites(q);
        const int within = static_cast<int>(std::find(block.begin(), block.end(), s) - block.begin());
        const int slot = static_cast<int>(std::find(lqs.begin(), lqs.end(), q) - lqs.begin());
        local_support.push_back(slot * k + within);
    }
    const int ldim = 1 << lqs.size();
    std::vector<CVector> basis;
    for (int x = 0; x < ldim; ++x) {
        CVector v = CVector::Ones(1);
        for (std::size_t slot = 0; slot < lqs.size(); ++slot) {
            const CVector& b = ((x >> slot) & 1) ? enc.one : enc.zero;
            CVector next(v.size() * b.size());
            for (Eigen::Index h = 0; h < b.size(); ++h) {
                next.segment(h * v.size(), v.size()) = b[h] * v;
            }
            v = next;
        }
        basis.push_back(v);
    }
    CMatrix m(ldim, ldim);
    for (int y = 0; y < ldim; ++y) {
        CVector w = basis[static_cast<std::size_t>(y)];
        detail::apply_kernel(w.data(), local_n, local_support, op.matrix());
        for (int x = 0; x < ldim; ++x) {
            m(x, y) = basis[static_cast<std::size_t>(x)].dot(w);
        }
    }
    return {lqs, m};
}

CMatrix reduced_logical_density(const CVector& logical, int lq_count, int lq) {
    if (logical.size() != (Eigen::Index{1} << lq_count) || lq < 0 || lq >= lq_count) {
        throw std::invalid_argument("reduced_logical_density: bad dimensions");
    }
    CMatrix rho = CMatrix::Zero(2, 2);
    const Eigen::Index mask = Eigen::Index{1} << lq;
    for (Eigen::Index x = 0; x < logical.size(); ++x) {
        if (x & mask) {
            continue;
        }
        const cplx a0 = logical[x];
        const cplx a1 = logical[x | mask];
        rho(0, 0) += a0 * std::conj(a0);
        rho(0, 1) += a0 * std::conj(a1);
        rho(1, 0) += a1 * std::conj(a0);
        rho(1, 1) += a1 * std::conj(a1);
    }
    return rho;
}

LocalOperator logical_pauli(const LogicalRegister& reg, int lq, int axis) {
    const Encoding& enc = reg.encoding();
    const CMatrix& m = axis == 0 ? enc.X_L : axis == 1 ? enc.Y_L : enc.Z_L;
    if (axis < 0 || axis > 2) {
        throw std::invalid_argument("Pauli axis must be 0, 1 or 2");
    }
    return LocalOperator(reg.sites(lq), m, OperatorKind::Hermitian);
}

}  // namespace qdc
