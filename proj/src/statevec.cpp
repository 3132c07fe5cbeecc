#include "qdcluster/statevec.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "detail.hpp"

namespace qdc {

Axis Axis::in_plane(double phi) { return {std::cos(phi), std::sin(phi), 0.0}; }

Axis Axis::xz(double theta) { return {std::sin(theta), 0.0, std::cos(theta)}; }

double Axis::norm() const { return std::sqrt(x * x + y * y + z * z); }

Axis Axis::normalized() const {
    const double n = norm();
    if (n == 0.0) {
        throw std::invalid_argument("rotation axis has zero length");
    }
    return {x / n, y / n, z / n};
}

double Rng::normal() {
    double u1 = uniform();
    while (u1 <= 0.0) {
        u1 = uniform();
    }
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

// ---------------------------------------------------------------------------
// QuantumState

QuantumState::QuantumState(int n_sites) : n_sites_(n_sites) {
    if (n_sites < 1 || n_sites > kMaxSites) {
        throw std::out_of_range("n_sites must lie in [1, " + std::to_string(kMaxSites) + "], got " +
                                std::to_string(n_sites));
    }
    amps_ = CVector::Zero(static_cast<Eigen::Index>(dim_of(n_sites)));
    amps_[0] = 1.0;
}

QuantumState::QuantumState(int n_sites, CVector amplitudes) : n_sites_(n_sites), amps_(std::move(amplitudes)) {
    if (n_sites < 1 || n_sites > kMaxSites) {
        throw std::out_of_range("n_sites must lie in [1, " + std::to_string(kMaxSites) + "], got " +
                                std::to_string(n_sites));
    }
    if (static_cast<std::size_t>(amps_.size()) != dim_of(n_sites)) {
        throw std::invalid_argument("amplitude vector has length " + std::to_string(amps_.size()) +
                                    ", expected " + std::to_string(dim_of(n_sites)));
    }
    const double n = norm();
    if (std::abs(n - 1.0) > 1e-10) {
        throw std::invalid_argument("amplitude vector is not normalized (norm " + std::to_string(n) + ")");
    }
    renormalize();
}

QuantumState QuantumState::basis(int n_sites, std::uint64_t index) {
    QuantumState s(n_sites);
    if (index >= s.dim()) {
        throw std::out_of_range("basis index out of range");
    }
    s.amps_[0] = 0.0;
    s.amps_[static_cast<Eigen::Index>(index)] = 1.0;
    return s;
}

QuantumState QuantumState::plus(int n_sites) {
    QuantumState s(n_sites);
    s.amps_.setConstant(1.0 / std::sqrt(static_cast<double>(s.dim())));
    return s;
}

double QuantumState::norm() const {
    return std::sqrt(detail::ordered_sum(dim(), [&](std::size_t i) {
        return std::norm(amps_[static_cast<Eigen::Index>(i)]);
    }));
}

cplx QuantumState::inner(const QuantumState& other) const {
    if (other.n_sites_ != n_sites_) {
        throw std::invalid_argument("inner product between states of different size");
    }
    return detail::ordered_sum_c(dim(), [&](std::size_t i) {
        const auto k = static_cast<Eigen::Index>(i);
        return std::conj(amps_[k]) * other.amps_[k];
    });
}

double QuantumState::fidelity(const QuantumState& other) const { return std::norm(inner(other)); }

void QuantumState::renormalize() {
    const double n = norm();
    if (n == 0.0) {
        throw std::domain_error("cannot renormalize a zero vector");
    }
    amps_ /= n;
}

// ---------------------------------------------------------------------------
// Operators

bool is_unitary(const CMatrix& m, double tol) {
    if (m.rows() != m.cols()) {
        return false;
    }
    return (m.adjoint() * m - CMatrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff() <= tol;
}

bool is_hermitian(const CMatrix& m, double tol) {
    if (m.rows() != m.cols()) {
        return false;
    }
    return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, m.cwiseAbs().maxCoeff());
}

LocalOperator::LocalOperator(std::vector<int> support, CMatrix matrix, OperatorKind kind)
    : support_(std::move(support)), matrix_(std::move(matrix)), kind_(kind) {
    if (support_.empty()) {
        throw std::invalid_argument("operator support is empty");
    }
    auto sorted = support_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw std::invalid_argument("operator support has repeated sites");
    }
    if (sorted.front() < 0) {
        throw std::out_of_range("negative site index in operator support");
    }
    const auto d = static_cast<Eigen::Index>(dim_of(arity()));
    if (matrix_.rows() != d || matrix_.cols() != d) {
        throw std::invalid_argument("operator matrix is " + std::to_string(matrix_.rows()) + "x" +
                                    std::to_string(matrix_.cols()) + " but support needs " +
                                    std::to_string(d));
    }
    if (kind_ == OperatorKind::Unitary && !is_unitary(matrix_)) {
        throw std::invalid_argument("operator declared unitary is not unitary");
    }
    if (kind_ == OperatorKind::Hermitian && !is_hermitian(matrix_)) {
        throw std::invalid_argument("operator declared Hermitian is not Hermitian");
    }
}

LocalOperator LocalOperator::adjoint() const { return {support_, matrix_.adjoint(), kind_}; }

namespace pauli {
CMatrix I() { return CMatrix::Identity(2, 2); }
CMatrix X() {
    CMatrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}
CMatrix Y() {
    CMatrix m(2, 2);
    m << 0, -kI, kI, 0;
    return m;
}
CMatrix Z() {
    CMatrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}
CMatrix by_index(int axis) {
    switch (axis) {
        case 0: return X();
        case 1: return Y();
        case 2: return Z();
        default: throw std::out_of_range("Pauli axis index must be 0, 1 or 2");
    }
}
}  // namespace pauli

CMatrix kron(const CMatrix& high, const CMatrix& low) {
    CMatrix out(high.rows() * low.rows(), high.cols() * low.cols());
    for (Eigen::Index i = 0; i < high.rows(); ++i) {
        for (Eigen::Index j = 0; j < high.cols(); ++j) {
            out.block(i * low.rows(), j * low.cols(), low.rows(), low.cols()) = high(i, j) * low;
        }
    }
    return out;
}

CMatrix sigma_dot_matrix() {
    return kron(pauli::X(), pauli::X()) + kron(pauli::Y(), pauli::Y()) + kron(pauli::Z(), pauli::Z());
}

CMatrix swap_matrix() {
    CMatrix m = CMatrix::Zero(4, 4);
    m(0, 0) = m(3, 3) = 1.0;
    m(1, 2) = m(2, 1) = 1.0;
    return m;
}

CMatrix rotation_matrix(const Axis& axis, double angle) {
    const Axis n = axis.normalized();
    const CMatrix gen = n.x * pauli::X() + n.y * pauli::Y() + n.z * pauli::Z();
    return std::cos(angle / 2.0) * pauli::I() - kI * std::sin(angle / 2.0) * gen;
}

CMatrix singlet_projector_matrix() {
    CVector s = CVector::Zero(4);
    // (|01> - |10>)/sqrt2 with the lower site first in the ket label.
    s[1] = 1.0 / std::sqrt(2.0);
    s[2] = -1.0 / std::sqrt(2.0);
    return s * s.adjoint();
}

LocalOperator pauli_op(int site, int axis) { return {{site}, pauli::by_index(axis), OperatorKind::Hermitian}; }

LocalOperator sigma_dot_op(int a, int b) { return {{a, b}, sigma_dot_matrix(), OperatorKind::Hermitian}; }

LocalOperator rotation_op(int site, const Axis& axis, double angle) {
    return {{site}, rotation_matrix(axis, angle), OperatorKind::Unitary};
}

// ---------------------------------------------------------------------------
// Kernels

namespace {

void check_support(int n_sites, std::span<const int> support) {
    for (int s : support) {
        if (s < 0 || s >= n_sites) {
            throw std::out_of_range("site " + std::to_string(s) + " outside a " + std::to_string(n_sites) +
                                    "-site state");
        }
    }
}

}  // namespace

namespace detail {

void apply_kernel(cplx* amps, int n_sites, std::span<const int> support, const CMatrix& m) {
    const auto k = static_cast<int>(support.size());
    const auto local_dim = static_cast<Eigen::Index>(dim_of(k));
    if (m.rows() != local_dim || m.cols() != local_dim) {
        throw std::invalid_argument("matrix dimension does not match support size");
    }
    const SubspaceIndexer idx(support);
    const std::size_t n_blocks = dim_of(n_sites) >> k;

    if (k == 1) {
        const std::size_t bit = idx.offset(1);
        const cplx m00 = m(0, 0), m01 = m(0, 1), m10 = m(1, 0), m11 = m(1, 1);
#pragma omp parallel for schedule(static)
        for (std::int64_t r = 0; r < static_cast<std::int64_t>(n_blocks); ++r) {
            const std::size_t i0 = idx.base(static_cast<std::size_t>(r));
            const cplx x0 = amps[i0], x1 = amps[i0 | bit];
            amps[i0] = m00 * x0 + m01 * x1;
            amps[i0 | bit] = m10 * x0 + m11 * x1;
        }
        return;
    }

#pragma omp parallel
    {
        CVector in(local_dim), out(local_dim);
#pragma omp for schedule(static)
        for (std::int64_t r = 0; r < static_cast<std::int64_t>(n_blocks); ++r) {
            const std::size_t base = idx.base(static_cast<std::size_t>(r));
            for (Eigen::Index l = 0; l < local_dim; ++l) {
                in[l] = amps[base | idx.offset(static_cast<std::size_t>(l))];
            }
            out.noalias() = m * in;
            for (Eigen::Index l = 0; l < local_dim; ++l) {
                amps[base | idx.offset(static_cast<std::size_t>(l))] = out[l];
            }
        }
    }
}

}  // namespace detail

void apply_inplace(QuantumState& state, std::span<const int> support, const CMatrix& m) {
    check_support(state.n_sites(), support);
    detail::apply_kernel(state.mutable_amplitudes().data(), state.n_sites(), support, m);
}

QuantumState apply_unitary(const QuantumState& state, const LocalOperator& op) {
    if (op.kind() != OperatorKind::Unitary) {
        throw std::invalid_argument("apply_unitary requires an operator declared unitary");
    }
    QuantumState out = state;
    apply_inplace(out, op.support(), op.matrix());
    out.renormalize();
    return out;
}

cplx matrix_element(const QuantumState& state, const LocalOperator& op) {
    check_support(state.n_sites(), op.support());
    const auto& amps = state.amplitudes();
    const detail::SubspaceIndexer idx(op.support());
    const auto local_dim = static_cast<Eigen::Index>(dim_of(op.arity()));
    const std::size_t n_blocks = state.dim() >> op.arity();
    const CMatrix& m = op.matrix();
    return detail::ordered_sum_c(n_blocks, [&](std::size_t r) {
        const std::size_t base = idx.base(r);
        CVector in(local_dim);
        for (Eigen::Index l = 0; l < local_dim; ++l) {
            in[l] = amps[static_cast<Eigen::Index>(base | idx.offset(static_cast<std::size_t>(l)))];
        }
        return in.dot(m * in);  // Eigen's dot conjugates the left argument
    });
}

double expectation(const QuantumState& state, const LocalOperator& op) {
    if (op.kind() != OperatorKind::Hermitian) {
        throw std::invalid_argument("expectation requires an operator declared Hermitian");
    }
    const cplx v = matrix_element(state, op);
    const double scale = std::max(1.0, op.matrix().cwiseAbs().maxCoeff());
    if (std::abs(v.imag()) > 1e-12 * scale) {
        throw std::domain_error("expectation value has imaginary part " + std::to_string(v.imag()));
    }
    return v.real();
}

// ---------------------------------------------------------------------------
// Measurement

std::string describe(const MeasurementBasis& basis) {
    std::ostringstream os;
    std::visit(
        [&](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, ZBasis>) {
                os << "z";
            } else if constexpr (std::is_same_v<T, XYBasis>) {
                os << "xy";
            } else {
                os << "singlet-triplet";
            }
        },
        basis);
    return os.str();
}

std::vector<int> basis_support(const MeasurementBasis& basis) {
    return std::visit(
        [](const auto& b) -> std::vector<int> {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, SingletTripletBasis>) {
                return {b.site_a, b.site_b};
            } else {
                return {b.site};
            }
        },
        basis);
}

namespace {

/// Projector onto outcome 0 on the basis support.
CMatrix outcome_zero_projector(const MeasurementBasis& basis) {
    return std::visit(
        [](const auto& b) -> CMatrix {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, ZBasis>) {
                CMatrix p = CMatrix::Zero(2, 2);
                p(0, 0) = 1.0;
                return p;
            } else if constexpr (std::is_same_v<T, XYBasis>) {
                CVector v(2);
                v[0] = 1.0 / std::sqrt(2.0);
                v[1] = std::polar(1.0 / std::sqrt(2.0), b.phi);
                return v * v.adjoint();
            } else {
                if (b.site_a == b.site_b) {
                    throw std::invalid_argument("singlet-triplet measurement needs two distinct sites");
                }
                return singlet_projector_matrix();
            }
        },
        basis);
}

CMatrix outcome_projector(const MeasurementBasis& basis, int outcome) {
    const CMatrix p0 = outcome_zero_projector(basis);
    if (outcome == 0) {
        return p0;
    }
    return CMatrix::Identity(p0.rows(), p0.cols()) - p0;
}

std::pair<MeasurementRecord, QuantumState> collapse(const QuantumState& state, const MeasurementBasis& basis,
                                                    int outcome, double p) {
    QuantumState out = state;
    const auto support = basis_support(basis);
    apply_inplace(out, support, outcome_projector(basis, outcome));
    out.mutable_amplitudes() /= std::sqrt(p);
    out.renormalize();
    return {MeasurementRecord{support, basis, outcome, p}, std::move(out)};
}

}  // namespace

double probability_zero(const QuantumState& state, const MeasurementBasis& basis) {
    const LocalOperator proj(basis_support(basis), outcome_zero_projector(basis), OperatorKind::Hermitian);
    return std::clamp(expectation(state, proj), 0.0, 1.0);
}

std::pair<MeasurementRecord, QuantumState> measure(const QuantumState& state, const MeasurementBasis& basis,
                                                   Rng& rng) {
    const double p0 = probability_zero(state, basis);
    const int outcome = rng.uniform() < p0 ? 0 : 1;
    return collapse(state, basis, outcome, outcome == 0 ? p0 : 1.0 - p0);
}

std::pair<MeasurementRecord, QuantumState> measure(const QuantumState& state, const MeasurementBasis& basis,
                                                   std::uint64_t seed) {
    Rng rng(seed);
    return measure(state, basis, rng);
}

std::pair<MeasurementRecord, QuantumState> measure_forced(const QuantumState& state,
                                                          const MeasurementBasis& basis, int outcome) {
    if (outcome != 0 && outcome != 1) {
        throw std::invalid_argument("measurement outcome must be 0 or 1");
    }
    const double p0 = probability_zero(state, basis);
    const double p = outcome == 0 ? p0 : 1.0 - p0;
    if (p < 1e-14) {
        throw std::domain_error("requested measurement branch has zero probability");
    }
    return collapse(state, basis, outcome, p);
}

Axis xy_prerotation_axis(double phi) { return Axis::in_plane(phi - kPi / 2.0); }

}  // namespace qdc
