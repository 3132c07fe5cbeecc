#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qdcluster/types.hpp"

namespace qdc {

/// Seeded 64-bit Mersenne twister with a bit-reproducible uniform draw.
///
/// std::uniform_real_distribution is implementation-defined, so draws are
/// formed directly from the top 53 bits of the engine output.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    std::uint64_t next() { return engine_(); }
    /// Standard normal via Box-Muller on two uniform draws.
    double normal();

private:
    std::mt19937_64 engine_;
};

/// Dense amplitude vector over n spin-1/2 sites.
///
/// Site 0 is the least-significant bit of the basis index, and bit value 0 is
/// spin-up (sigma_z = +1).
class QuantumState {
public:
    /// All sites spin-up.
    explicit QuantumState(int n_sites);
    /// Takes ownership of amplitudes; they must have length 2^n and unit norm (1e-10).
    QuantumState(int n_sites, CVector amplitudes);

    static QuantumState basis(int n_sites, std::uint64_t index);
    /// Product state with every site in (|0> + |1>)/sqrt(2).
    static QuantumState plus(int n_sites);

    int n_sites() const { return n_sites_; }
    std::size_t dim() const { return static_cast<std::size_t>(amps_.size()); }
    const CVector& amplitudes() const { return amps_; }
    cplx operator[](std::size_t i) const { return amps_[static_cast<Eigen::Index>(i)]; }

    double norm() const;
    /// <this|other>
    cplx inner(const QuantumState& other) const;
    /// |<this|other>|^2
    double fidelity(const QuantumState& other) const;

    /// Mutable access for kernels; callers restore normalization themselves.
    CVector& mutable_amplitudes() { return amps_; }
    void renormalize();

private:
    int n_sites_;
    CVector amps_;
};

enum class OperatorKind { Unitary, Hermitian };

/// Matrix acting on an ordered list of sites.
///
/// Bit k of the local matrix index corresponds to support[k], so support[0]
/// is the least-significant local bit.
class LocalOperator {
public:
    LocalOperator(std::vector<int> support, CMatrix matrix, OperatorKind kind);

    const std::vector<int>& support() const { return support_; }
    const CMatrix& matrix() const { return matrix_; }
    OperatorKind kind() const { return kind_; }
    int arity() const { return static_cast<int>(support_.size()); }

    LocalOperator adjoint() const;

private:
    std::vector<int> support_;
    CMatrix matrix_;
    OperatorKind kind_;
};

namespace pauli {
CMatrix I();
CMatrix X();
CMatrix Y();
CMatrix Z();
/// Pauli matrix for axis index 0, 1, 2 (x, y, z).
CMatrix by_index(int axis);
}  // namespace pauli

/// Kronecker product with `high` on the more significant bits.
CMatrix kron(const CMatrix& high, const CMatrix& low);
/// sigma^a . sigma^b on a two-site local space (eigenvalues -3, 1, 1, 1).
CMatrix sigma_dot_matrix();
CMatrix swap_matrix();
/// exp(-i angle/2 n.sigma).
CMatrix rotation_matrix(const Axis& axis, double angle);
CMatrix singlet_projector_matrix();

LocalOperator pauli_op(int site, int axis);
LocalOperator sigma_dot_op(int a, int b);
LocalOperator rotation_op(int site, const Axis& axis, double angle);

bool is_unitary(const CMatrix& m, double tol = 1e-10);
bool is_hermitian(const CMatrix& m, double tol = 1e-12);

/// Embeds op into the full state. Throws std::out_of_range on bad support.
QuantumState apply_unitary(const QuantumState& state, const LocalOperator& op);
/// In-place variant used by the simulation modules; op need not be unitary.
void apply_inplace(QuantumState& state, std::span<const int> support, const CMatrix& m);

double expectation(const QuantumState& state, const LocalOperator& op);
/// Matrix element <state| op |state> without Hermiticity requirement.
cplx matrix_element(const QuantumState& state, const LocalOperator& op);

struct ZBasis {
    int site;
};
/// Measurement along the in-plane direction at angle phi from +x.
struct XYBasis {
    int site;
    double phi;
};
/// Outcome 0 = singlet, 1 = triplet.
struct SingletTripletBasis {
    int site_a;
    int site_b;
};
using MeasurementBasis = std::variant<ZBasis, XYBasis, SingletTripletBasis>;

std::string describe(const MeasurementBasis& basis);
std::vector<int> basis_support(const MeasurementBasis& basis);

struct MeasurementRecord {
    std::vector<int> support;
    MeasurementBasis basis;
    int outcome = 0;
    double probability = 0.0;
};

/// Born probability of outcome 0 for the given basis.
double probability_zero(const QuantumState& state, const MeasurementBasis& basis);

/// Samples an outcome from rng and collapses the state.
std::pair<MeasurementRecord, QuantumState> measure(const QuantumState& state, const MeasurementBasis& basis,
                                                   Rng& rng);
std::pair<MeasurementRecord, QuantumState> measure(const QuantumState& state, const MeasurementBasis& basis,
                                                   std::uint64_t seed);
/// Collapses onto the requested outcome; throws std::domain_error if it has zero probability.
std::pair<MeasurementRecord, QuantumState> measure_forced(const QuantumState& state,
                                                          const MeasurementBasis& basis, int outcome);

/// Rotation that maps the +phi in-plane direction onto +z.
Axis xy_prerotation_axis(double phi);

}  // namespace qdc
