#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "qdcluster/statevec.hpp"
#include "qdcluster/types.hpp"

namespace qdc {

enum class EncodingKind { Bare, TwoDot, Supercoherent };

std::string to_string(EncodingKind k);
EncodingKind encoding_from_string(const std::string& s);

/// Logical-qubit embedding into a block of physical sites.
///
/// Local bit k of a block index is the block's k-th site. For the two-dot
/// code the block is (A, B); for the supercoherent code it is dots (1, 2, 3, 4).
/// Logical Paulis are |a><b| combinations of the declared basis vectors, so
/// they vanish on the orthogonal complement.
struct Encoding {
    EncodingKind kind = EncodingKind::Bare;
    int sites_per_lq = 1;
    CVector zero;
    CVector one;
    CMatrix X_L;
    CMatrix Y_L;
    CMatrix Z_L;
    CMatrix projector;

    std::string name() const { return to_string(kind); }
    int block_dim() const { return 1 << sites_per_lq; }
    /// Columns |0_L>, |1_L>.
    CMatrix basis() const;
    /// B u B^dag + (I - P): acts as u on the code space, identity elsewhere.
    CMatrix embed(const CMatrix& u) const;

    static const Encoding& get(EncodingKind kind);
};

/// Encoded register: LQ q occupies sites site_map[q].
class LogicalRegister {
public:
    LogicalRegister(EncodingKind kind, std::vector<std::vector<int>> site_map);
    /// LQ q on sites [q*k, (q+1)*k).
    static LogicalRegister contiguous(EncodingKind kind, int lq_count);

    const Encoding& encoding() const { return *encoding_; }
    EncodingKind kind() const { return encoding_->kind; }
    int lq_count() const { return static_cast<int>(site_map_.size()); }
    int n_sites() const { return n_sites_; }
    const std::vector<int>& sites(int lq) const;
    const std::vector<std::vector<int>>& site_map() const { return site_map_; }
    /// LQ owning a physical site, or -1.
    int owner(int site) const;

private:
    const Encoding* encoding_;
    std::vector<std::vector<int>> site_map_;
    int n_sites_ = 0;
    std::vector<int> owner_;
};

nlohmann::json register_to_json(const LogicalRegister& reg);
LogicalRegister register_from_json(const nlohmann::json& j);

/// Product of |0_L> / |1_L> per LQ; bits[q] is the logical value of LQ q.
QuantumState encode(const LogicalRegister& reg, const std::vector<int>& bits);
/// General logical state; index bit q belongs to LQ q. Must be normalized (1e-10).
QuantumState encode(const LogicalRegister& reg, const CVector& logical);
/// Product state from one 2-vector per LQ.
QuantumState encode_product(const LogicalRegister& reg, const std::vector<CVector>& per_lq);

/// Raw overlaps <L_x|psi> for every logical basis state x.
CVector logical_overlaps(const QuantumState& state, const LogicalRegister& reg);

struct LogicalProjection {
    CVector amplitudes;  // renormalized
    double leakage = 0.0;
};

/// Throws LeakageError when no logical component remains.
LogicalProjection project_logical(const QuantumState& state, const LogicalRegister& reg);

/// P O P in the logical basis of the LQs touched by op (ascending LQ order,
/// first LQ on the least-significant logical bit).
struct ProjectedOperator {
    std::vector<int> lqs;
    CMatrix matrix;
};
ProjectedOperator projected_operator(const LocalOperator& op, const LogicalRegister& reg);

/// 2x2 reduced density matrix of one LQ from a logical amplitude vector.
CMatrix reduced_logical_density(const CVector& logical, int lq_count, int lq);

/// Logical Pauli (axis 0..2) of LQ q as an operator on the register.
LocalOperator logical_pauli(const LogicalRegister& reg, int lq, int axis);

}  // namespace qdc
