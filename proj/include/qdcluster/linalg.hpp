#pragma once

#include <functional>
#include <vector>

#include "qdcluster/model.hpp"
#include "qdcluster/types.hpp"

namespace qdc::linalg {

/// Heisenberg + z-field Hamiltonian on a site subset in local indexing.
///
/// All such Hamiltonians conserve total S_z, so dense work is done one
/// magnetization sector at a time.
struct LocalHamiltonian {
    int n = 0;
    std::vector<HamiltonianTerms::Pair> pairs;  // indices local to [0, n)
    std::vector<HamiltonianTerms::Field> fields;

    LocalHamiltonian scaled(double s) const;
    /// Term-wise a*this + b*other; both must share the same term layout.
    LocalHamiltonian combined(double a, const LocalHamiltonian& other, double b) const;
    double max_abs_coefficient() const;
};

/// Real symmetric block of the Hamiltonian on the sector with `ones` spin-down sites.
Eigen::MatrixXd sector_matrix(const LocalHamiltonian& h, int ones, const std::vector<std::size_t>& states);
std::vector<std::vector<std::size_t>> sectors(int n);

CMatrix dense_matrix(const LocalHamiltonian& h);
/// exp(-i dt H) via sector eigendecompositions.
CMatrix expm_hermitian(const LocalHamiltonian& h, double dt);

/// Sorted eigenvalues over all sectors.
std::vector<double> eigenvalues(const LocalHamiltonian& h);
/// Eigenvectors (columns) for eigenvalues within tol of the minimum.
CMatrix lowest_eigenspace(const LocalHamiltonian& h, double tol);

/// Time-dependent Hamiltonian on a fixed term layout.
using HamiltonianAt = std::function<LocalHamiltonian(double)>;

struct AdaptiveStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
};

/// Dense propagator of a time-dependent Hamiltonian over [t0, t1] using the
/// fourth-order commutator-free Magnus scheme with step-doubling control.
CMatrix propagate_dense(const HamiltonianAt& h, double t0, double t1, double tol, std::size_t max_steps,
                        AdaptiveStats* stats = nullptr);

/// H v without forming a matrix; h.n must equal log2(v.size()).
CVector apply(const LocalHamiltonian& h, const CVector& v);

/// exp(-i dt H) v by Lanczos with adaptive substeps.
CVector krylov_expmv(const LocalHamiltonian& h, const CVector& v, double dt, double tol, std::size_t max_steps);

/// Same scheme as propagate_dense, applied to one vector through Krylov exponentials.
/// When time_dependent is false the Hamiltonian at t0 is used throughout.
CVector propagate_krylov(const HamiltonianAt& h, const CVector& v, double t0, double t1, bool time_dependent,
                         double tol, std::size_t max_steps);

/// exp(-i H) for a general small Hermitian matrix.
CMatrix expm_hermitian_dense(const CMatrix& h);
/// Principal logarithm of a unitary, returned as the Hermitian G with U = exp(-i G).
CMatrix log_unitary(const CMatrix& u);

}  // namespace qdc::linalg
