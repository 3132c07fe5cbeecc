#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "qdcluster/encodings.hpp"
#include "qdcluster/synthesis.hpp"

namespace qdc {

/// Bare two-species grid, paired-dot grid, two-layer SQ layout and planar SQ
/// layout.
enum class LatticeKind { TwoSpeciesPlanar, PairedDotPlanar, SqTwoLayer, SqPlanar };

std::string to_string(LatticeKind k);
LatticeKind lattice_kind_from_string(const std::string& s);
EncodingKind encoding_of(LatticeKind k);

/// Nearest-neighbour LQ pair, a < b.
struct LqEdge {
    int a = 0;
    int b = 0;
    bool horizontal = true;
};

/// rows x cols grid of logical qubits with its physical site layout.
///
/// Bare: LQ (r, c) is site r*cols + c, species A where r + c is even.
/// Paired dots: LQ (r, c) occupies columns 2c, 2c+1 of physical row r; even rows
/// read [A B], odd rows [B A]. Vertical couplings use the left-column dots.
/// SQ: LQ q owns sites 4q .. 4q+3 (dots 1..4).
class Lattice {
public:
    Lattice(LatticeKind kind, int rows, int cols);

    LatticeKind kind() const { return kind_; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int lq_count() const { return rows_ * cols_; }
    int lq(int r, int c) const { return r * cols_ + c; }
    int row(int q) const { return q / cols_; }
    int col(int q) const { return q % cols_; }
    /// Checkerboard colouring, true where row + col is even.
    bool colored(int q) const { return (row(q) + col(q)) % 2 == 0; }
    const LogicalRegister& logical_register() const { return reg_; }
    int n_sites() const { return reg_.n_sites(); }
    const std::vector<LqEdge>& adjacency() const { return adjacency_; }
    std::vector<int> neighbors(int q) const;
    /// Species of a physical site (None for SQ lattices).
    Species species(int site) const;

    static int site_cap(LatticeKind kind);

private:
    LatticeKind kind_;
    int rows_;
    int cols_;
    LogicalRegister reg_;
    std::vector<LqEdge> adjacency_;
};

nlohmann::json lattice_to_json(const Lattice& l);
Lattice lattice_from_json(const nlohmann::json& j);

/// One physical exchange coupling realizing (part of) an adjacency edge.
struct Coupling {
    int site_a = 0;
    int site_b = 0;
    int edge = 0;  // index into Lattice::adjacency()
};

struct ScheduleStep {
    std::string label;
    std::vector<Coupling> couplings;
    /// SQ dot pair (0-based) swapped in every SQ before the step and swapped back after.
    std::vector<std::pair<int, int>> conjugating_swaps;
};

struct Schedule {
    std::string name;
    /// Negative controls skip the legality checks.
    bool control = false;
    std::vector<ScheduleStep> steps;
};

class ScheduleError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The staged schedule for the lattice kind.
Schedule make_schedule(const Lattice& lattice);
/// Every coupling on at once (bare and paired-dot lattices only).
Schedule make_simultaneous_schedule(const Lattice& lattice);
/// Steps reordered; order must be a permutation of the step indices.
Schedule permute_steps(const Schedule& s, const std::vector<int>& order);
/// Site-disjoint couplings per step, each adjacency edge covered exactly once.
void validate_schedule(const Lattice& lattice, const Schedule& s);

nlohmann::json schedule_to_json(const Schedule& s);

struct BuildOptions {
    TwoDotParams two_dot;
    InterSqSettings inter_sq = default_inter_sq_settings();
    double swap_dJ = 1.0;
    /// Two-dot only: false runs the inter-LQ evolution without the Z pulse.
    bool refocus = true;
    bool apply_corrections = true;
    /// Logical input states replacing |+> on selected LQs.
    std::map<int, CVector> inputs;
    EvolveOptions evolve;
};

struct StepDiagnostic {
    std::string label;
    double duration = 0.0;
    double leakage = 0.0;
};

/// Singlet-pair orientation check around a conjugating SWAP.
struct PairingCheck {
    int lq = 0;
    double before = 0.0;  // <P_s(1,2)> before the swap
    double after = 0.0;   // <P_s(2,4)> after it
    bool pass = false;
};

struct ClusterBuild {
    QuantumState state;
    std::vector<double> corrections;  // final R_z angle per LQ
    std::vector<StepDiagnostic> steps;
    std::vector<PairingCheck> pairing;
    bool pairing_reference = true;  // |0_L> lands on a (2,4) singlet after the swap
    double leakage = 0.0;
    double total_time = 0.0;

    explicit ClusterBuild(QuantumState s) : state(std::move(s)) {}
};

ClusterBuild build_cluster(const Lattice& lattice, const Schedule& schedule, const BuildOptions& options = {});

/// Ideal logical cluster: |+> (or the given inputs) on every LQ, CZ on every edge.
CVector ideal_cluster(const Lattice& lattice, const std::map<int, CVector>& inputs = {});

struct StabilizerReport {
    std::vector<double> expectation;
    std::vector<bool> pass;
    double threshold = 1.0 - 1e-8;
    double leakage = 0.0;
    bool all_pass() const;
    double min_expectation() const;
};

/// <K_a> = <X_a prod_b Z_b> on the logical content of the state.
StabilizerReport verify_stabilizers(const QuantumState& state, const Lattice& lattice,
                                    double threshold = 1.0 - 1e-8);
/// Same on a logical amplitude vector.
StabilizerReport verify_stabilizers(const CVector& logical, const Lattice& lattice, double threshold = 1.0 - 1e-8);
std::string stabilizer_csv(const StabilizerReport& report);

}  // namespace qdc
