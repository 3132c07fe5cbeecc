#pragma once

#include <array>
#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "qdcluster/encodings.hpp"
#include "qdcluster/model.hpp"
#include "qdcluster/statevec.hpp"

namespace qdc {

// ---------------------------------------------------------------------------
// Recipes

/// Free evolution under a model over its clock window [t0, t1].
struct EvolveStep {
    CouplingModel model;
    double t0 = 0.0;
    double t1 = 0.0;
    std::string label;
};
/// The same single-site rotation on every listed site.
struct LocalRotationStep {
    std::vector<int> sites;
    Axis axis;
    double angle = 0.0;
};
struct LocalGateStep {
    LocalOperator op;
};
/// Instantaneous ideal logical rotation on one encoded block (identity off the code space).
struct LogicalRotationStep {
    std::vector<int> sites;
    EncodingKind encoding = EncodingKind::Bare;
    Axis axis;
    double angle = 0.0;
};
using RecipeStep = std::variant<EvolveStep, LocalRotationStep, LocalGateStep, LogicalRotationStep>;

class GateRecipe {
public:
    GateRecipe(std::string name, int n_sites);

    /// Evolve from 0 to duration; zero durations are dropped.
    GateRecipe& evolve(const CouplingModel& model, double duration, std::string label = {});
    GateRecipe& evolve_window(const CouplingModel& model, double t0, double t1, std::string label = {});
    GateRecipe& rotate(std::vector<int> sites, const Axis& axis, double angle);
    GateRecipe& gate(const LocalOperator& op);
    GateRecipe& logical_rotation(std::vector<int> sites, EncodingKind enc, const Axis& axis, double angle);
    GateRecipe& append(const GateRecipe& other);

    const std::string& name() const { return name_; }
    int n_sites() const { return n_sites_; }
    const std::vector<RecipeStep>& steps() const { return steps_; }
    double total_time() const;

private:
    std::string name_;
    int n_sites_;
    std::vector<RecipeStep> steps_;
};

nlohmann::json recipe_to_json(const GateRecipe& recipe);

void run_recipe_many(std::vector<QuantumState>& states, const GateRecipe& recipe, const EvolveOptions& opts = {});
QuantumState run_recipe(const QuantumState& state, const GateRecipe& recipe, const EvolveOptions& opts = {});
/// Full unitary of a recipe (n_sites <= 10).
CMatrix recipe_unitary(const GateRecipe& recipe, const EvolveOptions& opts = {});

// ---------------------------------------------------------------------------
// Effective logical action

struct EffectiveUnitary {
    CMatrix logical;       // 2^L x 2^L logical overlaps, phase-normalized
    double leakage = 0.0;  // max over logical basis inputs
    bool global_phase_removed = false;
};

/// Runs the recipe on every logical basis input. Throws LeakageError when leakage >= 0.5.
EffectiveUnitary extract_logical_unitary(const GateRecipe& recipe, const LogicalRegister& reg,
                                         const EvolveOptions& opts = {});
/// Same extraction from a full-register unitary.
EffectiveUnitary effective_from_unitary(const CMatrix& u, const LogicalRegister& reg);

/// Scales u so its first element (row-major) above 1e-8 in magnitude is real and positive.
CMatrix remove_global_phase(const CMatrix& u);
/// Largest singular value.
double operator_norm(const CMatrix& m);
/// min over phi of ||u - e^{i phi} v||.
double phase_invariant_distance(const CMatrix& u, const CMatrix& v);
/// 1 - |tr(v^dag u)/d|^2.
double gate_infidelity(const CMatrix& u, const CMatrix& target);

/// Makhlin local invariants of a two-qubit gate.
struct LocalInvariants {
    cplx G1;
    double G2 = 0.0;
};
LocalInvariants local_invariants(const CMatrix& u);
bool same_local_class(const LocalInvariants& a, const LocalInvariants& b, double tol = 1e-6);
LocalInvariants cz_class();
/// |G1 - G1'| + |G2 - G2'|.
double invariant_distance(const LocalInvariants& a, const LocalInvariants& b);

/// Axis and angle of a 2x2 unitary as exp(-i angle/2 n.sigma), angle in [0, pi].
struct AxisAngle {
    Axis axis;
    double angle = 0.0;
};
AxisAngle axis_angle(const CMatrix& u2);

/// Coefficients of a diagonal two-qubit logical gate
///   diag = exp(-i (alpha Z0 Z1 + beta1 Z0 + beta2 Z1 + gamma)),
/// with Z0 on the least-significant logical bit. Valid while |4 alpha| < pi.
struct DiagonalDecomposition {
    double alpha = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double offdiag = 0.0;  // largest off-diagonal magnitude
};
DiagonalDecomposition diagonal_decomposition(const CMatrix& u4);

// ---------------------------------------------------------------------------
// Calibration

class CalibrationError : public std::runtime_error {
public:
    CalibrationError(const std::string& what, std::vector<std::pair<double, double>> trace)
        : std::runtime_error(what), trace_(std::move(trace)) {}
    const std::vector<std::pair<double, double>>& trace() const { return trace_; }

private:
    std::vector<std::pair<double, double>> trace_;
};

struct CalibrationResult {
    std::vector<double> parameters;
    double objective = 0.0;
    std::vector<std::pair<double, double>> trace;  // 1-D grid (parameter, objective)
};

/// Grid scan then golden-section refinement around the best grid point.
/// Ties on the grid go to the lowest parameter. Throws CalibrationError if no
/// grid point has objective below `accept`.
CalibrationResult calibrate(const std::function<double(double)>& objective, const std::vector<double>& grid,
                            double accept = 0.5, double xtol = 1e-10);
/// Two-parameter variant: grid over (a, b), then alternating golden sections.
CalibrationResult calibrate2(const std::function<double(double, double)>& objective,
                             const std::vector<double>& grid_a, const std::vector<double>& grid_b,
                             double accept = 0.5, double xtol = 1e-10);

std::vector<double> linspace(double a, double b, int n);

// ---------------------------------------------------------------------------
// Bare dots

/// U1 (Z on `a`) U1 with U1 = exp(-i pi/8 sigma^a.sigma^b).
GateRecipe ising_from_heisenberg(int a, int b, int n_sites);
/// Evolution under J sigma.sigma/4 on (a, b) for t = pi/dJ: SWAP up to phase.
GateRecipe swap_pair(int a, int b, double dJ, int n_sites);

// ---------------------------------------------------------------------------
// Two-dot code

struct TwoDotParams {
    double J_intra = 1.0;
    double J_inter = 1.0;
    double B_z = 1.0;
    double g_A = 2.0;
    double g_B = 1.0;
};

/// Intra-LQ coupling for t = angle/J_intra: logical R_x(angle) on each listed LQ.
GateRecipe two_dot_x_rotation(const LogicalRegister& reg, const std::vector<int>& lqs, double angle,
                              const TwoDotParams& p = {});
/// Field on for t = angle/(B_z dg), restricted to the listed LQs: logical R_z(angle).
GateRecipe two_dot_z_rotation(const LogicalRegister& reg, const std::vector<int>& lqs, double angle,
                              const TwoDotParams& p = {});
/// Physical logical rotation R_axis(angle) on one LQ as z-x-z segments.
GateRecipe two_dot_rotation(const LogicalRegister& reg, int lq, const Axis& axis, double angle,
                            const TwoDotParams& p = {});

/// Inter-LQ evolve(theta), Z on dot `refocus_site`, evolve(theta). With refocus
/// false the two evolutions run back to back.
GateRecipe two_dot_ising(int n_sites, std::pair<int, int> edge, int refocus_site, double theta,
                         bool refocus = true, const TwoDotParams& p = {});

struct TwoDotIsingResult {
    GateRecipe recipe;
    EffectiveUnitary effective;
    double theta = 0.0;
    LocalInvariants invariants;
    std::vector<std::pair<double, double>> trace;
};
/// Scans theta for a CZ-class logical gate on a two-LQ two-dot register whose
/// edge joins B of LQ 0 to A of LQ 1.
TwoDotIsingResult calibrate_two_dot_ising(const TwoDotParams& p = {}, int grid_points = 41);

// ---------------------------------------------------------------------------
// Supercoherent code

struct SqParams {
    double J_intra = 4.0;  // sum sigma.sigma normalization, gap 4
    double rotation_dJ = 1.0;
};

/// All six intra-SQ edges of every LQ at J_intra.
CouplingModel sq_idle_model(const LogicalRegister& reg, const SqParams& p = {});
/// Traceless direction of P sigma^a.sigma^b P for dots a, b (0-based) of one SQ.
Axis sq_pair_axis(int a, int b);
/// K4 plus dJ on dots (a, b) of `lq` for `duration`. Rejects dJ <= -J_intra.
GateRecipe sq_rotation(const LogicalRegister& reg, int lq, std::pair<int, int> pair, double dJ, double duration,
                       const SqParams& p = {});
/// Physical logical rotations on several SQs at once, built from the (1,2) and
/// (2,3) generators.
GateRecipe sq_logical_unitaries(const LogicalRegister& reg, const std::vector<std::pair<int, CMatrix>>& targets,
                                const SqParams& p = {});
/// Diagonal SWAP of dots (a, b) in each listed SQ via dJ for pi/dJ.
GateRecipe sq_swap(const LogicalRegister& reg, const std::vector<int>& lqs, std::pair<int, int> pair, double dJ,
                   const SqParams& p = {});

/// One inter-SQ physical edge between dot `a` of the first SQ and dot `b` of the second.
using InterSqEdges = std::vector<std::pair<int, int>>;
/// Default pairing: singlet pair (1,2) to (1',2').
InterSqEdges default_inter_sq_edges();

struct InterSqSettings {
    RampProfile ramp;  // peak is a multiplier; edges carry J_peak
    double J_peak = 0.08;
    InterSqEdges edges = default_inter_sq_edges();
    std::vector<double> edge_scale;  // per-edge multipliers, default all 1
    SqParams sq;
};
/// Default ramp: smoothstep, duration 40, peak 0.02 gap.
InterSqSettings default_inter_sq_settings();

struct InterSqResult {
    GateRecipe recipe;
    EffectiveUnitary effective;
    DiagonalDecomposition phases;
};
/// Two SQs (8 sites), inter edges ramped by the schedule. Throws LeakageError
/// above max_leakage.
InterSqResult adiabatic_inter_sq(const InterSqSettings& s, double max_leakage = 1e-6,
                                 const EvolveOptions& opts = {});

/// Reuses ramp propagators to evaluate many plateau lengths cheaply.
class InterSqGate {
public:
    explicit InterSqGate(const InterSqSettings& s, const EvolveOptions& opts = {});
    /// Effective logical unitary with the given plateau.
    EffectiveUnitary effective(double plateau) const;
    /// Plateau giving a CZ-class gate (alpha area = pi/4 modulo pi/2).
    double calibrate_cz(double* alpha_rate = nullptr) const;

private:
    LogicalRegister reg_;
    CMatrix up_;    // logical inputs after the rise, 256 x 4
    CMatrix down_;  // fall propagator
    std::vector<std::vector<std::size_t>> sectors_;
    std::vector<Eigen::MatrixXd> vecs_;
    std::vector<Eigen::VectorXd> vals_;
};

}  // namespace qdc
