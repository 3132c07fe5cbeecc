#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "qdcluster/synthesis.hpp"

namespace qdc {

enum class ErrorKind {
    IntraMismatch,      // J -> (1 + delta) J on the target edges
    ResidualInter,      // extra edges at epsilon * nominal J
    InterSqImbalance,   // first target (1 + d/2) J, second (1 - d/2) J
    SingleInterSqEdge,  // keep the first target, drop the others
};

std::string to_string(ErrorKind k);
ErrorKind error_kind_from_string(const std::string& s);

struct ErrorSpec {
    ErrorKind kind = ErrorKind::IntraMismatch;
    double magnitude = 0.0;
    std::vector<std::pair<int, int>> targets;
    /// Reference coupling for ResidualInter; 0 means the mean |J| of the model's edges.
    double nominal_J = 0.0;
};

nlohmann::json error_spec_to_json(const ErrorSpec& s);
ErrorSpec error_spec_from_json(const nlohmann::json& j);

struct PerturbedModel {
    CouplingModel model;
    std::vector<std::string> warnings;
};

/// Perturbed copy of the model. Throws std::invalid_argument for non-finite
/// magnitudes or unregistered targets. For registers of up to 12 sites the
/// gap above the unperturbed ground manifold is compared before and after;
/// a gap below half its nominal value is reported as a warning.
PerturbedModel apply_error_model(const CouplingModel& model, const ErrorSpec& spec);

/// Idle SQ register with dots `pair` of `lq` at (1 + delta) J_intra.
CouplingModel sq_mismatch_model(const LogicalRegister& reg, int lq, std::pair<int, int> pair, double delta,
                                const SqParams& p = {});

/// drift(t/2), ideal logical pi about `pulse_axis`, drift(t/2), pi again.
GateRecipe refocus_sequence(const CouplingModel& drift, double t, const LogicalRegister& reg, int lq,
                            const Axis& pulse_axis = Axis::X());

/// Logical z drift of one SQ with a mismatched (1,2) coupling. The measured
/// rate r is the coefficient in exp(-i r t Z_L); the projected generator
/// predicts r = -2 delta J_intra / 4.
struct DriftMeasurement {
    double delta = 0.0;
    double rate = 0.0;
    double predicted = 0.0;
    double leakage = 0.0;
};
DriftMeasurement measure_drift(double delta, double t, const SqParams& p = {}, const EvolveOptions& opts = {});

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    /// True when y has no spread, so r2 is undefined (reported as 0).
    bool degenerate = false;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct DriftFit {
    std::vector<DriftMeasurement> points;
    LinearFit fit;
    double predicted_slope = 0.0;
    double relative_error = 0.0;
};
DriftFit drift_linearity(const std::vector<double>& deltas, double t, const SqParams& p = {},
                         const EvolveOptions& opts = {});

struct RefocusReport {
    double unrefocused = 0.0;  // logical infidelity vs identity
    double refocused = 0.0;
    double leakage = 0.0;
};
/// Mismatch on dots `pair` of a single SQ, idle for t, with and without refocusing.
RefocusReport refocus_check(double delta, double t, std::pair<int, int> pair, const Axis& pulse_axis,
                            const SqParams& p = {}, const EvolveOptions& opts = {});

/// Logical infidelity of an idle register after t (leakage included).
double idle_infidelity(const CouplingModel& model, const LogicalRegister& reg, double t,
                       const EvolveOptions& opts = {});

struct SweepPoint {
    double parameter = 0.0;
    double alpha = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double offdiag = 0.0;
    double leakage = 0.0;
    bool adiabatic = true;
};

struct ImbalanceSweep {
    std::vector<SweepPoint> points;
    LinearFit beta_fit;   // beta1 - beta2 against the imbalance, adiabatic points only
    LinearFit alpha_fit;  // alpha against imbalance^2
    double max_offdiag = 0.0;
    int excluded = 0;
};
/// Two SQs with the settings' two inter edges at (1 +- d/2) J_peak for each
/// grid value d. Points leaking more than max_leakage are flagged and left out
/// of the fits. Grid points run in parallel; results keep grid order.
ImbalanceSweep imbalance_sweep(const InterSqSettings& base, const std::vector<double>& grid,
                               double max_leakage = 1e-6, const EvolveOptions& opts = {});
std::string sweep_csv(const ImbalanceSweep& sweep);

struct ProbeResult {
    EffectiveUnitary effective;
    double infidelity = 0.0;  // vs identity, leakage included
    double leakage = 0.0;
    RampProfile ramp;
};
/// Only the first inter edge of `base` on, at peak J, under `ramp`.
ProbeResult single_edge_probe(const InterSqSettings& base, double J, const RampProfile& ramp,
                              const EvolveOptions& opts = {});

struct ProbeContrast {
    ProbeResult adiabatic;
    ProbeResult diabatic;  // same window with a sudden (constant) switch
};
ProbeContrast single_edge_contrast(const InterSqSettings& base, double J, const RampProfile& ramp,
                                   const EvolveOptions& opts = {});

}  // namespace qdc
