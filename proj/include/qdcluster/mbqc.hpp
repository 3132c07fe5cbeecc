#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "qdcluster/cluster.hpp"

namespace qdc {

enum class PatternBasis { ZRemoval, XY };

/// One logical measurement. The xy angle actually used is
/// (-1)^(sum of outcomes listed in sign_deps) * angle.
struct PatternMeasurement {
    int lq = 0;
    PatternBasis basis = PatternBasis::XY;
    double angle = 0.0;
    std::vector<int> sign_deps;  // indices of earlier measurements
};

/// Byproduct X^x Z^z on an output LQ, exponents the parity of the listed outcomes.
struct FrameRule {
    std::vector<int> x_deps;
    std::vector<int> z_deps;
};

struct MeasurementPattern {
    std::vector<PatternMeasurement> measurements;
    std::vector<int> outputs;
    std::map<int, FrameRule> frame;  // keyed by output LQ
};

class PatternError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Checks that sign dependencies point backwards, each LQ is measured at most
/// once, outputs are never measured and every index fits `lq_count`.
void validate_pattern(const MeasurementPattern& p, int lq_count);

/// Accumulated byproduct per output LQ, exponents in {0, 1}.
struct PauliFrame {
    std::map<int, std::pair<int, int>> xz;
    int x(int lq) const;
    int z(int lq) const;
};

/// Standard 5-LQ chain: the input on LQ 0 leaves LQ 4 as
/// R_x(zeta) R_z(eta) R_x(xi) |in> up to the frame.
MeasurementPattern compile_rotation_chain(double xi, double eta, double zeta);
/// The unitary compile_rotation_chain implements.
CMatrix rotation_chain_target(double xi, double eta, double zeta);

/// Appends a z measurement of `lq`; each neighbour picks up Z^s.
void add_z_removal(MeasurementPattern& p, const Lattice& lattice, int lq);

enum class ReadoutMode {
    /// Instantaneous ideal logical pre-rotations.
    Ideal,
    /// Pre-rotations realized by the encoding's physical controls.
    Physical,
};

struct ReadoutOptions {
    ReadoutMode mode = ReadoutMode::Physical;
    TwoDotParams two_dot;
    SqParams sq;
    EvolveOptions evolve;
    double max_leakage = 1e-4;
};

/// Logical measurement of one LQ along z or an in-plane axis (outcome 0 is the
/// +axis eigenstate). Bare sites are measured directly; two-dot LQs through
/// their A dot; SQs by a singlet-triplet measurement of dots 1 and 2. In-plane
/// axes are first rotated onto z (about the axis at phi - 90 degrees) and the
/// rotation is undone after the collapse.
std::pair<MeasurementRecord, QuantumState> logical_readout(const QuantumState& state, const LogicalRegister& reg,
                                                           int lq, const std::optional<double>& xy_angle, Rng& rng,
                                                           const ReadoutOptions& opts = {});
std::pair<MeasurementRecord, QuantumState> logical_readout(const QuantumState& state, const LogicalRegister& reg,
                                                           int lq, const std::optional<double>& xy_angle,
                                                           std::uint64_t seed, const ReadoutOptions& opts = {});
/// Same with the outcome imposed; throws std::domain_error for a zero-probability branch.
std::pair<MeasurementRecord, QuantumState> logical_readout_forced(const QuantumState& state,
                                                                  const LogicalRegister& reg, int lq,
                                                                  const std::optional<double>& xy_angle, int outcome,
                                                                  const ReadoutOptions& opts = {});

struct PatternStep {
    int step = 0;
    int lq = 0;
    PatternBasis basis = PatternBasis::XY;
    double angle = 0.0;  // after adaptive sign
    int outcome = 0;
    double probability = 0.0;
};

struct PatternRun {
    std::vector<PatternStep> steps;
    PauliFrame frame;
    QuantumState state;

    explicit PatternRun(QuantumState s) : state(std::move(s)) {}
    std::vector<int> outcomes() const;
};

/// Executes the measurements in order with outcomes sampled from `seed`.
PatternRun run_pattern(const QuantumState& state, const MeasurementPattern& pattern, const LogicalRegister& reg,
                       std::uint64_t seed, const ReadoutOptions& opts = {});
/// Executes one prescribed outcome branch.
PatternRun run_pattern_branch(const QuantumState& state, const MeasurementPattern& pattern,
                              const LogicalRegister& reg, const std::vector<int>& outcomes,
                              const ReadoutOptions& opts = {});

/// Logical density matrix of the output LQs (bit k = outputs[k]) with the
/// frame undone.
CMatrix corrected_output(const QuantumState& state, const LogicalRegister& reg, const MeasurementPattern& pattern,
                         const PauliFrame& frame);

std::string pattern_csv(const PatternRun& run);
nlohmann::json pattern_to_json(const MeasurementPattern& p);
MeasurementPattern pattern_from_json(const nlohmann::json& j);

}  // namespace qdc
