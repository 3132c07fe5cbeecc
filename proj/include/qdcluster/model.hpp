#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "qdcluster/statevec.hpp"
#include "qdcluster/types.hpp"

namespace qdc {

enum class RampShape { Constant, Linear, Smoothstep };

std::string to_string(RampShape s);
RampShape ramp_shape_from_string(const std::string& s);

/// Time envelope for a scheduled coupling.
///
/// The profile is zero before `start`, rises over `duration`, holds `peak` for
/// `plateau`, then falls over `duration`. A Constant profile is a sharp
/// on/off pulse spanning the same window.
struct RampProfile {
    RampShape shape = RampShape::Smoothstep;
    double duration = 1.0;
    double plateau = 0.0;
    double peak = 1.0;
    double start = 0.0;

    void validate() const;
    double value(double t) const;
    double end() const { return start + 2.0 * duration + plateau; }
    /// Times at which the profile's functional form changes.
    std::vector<double> breakpoints() const;
    /// True when the profile is constant on the open interval (a, b).
    bool constant_on(double a, double b) const;
};

enum class Species { None, A, B };

std::string to_string(Species s);
Species species_from_string(const std::string& s);

struct Edge {
    int i = 0;
    int j = 0;
    double J = 0.0;
    /// Empty for a static coupling; otherwise J(t) = J * schedule.value(t).
    std::string schedule;
};

struct SiteZeeman {
    double g = 0.0;
    Species species = Species::None;
};

/// Heisenberg exchange graph plus per-site Zeeman terms.
///
///   H(t) = sum_edges (J_ij(t)/4) sigma^i . sigma^j + sum_i (g_i B_z / 2) sigma_z^i
///
/// so an isolated J = 1 pair has singlet-triplet splitting 1. Setting J = 4
/// reproduces the bare sum sigma^i . sigma^j normalization.
class CouplingModel {
public:
    explicit CouplingModel(int n_sites);

    CouplingModel& add_edge(int i, int j, double J, std::string schedule = {});
    CouplingModel& add_schedule(const std::string& id, RampProfile profile);
    CouplingModel& set_field(double B_z);
    CouplingModel& set_site(int site, SiteZeeman z);

    int n_sites() const { return n_sites_; }
    const std::vector<Edge>& edges() const { return edges_; }
    std::vector<Edge>& mutable_edges() { return edges_; }
    const std::map<std::string, RampProfile>& schedules() const { return schedules_; }
    double B_z() const { return B_z_; }
    const std::vector<SiteZeeman>& sites() const { return sites_; }

    double coupling_at(const Edge& e, double t) const;
    double zeeman_coefficient(int site) const { return sites_[site].g * B_z_ / 2.0; }
    /// Latest schedule end time; +inf when nothing is scheduled.
    double horizon() const;
    /// Index of the edge joining i and j, if any.
    std::optional<std::size_t> find_edge(int i, int j) const;

private:
    int n_sites_;
    std::vector<Edge> edges_;
    std::map<std::string, RampProfile> schedules_;
    double B_z_ = 0.0;
    std::vector<SiteZeeman> sites_;
};

void to_json(nlohmann::json& j, const RampProfile& r);
void from_json(const nlohmann::json& j, RampProfile& r);
nlohmann::json model_to_json(const CouplingModel& m);
CouplingModel model_from_json(const nlohmann::json& j);

/// Frozen Hamiltonian: sum_p c_p sigma^{i_p}.sigma^{j_p} + sum_f h_f sigma_z^{site_f}.
struct HamiltonianTerms {
    struct Pair {
        int i;
        int j;
        double c;
    };
    struct Field {
        int site;
        double h;
    };
    int n_sites = 0;
    std::vector<Pair> pairs;
    std::vector<Field> fields;

    /// Hermitian operator list (one per term).
    std::vector<LocalOperator> to_operators() const;
    /// Dense matrix on the full register.
    CMatrix dense() const;
    /// H|psi> without forming a matrix.
    CVector apply(const CVector& psi) const;
    double expectation(const QuantumState& state) const;
};

HamiltonianTerms hamiltonian_at(const CouplingModel& model, double t);

struct EvolveOptions {
    double tolerance = 1e-10;
    /// Components up to this many sites are propagated with dense sector exponentials.
    int dense_limit = 10;
    std::size_t max_steps = 200000;
};

/// exp-propagates state from t0 to t1. Pure: the input is not modified.
QuantumState evolve(const QuantumState& state, const CouplingModel& model, double t0, double t1,
                    const EvolveOptions& options = {});

/// Evolves several states in place under one model, sharing component propagators.
void evolve_many(std::vector<QuantumState>& states, const CouplingModel& model, double t0, double t1,
                 const EvolveOptions& options = {});

/// Full propagator on the model's register (n_sites <= dense_limit).
CMatrix propagator(const CouplingModel& model, double t0, double t1, const EvolveOptions& options = {});

struct Level {
    double energy;
    int degeneracy;
};

/// k lowest distinct eigenvalues, degeneracies merged at 1e-9. Requires n_sites <= 12.
std::vector<Level> spectrum(const CouplingModel& model, double t, int k);

/// Orthonormal basis of the lowest level's eigenspace (columns). Requires n_sites <= 12.
CMatrix ground_space(const CouplingModel& model, double t);

}  // namespace qdc
