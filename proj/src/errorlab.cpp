#include "qdcluster/errorlab.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

namespace qdc {

std::string to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::IntraMismatch: return "intra-mismatch";
        case ErrorKind::ResidualInter: return "residual-inter";
        case ErrorKind::InterSqImbalance: return "inter-sq-imbalance";
        case ErrorKind::SingleInterSqEdge: return "single-inter-sq-edge";
    }
    return "?";
}

ErrorKind error_kind_from_string(const std::string& s) {
    for (auto k : {ErrorKind::IntraMismatch, ErrorKind::ResidualInter, ErrorKind::InterSqImbalance,
                   ErrorKind::SingleInterSqEdge}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    throw std::invalid_argument("unknown error kind '" + s + "'");
}

nlohmann::json error_spec_to_json(const ErrorSpec& s) {
    nlohmann::json targets = nlohmann::json::array();
    for (const auto& [a, b] : s.targets) {
        targets.push_back({a, b});
    }
    return {{"kind", to_string(s.kind)}, {"magnitude", s.magnitude}, {"targets", targets}, {"nominal_J", s.nominal_J}};
}

ErrorSpec error_spec_from_json(const nlohmann::json& j) {
    ErrorSpec s;
    if (!j.contains("kind") || !j.at("kind").is_string()) {
        throw std::invalid_argument("field 'error.kind' must be a string");
    }
    s.kind = error_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("magnitude")) {
        if (!j.at("magnitude").is_number()) {
            throw std::invalid_argument("field 'error.magnitude' must be a number");
        }
        s.magnitude = j.at("magnitude").get<double>();
    }
    s.nominal_J = j.value("nominal_J", 0.0);
    if (j.contains("targets")) {
        for (const auto& t : j.at("targets")) {
            if (!t.is_array() || t.size() != 2) {
                throw std::invalid_argument("field 'error.targets' must hold [site, site] pairs");
            }
            s.targets.emplace_back(t[0].get<int>(), t[1].get<int>());
        }
    }
    return s;
}

namespace {

/// Energy gap above the lowest `states` eigenstates, or nothing when the
/// spectrum does not reach that far.
std::optional<double> gap_above(const CouplingModel& m, int states) {
    const int dim = static_cast<int>(dim_of(m.n_sites()));
    if (states >= dim) {
        return std::nullopt;
    }
    const auto levels = spectrum(m, 0.0, std::min(states + 1, dim));
    int seen = 0;
    for (std::size_t k = 0; k + 1 < levels.size(); ++k) {
        seen += levels[k].degeneracy;
        if (seen >= states) {
            return seen == states ? levels[k + 1].energy - levels[k].energy : 0.0;
        }
    }
    return std::nullopt;
}

}  // namespace

PerturbedModel apply_error_model(const CouplingModel& model, const ErrorSpec& spec) {
    if (!std::isfinite(spec.magnitude) || !std::isfinite(spec.nominal_J)) {
        throw std::invalid_argument("error magnitude must be finite");
    }
    for (const auto& [a, b] : spec.targets) {
        if (a < 0 || b < 0 || a >= model.n_sites() || b >= model.n_sites() || a == b) {
            throw std::invalid_argument("error target " + std::to_string(a) + "-" + std::to_string(b) +
                                        " is not a registered site pair");
        }
    }
    auto edge_of = [&](std::pair<int, int> t) {
        const auto e = model.find_edge(t.first, t.second);
        if (!e) {
            throw std::invalid_argument("error target " + std::to_string(t.first) + "-" + std::to_string(t.second) +
                                        " is not a coupled edge");
        }
        return *e;
    };
    PerturbedModel out{model, {}};
    auto& edges = out.model.mutable_edges();
    switch (spec.kind) {
        case ErrorKind::IntraMismatch:
            for (const auto& t : spec.targets) {
                edges[edge_of(t)].J *= 1.0 + spec.magnitude;
            }
            break;
        case ErrorKind::ResidualInter: {
            double ref = spec.nominal_J;
            if (ref == 0.0) {
                for (const auto& e : model.edges()) {
                    ref += std::abs(e.J);
                }
                ref = model.edges().empty() ? 1.0 : ref / static_cast<double>(model.edges().size());
            }
            for (const auto& [a, b] : spec.targets) {
                if (const auto e = out.model.find_edge(a, b)) {
                    edges[*e].J += spec.magnitude * ref;
                } else {
                    out.model.add_edge(a, b, spec.magnitude * ref);
                }
            }
            break;
        }
        case ErrorKind::InterSqImbalance: {
            if (spec.targets.size() != 2) {
                throw std::invalid_argument("an inter-SQ imbalance needs exactly two target edges");
            }
            const auto e0 = edge_of(spec.targets[0]), e1 = edge_of(spec.targets[1]);
            edges[e0].J *= 1.0 + spec.magnitude / 2.0;
            edges[e1].J *= 1.0 - spec.magnitude / 2.0;
            break;
        }
        case ErrorKind::SingleInterSqEdge: {
            if (spec.targets.empty()) {
                throw std::invalid_argument("single-edge error needs the inter-SQ edges as targets");
            }
            std::vector<std::size_t> drop;
            for (std::size_t k = 1; k < spec.targets.size(); ++k) {
                drop.push_back(edge_of(spec.targets[k]));
            }
            edge_of(spec.targets[0]);
            std::sort(drop.rbegin(), drop.rend());
            for (auto k : drop) {
                edges.erase(edges.begin() + static_cast<std::ptrdiff_t>(k));
            }
            break;
        }
    }
    if (model.n_sites() <= 12) {
        const auto levels = spectrum(model, 0.0, 1);
        const int ground = levels.empty() ? 0 : levels.front().degeneracy;
        const auto before = gap_above(model, ground);
        const auto after = gap_above(out.model, ground);
        if (before && after && *before > 1e-12 && *after < 0.5 * *before) {
            std::ostringstream w;
            w << "perturbation closes the gap above the " << ground << "-fold ground manifold from " << *before
              << " to " << *after;
            out.warnings.push_back(w.str());
        }
    } else {
        out.warnings.push_back("gap not checked: more than 12 sites");
    }
    return out;
}

CouplingModel sq_mismatch_model(const LogicalRegister& reg, int lq, std::pair<int, int> pair, double delta,
                                const SqParams& p) {
    const auto& s = reg.sites(lq);
    ErrorSpec e{ErrorKind::IntraMismatch, delta,
                {{s.at(static_cast<std::size_t>(pair.first)), s.at(static_cast<std::size_t>(pair.second))}}, 0.0};
    return apply_error_model(sq_idle_model(reg, p), e).model;
}

GateRecipe refocus_sequence(const CouplingModel& drift, double t, const LogicalRegister& reg, int lq,
                            const Axis& pulse_axis) {
    GateRecipe r("refocus", reg.n_sites());
    r.evolve(drift, t / 2.0, "drift");
    r.logical_rotation(reg.sites(lq), reg.kind(), pulse_axis, kPi);
    r.evolve(drift, t / 2.0, "drift");
    r.logical_rotation(reg.sites(lq), reg.kind(), pulse_axis, kPi);
    return r;
}

DriftMeasurement measure_drift(double delta, double t, const SqParams& p, const EvolveOptions& opts) {
    const auto reg = LogicalRegister::contiguous(EncodingKind::Supercoherent, 1);
    GateRecipe r("drift", reg.n_sites());
    r.evolve(sq_mismatch_model(reg, 0, {0, 1}, delta, p), t);
    const auto eff = extract_logical_unitary(r, reg, opts);
    DriftMeasurement d;
    d.delta = delta;
    d.rate = std::arg(eff.logical(1, 1) * std::conj(eff.logical(0, 0))) / (2.0 * t);
    d.predicted = -2.0 * delta * p.J_intra / 4.0;
    d.leakage = eff.leakage;
    return d;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("a line fit needs at least two (x, y) points");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
        syy += (y[k] - my) * (y[k] - my);
    }
    if (sxx == 0.0) {
        throw std::invalid_argument("a line fit needs distinct x values");
    }
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double r = y[k] - (f.intercept + f.slope * x[k]);
        ss_res += r * r;
    }
    // Spread at roundoff level carries no signal.
    const double scale = std::max(std::abs(my), 1.0);
    if (syy <= n * std::pow(64.0 * std::numeric_limits<double>::epsilon() * scale, 2)) {
        f.degenerate = true;
        f.r2 = 0.0;
    } else {
        f.r2 = 1.0 - ss_res / syy;
    }
    return f;
}

DriftFit drift_linearity(const std::vector<double>& deltas, double t, const SqParams& p, const EvolveOptions& opts) {
    DriftFit out;
    std::vector<double> x, y;
    for (double d : deltas) {
        out.points.push_back(measure_drift(d, t, p, opts));
        x.push_back(d);
        y.push_back(out.points.back().rate);
    }
    out.fit = fit_line(x, y);
    out.predicted_slope = -2.0 * p.J_intra / 4.0;
    out.relative_error = std::abs(out.fit.slope - out.predicted_slope) / std::abs(out.predicted_slope);
    return out;
}

RefocusReport refocus_check(double delta, double t, std::pair<int, int> pair, const Axis& pulse_axis,
                            const SqParams& p, const EvolveOptions& opts) {
    const auto reg = LogicalRegister::contiguous(EncodingKind::Supercoherent, 1);
    const auto drift = sq_mismatch_model(reg, 0, pair, delta, p);
    GateRecipe idle("idle", reg.n_sites());
    idle.evolve(drift, t);
    const auto bare = extract_logical_unitary(idle, reg, opts);
    const auto fixed = extract_logical_unitary(refocus_sequence(drift, t, reg, 0, pulse_axis), reg, opts);
    const CMatrix id = CMatrix::Identity(2, 2);
    return {gate_infidelity(bare.logical, id), gate_infidelity(fixed.logical, id),
            std::max(bare.leakage, fixed.leakage)};
}

double idle_infidelity(const CouplingModel& model, const LogicalRegister& reg, double t, const EvolveOptions& opts) {
    GateRecipe r("idle", reg.n_sites());
    r.evolve(model, t);
    const auto eff = extract_logical_unitary(r, reg, opts);
    return gate_infidelity(eff.logical, CMatrix::Identity(eff.logical.rows(), eff.logical.cols()));
}

ImbalanceSweep imbalance_sweep(const InterSqSettings& base, const std::vector<double>& grid, double max_leakage,
                               const EvolveOptions& opts) {
    if (base.edges.size() != 2) {
        throw std::invalid_argument("the imbalance sweep needs exactly two inter-SQ edges");
    }
    ImbalanceSweep out;
    out.points.resize(grid.size());
    std::vector<std::exception_ptr> errors(grid.size());
    const long n = static_cast<long>(grid.size());
#pragma omp parallel for schedule(dynamic)
    for (long k = 0; k < n; ++k) {
        auto& pt = out.points[static_cast<std::size_t>(k)];
        pt.parameter = grid[static_cast<std::size_t>(k)];
        try {
            InterSqSettings s = base;
            s.edge_scale = {1.0 + pt.parameter / 2.0, 1.0 - pt.parameter / 2.0};
            const auto res = adiabatic_inter_sq(s, std::numeric_limits<double>::infinity(), opts);
            pt.alpha = res.phases.alpha;
            pt.beta1 = res.phases.beta1;
            pt.beta2 = res.phases.beta2;
            pt.offdiag = res.phases.offdiag;
            pt.leakage = res.effective.leakage;
            pt.adiabatic = pt.leakage <= max_leakage;
        } catch (const LeakageError& e) {
            pt.leakage = e.leakage();
            pt.adiabatic = false;
        } catch (...) {
            errors[static_cast<std::size_t>(k)] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    std::vector<double> x, dx2, db, a;
    for (const auto& pt : out.points) {
        if (!pt.adiabatic) {
            ++out.excluded;
            continue;
        }
        out.max_offdiag = std::max(out.max_offdiag, pt.offdiag);
        x.push_back(pt.parameter);
        dx2.push_back(pt.parameter * pt.parameter);
        db.push_back(pt.beta1 - pt.beta2);
        a.push_back(pt.alpha);
    }
    if (x.size() >= 2) {
        out.beta_fit = fit_line(x, db);
        bool spread = false;
        for (double v : dx2) {
            spread = spread || v != dx2.front();
        }
        if (spread) {
            out.alpha_fit = fit_line(dx2, a);
        }
    }
    return out;
}

std::string sweep_csv(const ImbalanceSweep& sweep) {
    std::ostringstream out;
    out.precision(17);
    out << "parameter,alpha,beta1,beta2,offdiag_residual,leakage\n";
    for (const auto& p : sweep.points) {
        out << p.parameter << ',' << p.alpha << ',' << p.beta1 << ',' << p.beta2 << ',' << p.offdiag << ','
            << p.leakage << '\n';
    }
    return out.str();
}

ProbeResult single_edge_probe(const InterSqSettings& base, double J, const RampProfile& ramp,
                              const EvolveOptions& opts) {
    if (base.edges.empty()) {
        throw std::invalid_argument("single-edge probe needs an inter-SQ edge");
    }
    InterSqSettings s = base;
    s.edges = {base.edges.front()};
    s.edge_scale.clear();
    s.J_peak = J;
    s.ramp = ramp;
    ProbeResult out;
    out.ramp = ramp;
    try {
        const auto res = adiabatic_inter_sq(s, std::numeric_limits<double>::infinity(), opts);
        out.effective = res.effective;
        out.leakage = res.effective.leakage;
        out.infidelity = gate_infidelity(res.effective.logical, CMatrix::Identity(4, 4));
    } catch (const LeakageError& e) {
        out.leakage = e.leakage();
        out.infidelity = 1.0;
    }
    return out;
}

ProbeContrast single_edge_contrast(const InterSqSettings& base, double J, const RampProfile& ramp,
                                   const EvolveOptions& opts) {
    RampProfile sudden = ramp;
    sudden.shape = RampShape::Constant;
    return {single_edge_probe(base, J, ramp, opts), single_edge_probe(base, J, sudden, opts)};
}

}  // namespace qdc
