#pragma once

// Scenario files for the pcurv driver: parsing with defaults, cross-field
// validation, dispatch to the library and serialization of the results.

#include "pcurv/pcurv.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <cstdint>
#include <future>
#include <map>
#include <string>
#include <vector>

namespace pcurv::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* tool_version = "1.0.0";

/// Result of one scenario: the deterministic manifest, the tables to write
/// next to it (file name -> contents) and the overall verdict.
struct RunOutcome {
    json manifest;
    std::map<std::string, std::string> files;
    bool pass = false;
};

namespace detail {

/// Collects every missing or malformed field before reporting.
class Resolver {
public:
    explicit Resolver(const json& in) : in_(in) {}

    [[nodiscard]] bool has(const std::string& key) const { return in_.is_object() && in_.contains(key); }

    [[nodiscard]] const json* find(const json& obj, const std::string& key) const {
        if (!obj.is_object()) return nullptr;
        const auto it = obj.find(key);
        return it == obj.end() ? nullptr : &*it;
    }

    void missing(const std::string& path) { missing_.push_back(path); }
    void invalid(const std::string& msg) { invalid_.push_back(msg); }

    template <class T>
    T get(const json& obj, const std::string& key, const std::string& path, const T& fallback) {
        const json* v = find(obj, key);
        if (!v) return fallback;
        try {
            return v->get<T>();
        } catch (const std::exception&) {
            invalid(path + ": wrong type");
            return fallback;
        }
    }

    template <class T>
    T require(const json& obj, const std::string& key, const std::string& path) {
        const json* v = find(obj, key);
        if (!v) {
            missing(path);
            return T{};
        }
        try {
            return v->get<T>();
        } catch (const std::exception&) {
            invalid(path + ": wrong type");
            return T{};
        }
    }

    const json& object(const json& obj, const std::string& key, const std::string& path, bool required) {
        static const json empty = json::object();
        const json* v = find(obj, key);
        if (!v) {
            if (required) missing(path);
            return empty;
        }
        if (!v->is_object()) {
            invalid(path + ": expected an object");
            return empty;
        }
        return *v;
    }

    void finish() const {
        if (missing_.empty() && invalid_.empty()) return;
        std::string msg = "invalid scenario";
        if (!missing_.empty()) {
            msg += "; missing fields:";
            for (const auto& m : missing_) msg += " " + m;
        }
        for (const auto& m : invalid_) msg += "; " + m;
        throw validation_error(msg);
    }

    [[nodiscard]] bool ok() const noexcept { return missing_.empty() && invalid_.empty(); }

private:
    const json& in_;
    std::vector<std::string> missing_;
    std::vector<std::string> invalid_;
};

inline const std::vector<std::string>& mode_names() {
    static const std::vector<std::string> m{"cones", "ellipticity", "solve", "exhaust", "barriers"};
    return m;
}

inline json resolve_operator(Resolver& r, const json& in, int n) {
    const json& op = r.object(in, "operator", "operator", true);
    json out;
    out["k"] = r.require<int>(op, "k", "operator.k");
    out["l"] = r.get<int>(op, "l", "operator.l", 0);
    out["gamma"] = r.get<double>(op, "gamma", "operator.gamma", 1.0);
    (void)n;
    return out;
}

inline json resolve_cone(Resolver& r, const json& in) {
    const json& c = r.object(in, "cone", "cone", false);
    json out;
    const auto t = r.get<std::string>(c, "transform", "cone.transform", "none");
    out["transform"] = t;
    if (t == "rho")
        out["rho"] = r.require<double>(c, "rho", "cone.rho");
    else if (t != "none" && t != "averaging")
        r.invalid("cone.transform must be none, rho or averaging");
    return out;
}

inline json resolve_tensor(Resolver& r, const json& in) {
    const json& t = r.object(in, "tensor", "tensor", true);
    json out;
    const auto kind = r.get<std::string>(t, "kind", "tensor.kind", "schouten");
    out["kind"] = kind;
    if (kind == "schouten") {
        out["tau"] = r.require<double>(t, "tau", "tensor.tau");
        out["alpha"] = r.require<int>(t, "alpha", "tensor.alpha");
    } else if (kind == "raw") {
        for (const char* key : {"varrho", "a", "b"}) out[key] = r.require<double>(t, key, std::string("tensor.") + key);
        out["c"] = r.get<double>(t, "c", "tensor.c", 0.0);
        out["L"] = r.get<std::vector<double>>(t, "L", "tensor.L", {0.0, 0.0});
        out["A"] = r.get<std::vector<double>>(t, "A", "tensor.A", {0.0, 0.0});
        out["rhs_scale"] = r.get<double>(t, "rhs_scale", "tensor.rhs_scale", 1.0);
        if (out["L"].size() != 2 || out["A"].size() != 2) r.invalid("tensor.L and tensor.A need two entries");
    } else {
        r.invalid("tensor.kind must be schouten or raw");
    }
    return out;
}

inline json resolve_psi(Resolver& r, const json& in, const json& tensor, int n) {
    const json& p = r.object(in, "psi", "psi", true);
    json out;
    const auto type = r.get<std::string>(p, "type", "psi.type", "constant");
    out["type"] = type;
    if (type == "constant") {
        const json* v = r.find(p, "value");
        if (v && v->is_string() && v->get<std::string>() == "hyperbolic") {
            if (!r.ok()) {
                out["value"] = 1.0;  // placeholder; the scenario is rejected anyway
            } else if (tensor.value("kind", "") != "schouten") {
                r.invalid("psi.value = hyperbolic needs a Schouten tensor");
                out["value"] = 1.0;
            } else {
                out["value"] = SchoutenParams{tensor["tau"].get<double>(), tensor["alpha"].get<int>(), n}.hyperbolic_eigenvalue();
            }
        } else {
            out["value"] = r.get<double>(p, "value", "psi.value", 1.0);
        }
    } else if (type == "rational_decay") {
        out["lambda2"] = r.get<double>(p, "lambda2", "psi.lambda2", 1.0);
        out["p"] = r.require<double>(p, "p", "psi.p");
    } else {
        r.invalid("psi.type must be constant or rational_decay");
    }
    for (const char* key : {"value", "lambda2"})
        if (out.contains(key) && !(out[key].get<double>() > 0.0)) r.invalid(std::string("psi.") + key + " must be positive");
    return out;
}

inline json resolve_grid(Resolver& r, const json& in, const std::string& path, int default_nodes, bool required) {
    const json& g = r.object(in, path, path, required);
    json out;
    out["nodes"] = r.get<int>(g, "nodes", path + ".nodes", default_nodes);
    const auto law = r.get<std::string>(g, "law", path + ".law", "clustered");
    out["law"] = law;
    if (law == "clustered") {
        out["ratio"] = r.get<double>(g, "ratio", path + ".ratio", 1.05);
        out["refine"] = r.get<double>(g, "refine", path + ".refine", 8.0);
    } else if (law == "sinh") {
        out["stretch"] = r.get<double>(g, "stretch", path + ".stretch", 3.0);
    } else if (law != "uniform") {
        r.invalid(path + ".law must be uniform, clustered or sinh");
    }
    return out;
}

inline json resolve_tolerances(Resolver& r, const json& in, const SolveTolerances& defaults) {
    const json& t = r.object(in, "tolerances", "tolerances", false);
    json out;
    out["atol"] = r.get<double>(t, "atol", "tolerances.atol", defaults.atol);
    out["rtol"] = r.get<double>(t, "rtol", "tolerances.rtol", defaults.rtol);
    out["max_iterations"] = r.get<int>(t, "max_iterations", "tolerances.max_iterations", defaults.max_iterations);
    out["armijo"] = r.get<double>(t, "armijo", "tolerances.armijo", defaults.armijo);
    out["min_step"] = r.get<double>(t, "min_step", "tolerances.min_step", defaults.min_step);
    out["noise_factor"] = r.get<double>(t, "noise_factor", "tolerances.noise_factor", defaults.noise_factor);
    return out;
}

}  // namespace detail

/// Fills defaults, resolves keywords ("hyperbolic", "poincare") to numbers and
/// reports every missing field at once. The result parses back to itself.
[[nodiscard]] inline json resolve_scenario(const json& in, std::optional<std::uint64_t> seed_override = std::nullopt) {
    if (!in.is_object() && !in.is_null()) throw validation_error("scenario must be a JSON object");
    static const json empty = json::object();
    const json& src = in.is_null() ? empty : in;
    detail::Resolver r(src);
    json out;
    out["name"] = r.require<std::string>(src, "name", "name");
    const auto mode = r.require<std::string>(src, "mode", "mode");
    out["mode"] = mode;
    out["seed"] = seed_override.value_or(r.get<std::uint64_t>(src, "seed", "seed", 0));
    const auto& modes = detail::mode_names();
    const bool known = std::find(modes.begin(), modes.end(), mode) != modes.end();
    if (!mode.empty() && !known) r.invalid("mode must be one of cones, ellipticity, solve, exhaust, barriers");
    if (!known) {
        r.finish();
        return out;
    }
    const int n = r.require<int>(src, "n", "n");
    out["n"] = n;
    if (mode == "cones") {
        out["cone"] = detail::resolve_cone(r, src);
        r.finish();
        return out;
    }
    out["operator"] = detail::resolve_operator(r, src, n);
    out["cone"] = detail::resolve_cone(r, src);
    if (mode == "ellipticity") {
        out["samples"] = r.get<int>(src, "samples", "samples", 10000);
        out["tau0"] = r.get<double>(src, "tau0", "tau0", 1.0);
        r.finish();
        return out;
    }
    out["tensor"] = detail::resolve_tensor(r, src);
    out["base"] = r.get<std::string>(src, "base", "base", "flat");
    out["psi"] = detail::resolve_psi(r, src, out["tensor"], n);

    if (mode == "solve") {
        const json& d = r.object(src, "domain", "domain", true);
        json dom;
        const auto type = r.get<std::string>(d, "type", "domain.type", "ball");
        dom["type"] = type;
        if (type == "ball") {
            dom["R"] = r.require<double>(d, "R", "domain.R");
        } else if (type == "annulus") {
            dom["R0"] = r.require<double>(d, "R0", "domain.R0");
            dom["R1"] = r.require<double>(d, "R1", "domain.R1");
        } else {
            r.invalid("domain.type must be ball or annulus");
        }
        out["domain"] = dom;
        const json& b = r.object(src, "boundary", "boundary", true);
        json bd;
        auto value = [&](const char* key, double outer_radius, bool required) {
            const json* v = r.find(b, key);
            if (v && v->is_string()) {
                if (v->get<std::string>() != "poincare") r.invalid(std::string("boundary.") + key + ": unknown keyword");
                return PoincareProfile::value(outer_radius);
            }
            return required ? r.require<double>(b, key, std::string("boundary.") + key)
                            : r.get<double>(b, key, std::string("boundary.") + key, 0.0);
        };
        const bool annulus = type == "annulus";
        bd["outer"] = value("outer", dom.value(annulus ? "R1" : "R", 0.0), true);
        bd["inner"] = value("inner", dom.value("R0", 0.0), annulus);
        out["boundary"] = bd;
        out["grid"] = detail::resolve_grid(r, src, "grid", 201, true);
        out["tolerances"] = detail::resolve_tolerances(r, src, SolveTolerances{});
        const json& ref = r.object(src, "reference", "reference", false);
        json rf;
        rf["profile"] = r.get<std::string>(ref, "profile", "reference.profile", "none");
        rf["tolerance"] = r.get<double>(ref, "tolerance", "reference.tolerance", 0.0);
        if (rf["profile"] != "none" && rf["profile"] != "poincare") r.invalid("reference.profile must be none or poincare");
        out["reference"] = rf;
    } else if (mode == "exhaust") {
        out["radii"] = r.require<std::vector<double>>(src, "radii", "radii");
        const json& s = r.object(src, "subsolution", "subsolution", true);
        out["subsolution"] = json{{"beta", r.require<double>(s, "beta", "subsolution.beta")}};
        const ExhaustionSpec defaults;
        const json& e = r.object(src, "exhaustion", "exhaustion", false);
        json ex;
        ex["core_nodes"] = r.get<int>(e, "core_nodes", "exhaustion.core_nodes", defaults.core_nodes);
        ex["nodes_per_efold"] = r.get<int>(e, "nodes_per_efold", "exhaustion.nodes_per_efold", defaults.nodes_per_efold);
        ex["ctol"] = r.get<double>(e, "ctol", "exhaustion.ctol", defaults.ctol);
        ex["normalize"] = r.get<bool>(e, "normalize", "exhaustion.normalize", defaults.normalize);
        ex["lambda1_radius"] = r.get<double>(e, "lambda1_radius", "exhaustion.lambda1_radius", defaults.lambda1_radius);
        ex["monotone_tol"] = r.get<double>(e, "monotone_tol", "exhaustion.monotone_tol", 1e-6);
        ex["envelope"] = r.get<bool>(e, "envelope", "exhaustion.envelope", false);
        ex["min_growth"] = r.get<double>(e, "min_growth", "exhaustion.min_growth", 1.1);
        out["exhaustion"] = ex;
        out["tolerances"] = detail::resolve_tolerances(r, src, defaults.tol);
    } else {  // barriers
        const json& c = r.object(src, "collar", "collar", true);
        json col;
        col["R"] = r.get<double>(c, "R", "collar.R", 1.0);
        col["phi"] = r.get<double>(c, "phi", "collar.phi", 0.0);
        col["ks"] = r.get<std::vector<int>>(c, "ks", "collar.ks", {1, 10, 100, 1000});
        col["delta_start"] = r.get<double>(c, "delta_start", "collar.delta_start", 0.1);
        col["delta_floor"] = r.get<double>(c, "delta_floor", "collar.delta_floor", 1e-4);
        out["collar"] = col;
        if (const json* eu = r.find(src, "euclidean")) {
            json e;
            const EuclideanSubsolutionSpec d;
            const json* beta = r.find(*eu, "beta");
            if (beta && beta->is_string()) {
                if (beta->get<std::string>() != "auto") r.invalid("euclidean.beta must be a number or auto");
                e["beta"] = "auto";
            } else {
                e["beta"] = beta ? json(r.get<double>(*eu, "beta", "euclidean.beta", 0.0)) : json("auto");
            }
            const json* eop = r.find(*eu, "operator");
            e["operator"] = eop ? json{{"k", r.require<int>(*eop, "k", "euclidean.operator.k")},
                                       {"l", r.get<int>(*eop, "l", "euclidean.operator.l", 0)}}
                                : json{{"k", out["operator"]["k"]}, {"l", out["operator"]["l"]}};
            e["tensor_scale"] = r.get<double>(*eu, "tensor_scale", "euclidean.tensor_scale", d.tensor_scale);
            e["power"] = r.get<double>(*eu, "power", "euclidean.power", d.power);
            e["lambda2"] = r.get<double>(*eu, "lambda2", "euclidean.lambda2", d.lambda2);
            e["p"] = r.require<double>(*eu, "p", "euclidean.p");
            e["r0"] = r.get<double>(*eu, "r0", "euclidean.r0", d.r0);
            e["r_max"] = r.get<double>(*eu, "r_max", "euclidean.r_max", d.r_max);
            e["nodes"] = r.get<int>(*eu, "nodes", "euclidean.nodes", d.nodes);
            out["euclidean"] = e;
        }
    }
    r.finish();
    return out;
}

// ---------------------------------------------------------------------------
// Building library objects from a resolved scenario
// ---------------------------------------------------------------------------

[[nodiscard]] inline ConeTransform build_transform(const json& s) {
    const auto& c = s["cone"];
    const auto t = c["transform"].get<std::string>();
    if (t == "rho") return RhoTransform{c["rho"].get<double>()};
    if (t == "averaging") return AveragingTransform{};
    return std::monostate{};
}

[[nodiscard]] inline CurvatureOperator build_operator(const json& s) {
    const auto& op = s["operator"];
    try {
        return CurvatureOperator::quotient(s["n"].get<int>(), op["k"].get<int>(), op["l"].get<int>(),
                                           op["gamma"].get<double>(), build_transform(s));
    } catch (const domain_error& e) {
        throw validation_error(std::string("operator: ") + e.what());
    }
}

/// Equation coefficients with the cross-field checks: the (tau, alpha) range
/// for the cone, the ellipticity hypothesis on rho and barrier compatibility.
[[nodiscard]] inline EquationParams build_params(const json& s) {
    const auto op = build_operator(s);
    const auto base = parse_base(s["base"].get<std::string>());
    const auto& t = s["tensor"];
    EquationParams p;
    if (t["kind"] == "schouten") {
        const SchoutenParams sp{t["tau"].get<double>(), t["alpha"].get<int>(), s["n"].get<int>()};
        try {
            sp.validate();
        } catch (const domain_error& e) {
            throw validation_error(std::string("tensor: ") + e.what());
        }
        const auto check = validate_tau_alpha(sp.tau, sp.alpha, op.cone);
        if (!check.admissible)
            throw validation_error(
                sp.alpha == -1 ? fmt::format("tensor: tau = {} must be below 1 when alpha = -1", sp.tau)
                               : fmt::format("tensor: tau = {} must exceed {:.17g} for alpha = 1 on this cone", sp.tau,
                                             check.alpha_plus_threshold));
        if (!check.sign_ok)
            throw validation_error(fmt::format("tensor: alpha (n tau + 2 - 2n) = {} must be positive", sp.sign_quantity()));
        p = EquationParams::from_schouten(sp, op, base);
    } else {
        p.varrho = t["varrho"].get<double>();
        p.a = t["a"].get<double>();
        p.b = t["b"].get<double>();
        p.c = t["c"].get<double>();
        p.L_t = t["L"][0].get<double>();
        p.L_r = t["L"][1].get<double>();
        p.A_t = t["A"][0].get<double>();
        p.A_r = t["A"][1].get<double>();
        p.rhs_scale = t["rhs_scale"].get<double>();
        p.op = op;
        p.gamma = op.gamma;
        p.base = base;
    }
    try {
        p.validate();
    } catch (const parameter_error& e) {
        throw validation_error(std::string("equation: ") + e.what());
    }
    return p;
}

[[nodiscard]] inline Psi build_psi(const json& s) {
    const auto& p = s["psi"];
    if (p["type"] == "rational_decay") return PsiRationalDecay{p["lambda2"].get<double>(), p["p"].get<double>()};
    return PsiConstant{p["value"].get<double>()};
}

[[nodiscard]] inline GridSpec build_grid(const json& g) {
    GridSpec out;
    out.nodes = g["nodes"].get<int>();
    const auto law = g["law"].get<std::string>();
    if (law == "uniform")
        out.law = UniformLaw{};
    else if (law == "sinh")
        out.law = SinhLaw{g["stretch"].get<double>()};
    else
        out.law = ClusteredLaw{g["ratio"].get<double>(), g["refine"].get<double>()};
    return out;
}

[[nodiscard]] inline SolveTolerances build_tolerances(const json& t) {
    SolveTolerances tol;
    tol.atol = t["atol"].get<double>();
    tol.rtol = t["rtol"].get<double>();
    tol.max_iterations = t["max_iterations"].get<int>();
    tol.armijo = t["armijo"].get<double>();
    tol.min_step = t["min_step"].get<double>();
    tol.noise_factor = t["noise_factor"].get<double>();
    return tol;
}

[[nodiscard]] inline DirichletSpec build_dirichlet(const json& s) {
    DirichletSpec spec;
    const auto& d = s["domain"];
    if (d["type"] == "annulus")
        spec.domain = Annulus{d["R0"].get<double>(), d["R1"].get<double>()};
    else
        spec.domain = Ball{d["R"].get<double>()};
    spec.phi_outer = s["boundary"]["outer"].get<double>();
    spec.phi_inner = s["boundary"]["inner"].get<double>();
    spec.psi = build_psi(s);
    spec.grid = build_grid(s["grid"]);
    return spec;
}

[[nodiscard]] inline ExhaustionSpec build_exhaustion(const json& s, const EquationParams& p, int parallel) {
    ExhaustionSpec e;
    e.params = p;
    e.radii = s["radii"].get<std::vector<double>>();
    e.subsolution = LogProfile{s["subsolution"]["beta"].get<double>()};
    e.psi = build_psi(s);
    const auto& x = s["exhaustion"];
    e.core_nodes = x["core_nodes"].get<int>();
    e.nodes_per_efold = x["nodes_per_efold"].get<int>();
    e.ctol = x["ctol"].get<double>();
    e.normalize = x["normalize"].get<bool>();
    e.lambda1_radius = x["lambda1_radius"].get<double>();
    e.tol = build_tolerances(s["tolerances"]);
    e.parallel = std::max(1, parallel);
    e.validate();
    return e;
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

[[nodiscard]] inline std::string num(double v) { return fmt::format("{:.17g}", v); }

/// r, u, tangential, radial, f, cone_margin; f is nan outside the cone.
[[nodiscard]] inline std::string profile_table(const RadialProfile& u, const EquationParams& p) {
    const auto eig = assemble_V_eigen(u, p);
    std::string out = "r,u,tangential,radial,f,cone_margin\n";
    for (std::size_t i = 0; i < u.size(); ++i) {
        const auto lam = eig.eigen(i);
        const auto m = in_cone(lam, p.op.cone);
        const double f = m.inside ? f_eval(p.op, lam) : std::numeric_limits<double>::quiet_NaN();
        out += fmt::format("{},{},{},{},{},{}\n", num(u.radii[i]), num(u.u[i]), num(eig.tangential[i]),
                           num(eig.radial[i]), num(f), num(m.margin));
    }
    return out;
}

[[nodiscard]] inline json report_json(const SolveReport& r) {
    return {{"converged", r.converged},
            {"iterations", r.iterations},
            {"residual_history", r.residual_history},
            {"damping_history", r.damping_history},
            {"min_cone_margin", r.cone_margin_history.empty()
                                    ? 0.0
                                    : *std::min_element(r.cone_margin_history.begin(), r.cone_margin_history.end())},
            {"theta", r.theta}};
}

[[nodiscard]] inline json bound_json(const BoundReport& b) {
    return {{"pass", b.pass}, {"worst", b.worst}, {"level", b.level}, {"node", b.node}};
}

[[nodiscard]] inline json certificate_json(const BarrierCertificate& c) {
    json j{{"kind", std::string(to_string(c.kind))},
           {"interval", {c.lo, std::isfinite(c.hi) ? json(c.hi) : json("inf")}},
           {"pass", c.pass},
           {"margin", c.margin},
           {"delta", c.delta},
           {"beta", c.beta},
           {"points", c.points.size()}};
    if (c.c0) j["c0"] = *c.c0;
    if (c.lambda1) j["lambda1"] = *c.lambda1;
    if (c.tail_exponent) j["tail_exponent"] = *c.tail_exponent;
    if (c.crossover) j["crossover"] = *c.crossover;
    if (!c.detail.empty()) j["detail"] = c.detail;
    return j;
}

inline void append_certificate_rows(std::string& out, const BarrierCertificate& c) {
    for (std::size_t i = 0; i < c.points.size(); ++i)
        out += fmt::format("{},{},{}\n", to_string(c.kind), num(c.points[i]), num(c.margins[i]));
}

// ---------------------------------------------------------------------------
// Modes
// ---------------------------------------------------------------------------

inline RunOutcome run_cones(const json& s) {
    RunOutcome o;
    const int n = s["n"].get<int>();
    std::string table = "k,kappa,vartheta\n";
    json rows = json::array();
    for (int k = 1; k <= n; ++k) {
        ConeSpec cone{n, k, build_transform(s)};
        try {
            cone.validate();
        } catch (const domain_error& e) {
            throw validation_error(std::string("cone: ") + e.what());
        }
        const auto c = ellipticity_constants(cone);
        table += fmt::format("{},{},{}\n", k, c.kappa, num(c.vartheta));
        rows.push_back({{"k", k}, {"kappa", c.kappa}, {"vartheta", c.vartheta}});
    }
    o.files["cones.csv"] = table;
    o.manifest["results"] = {{"cones", rows}};
    o.pass = true;
    return o;
}

inline RunOutcome run_ellipticity(const json& s) {
    RunOutcome o;
    const auto op = build_operator(s);
    const int samples = s["samples"].get<int>();
    const double tau0 = s["tau0"].get<double>();
    const auto seed = s["seed"].get<std::uint64_t>();
    const auto e = check_partial_ellipticity(op, samples, tau0, seed);
    const auto pr = check_positivity_pairing(op, tau0, samples, seed + 1);
    json res{{"kappa", e.kappa},
             {"vartheta", e.vartheta},
             {"samples", e.samples},
             {"violations", e.violations},
             {"worst_margin", e.worst_margin},
             {"pairing_samples", pr.samples},
             {"pairing_violations", pr.violations},
             {"worst_pairing", pr.worst_pairing},
             {"worst_euler", pr.worst_euler}};
    if (e.witness) res["witness"] = std::vector<double>(e.witness->values().begin(), e.witness->values().end());
    o.manifest["results"] = res;
    o.pass = e.passed() && pr.passed();
    return o;
}

inline RunOutcome run_solve(const json& s) {
    RunOutcome o;
    const auto p = build_params(s);
    const auto spec = build_dirichlet(s);
    spec.validate(p.base);
    const auto res = solve_dirichlet(p, spec, build_tolerances(s["tolerances"]));
    json results{{"report", report_json(res.report)}};
    bool pass = res.report.converged;
    const auto& ref = s["reference"];
    if (ref["profile"] == "poincare") {
        double err = 0.0;
        for (std::size_t i = 0; i < res.profile.size(); ++i)
            err = std::max(err, std::abs(res.profile.u[i] - PoincareProfile::value(res.profile.radii[i])));
        const double tol = ref["tolerance"].get<double>();
        results["reference"] = {{"profile", "poincare"}, {"sup_error", err}, {"tolerance", tol}};
        if (tol > 0.0) pass = pass && err <= tol;
    }
    o.files["profile.csv"] = profile_table(res.profile, p);
    o.manifest["results"] = results;
    o.pass = pass;
    return o;
}

inline RunOutcome run_exhaust(const json& s, int parallel) {
    RunOutcome o;
    const auto p = build_params(s);
    const auto spec = build_exhaustion(s, p, parallel);
    const auto res = run_exhaustion(spec);
    const auto& x = s["exhaustion"];
    const double mtol = x["monotone_tol"].get<double>();
    const auto mono = check_monotone(res, mtol);
    const auto lower = check_lower_bound(res, spec, mtol);
    const auto comp = check_completeness_euclidean(res.limit(), spec.radii, x["min_growth"].get<double>());
    json reports = json::array();
    for (const auto& r : res.reports) reports.push_back(report_json(r));
    json results{{"lambda1", res.lambda1},
                 {"shift", res.shift},
                 {"increments", res.increments},
                 {"converged", res.converged},
                 {"monotone", bound_json(mono)},
                 {"lower_bound", bound_json(lower)},
                 {"completeness", {{"complete", comp.complete}, {"lengths", comp.lengths}, {"growth", comp.growth}}},
                 {"levels", reports}};
    bool pass = res.converged && mono.pass && lower.pass && comp.complete;
    if (x["envelope"].get<bool>()) {
        std::vector<AuxiliaryBlowup> aux;
        for (double R : spec.radii) aux.push_back(auxiliary_blowup(p.dim(), R));
        const auto env = check_monotone_upper(res, spec, aux, mtol);
        results["envelope"] = bound_json(env.envelope);
        pass = pass && env.pass();
    }
    o.files["profile.csv"] = profile_table(res.limit(), p);
    std::string levels = "r";
    for (std::size_t k = 0; k < res.levels(); ++k) levels += fmt::format(",u_{}", k + 1);
    levels += "\n";
    const auto r = res.common_radii();
    std::vector<std::vector<double>> cols;
    for (std::size_t k = 0; k < res.levels(); ++k) cols.push_back(res.on_common(k));
    for (std::size_t i = 0; i < r.size(); ++i) {
        levels += num(r[i]);
        for (const auto& c : cols) levels += "," + num(c[i]);
        levels += "\n";
    }
    o.files["levels.csv"] = levels;
    o.manifest["results"] = results;
    o.pass = pass;
    return o;
}

inline RunOutcome run_barriers(const json& s) {
    RunOutcome o;
    const auto p = build_params(s);
    const auto& c = s["collar"];
    const CollarProblem prob{p, c["R"].get<double>(), c["phi"].get<double>(), build_psi(s)};
    const auto beta = p.barrier_beta();
    const auto beta_p = upper_collar_beta(p);
    if (!beta_p) throw validation_error("equation: no beta' makes the upper collar trace negative");
    const double start = std::min(c["delta_start"].get<double>(), 0.5 * prob.R);
    const double floor = c["delta_floor"].get<double>();
    const auto ks = c["ks"].get<std::vector<int>>();
    const auto lower = search_delta([&](double d) { return certify_lower_collar(prob, *beta, d); }, start, floor);
    const auto upper = search_delta([&](double d) { return certify_upper_collar(prob, *beta_p, d); }, start, floor);
    const auto comp = search_delta([&](double d) { return certify_completeness(prob, ks, d); }, start, floor);
    json certs = json::array({certificate_json(lower), certificate_json(upper), certificate_json(comp)});
    std::string table = "kind,x,margin\n";
    for (const auto* cert : {&lower, &upper, &comp}) append_certificate_rows(table, *cert);
    bool pass = lower.pass && upper.pass && comp.pass;
    if (s.contains("euclidean")) {
        const auto& e = s["euclidean"];
        if (p.base != BaseGeometry::flat || !p.schouten)
            throw validation_error("euclidean: needs a Schouten tensor on the flat base");
        EuclideanSubsolutionSpec es;
        es.schouten = *p.schouten;
        try {
            es.op = CurvatureOperator::quotient(p.dim(), e["operator"]["k"].get<int>(), e["operator"]["l"].get<int>());
        } catch (const domain_error& err) {
            throw validation_error(std::string("euclidean.operator: ") + err.what());
        }
        es.tensor_scale = e["tensor_scale"].get<double>();
        es.power = e["power"].get<double>();
        es.lambda2 = e["lambda2"].get<double>();
        es.p = e["p"].get<double>();
        es.r0 = e["r0"].get<double>();
        es.r_max = e["r_max"].get<double>();
        es.nodes = e["nodes"].get<int>();
        const auto cert = e["beta"].is_string() ? search_euclidean_beta(es)
                                                : euclidean_subsolution_certificate(es, e["beta"].get<double>());
        certs.push_back(certificate_json(cert));
        append_certificate_rows(table, cert);
        pass = pass && cert.pass;
    }
    o.files["barriers.csv"] = table;
    o.manifest["results"] = {{"certificates", certs}};
    o.pass = pass;
    return o;
}

/// Validates and runs one resolved scenario. Validation problems throw
/// validation_error before any work; solver failures are reported in the
/// manifest with status "error".
inline void validate_scenario(const json& resolved) {
    const auto mode = resolved["mode"].get<std::string>();
    try {
        if (mode == "solve" || mode == "exhaust" || mode == "barriers") (void)build_params(resolved);
        if (mode == "ellipticity") (void)build_operator(resolved);
        if (mode == "cones") (void)run_cones(resolved);
        if (mode == "solve") build_dirichlet(resolved).validate(parse_base(resolved["base"].get<std::string>()));
        if (mode == "exhaust") (void)build_exhaustion(resolved, build_params(resolved), 1);
    } catch (const domain_error& e) {
        throw validation_error(e.what());
    }
}

[[nodiscard]] inline RunOutcome run_scenario(const json& resolved, int parallel = 1) {
    const auto mode = resolved["mode"].get<std::string>();
    validate_scenario(resolved);

    RunOutcome o;
    try {
        if (mode == "cones") o = run_cones(resolved);
        else if (mode == "ellipticity") o = run_ellipticity(resolved);
        else if (mode == "solve") o = run_solve(resolved);
        else if (mode == "exhaust") o = run_exhaust(resolved, parallel);
        else o = run_barriers(resolved);
    } catch (const validation_error&) {
        throw;
    } catch (const std::exception& e) {
        o = RunOutcome{};
        o.manifest["results"] = {{"error", e.what()}};
        if (const auto* sub = dynamic_cast<const subproblem_error*>(&e)) o.manifest["results"]["ball"] = sub->index();
        if (const auto* st = dynamic_cast<const stall_error*>(&e)) o.manifest["results"]["report"] = report_json(st->report());
        o.files.clear();
        o.pass = false;
        json m{{"tool", "pcurv"}, {"version", tool_version}, {"status", "error"}, {"pass", false},
               {"scenario", resolved}, {"results", o.manifest["results"]}};
        o.manifest = std::move(m);
        return o;
    }
    json m{{"tool", "pcurv"},
           {"version", tool_version},
           {"status", o.pass ? "pass" : "fail"},
           {"pass", o.pass},
           {"scenario", resolved},
           {"results", o.manifest["results"]}};
    json outputs = json::array();
    for (const auto& [name, _] : o.files) outputs.push_back(name);
    m["outputs"] = outputs;
    o.manifest = std::move(m);
    return o;
}

}  // namespace pcurv::cli
