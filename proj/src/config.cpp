#include "qrc/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qrc/errors.hpp"

namespace qrc {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& path, const std::string& what) {
    throw config_error(path + ": " + what);
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* k : allowed)
            if (key == k) ok = true;
        if (!ok) bad(path + "." + key, "unknown field");
    }
}

const json& need(const json& j, const char* key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) bad(path + "." + key, "missing");
    return j.at(key);
}

double num(const json& j, const std::string& path) {
    if (!j.is_number()) bad(path, "expected a number");
    return j.get<double>();
}

double num_or(const json& j, const char* key, const std::string& path,
              double dflt) {
    if (!j.contains(key)) return dflt;
    return num(j.at(key), path + "." + key);
}

std::vector<double> num_list(const json& j, const std::string& path) {
    if (!j.is_array()) bad(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(num(j.at(i), path + "[" + std::to_string(i) + "]"));
    return out;
}

GeneralizedIntensity parse_intensity(const json& j, const std::string& path) {
    if (!j.is_object()) bad(path, "expected an intensity object");
    check_keys(j, path, {"shape", "params", "atoms", "delay_T"});
    const json& sh = need(j, "shape", path);
    if (!sh.is_string()) bad(path + ".shape", "expected a string");
    const std::string shape = sh.get<std::string>();
    const std::vector<double> params =
        num_list(need(j, "params", path), path + ".params");
    const double delay = num_or(j, "delay_T", path, 0.0);
    std::vector<Atom> atoms;
    if (j.contains("atoms")) {
        const json& ja = j.at("atoms");
        if (!ja.is_array()) bad(path + ".atoms", "expected an array");
        for (std::size_t i = 0; i < ja.size(); ++i) {
            const std::string ap = path + ".atoms[" + std::to_string(i) + "]";
            const json& a = ja.at(i);
            if (!a.is_object()) bad(ap, "expected an atom object");
            check_keys(a, ap, {"at", "mass"});
            atoms.push_back({num(need(a, "at", ap), ap + ".at"),
                             num(need(a, "mass", ap), ap + ".mass")});
        }
    }
    try {
        GeneralizedIntensity gi;
        if (shape == "constant") {
            if (params.size() != 1) bad(path + ".params", "constant needs [c]");
            gi = GeneralizedIntensity::constant(params[0], delay);
        } else if (shape == "power") {
            if (params.size() != 2 && params.size() != 3)
                bad(path + ".params", "power needs [c, p] or [c, p, offset]");
            gi = GeneralizedIntensity::power(
                params[0], params[1], params.size() == 3 ? params[2] : 0.0,
                delay);
        } else if (shape == "piecewise") {
            gi = GeneralizedIntensity::piecewise(params, delay);
        } else if (shape == "rational") {
            if (params.size() != 2) bad(path + ".params", "rational needs [c, b]");
            gi = GeneralizedIntensity::rational(params[0], params[1], delay);
        } else {
            bad(path + ".shape", "unknown shape '" + shape + "'");
        }
        if (!atoms.empty()) gi = gi.with_atoms(atoms);
        return gi;
    } catch (const model_error& e) {
        bad(path, e.what());
    }
}

json intensity_json(const GeneralizedIntensity& gi) {
    json j;
    if (gi.terms().size() != 1)
        throw config_error("only single-shape intensities are serializable");
    const HazardTerm& t = gi.terms().front();
    j["shape"] = shape_name(t.shape);
    std::vector<double> params = t.params;
    if (t.shape == HazardShape::power && t.offset != 0.0)
        params.push_back(t.offset);
    j["params"] = params;
    if (!gi.atoms().empty()) {
        json ja = json::array();
        for (const Atom& a : gi.atoms()) ja.push_back({{"at", a.at},
                                                       {"mass", a.mass}});
        j["atoms"] = ja;
    }
    if (gi.delay_T() != 0.0) j["delay_T"] = gi.delay_T();
    return j;
}

MuConfig parse_mu(const json& j, const std::string& path) {
    if (!j.is_object()) bad(path, "expected a mu object");
    check_keys(j, path, {"kind", "c", "weights"});
    MuConfig mc;
    const json& k = need(j, "kind", path);
    if (!k.is_string()) bad(path + ".kind", "expected a string");
    mc.kind = k.get<std::string>();
    if (mc.kind != "zero" && mc.kind != "constant" && mc.kind != "saturating")
        bad(path + ".kind", "unknown kind '" + mc.kind + "'");
    mc.c = num_or(j, "c", path, 0.0);
    if (j.contains("weights"))
        mc.weights = num_list(j.at("weights"), path + ".weights");
    if (mc.kind == "zero" && (mc.c != 0.0 || !mc.weights.empty()))
        bad(path, "zero mu takes no parameters");
    if (mc.kind == "constant" && !mc.weights.empty())
        bad(path + ".weights", "constant mu takes no weights");
    if (mc.kind != "zero" && mc.c < 0.0) bad(path + ".c", "must be >= 0");
    return mc;
}

json mu_json(const MuConfig& mc) {
    json j;
    j["kind"] = mc.kind;
    if (mc.kind != "zero") j["c"] = mc.c;
    if (mc.kind == "saturating") j["weights"] = mc.weights;
    return j;
}

}  // namespace

MuFn make_mu(const MuConfig& mc, std::size_t m) {
    if (mc.kind == "zero") return MuFn::zero();
    if (mc.kind == "constant") return MuFn::constant(mc.c);
    if (mc.weights.size() != m)
        throw config_error("saturating mu needs one weight per component");
    MuFn fn;
    fn.fn = [c = mc.c, w = mc.weights](const std::vector<double>& x) {
        double u = 0.0;
        for (std::size_t j = 0; j < w.size(); ++j) u += w[j] * x[j];
        return u > 0.0 ? c * u / (1.0 + u) : 0.0;
    };
    fn.upper_of_own = [c = mc.c](double) { return c; };
    fn.lower_of_own = [](double) { return 0.0; };
    return fn;
}

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw config_error("top level: expected an object");
    check_keys(j, "$", {"schema", "model", "reliability", "experiment"});
    const json& sch = need(j, "schema", "$");
    if (!sch.is_string() || sch.get<std::string>() != "qrc-config-1")
        bad("$.schema", "expected \"qrc-config-1\"");
    if (j.contains("model") == j.contains("reliability"))
        throw config_error("exactly one of 'model' / 'reliability' required");

    RunConfig cfg;
    if (j.contains("model")) {
        const json& m = j.at("model");
        check_keys(m, "$.model", {"m", "phi", "Q", "q", "k", "mu"});
        const double mv = num_or(m, "m", "$.model", 1.0);
        if (!(mv >= 1.0) || mv != static_cast<long>(mv))
            bad("$.model.m", "expected a positive integer");
        cfg.m = static_cast<std::size_t>(mv);
        cfg.phi = parse_intensity(need(m, "phi", "$.model"), "$.model.phi");
        cfg.Q = parse_intensity(need(m, "Q", "$.model"), "$.model.Q");
        cfg.q = num_or(m, "q", "$.model", 0.0);
        cfg.k = num_or(m, "k", "$.model", 2.0);
        if (m.contains("mu")) {
            const json& mus = m.at("mu");
            if (!mus.is_array()) bad("$.model.mu", "expected an array");
            if (mus.size() != cfg.m)
                bad("$.model.mu", "needs one entry per component");
            for (std::size_t i = 0; i < mus.size(); ++i)
                cfg.mu.push_back(parse_mu(
                    mus.at(i), "$.model.mu[" + std::to_string(i) + "]"));
        }
    } else {
        const json& r = j.at("reliability");
        check_keys(r, "$.reliability",
                   {"main_work", "main_repair", "reserve_work",
                    "reserve_repair", "failed_boost", "phi", "Q", "q", "k",
                    "failure_elapsed"});
        cfg.has_reliability = true;
        ReliabilitySpec& rs = cfg.reliability;
        const std::string p = "$.reliability";
        rs.main_work = parse_intensity(need(r, "main_work", p), p + ".main_work");
        rs.main_repair =
            parse_intensity(need(r, "main_repair", p), p + ".main_repair");
        rs.reserve_work =
            parse_intensity(need(r, "reserve_work", p), p + ".reserve_work");
        rs.reserve_repair =
            parse_intensity(need(r, "reserve_repair", p), p + ".reserve_repair");
        rs.failed_boost = num_or(r, "failed_boost", p, 0.0);
        rs.phi = parse_intensity(need(r, "phi", p), p + ".phi");
        rs.Q = parse_intensity(need(r, "Q", p), p + ".Q");
        rs.q = num_or(r, "q", p, 0.0);
        rs.k = num_or(r, "k", p, 2.0);
        rs.failure_elapsed = num_or(r, "failure_elapsed", p, 0.0);
        cfg.m = 2;
    }

    if (j.contains("experiment")) {
        const json& e = j.at("experiment");
        const std::string p = "$.experiment";
        check_keys(e, p, {"probes", "runs", "seed", "bins", "orders", "theta",
                          "threads", "horizon_factor", "a", "a_hat"});
        if (e.contains("probes")) cfg.probes = num_list(e.at("probes"), p + ".probes");
        cfg.runs = static_cast<long>(num_or(e, "runs", p, cfg.runs));
        cfg.seed = static_cast<std::uint64_t>(num_or(e, "seed", p, 0.0));
        cfg.bins = static_cast<int>(num_or(e, "bins", p, cfg.bins));
        if (e.contains("orders")) cfg.orders = num_list(e.at("orders"), p + ".orders");
        if (e.contains("theta")) {
            const json& th = e.at("theta");
            if (th.is_string()) {
                if (th.get<std::string>() != "auto")
                    bad(p + ".theta", "expected a number or \"auto\"");
                cfg.theta = 0.0;
            } else {
                cfg.theta = num(th, p + ".theta");
            }
        }
        cfg.threads = static_cast<int>(num_or(e, "threads", p, cfg.threads));
        cfg.horizon_factor = num_or(e, "horizon_factor", p, cfg.horizon_factor);
        if (e.contains("a")) cfg.a = num_list(e.at("a"), p + ".a");
        if (e.contains("a_hat")) cfg.a_hat = num_list(e.at("a_hat"), p + ".a_hat");
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw config_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::string canonical_config(const RunConfig& cfg) {
    json j;
    j["schema"] = "qrc-config-1";
    if (!cfg.has_reliability) {
        json m;
        m["m"] = cfg.m;
        m["phi"] = intensity_json(cfg.phi);
        m["Q"] = intensity_json(cfg.Q);
        m["q"] = cfg.q;
        m["k"] = cfg.k;
        if (!cfg.mu.empty()) {
            json mus = json::array();
            for (const MuConfig& mc : cfg.mu) mus.push_back(mu_json(mc));
            m["mu"] = mus;
        }
        j["model"] = m;
    } else {
        const ReliabilitySpec& rs = cfg.reliability;
        json r;
        r["main_work"] = intensity_json(rs.main_work);
        r["main_repair"] = intensity_json(rs.main_repair);
        r["reserve_work"] = intensity_json(rs.reserve_work);
        r["reserve_repair"] = intensity_json(rs.reserve_repair);
        r["failed_boost"] = rs.failed_boost;
        r["phi"] = intensity_json(rs.phi);
        r["Q"] = intensity_json(rs.Q);
        r["q"] = rs.q;
        r["k"] = rs.k;
        if (rs.failure_elapsed > 0.0) r["failure_elapsed"] = rs.failure_elapsed;
        j["reliability"] = r;
    }
    json e;
    e["probes"] = cfg.probes;
    e["runs"] = cfg.runs;
    e["seed"] = cfg.seed;
    e["bins"] = cfg.bins;
    e["orders"] = cfg.orders;
    if (cfg.theta > 0.0)
        e["theta"] = cfg.theta;
    else
        e["theta"] = "auto";
    e["threads"] = cfg.threads;
    e["horizon_factor"] = cfg.horizon_factor;
    if (!cfg.a.empty()) e["a"] = cfg.a;
    if (!cfg.a_hat.empty()) e["a_hat"] = cfg.a_hat;
    j["experiment"] = e;
    return j.dump(2) + "\n";
}

ProcessSpec to_process_spec(const RunConfig& cfg) {
    if (cfg.has_reliability) return to_process_spec(cfg.reliability);
    ProcessSpec spec;
    spec.m = cfg.m;
    spec.phi = cfg.phi;
    spec.Q = cfg.Q;
    spec.k = cfg.k;
    if (cfg.q > 0.0) spec.q = [v = cfg.q](double) { return v; };
    for (const MuConfig& mc : cfg.mu) spec.mu.push_back(make_mu(mc, cfg.m));
    validate(spec);
    return spec;
}

ExperimentPlan to_plan(const RunConfig& cfg) {
    ExperimentPlan plan;
    plan.spec = to_process_spec(cfg);
    plan.probes = cfg.probes;
    plan.runs = cfg.runs;
    plan.seed = cfg.seed;
    plan.bins = cfg.bins;
    plan.N_orders = cfg.orders;
    plan.Theta = cfg.theta;
    plan.threads = cfg.threads;
    plan.horizon_factor = cfg.horizon_factor;
    return plan;
}

}  // namespace qrc
