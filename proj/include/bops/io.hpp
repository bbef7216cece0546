// SPDX-License-Identifier: MIT
#pragma once

#include "bops/cgu.hpp"
#include "bops/system.hpp"
#include "bops/weight.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace bops::io {

using json = nlohmann::ordered_json;

struct SchlesingerRequest {
    int j = 1;
    int direction = 1;
};

inline json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline json to_json(const std::vector<cplx>& v) {
    json a = json::array();
    for (auto z : v) a.push_back(to_json(z));
    return a;
}

// Accepts a number (real) or a two-element array [re, im].
inline cplx parse_complex(const json& j, const std::string& what) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    throw InputError(what + ": expected a number or [re, im]");
}

inline std::vector<cplx> parse_complex_list(const json& j, const std::string& what) {
    if (!j.is_array()) throw InputError(what + ": expected an array");
    std::vector<cplx> out;
    for (const auto& e : j) out.push_back(parse_complex(e, what));
    return out;
}

inline json parse_text(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(what + ": malformed JSON: " + e.what());
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Inline JSON when the argument starts with '{' or '[', otherwise a file path.
inline json parse_arg(const std::string& arg, const std::string& what) {
    auto pos = arg.find_first_not_of(" \t\r\n");
    if (pos != std::string::npos && (arg[pos] == '{' || arg[pos] == '[')) return parse_text(arg, what);
    return parse_text(read_file(arg), what);
}

// ---------------------------------------------------------------------------
// Fourier tables and weights.

inline json fourier_to_json(const FourierTable& t) {
    return json{{"k_min", t.k_min}, {"k_max", t.k_max}, {"coeffs", to_json(t.coeffs)}, {"tail_bound", t.tail_bound}};
}

inline FourierTable fourier_from_json(const json& j) {
    if (!j.is_object()) throw InputError("fourier table: expected an object");
    FourierTable t;
    try {
        t.k_min = j.at("k_min").get<int>();
        t.k_max = j.at("k_max").get<int>();
        t.tail_bound = j.value("tail_bound", 0.0);
    } catch (const json::exception& e) {
        throw InputError(std::string("fourier table: ") + e.what());
    }
    t.coeffs = parse_complex_list(j.at("coeffs"), "fourier table coeffs");
    if (t.k_min > 0 || t.k_max < 0 || static_cast<int>(t.coeffs.size()) != t.k_max - t.k_min + 1)
        throw InputError("fourier table: coeffs must cover k_min..k_max with k_min <= 0 <= k_max");
    return t;
}

inline FactorKind factor_kind(const std::string& s) {
    if (s == "outer") return FactorKind::outer;
    if (s == "conjugated") return FactorKind::conjugated;
    if (s == "monomial") return FactorKind::monomial;
    throw InputError("weight: unknown factor kind '" + s + "'");
}

inline WeightSpec weight_from_json(const json& j) {
    if (!j.is_object()) throw InputError("weight: expected an object");
    WeightSpec w;
    if (j.contains("factors")) {
        if (!j["factors"].is_array()) throw InputError("weight: factors must be an array");
        for (const auto& f : j["factors"]) {
            if (!f.is_object() || !f.contains("kind") || !f["kind"].is_string())
                throw InputError("weight: each factor needs a string kind");
            WeightFactor wf;
            wf.kind = factor_kind(f["kind"].get<std::string>());
            if (!f.contains("exponent")) throw InputError("weight: factor without exponent");
            wf.exponent = parse_complex(f["exponent"], "weight exponent");
            if (wf.kind != FactorKind::monomial) {
                if (!f.contains("zero")) throw InputError("weight: factor without zero");
                wf.zero = parse_complex(f["zero"], "weight zero");
            }
            w.factors.push_back(wf);
        }
    }
    if (j.contains("fourier")) w.base_fourier = fourier_from_json(j["fourier"]);
    if (j.contains("rational_mod")) {
        const auto& r = j["rational_mod"];
        if (!r.is_object()) throw InputError("weight: rational_mod must be an object");
        RationalMod m;
        auto list = [&](const char* key) {
            return r.contains(key) ? parse_complex_list(r[key], std::string("rational_mod ") + key) : std::vector<cplx>{};
        };
        m.alphas = list("alphas");
        m.alpha_stars = list("alpha_stars");
        m.betas = list("betas");
        m.beta_stars = list("beta_stars");
        if (!m.empty()) w.rational_mod = m;
    }
    validate_weight(w);
    return w;
}

inline json weight_to_json(const WeightSpec& w) {
    json j;
    json fs = json::array();
    for (const auto& f : w.factors) {
        json e{{"kind", to_string(f.kind)}};
        if (f.kind != FactorKind::monomial) e["zero"] = to_json(f.zero);
        e["exponent"] = to_json(f.exponent);
        fs.push_back(e);
    }
    j["factors"] = fs;
    if (w.base_fourier) j["fourier"] = fourier_to_json(*w.base_fourier);
    if (w.rational_mod) {
        const auto& r = *w.rational_mod;
        j["rational_mod"] = json{{"alphas", to_json(r.alphas)},
                                 {"alpha_stars", to_json(r.alpha_stars)},
                                 {"betas", to_json(r.betas)},
                                 {"beta_stars", to_json(r.beta_stars)}};
    }
    return j;
}

// ---------------------------------------------------------------------------
// Transformation requests.

inline CguShift shift_from_json(const json& j) {
    if (!j.is_object()) throw InputError("shift: expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (it.key() != "alphas" && it.key() != "alpha_stars" && it.key() != "betas" && it.key() != "beta_stars")
            throw InputError("shift: unknown key '" + it.key() + "'");
    CguShift s;
    auto list = [&](const char* key) {
        return j.contains(key) ? parse_complex_list(j[key], std::string("shift ") + key) : std::vector<cplx>{};
    };
    s.alphas = list("alphas");
    s.alpha_stars = list("alpha_stars");
    s.betas = list("betas");
    s.beta_stars = list("beta_stars");
    validate_shift(s);
    return s;
}

inline json shift_to_json(const CguShift& s) {
    return json{{"alphas", to_json(s.alphas)},
                {"alpha_stars", to_json(s.alpha_stars)},
                {"betas", to_json(s.betas)},
                {"beta_stars", to_json(s.beta_stars)}};
}

inline std::vector<SchlesingerRequest> schlesinger_from_json(const json& j) {
    auto one = [](const json& e) {
        if (!e.is_object() || !e.contains("j") || !e.contains("direction") || !e["j"].is_number_integer() ||
            !e["direction"].is_number_integer())
            throw InputError("schlesinger request: expected {\"j\": int, \"direction\": +1|-1}");
        SchlesingerRequest r{e["j"].get<int>(), e["direction"].get<int>()};
        if (r.direction != 1 && r.direction != -1) throw InputError("schlesinger request: direction must be +1 or -1");
        return r;
    };
    std::vector<SchlesingerRequest> out;
    if (j.is_array()) {
        for (const auto& e : j) out.push_back(one(e));
    } else {
        out.push_back(one(j));
    }
    if (out.empty()) throw InputError("schlesinger request: empty list");
    return out;
}

// ---------------------------------------------------------------------------
// System dumps.

inline json degree_record(int n, std::optional<cplx> I, cplx kappa, cplx r, cplx rbar, const Polynomial& phi,
                          const Polynomial& phibar) {
    json rec{{"n", n}};
    rec["I"] = I ? to_json(*I) : json(nullptr);
    rec["kappa"] = to_json(kappa);
    rec["r"] = to_json(r);
    rec["rbar"] = to_json(rbar);
    std::vector<cplx> p, q;
    for (int k = 0; k <= n; ++k) {
        p.push_back(phi.coeff(k));
        q.push_back(phibar.coeff(k));
    }
    rec["phi"] = to_json(p);
    rec["phibar"] = to_json(q);
    return rec;
}

inline json system_dump(const BopsSystem& s, int n_max) {
    json a = json::array();
    for (int n = 0; n <= n_max; ++n) a.push_back(degree_record(n, s.I(n), s.kappa(n), s.r(n), s.rbar(n), s.phi(n), s.phibar(n)));
    return a;
}

inline json view_dump(const SystemView& s, int n_max) {
    json a = json::array();
    for (int n = 0; n <= n_max; ++n) a.push_back(degree_record(n, std::nullopt, s.kappa(n), s.r(n), s.rbar(n), s.phi(n), s.phibar(n)));
    return a;
}

inline json error_json(const std::string& kind, int code, const std::string& message) {
    return json{{"error", {{"kind", kind}, {"code", code}, {"message", message}}}};
}

// ---------------------------------------------------------------------------
// CSV helpers.

inline std::string csv_number(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace bops::io
