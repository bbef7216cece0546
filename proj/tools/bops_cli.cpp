// SPDX-License-Identifier: MIT
// Command-line front end: compute a system, apply a transformation against its
// rebuilt oracle, or run a verification suite.

#include "bops/cgu.hpp"
#include "bops/io.hpp"
#include "bops/schlesinger.hpp"
#include "bops/suites.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

using namespace bops;
using io::json;

namespace {

struct Options {
    std::string weight_path;
    int n_max = 0;
    std::optional<double> tol;
    std::string suite = "core";
    std::string shift, schlesinger;
    std::uint64_t seed = 7;
    std::string out;
    std::string format = "json";
    double fd_step = 1e-5;
    int quad_max = 1 << 16;
    std::string tol_map;
};

struct CliFailure {
    ErrorKind kind;
    std::string message;
};

const char* kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::input: return "input";
        case ErrorKind::degeneracy: return "degeneracy";
        case ErrorKind::mismatch: return "oracle_mismatch";
        case ErrorKind::residual: return "residual_failure";
    }
    return "unknown";
}

int fail(ErrorKind kind, const std::string& message) {
    std::cerr << io::error_json(kind_name(kind), static_cast<int>(kind), message).dump() << "\n";
    return static_cast<int>(kind);
}

WeightSpec default_weight() {
    WeightSpec w;
    w.factors = {{FactorKind::conjugated, 0.5, 0.3}, {FactorKind::outer, 2.0, 0.4}};
    return w;
}

WeightSpec load_weight(const Options& o) {
    if (o.weight_path.empty()) return default_weight();
    return io::weight_from_json(io::parse_text(io::read_file(o.weight_path), "weight " + o.weight_path));
}

FourierOptions fourier_options(const Options& o) {
    if (o.quad_max < 64) throw InputError("--quad-max must be at least 64");
    FourierOptions fo;
    fo.n_max = o.quad_max;
    return fo;
}

void emit(const Options& o, const std::string& text) {
    if (o.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw InputError("cannot write " + o.out);
    f << text;
}

std::string csv_complex(cplx z) { return io::csv_number(z.real()) + "," + io::csv_number(z.imag()); }

int cmd_compute(const Options& o) {
    WeightSpec w = load_weight(o);
    if (o.n_max < 1) throw InputError("--nmax must be at least 1");
    auto fo = fourier_options(o);
    fo.min_range = o.n_max + 2;
    auto table = fourier_coefficients(w, fo);
    auto s = build_system(table, o.n_max);
    if (o.format == "csv") {
        std::string text = "n,I_re,I_im,kappa_re,kappa_im,r_re,r_im,rbar_re,rbar_im\n";
        for (int n = 0; n <= o.n_max; ++n)
            text += std::to_string(n) + "," + csv_complex(s.I(n)) + "," + csv_complex(s.kappa(n)) + "," + csv_complex(s.r(n)) +
                    "," + csv_complex(s.rbar(n)) + "\n";
        emit(o, text);
        return 0;
    }
    json rows = json::array();
    for (int n = 0; n <= o.n_max; ++n)
        rows.push_back(json::array({n, io::to_json(s.I(n)), io::to_json(s.kappa(n)), io::to_json(s.r(n)), io::to_json(s.rbar(n))}));
    json out;
    out["command"] = "compute";
    out["weight"] = io::weight_to_json(w);
    out["n_max"] = o.n_max;
    out["fourier"] = json{{"k_min", table.k_min}, {"k_max", table.k_max}, {"tail_bound", table.tail_bound}};
    out["negative_extension_defaults"] = json{{"kappa", io::to_json(1.0)}, {"phi0", io::to_json(0.0)}, {"phibar0", io::to_json(0.0)}};
    out["system"] = io::system_dump(s, o.n_max);
    out["table"] = json{{"columns", json::array({"n", "I", "kappa", "r", "rbar"})}, {"rows", rows}};
    emit(o, out.dump(2) + "\n");
    return 0;
}

// Largest scaled difference per column between the formula and the rebuilt systems.
json column_diffs(const SystemView& f, const SystemView& b, int n_max) {
    double kq = 0, k = 0, r = 0, rb = 0, ph = 0, phb = 0;
    for (int n = 0; n <= n_max; ++n) {
        cplx kf = f.kappa(n), kb = b.kappa(n);
        double sg = std::abs(kf - kb) <= std::abs(kf + kb) ? 1.0 : -1.0;
        kq = std::max(kq, rel_diff(kf * kf, kb * kb));
        k = std::max(k, rel_diff(sg * kf, kb));
        r = std::max(r, rel_diff(f.r(n), b.r(n)));
        rb = std::max(rb, rel_diff(f.rbar(n), b.rbar(n)));
        for (int i = 0; i <= n; ++i) {
            ph = std::max(ph, rel_diff(sg * f.phi(n).coeff(i), b.phi(n).coeff(i)));
            phb = std::max(phb, rel_diff(sg * f.phibar(n).coeff(i), b.phibar(n).coeff(i)));
        }
    }
    return json{{"kappa_sq", kq}, {"kappa", k}, {"r", r}, {"rbar", rb}, {"phi", ph}, {"phibar", phb}};
}

// Transformed degrees from transform_system, exposed through the view interface.
class DegreeView final : public SystemView {
public:
    explicit DegreeView(const TransformResult& t) : t_(t) {}
    int n_max() const override { return static_cast<int>(t_.degrees.size()) - 1; }
    cplx kappa(int n) const override { return t_.degrees[static_cast<std::size_t>(n)].kappa; }
    const Polynomial& phi(int n) const override { return t_.degrees[static_cast<std::size_t>(n)].phi; }
    const Polynomial& phibar(int n) const override { return t_.degrees[static_cast<std::size_t>(n)].phibar; }
    cplx xi(int, cplx) const override { throw InputError("DegreeView: associated functions unavailable"); }
    cplx xis(int, cplx) const override { throw InputError("DegreeView: associated functions unavailable"); }

private:
    const TransformResult& t_;
};

int cmd_transform(const Options& o) {
    if (o.shift.empty() == o.schlesinger.empty()) throw InputError("transform: give exactly one of --shift or --schlesinger");
    WeightSpec w = load_weight(o);
    if (o.n_max < 1) throw InputError("--nmax must be at least 1");
    double tol = o.tol.value_or(1e-8);
    if (!(tol > 0)) throw InputError("--tol must be positive");
    auto fo = fourier_options(o);
    const int N = o.n_max;

    json out;
    out["command"] = "transform";
    out["weight"] = io::weight_to_json(w);
    out["n_max"] = N;
    json diffs;
    if (!o.shift.empty()) {
        CguShift sh = io::shift_from_json(io::parse_arg(o.shift, "--shift"));
        auto base = std::make_shared<BopsSystem>(build_system(w, N + sh.K() + sh.Ks(), fo));
        auto T = transform_system(base, sh, N);
        auto B = build_system(apply_shift(w, sh), N, fo);
        DegreeView fv(T);
        json routes = json::array();
        for (const auto& d : T.degrees) routes.push_back(d.route);
        out["kind"] = "cgu";
        out["shift"] = io::shift_to_json(sh);
        out["routes"] = routes;
        out["formula"] = io::view_dump(fv, N);
        out["rebuilt"] = io::system_dump(B, N);
        diffs = column_diffs(fv, B, N);
    } else {
        auto reqs = io::schlesinger_from_json(io::parse_arg(o.schlesinger, "--schlesinger"));
        if (w.base_fourier || w.rational_mod) throw InputError("transform: Schlesinger shifts need a factor-based weight");
        auto d = semiclassical_data(w);
        const int M = d.M();
        if (M < 1) throw InputError("transform: weight has no finite singularities");
        int ups = 0;
        std::vector<int> total(static_cast<std::size_t>(M) + 1, 0);
        json req = json::array();
        for (const auto& r : reqs) {
            if (r.j < 1 || r.j > M) throw InputError("schlesinger request: j must lie in 1.." + std::to_string(M));
            ups += r.direction > 0 ? 1 : 0;
            total[static_cast<std::size_t>(r.j)] += r.direction;
            req.push_back(json{{"j", r.j}, {"direction", r.direction}});
        }
        ViewPtr view = std::make_shared<BopsSystem>(build_system(w, N + ups, fo));
        SemiClassicalData dv = d;
        for (const auto& r : reqs) {
            view = schlesinger_view(view, dv, r.j, r.direction);
            dv = shifted_data(dv, r.j, r.direction);
        }
        auto B = build_system(shift_exponents(w, total), N, fo);
        out["kind"] = "schlesinger";
        out["requests"] = req;
        out["formula"] = io::view_dump(*view, N);
        out["rebuilt"] = io::system_dump(B, N);
        diffs = column_diffs(*view, B, N);
    }
    double worst = 0.0;
    for (const auto& [key, v] : diffs.items()) worst = std::max(worst, v.get<double>());
    bool pass = worst < tol;
    out["diff"] = diffs;
    out["max_diff"] = worst;
    out["tol"] = tol;
    out["status"] = pass ? "pass" : "fail";
    if (o.format == "csv") {
        std::string text = "column,max_diff,tol,pass\n";
        for (const auto& [key, v] : diffs.items())
            text += key + "," + io::csv_number(v.get<double>()) + "," + io::csv_number(tol) + "," +
                    (v.get<double>() < tol ? "true" : "false") + "\n";
        emit(o, text);
    } else {
        emit(o, out.dump(2) + "\n");
    }
    if (!pass) {
        std::ostringstream os;
        os.precision(3);
        os << "transform: formula and rebuilt systems differ by " << worst << " (tol " << tol << ")";
        return fail(ErrorKind::mismatch, os.str());
    }
    return 0;
}

int cmd_verify(const Options& o) {
    SuiteConfig c;
    c.weight = load_weight(o);
    c.n_max = o.n_max;
    c.fd_step = o.fd_step;
    c.seed = o.seed;
    c.fourier = fourier_options(o);
    if (o.tol && !(*o.tol > 0)) throw InputError("--tol must be positive");
    c.tol = o.tol;
    if (!o.tol_map.empty()) {
        auto m = io::parse_arg(o.tol_map, "--tol-map");
        if (!m.is_object()) throw InputError("--tol-map: expected an object of id -> tolerance");
        for (const auto& [key, v] : m.items()) {
            if (!v.is_number() || !(v.get<double>() > 0)) throw InputError("--tol-map: tolerance for '" + key + "' must be positive");
            c.tol_map[key] = v.get<double>();
        }
    }
    auto rep = run_suite(o.suite, c);
    emit(o, o.format == "csv" ? report_csv(rep) : report_json(rep, o.suite, c).dump(2) + "\n");
    if (auto f = rep.first_failure()) return fail(ErrorKind::residual, "first failing check: " + describe(*f));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bi-orthogonal polynomial systems on the unit circle: construction, transformations and identity checks"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub, int default_n) {
        o.n_max = default_n;
        sub->add_option("--weight", o.weight_path, "Weight JSON file (default: the two-singularity test weight)");
        sub->add_option("--nmax", o.n_max, "Largest degree")->capture_default_str();
        sub->add_option("--quad-max", o.quad_max, "Largest FFT size for the Fourier coefficients")->capture_default_str();
        sub->add_option("--out", o.out, "Output path (default: standard output)");
        sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
        sub->add_option("--tol", o.tol, "Tolerance");
    };

    auto* compute = app.add_subcommand("compute", "Build the system and print it with the (n, I, kappa, r, rbar) table");
    common(compute, 8);
    auto* transform = app.add_subcommand("transform", "Apply a rational or Schlesinger transformation and compare with the rebuilt weight");
    common(transform, 8);
    transform->add_option("--shift", o.shift, "Rational modification: JSON object or file");
    transform->add_option("--schlesinger", o.schlesinger, "Exponent shift request(s): JSON or file");
    auto* verify = app.add_subcommand("verify", "Run a verification suite");
    common(verify, 12);
    verify->add_option("--suite", o.suite, "Suite")->check(CLI::IsMember(suite_names()))->capture_default_str();
    verify->add_option("--seed", o.seed, "Seed for the sample points")->capture_default_str();
    verify->add_option("--fd-step", o.fd_step, "Finite-difference step for deformation checks")->capture_default_str();
    verify->add_option("--tol-map", o.tol_map, "Per-check tolerances: JSON object or file mapping check id (or prefix) to tolerance");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(ErrorKind::input, e.what());
    }
    // Defaults differ per subcommand; only the parsed one applies.
    if (compute->parsed() && compute->count("--nmax") == 0) o.n_max = 8;
    if (transform->parsed() && transform->count("--nmax") == 0) o.n_max = 8;
    if (verify->parsed() && verify->count("--nmax") == 0) o.n_max = 12;

    try {
        if (compute->parsed()) return cmd_compute(o);
        if (transform->parsed()) return cmd_transform(o);
        return cmd_verify(o);
    } catch (const Error& e) {
        return fail(e.kind(), e.what());
    } catch (const io::json::exception& e) {
        return fail(ErrorKind::input, e.what());
    } catch (const std::exception& e) {
        return fail(ErrorKind::degeneracy, e.what());
    }
}
