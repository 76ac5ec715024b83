// fbsde: command-line front end.
#include "fbsde/acceptance.hpp"
#include "fbsde/characteristic.hpp"
#include "fbsde/classifier.hpp"
#include "fbsde/dominating.hpp"
#include "fbsde/error.hpp"
#include "fbsde/oracle.hpp"
#include "fbsde/report.hpp"
#include "fbsde/solver.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

using namespace fbsde;
namespace fs = std::filesystem;

namespace {

struct Args {
    std::string spec_path;
    std::string out;
    std::string batch;
    std::optional<double> T, dt, dx, band, eps, p, c1, c3, x0;
    std::vector<double> ys;
    std::vector<int> only;
    std::string emit_field;
    std::string emit_csv;
    bool no_cache = false;
    int paths = 0;
    std::optional<std::uint64_t> seed;
    int samples = 0;
};

double resolve_T(const Args& a, const ProblemSpec& s) {
    if (a.T) return *a.T;
    if (s.options.T) return *s.options.T;
    if (s.model) return s.model->horizon_T;
    raise(ErrorKind::Usage, "no horizon: pass --T or set options.T");
}

// Box used by the classifier and envelopes: the declared one, or the sampled
// slope box of the model.
CoefficientBox resolve_box(const ProblemSpec& s) {
    if (s.box) return *s.box;
    return slope_box_from_model(*s.model, s.options.samples.value_or(2000), s.options.margin.value_or(0.05));
}

// Affine models give point boxes before widening.
std::optional<CoefficientBox> exact_point_box(const ProblemSpec& s) {
    if (s.box) return s.box->is_point() ? std::optional<CoefficientBox>(*s.box) : std::nullopt;
    CoefficientBox raw = slope_box_from_model(*s.model, s.options.samples.value_or(2000), 0.0);
    auto tight = [](const Interval& iv) { return iv.width() <= 1e-9 * (1.0 + iv.mag()); };
    if (!tight(raw.h) || !std::all_of(raw.slopes.begin(), raw.slopes.end(), tight)) return std::nullopt;
    return CoefficientBox::point(raw.mid(), raw.h.mid());
}

json classify(const Args& a, const ProblemSpec& s) {
    ClassifierOptions opts;
    if (a.eps) opts.eps = *a.eps;
    else if (s.options.eps) opts.eps = *s.options.eps;
    std::optional<double> T = a.T ? a.T : s.options.T;
    if (auto pt = exact_point_box(s)) return to_json(classify_constant(pt->mid(), pt->h.mid(), T, opts));
    if (!T && s.model) T = s.model->horizon_T;
    if (!T) raise(ErrorKind::Usage, "box classification needs a horizon: pass --T or set options.T");
    return to_json(classify_box(resolve_box(s), *T, opts));
}

json dominate(const Args& a, const ProblemSpec& s) {
    CoefficientBox box = resolve_box(s);
    double T = resolve_T(a, s);
    Envelope env(box, box.h);
    DominatingSolution d = integrate_dominating(env, box.h.hi, box.h.lo, T);
    if (!a.emit_csv.empty()) {
        std::ofstream out(a.emit_csv);
        if (!out) raise(ErrorKind::Io, "cannot write " + a.emit_csv);
        out.precision(17);
        out << "t,y_upper,y_lower\n";
        for (std::size_t i = 0; i < d.t_grid.size(); ++i)
            out << d.t_grid[i] << ',' << d.y_upper[i] << ',' << d.y_lower[i] << '\n';
    }
    json j = to_json(d, a.samples);
    j["T"] = T;
    return j;
}

SolverOptions solver_options(const Args& a, const ProblemSpec& s) {
    SolverOptions o;
    o.dt = a.dt.value_or(s.options.dt.value_or(o.dt));
    o.dx = a.dx.value_or(s.options.dx.value_or(o.dx));
    o.band = a.band.value_or(s.options.band.value_or(o.band));
    if (s.box && s.box->constants) o.c3 = s.box->constants->c3;
    return o;
}

DecouplingField solve_cached(const Args& a, const ProblemSpec& s, const SolverOptions& o, const CoefficientModel& m) {
    std::ostringstream key;
    key.precision(17);
    key << s.canonical << "|T=" << m.horizon_T << "|dt=" << o.dt << "|dx=" << o.dx << "|band=" << o.band;
    const std::string hash = fnv1a_hex(key.str());
    if (!a.no_cache)
        if (auto f = load_cached_field(hash)) return *f;
    DecouplingField f = solve_field(m, o);
    if (!a.no_cache) store_cached_field(hash, f);
    return f;
}

CoefficientModel require_model(const Args& a, const ProblemSpec& s) {
    if (!s.model) raise(ErrorKind::Schema, "this command needs a 'model' section");
    CoefficientModel m = *s.model;
    if (a.T) m.horizon_T = *a.T;
    else if (s.options.T) m.horizon_T = *s.options.T;
    return m;
}

json solve(const Args& a, const ProblemSpec& s) {
    CoefficientModel m = require_model(a, s);
    SolverOptions o = solver_options(a, s);
    SolveReport r = make_report(solve_cached(a, s, o, m), m);
    if (!a.emit_field.empty()) {
        std::ofstream out(a.emit_field);
        if (!out) raise(ErrorKind::Io, "cannot write " + a.emit_field);
        r.field.write_csv(out);
    }
    return to_json(r);
}

json verify(const Args& a, const ProblemSpec& s) {
    CoefficientModel m = require_model(a, s);
    SolverOptions o = solver_options(a, s);
    SolveReport r = make_report(solve_cached(a, s, o, m), m);
    VerifyOptions vo;
    vo.paths = a.paths > 0 ? a.paths : s.options.paths.value_or(vo.paths);
    vo.seed = a.seed.value_or(s.options.seed.value_or(vo.seed));
    r.path_stats = forward_verify(r.field, m, vo);
    json j = to_json(r);
    j["seed"] = vo.seed;
    return j;
}

json oracle(const Args& a, const ProblemSpec& s) {
    auto pt = exact_point_box(s);
    if (!pt) raise(ErrorKind::Precondition, "the linear oracle needs constant coefficients");
    double T = resolve_T(a, s);
    double x0 = a.x0.value_or(s.model ? s.model->x0 : 1.0);
    LinearSolution L = linear_oracle(pt->mid(), pt->h.mid(), T);
    return {{"yhat0", L.yhat0()}, {"meanX_T", L.meanX(x0, T)}, {"x0", x0}, {"T", T}};
}

json envelope(const Args& a, const ProblemSpec& s) {
    CoefficientBox box = resolve_box(s);
    if (a.ys.empty()) raise(ErrorKind::Usage, "envelope needs at least one --y");
    Interval range{*std::min_element(a.ys.begin(), a.ys.end()), *std::max_element(a.ys.begin(), a.ys.end())};
    Envelope env(box, range);
    json lo = json::array(), hi = json::array();
    for (double y : a.ys) {
        double l, h;
        env.bounds(y, l, h);
        lo.push_back(l);
        hi.push_back(h);
    }
    return {{"y", a.ys}, {"F_lower", lo}, {"F_upper", hi}, {"vertices", env.vertices().size()}};
}

json batch_classify(const Args& a) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(a.batch))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<std::future<json>> jobs;
    for (const fs::path& p : files)
        jobs.push_back(std::async(std::launch::async, [&a, p] {
            try {
                return json{{"classification", classify(a, load_spec(p.string()))}};
            } catch (const Error& e) {
                return json{{"error", {{"kind", e.kind_name()}, {"message", e.what()}}}};
            }
        }));
    json out = json::object();
    for (std::size_t i = 0; i < files.size(); ++i) out[files[i].filename().string()] = jobs[i].get();
    return out;
}

void emit(const Args& a, const json& j) {
    const std::string text = j.dump(2) + "\n";
    if (a.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(a.out);
    if (!f) raise(ErrorKind::Io, "cannot write " + a.out);
    f << text;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Solvability, dominating ODEs and decoupling fields for 1-D coupled FBSDEs"};
    app.require_subcommand(1);
    Args a;
    app.add_option("--out", a.out, "Write the JSON report here instead of stdout");

    auto spec_arg = [&a](CLI::App* c) { c->add_option("spec", a.spec_path, "Problem spec (JSON)")->required(); };
    auto grid = [&a](CLI::App* c) {
        c->add_option("--dt", a.dt, "Time step");
        c->add_option("--dx", a.dx, "Space step");
        c->add_option("--band", a.band, "Half-width of the region of interest around x0");
        c->add_flag("--no-cache", a.no_cache, "Do not read or write the field cache");
    };

    auto* cl = app.add_subcommand("classify", "Decide solvability");
    cl->add_option("spec", a.spec_path, "Problem spec (JSON)");
    cl->add_option("--batch", a.batch, "Classify every *.json in a directory");
    cl->add_option("--T", a.T, "Horizon");
    cl->add_option("--eps", a.eps, "Smallness tolerance of the box rules");

    auto* dm = app.add_subcommand("dominate", "Integrate the dominating ODEs");
    spec_arg(dm);
    dm->add_option("--T", a.T, "Horizon");
    dm->add_option("--samples", a.samples, "Trajectory points to include");
    dm->add_option("--emit-csv", a.emit_csv, "Write rows (t, y_upper, y_lower) as CSV");

    auto* sv = app.add_subcommand("solve", "Construct the decoupling field");
    spec_arg(sv);
    grid(sv);
    sv->add_option("--T", a.T, "Horizon");
    sv->add_option("--emit-field", a.emit_field, "Write rows (t, x, u, ux) as CSV");

    auto* vf = app.add_subcommand("verify", "Solve, then check the field by forward simulation");
    spec_arg(vf);
    grid(vf);
    vf->add_option("--T", a.T, "Horizon");
    vf->add_option("--paths", a.paths, "Monte Carlo paths");
    vf->add_option("--seed", a.seed, "Seed");

    auto* orc = app.add_subcommand("oracle", "Linear constant-coefficient reference solution");
    spec_arg(orc);
    orc->add_option("--T", a.T, "Horizon");
    orc->add_option("--x0", a.x0, "Initial state for E[X_T]");

    auto* ps = app.add_subcommand("psi", "Moment exponent constants");
    ps->add_option("--p", a.p, "Exponent p >= 2")->required();

    auto* pm = app.add_subcommand("pmax", "Largest admissible moment exponent");
    pm->add_option("--c1", a.c1, "Bound on |sigma_3|")->required();
    pm->add_option("--c3", a.c3, "Bound on |u_x|")->required();

    auto* ev = app.add_subcommand("envelope", "Upper and lower generator envelopes of a box");
    spec_arg(ev);
    ev->add_option("--y", a.ys, "Evaluation points")->required();

    auto* st = app.add_subcommand("selftest", "Run the acceptance criteria");
    st->add_option("--only", a.only, "Criterion ids");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    CLI::App* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    std::string hash;
    try {
        json result;
        if (name == "psi") {
            hash = fnv1a_hex("psi|" + std::to_string(*a.p));
            result = {{"psi1", psi1(*a.p)}, {"psi2", psi2(*a.p)}, {"psi", psi(*a.p)}};
        } else if (name == "pmax") {
            hash = fnv1a_hex("pmax|" + std::to_string(*a.c1) + "|" + std::to_string(*a.c3));
            double p = p_max(*a.c1, *a.c3);
            result = {{"p_max", std::isfinite(p) ? json(p) : json(nullptr)}, {"unbounded", std::isinf(p)}};
        } else if (name == "selftest") {
            hash = fnv1a_hex("selftest");
            json rows = json::array();
            bool all = true;
            for (const CriterionResult& r : run_acceptance(a.only)) {
                all = all && r.passed;
                rows.push_back({{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
                std::cerr << (r.passed ? "PASS " : "FAIL ") << r.id << " " << r.name << ": " << r.detail << "\n";
            }
            result = {{"criteria", rows}, {"passed", all}};
            emit(a, run_report(name, hash, result));
            return all ? 0 : 1;
        } else if (name == "classify" && !a.batch.empty()) {
            hash = fnv1a_hex("batch|" + a.batch);
            result = batch_classify(a);
        } else {
            if (a.spec_path.empty()) raise(ErrorKind::Usage, name + " needs a spec file");
            ProblemSpec s = load_spec(a.spec_path);
            hash = fnv1a_hex(s.canonical);
            if (name == "classify") result = classify(a, s);
            else if (name == "dominate") result = dominate(a, s);
            else if (name == "solve") result = solve(a, s);
            else if (name == "verify") result = verify(a, s);
            else if (name == "oracle") result = oracle(a, s);
            else if (name == "envelope") result = envelope(a, s);
        }
        emit(a, run_report(name, hash, result));
        return 0;
    } catch (const Error& e) {
        json err = {{"error", {{"kind", e.kind_name()}, {"message", e.what()}}}};
        try {
            emit(a, run_report(name, hash, err));
        } catch (const Error&) {
            std::cout << run_report(name, hash, err).dump(2) << "\n";
        }
        std::cerr << e.kind_name() << ": " << e.what() << "\n";
        return e.kind() == ErrorKind::Usage ? 2 : 1;
    }
}
