#include "fbsde/report.hpp"

#include "fbsde/error.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

namespace fbsde {

std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

namespace {

// Non-finite values become null rather than invalid JSON.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string utc_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

} // namespace

json to_json(const Interval& iv) { return json::array({num(iv.lo), num(iv.hi)}); }

json to_json(const CoefficientBox& box) {
    json j = json::object();
    for (std::size_t i = 0; i < 9; ++i) j[SlopeCoefficients::names[i]] = to_json(box[i]);
    j["h"] = to_json(box.h);
    if (box.constants) {
        j["c1"] = box.constants->c1;
        j["c2"] = box.constants->c2;
        j["c3"] = box.constants->c3;
    }
    return j;
}

json to_json(const Event& e) {
    return {{"kind", to_string(e.kind)}, {"t_star", num(e.t_star)}, {"side", to_string(e.side)},
            {"y_last", num(e.y_last)}};
}

json to_json(const Classification& c) {
    json j = {{"verdict", to_string(c.verdict)}, {"fired_rule", c.fired_rule}, {"attempted", c.attempted},
              {"notes", c.notes}};
    j["T"] = c.T ? num(*c.T) : json(nullptr);
    j["T_star"] = c.T_star ? num(*c.T_star) : json(nullptr);
    j["all_T"] = c.all_T ? json(*c.all_T) : json(nullptr);
    j["p_max"] = c.p_max ? num(*c.p_max) : json(nullptr);
    if (c.bracket)
        j["bracket"] = {{"lower", num(c.bracket->lower)}, {"upper", num(c.bracket->upper)}};
    else
        j["bracket"] = nullptr;
    return j;
}

json to_json(const DominatingSolution& d, int samples) {
    json j;
    auto ev = d.event();
    j["event"] = ev ? to_json(*ev) : json(nullptr);
    j["upper_event"] = d.upper_event ? to_json(*d.upper_event) : json(nullptr);
    j["lower_event"] = d.lower_event ? to_json(*d.lower_event) : json(nullptr);
    j["complete"] = d.complete();
    j["upper0"] = num(d.upper0());
    j["lower0"] = num(d.lower0());
    if (samples > 0 && !d.t_grid.empty()) {
        json rows = json::array();
        std::size_t n = d.t_grid.size();
        std::size_t stride = std::max<std::size_t>(1, (n - 1) / static_cast<std::size_t>(samples));
        for (std::size_t i = 0; i < n; i += stride)
            rows.push_back({num(d.t_grid[i]), num(d.y_lower[i]), num(d.y_upper[i])});
        j["trajectory"] = {{"columns", {"t", "lower", "upper"}}, {"rows", rows}};
    }
    return j;
}

json to_json(const FieldDiagnostics& d) {
    return {{"delta", d.delta},
            {"blocks", d.blocks},
            {"picard_iterations_max", d.picard_iterations_max},
            {"contraction_max", num(d.contraction_max)},
            {"fp_iterations_max", d.fp_iterations_max},
            {"fp_residual_max", num(d.fp_residual_max)},
            {"bracket_checked", d.bracket_checked},
            {"bracket_violations", d.bracket_violations},
            {"bracket_excess_max", num(d.bracket_excess_max)}};
}

json to_json(const PathStats& s) {
    return {{"paths", s.paths},
            {"steps", s.steps},
            {"terminal_residual", num(s.terminal_residual)},
            {"bsde_residual", num(s.bsde_residual)},
            {"mean_XT", num(s.mean_XT)},
            {"var_XT", num(s.var_XT)},
            {"clamped_fraction", s.clamped_fraction},
            {"fp_iterations_max", s.fp_iterations_max},
            {"fp_residual_max", num(s.fp_residual_max)}};
}

json to_json(const SolveReport& r) {
    const DecouplingField& f = r.field;
    json j = {{"y0", num(r.y0)}, {"z0", num(r.z0)}, {"x0", f.x0}, {"diagnostics", to_json(f.diag)}};
    j["grid"] = {{"nt", f.nt()},
                 {"nx", f.nx()},
                 {"x_min", f.x_grid.empty() ? 0.0 : f.x_grid.front()},
                 {"x_max", f.x_grid.empty() ? 0.0 : f.x_grid.back()},
                 {"T", f.t_grid.empty() ? 0.0 : f.t_grid.back()}};
    j["path_stats"] = r.path_stats ? to_json(*r.path_stats) : json(nullptr);
    return j;
}

json run_report(const std::string& command, const std::string& spec_hash, json result) {
    static const std::string started = utc_now();
    json j;
    j["command"] = command;
    j["spec_hash"] = spec_hash;
    j["result"] = std::move(result);
    j["meta"] = {{"started", started}, {"finished", utc_now()}, {"tool_version", kToolVersion}};
    return j;
}

// ---------------------------------------------------------------------------

std::filesystem::path cache_dir() {
    if (const char* env = std::getenv("FBSDE_CACHE_DIR"); env && *env) return env;
    return std::filesystem::path(".fbsde-cache");
}

std::optional<DecouplingField> load_cached_field(const std::string& key) {
    auto path = cache_dir() / (key + ".cbor");
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    json j = json::from_cbor(bytes, true, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    try {
        DecouplingField f;
        f.t_grid = j.at("t").get<std::vector<double>>();
        f.x_grid = j.at("x").get<std::vector<double>>();
        f.u = j.at("u").get<std::vector<double>>();
        f.ux = j.at("ux").get<std::vector<double>>();
        f.x0 = j.at("x0").get<double>();
        f.core_lo = j.at("core_lo").get<std::size_t>();
        f.core_hi = j.at("core_hi").get<std::size_t>();
        const json& d = j.at("diag");
        f.diag.delta = d.at("delta").get<double>();
        f.diag.blocks = d.at("blocks").get<int>();
        f.diag.picard_iterations_max = d.at("picard_iterations_max").get<int>();
        f.diag.contraction_max = d.at("contraction_max").get<double>();
        f.diag.fp_iterations_max = d.at("fp_iterations_max").get<int>();
        f.diag.fp_residual_max = d.at("fp_residual_max").get<double>();
        if (f.u.size() != f.nt() * f.nx() || f.ux.size() != f.u.size()) return std::nullopt;
        return f;
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

void store_cached_field(const std::string& key, const DecouplingField& f) {
    std::error_code ec;
    std::filesystem::create_directories(cache_dir(), ec);
    if (ec) raise(ErrorKind::Io, "cannot create cache directory " + cache_dir().string());
    json j = {{"t", f.t_grid}, {"x", f.x_grid}, {"u", f.u}, {"ux", f.ux}, {"x0", f.x0},
              {"core_lo", f.core_lo}, {"core_hi", f.core_hi}};
    j["diag"] = {{"delta", f.diag.delta},
                 {"blocks", f.diag.blocks},
                 {"picard_iterations_max", f.diag.picard_iterations_max},
                 {"contraction_max", f.diag.contraction_max},
                 {"fp_iterations_max", f.diag.fp_iterations_max},
                 {"fp_residual_max", f.diag.fp_residual_max}};
    auto bytes = json::to_cbor(j);
    auto tmp = cache_dir() / (key + ".cbor.tmp");
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) raise(ErrorKind::Io, "cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
    std::filesystem::rename(tmp, cache_dir() / (key + ".cbor"), ec);
    if (ec) raise(ErrorKind::Io, "cannot move " + tmp.string() + " into place");
}

} // namespace fbsde
