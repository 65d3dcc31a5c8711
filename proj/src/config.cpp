#include "vertexflow/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "vertexflow/error.hpp"
#include "vertexflow/io.hpp"

namespace vertexflow {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

struct Entry {
    std::string value;
    int line = 0;
    bool used = false;
};

struct Section {
    std::string name;
    std::string label;  // "well injector" -> label "injector"
    int line = 0;
    std::map<std::string, Entry> keys;
};

/// Collects diagnostics and extracts typed values from raw sections.
class Reader {
public:
    explicit Reader(std::string origin) : origin_(std::move(origin)) {}

    void error(int line, const std::string& msg) {
        errors_.push_back(line > 0 ? fmt::format("{}:{}: {}", origin_, line, msg) : fmt::format("{}: {}", origin_, msg));
    }
    const std::vector<std::string>& errors() const { return errors_; }

    std::vector<Section> parse(const std::string& text) {
        std::vector<Section> out;
        std::istringstream in(text);
        std::string raw;
        int lineno = 0;
        while (std::getline(in, raw)) {
            ++lineno;
            std::string line = raw;
            if (auto c = line.find_first_of("#;"); c != std::string::npos) line.resize(c);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') {
                    error(lineno, "unterminated section header");
                    continue;
                }
                const std::string head = trim(std::string_view(line).substr(1, line.size() - 2));
                Section s;
                s.line = lineno;
                const auto sp = head.find_first_of(" \t");
                if (sp == std::string::npos) {
                    s.name = head;
                } else {
                    s.name = head.substr(0, sp);
                    s.label = trim(std::string_view(head).substr(sp));
                }
                out.push_back(std::move(s));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                error(lineno, fmt::format("expected 'key = value', got '{}'", line));
                continue;
            }
            if (out.empty()) {
                error(lineno, "key outside of any section");
                continue;
            }
            const std::string key = trim(std::string_view(line).substr(0, eq));
            const std::string val = trim(std::string_view(line).substr(eq + 1));
            if (key.empty()) {
                error(lineno, "empty key");
                continue;
            }
            auto& keys = out.back().keys;
            if (keys.count(key)) {
                error(lineno, fmt::format("duplicate key '{}' (first at line {})", key, keys[key].line));
                continue;
            }
            keys[key] = Entry{val, lineno, false};
        }
        return out;
    }

    Entry* find(Section* s, const std::string& key) {
        if (!s) return nullptr;
        auto it = s->keys.find(key);
        if (it == s->keys.end()) return nullptr;
        it->second.used = true;
        return &it->second;
    }

    bool parse_double(const Entry& e, const std::string& key, double& out) {
        const char* b = e.value.c_str();
        char* end = nullptr;
        errno = 0;
        const double v = std::strtod(b, &end);
        if (end == b || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
            error(e.line, fmt::format("'{}' must be a finite number, got '{}'", key, e.value));
            return false;
        }
        out = v;
        return true;
    }

    void get(Section* s, const std::string& sec, const std::string& key, double& out, bool required) {
        Entry* e = find(s, key);
        if (!e) {
            if (required) error(s ? s->line : 0, fmt::format("missing required key '{}' in [{}]", key, sec));
            return;
        }
        parse_double(*e, key, out);
    }

    void get(Section* s, const std::string& sec, const std::string& key, int& out, bool required) {
        Entry* e = find(s, key);
        if (!e) {
            if (required) error(s ? s->line : 0, fmt::format("missing required key '{}' in [{}]", key, sec));
            return;
        }
        char* end = nullptr;
        errno = 0;
        const long v = std::strtol(e->value.c_str(), &end, 10);
        if (end == e->value.c_str() || *end != '\0' || errno == ERANGE || v < INT32_MIN || v > INT32_MAX) {
            error(e->line, fmt::format("'{}' must be an integer, got '{}'", key, e->value));
            return;
        }
        out = static_cast<int>(v);
    }

    void get(Section* s, const std::string& sec, const std::string& key, std::string& out, bool required) {
        Entry* e = find(s, key);
        if (!e) {
            if (required) error(s ? s->line : 0, fmt::format("missing required key '{}' in [{}]", key, sec));
            return;
        }
        out = e->value;
    }

    template <class T>
    bool get_list(Section* s, const std::string& sec, const std::string& key, std::vector<T>& out, bool required) {
        Entry* e = find(s, key);
        if (!e) {
            if (required) error(s ? s->line : 0, fmt::format("missing required key '{}' in [{}]", key, sec));
            return false;
        }
        std::istringstream in(e->value);
        std::vector<T> vals;
        std::string tok;
        while (in >> tok) {
            Entry sub{tok, e->line, true};
            if constexpr (std::is_same_v<T, double>) {
                double v = 0.0;
                if (!parse_double(sub, key, v)) return false;
                vals.push_back(v);
            } else {
                char* end = nullptr;
                const long v = std::strtol(tok.c_str(), &end, 10);
                if (end == tok.c_str() || *end != '\0') {
                    error(e->line, fmt::format("'{}' must be a list of integers, got '{}'", key, e->value));
                    return false;
                }
                vals.push_back(static_cast<T>(v));
            }
        }
        out = std::move(vals);
        return true;
    }

    bool get_point(Section* s, const std::string& sec, const std::string& key, int dim, Point& out, bool required) {
        std::vector<double> v;
        if (!get_list(s, sec, key, v, required)) return false;
        const Entry* e = &s->keys.at(key);
        if (static_cast<int>(v.size()) != dim) {
            error(e->line, fmt::format("'{}' needs {} coordinates, got {}", key, dim, v.size()));
            return false;
        }
        out = {0, 0, 0};
        for (int d = 0; d < dim; ++d) out[d] = v[d];
        return true;
    }

    int line_of(Section* s, const std::string& key) {
        if (!s) return 0;
        auto it = s->keys.find(key);
        return it == s->keys.end() ? s->line : it->second.line;
    }

private:
    std::string origin_;
    std::vector<std::string> errors_;
};

std::string fmt_point(const Point& p, int dim) {
    std::string s;
    for (int d = 0; d < dim; ++d) s += (d ? " " : "") + fmt::format("{}", p[d]);
    return s;
}

template <class T>
std::string fmt_list(const std::vector<T>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt::format("{}", v[i]);
    return s;
}

}  // namespace

CaseConfig parse_config(const std::string& text, const std::string& origin) {
    Reader rd(origin);
    std::vector<Section> sections = rd.parse(text);
    std::map<std::string, Section*> single;
    std::vector<Section*> well_sections;
    static const std::vector<std::string> known = {"case",    "mesh", "model",  "fluids", "rock",  "initial",
                                                   "wells",   "time", "picard", "solver", "output"};
    for (auto& s : sections) {
        if (s.name == "well") {
            if (s.label.empty()) rd.error(s.line, "[well] section needs a name, e.g. [well injector]");
            well_sections.push_back(&s);
            continue;
        }
        if (std::find(known.begin(), known.end(), s.name) == known.end()) {
            rd.error(s.line, fmt::format("unknown section [{}]", s.name));
            continue;
        }
        if (!s.label.empty()) rd.error(s.line, fmt::format("section [{}] takes no name", s.name));
        if (single.count(s.name)) {
            rd.error(s.line, fmt::format("duplicate section [{}]", s.name));
            continue;
        }
        single[s.name] = &s;
    }
    auto sec = [&](const std::string& n) -> Section* {
        auto it = single.find(n);
        return it == single.end() ? nullptr : it->second;
    };

    CaseConfig c;
    c.name = std::filesystem::path(origin).stem().string();
    rd.get(sec("case"), "case", "name", c.name, false);

    // mesh
    {
        Section* s = sec("mesh");
        if (!s) rd.error(0, "missing section [mesh]");
        std::string kind = "structured";
        rd.get(s, "mesh", "type", kind, false);
        if (kind == "structured") {
            c.mesh.kind = MeshSpec::Kind::structured;
            const bool ok_c = rd.get_list(s, "mesh", "cells", c.mesh.cells, true);
            const bool ok_l = rd.get_list(s, "mesh", "lengths", c.mesh.lengths, true);
            if (ok_c && ok_l) {
                if (c.mesh.cells.size() != c.mesh.lengths.size() || c.mesh.cells.size() < 2 ||
                    c.mesh.cells.size() > 3)
                    rd.error(rd.line_of(s, "cells"), "'cells' and 'lengths' need 2 or 3 entries each");
                for (int n : c.mesh.cells)
                    if (n < 1) rd.error(rd.line_of(s, "cells"), "cell counts must be positive");
                for (double l : c.mesh.lengths)
                    if (!(l > 0.0)) rd.error(rd.line_of(s, "lengths"), "lengths must be positive");
                c.dim = static_cast<int>(c.mesh.cells.size());
            }
        } else if (kind == "file") {
            c.mesh.kind = MeshSpec::Kind::file;
            rd.get(s, "mesh", "file", c.mesh.file, true);
            rd.get(s, "mesh", "dim", c.dim, true);
            if (c.dim != 2 && c.dim != 3) rd.error(rd.line_of(s, "dim"), "'dim' must be 2 or 3");
        } else {
            rd.error(rd.line_of(s, "type"), fmt::format("mesh type must be 'structured' or 'file', got '{}'", kind));
        }
    }
    const int dim = c.dim;

    // model
    {
        Section* s = sec("model");
        if (!s) rd.error(0, "missing section [model]");
        std::string kind = "brooks-corey";
        rd.get(s, "model", "type", kind, false);
        if (kind == "brooks-corey") {
            c.model.kind = ModelSpec::Kind::brooks_corey;
            rd.get(s, "model", "s_rw", c.model.s_rw, true);
            rd.get(s, "model", "s_ro", c.model.s_ro, true);
        } else if (kind == "quadratic") {
            c.model.kind = ModelSpec::Kind::quadratic;
        } else {
            rd.error(rd.line_of(s, "type"),
                     fmt::format("model type must be 'brooks-corey' or 'quadratic', got '{}'", kind));
        }
        rd.get(s, "model", "theta", c.model.theta, true);
        rd.get(s, "model", "entry_pressure", c.model.entry_pressure, true);
        rd.get(s, "model", "threshold", c.model.threshold, false);
        if (!(c.model.theta > 0.0)) rd.error(rd.line_of(s, "theta"), "'theta' must be positive");
        if (!(c.model.entry_pressure > 0.0))
            rd.error(rd.line_of(s, "entry_pressure"), "'entry_pressure' must be positive");
        if (!(c.model.threshold > 0.0 && c.model.threshold < 1.0))
            rd.error(rd.line_of(s, "threshold"), "'threshold' must lie in (0, 1)");
        if (c.model.s_rw < 0.0 || c.model.s_ro < 0.0 || !(c.model.s_rw + c.model.s_ro < 1.0))
            rd.error(rd.line_of(s, "s_rw"), "residual saturations must be non-negative with s_rw + s_ro < 1");
    }

    // fluids
    {
        Section* s = sec("fluids");
        if (!s) rd.error(0, "missing section [fluids]");
        c.fluids = FluidPair{0.0, 0.0};
        rd.get(s, "fluids", "mu_w", c.fluids.mu_w, true);
        rd.get(s, "fluids", "mu_o", c.fluids.mu_o, true);
        if (!(c.fluids.mu_w > 0.0) && s && s->keys.count("mu_w"))
            rd.error(rd.line_of(s, "mu_w"), "'mu_w' must be positive");
        if (!(c.fluids.mu_o > 0.0) && s && s->keys.count("mu_o"))
            rd.error(rd.line_of(s, "mu_o"), "'mu_o' must be positive");
    }

    // rock
    {
        Section* s = sec("rock");
        if (!s) rd.error(0, "missing section [rock]");
        rd.get(s, "rock", "porosity", c.porosity, true);
        if (s && s->keys.count("porosity") && !(c.porosity > 0.0 && c.porosity <= 1.0))
            rd.error(rd.line_of(s, "porosity"), "'porosity' must lie in (0, 1]");
        std::string kind = "constant";
        rd.get(s, "rock", "permeability", kind, false);
        if (kind == "constant" || kind == "block") {
            c.perm.kind = kind == "constant" ? PermSpec::Kind::constant : PermSpec::Kind::block;
            rd.get(s, "rock", "k", c.perm.k, true);
            if (s && s->keys.count("k") && !(c.perm.k > 0.0)) rd.error(rd.line_of(s, "k"), "'k' must be positive");
            if (c.perm.kind == PermSpec::Kind::block) {
                rd.get_point(s, "rock", "inclusion_lo", dim, c.perm.lo, true);
                rd.get_point(s, "rock", "inclusion_hi", dim, c.perm.hi, true);
                rd.get(s, "rock", "inclusion_k", c.perm.k_inclusion, true);
                if (s && s->keys.count("inclusion_k") && !(c.perm.k_inclusion > 0.0))
                    rd.error(rd.line_of(s, "inclusion_k"), "'inclusion_k' must be positive");
                for (int d = 0; d < dim; ++d)
                    if (!(c.perm.lo[d] < c.perm.hi[d]))
                        rd.error(rd.line_of(s, "inclusion_lo"), "inclusion box needs lo < hi in every coordinate");
            }
        } else if (kind == "raster") {
            c.perm.kind = PermSpec::Kind::raster;
            rd.get(s, "rock", "raster", c.perm.raster, true);
            Point lo{}, hi{};
            const bool has_lo = s && s->keys.count("raster_lo");
            const bool has_hi = s && s->keys.count("raster_hi");
            if (has_lo != has_hi) rd.error(s->line, "'raster_lo' and 'raster_hi' go together");
            if (has_lo && has_hi && rd.get_point(s, "rock", "raster_lo", dim, lo, true) &&
                rd.get_point(s, "rock", "raster_hi", dim, hi, true))
                c.perm.raster_box = std::array<Point, 2>{lo, hi};
        } else {
            rd.error(rd.line_of(s, "permeability"),
                     fmt::format("permeability must be 'constant', 'block' or 'raster', got '{}'", kind));
        }
    }

    const double s_lo = c.model.kind == ModelSpec::Kind::brooks_corey ? c.model.s_rw : 0.0;
    const double s_hi = c.model.kind == ModelSpec::Kind::brooks_corey ? 1.0 - c.model.s_ro : 1.0;

    // initial state
    {
        Section* s = sec("initial");
        if (!s) rd.error(0, "missing section [initial]");
        rd.get(s, "initial", "saturation", c.s0, true);
        rd.get(s, "initial", "pressure", c.p0, true);
        if (s && s->keys.count("saturation") && (c.s0 < s_lo || c.s0 > s_hi))
            rd.error(rd.line_of(s, "saturation"),
                     fmt::format("initial saturation {} outside [{}, {}]", c.s0, s_lo, s_hi));
    }

    // wells
    {
        Section* s = sec("wells");
        if (!well_sections.empty() && !s) rd.error(0, "wells need a [wells] section with 's_in'");
        if (s) {
            rd.get(s, "wells", "s_in", c.s_in, true);
            if (s->keys.count("s_in") && (c.s_in < s_lo || c.s_in > s_hi))
                rd.error(rd.line_of(s, "s_in"), fmt::format("'s_in' {} outside [{}, {}]", c.s_in, s_lo, s_hi));
        }
        double inj = 0.0, prod = 0.0;
        for (Section* w : well_sections) {
            const std::string where = "well " + w->label;
            WellBox box;
            box.name = w->label;
            std::string kind;
            rd.get(w, where, "kind", kind, true);
            if (kind == "injection")
                box.kind = WellKind::injection;
            else if (kind == "production")
                box.kind = WellKind::production;
            else if (!kind.empty())
                rd.error(rd.line_of(w, "kind"), fmt::format("well kind must be 'injection' or 'production', got '{}'", kind));
            const bool ok_lo = rd.get_point(w, where, "lo", dim, box.lo, true);
            const bool ok_hi = rd.get_point(w, where, "hi", dim, box.hi, true);
            rd.get(w, where, "rate", box.rate, true);
            if (w->keys.count("rate") && !(box.rate > 0.0)) rd.error(rd.line_of(w, "rate"), "'rate' must be positive");
            if (ok_lo && ok_hi) {
                for (int d = 0; d < dim; ++d)
                    if (!(box.lo[d] <= box.hi[d])) rd.error(rd.line_of(w, "lo"), "well box needs lo <= hi");
                if (c.mesh.kind == MeshSpec::Kind::structured && static_cast<int>(c.mesh.lengths.size()) == dim)
                    for (int d = 0; d < dim; ++d)
                        if (box.lo[d] < 0.0 || box.hi[d] > c.mesh.lengths[d])
                            rd.error(rd.line_of(w, "lo"), fmt::format("well '{}' box lies outside the domain", box.name));
            }
            (box.kind == WellKind::injection ? inj : prod) += box.rate;
            c.wells.push_back(box);
        }
        for (std::size_t a = 0; a < c.wells.size(); ++a)
            for (std::size_t b = a + 1; b < c.wells.size(); ++b)
                if (c.wells[a].name == c.wells[b].name)
                    rd.error(well_sections[b]->line, fmt::format("duplicate well name '{}'", c.wells[b].name));
        if (!c.wells.empty() && std::abs(inj - prod) > 1e-12 * std::max(inj, prod))
            rd.error(0, fmt::format("injection ({}) and production ({}) rates must balance", inj, prod));
    }

    // time
    {
        Section* s = sec("time");
        if (!s) rd.error(0, "missing section [time]");
        rd.get(s, "time", "tau", c.time.tau, true);
        rd.get(s, "time", "T", c.time.T, true);
        rd.get(s, "time", "output_stride", c.time.output_stride, false);
        if (s && s->keys.count("tau") && s->keys.count("T") && !(c.time.tau > 0.0 && c.time.tau <= c.time.T))
            rd.error(rd.line_of(s, "tau"), "time step needs 0 < tau <= T");
        if (c.time.output_stride < 1) rd.error(rd.line_of(s, "output_stride"), "'output_stride' must be >= 1");
    }

    // picard
    {
        Section* s = sec("picard");
        rd.get(s, "picard", "tol", c.picard.tol, false);
        rd.get(s, "picard", "max_iter", c.picard.max_iter, false);
        rd.get(s, "picard", "pressure_scale", c.picard.pressure_scale, false);
        rd.get(s, "picard", "freeze_upwind_after", c.picard.freeze_upwind_after, false);
        if (!(c.picard.tol > 0.0)) rd.error(rd.line_of(s, "tol"), "Picard 'tol' must be positive");
        if (c.picard.max_iter < 1) rd.error(rd.line_of(s, "max_iter"), "Picard 'max_iter' must be >= 1");
        if (c.picard.pressure_scale < 0.0)
            rd.error(rd.line_of(s, "pressure_scale"), "'pressure_scale' must be >= 0 (0 selects automatic)");
        if (c.picard.freeze_upwind_after < 0)
            rd.error(rd.line_of(s, "freeze_upwind_after"), "'freeze_upwind_after' must be >= 0 (0 never freezes)");
    }

    // solver
    {
        Section* s = sec("solver");
        rd.get(s, "solver", "rtol", c.solver.rtol, false);
        rd.get(s, "solver", "max_iter", c.solver.max_iter, false);
        std::string inner = "ilu0";
        rd.get(s, "solver", "inner", inner, false);
        std::string fallback = "yes";
        rd.get(s, "solver", "fallback_direct", fallback, false);
        if (fallback == "yes" || fallback == "true")
            c.solver.fallback_direct = true;
        else if (fallback == "no" || fallback == "false")
            c.solver.fallback_direct = false;
        else
            rd.error(rd.line_of(s, "fallback_direct"), fmt::format("'fallback_direct' must be yes or no, got '{}'", fallback));
        if (inner == "ilu0")
            c.solver.inner = InnerSolve::ilu0;
        else if (inner == "direct")
            c.solver.inner = InnerSolve::direct;
        else
            rd.error(rd.line_of(s, "inner"), fmt::format("solver 'inner' must be 'ilu0' or 'direct', got '{}'", inner));
        if (!(c.solver.rtol > 0.0 && c.solver.rtol < 1.0)) rd.error(rd.line_of(s, "rtol"), "'rtol' must lie in (0, 1)");
        if (c.solver.max_iter < 1) rd.error(rd.line_of(s, "max_iter"), "solver 'max_iter' must be >= 1");
    }

    // output
    {
        Section* s = sec("output");
        rd.get(s, "output", "directory", c.output.directory, false);
        rd.get(s, "output", "vtk_stride", c.output.vtk_stride, false);
        if (c.output.vtk_stride < 0) rd.error(rd.line_of(s, "vtk_stride"), "'vtk_stride' must be >= 0");
        rd.get_list(s, "output", "mass_balance_steps", c.output.mass_balance_steps, false);
        for (int k : c.output.mass_balance_steps)
            if (k < 1) rd.error(rd.line_of(s, "mass_balance_steps"), "mass balance steps must be >= 1");
        const bool has_probe = s && (s->keys.count("probe_from") || s->keys.count("probe_to"));
        if (has_probe) {
            ProbeSpec p;
            rd.get_point(s, "output", "probe_from", dim, p.from, true);
            rd.get_point(s, "output", "probe_to", dim, p.to, true);
            rd.get(s, "output", "probe_samples", p.samples, false);
            if (p.samples < 2) rd.error(rd.line_of(s, "probe_samples"), "'probe_samples' must be >= 2");
            c.output.probe = p;
        }
    }

    for (auto& s : sections)
        for (auto& [k, e] : s.keys)
            if (!e.used)
                rd.error(e.line, fmt::format("unknown key '{}' in [{}{}]", k, s.name, s.label.empty() ? "" : " " + s.label));

    if (!rd.errors().empty()) {
        std::string msg = fmt::format("invalid configuration ({} problem{}):", rd.errors().size(),
                                      rd.errors().size() == 1 ? "" : "s");
        for (const auto& e : rd.errors()) msg += "\n  " + e;
        throw InvalidConfig(msg);
    }
    return c;
}

CaseConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig(fmt::format("cannot open config file '{}'", path));
    std::stringstream ss;
    ss << in.rdbuf();
    CaseConfig c = parse_config(ss.str(), path);
    c.base_dir = std::filesystem::path(path).parent_path().string();
    return c;
}

std::string serialize_config(const CaseConfig& c) {
    const int dim = c.dim;
    std::string o;
    auto kv = [&](const std::string& k, const std::string& v) { o += k + " = " + v + "\n"; };
    auto num = [](double v) { return fmt::format("{}", v); };

    o += "[case]\n";
    kv("name", c.name);
    o += "\n[mesh]\n";
    if (c.mesh.kind == MeshSpec::Kind::structured) {
        kv("type", "structured");
        kv("cells", fmt_list(c.mesh.cells));
        kv("lengths", fmt_list(c.mesh.lengths));
    } else {
        kv("type", "file");
        kv("file", c.mesh.file);
        kv("dim", std::to_string(dim));
    }
    o += "\n[model]\n";
    if (c.model.kind == ModelSpec::Kind::brooks_corey) {
        kv("type", "brooks-corey");
        kv("s_rw", num(c.model.s_rw));
        kv("s_ro", num(c.model.s_ro));
    } else {
        kv("type", "quadratic");
    }
    kv("theta", num(c.model.theta));
    kv("entry_pressure", num(c.model.entry_pressure));
    kv("threshold", num(c.model.threshold));
    o += "\n[fluids]\n";
    kv("mu_w", num(c.fluids.mu_w));
    kv("mu_o", num(c.fluids.mu_o));
    o += "\n[rock]\n";
    kv("porosity", num(c.porosity));
    switch (c.perm.kind) {
        case PermSpec::Kind::constant:
            kv("permeability", "constant");
            kv("k", num(c.perm.k));
            break;
        case PermSpec::Kind::block:
            kv("permeability", "block");
            kv("k", num(c.perm.k));
            kv("inclusion_lo", fmt_point(c.perm.lo, dim));
            kv("inclusion_hi", fmt_point(c.perm.hi, dim));
            kv("inclusion_k", num(c.perm.k_inclusion));
            break;
        case PermSpec::Kind::raster:
            kv("permeability", "raster");
            kv("raster", c.perm.raster);
            if (c.perm.raster_box) {
                kv("raster_lo", fmt_point((*c.perm.raster_box)[0], dim));
                kv("raster_hi", fmt_point((*c.perm.raster_box)[1], dim));
            }
            break;
    }
    o += "\n[initial]\n";
    kv("saturation", num(c.s0));
    kv("pressure", num(c.p0));
    if (!c.wells.empty()) {
        o += "\n[wells]\n";
        kv("s_in", num(c.s_in));
        for (const auto& w : c.wells) {
            o += "\n[well " + w.name + "]\n";
            kv("kind", w.kind == WellKind::injection ? "injection" : "production");
            kv("lo", fmt_point(w.lo, dim));
            kv("hi", fmt_point(w.hi, dim));
            kv("rate", num(w.rate));
        }
    }
    o += "\n[time]\n";
    kv("tau", num(c.time.tau));
    kv("T", num(c.time.T));
    kv("output_stride", std::to_string(c.time.output_stride));
    o += "\n[picard]\n";
    kv("tol", num(c.picard.tol));
    kv("max_iter", std::to_string(c.picard.max_iter));
    kv("pressure_scale", num(c.picard.pressure_scale));
    kv("freeze_upwind_after", std::to_string(c.picard.freeze_upwind_after));
    o += "\n[solver]\n";
    kv("rtol", num(c.solver.rtol));
    kv("max_iter", std::to_string(c.solver.max_iter));
    kv("inner", c.solver.inner == InnerSolve::ilu0 ? "ilu0" : "direct");
    kv("fallback_direct", c.solver.fallback_direct ? "yes" : "no");
    o += "\n[output]\n";
    kv("directory", c.output.directory);
    kv("vtk_stride", std::to_string(c.output.vtk_stride));
    if (!c.output.mass_balance_steps.empty()) kv("mass_balance_steps", fmt_list(c.output.mass_balance_steps));
    if (c.output.probe) {
        kv("probe_from", fmt_point(c.output.probe->from, dim));
        kv("probe_to", fmt_point(c.output.probe->to, dim));
        kv("probe_samples", std::to_string(c.output.probe->samples));
    }
    return o;
}

std::string resolve_path(const CaseConfig& config, const std::string& path) {
    std::filesystem::path p(path);
    if (p.is_absolute() || config.base_dir.empty()) return p.string();
    return (std::filesystem::path(config.base_dir) / p).string();
}

std::unique_ptr<ConstitutiveModel> make_model(const ModelSpec& m) {
    if (m.kind == ModelSpec::Kind::quadratic) return std::make_unique<QuadraticModel>(m.theta, m.entry_pressure, m.threshold);
    return std::make_unique<BrooksCoreyModel>(m.theta, m.entry_pressure, m.threshold, m.s_rw, m.s_ro);
}

FlowProblem build_problem(const CaseConfig& c) {
    Mesh mesh = c.mesh.kind == MeshSpec::Kind::structured
                    ? build_structured(c.mesh.cells, c.mesh.lengths)
                    : read_mesh_ascii(resolve_path(c, c.mesh.file));
    if (mesh.dim() != c.dim)
        throw InvalidConfig(fmt::format("mesh dimension {} does not match configured dim {}", mesh.dim(), c.dim));

    std::vector<double> perm(mesh.num_elements(), c.perm.k);
    if (c.perm.kind == PermSpec::Kind::block) {
        for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
            const Point x = mesh.element_centroid(e);
            bool inside = true;
            for (int d = 0; d < c.dim; ++d) inside = inside && x[d] >= c.perm.lo[d] && x[d] <= c.perm.hi[d];
            if (inside) perm[e] = c.perm.k_inclusion;
        }
    } else if (c.perm.kind == PermSpec::Kind::raster) {
        PermRaster r = read_raster(resolve_path(c, c.perm.raster));
        if (c.perm.raster_box) {
            r.lo = (*c.perm.raster_box)[0];
            r.hi = (*c.perm.raster_box)[1];
        } else {
            const auto bb = mesh.bounding_box();
            r.lo = bb[0];
            r.hi = bb[1];
        }
        perm = raster_to_elements(r, mesh);
    }

    if (c.mesh.kind == MeshSpec::Kind::file) {
        const auto bb = mesh.bounding_box();
        for (const auto& w : c.wells)
            for (int d = 0; d < c.dim; ++d)
                if (w.lo[d] < bb[0][d] - 1e-12 || w.hi[d] > bb[1][d] + 1e-12)
                    throw InvalidConfig(fmt::format("well '{}' box lies outside the mesh bounding box", w.name));
    }

    FlowProblem prob(std::move(mesh), std::move(perm), make_model(c.model), c.fluids, c.porosity);
    prob.set_wells(c.wells, c.s_in);
    const double s0 = c.s0, p0 = c.p0;
    prob.set_initial([s0](const Point&, double) { return s0; }, [p0](const Point&, double) { return p0; });
    return prob;
}

}  // namespace vertexflow
