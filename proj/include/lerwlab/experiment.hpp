#pragma once

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lerwlab/cut_times.hpp"
#include "lerwlab/errors.hpp"
#include "lerwlab/escape.hpp"
#include "lerwlab/loop_erasure.hpp"
#include "lerwlab/nonintersecting.hpp"
#include "lerwlab/stats.hpp"
#include "lerwlab/wilson.hpp"

namespace lerwlab {

// ---------------------------------------------------------------------------
// Configuration. Structured JSON with a versioned schema; unknown keys are
// errors. The canonical serialization (sorted keys, shortest round-trip
// numbers) is hashed with FNV-1a to pin a run's identity; out_dir is
// excluded so relocating output does not change the science.

enum class ExperimentKind { Growth, Escape, CutPoints, NonIntersect, Pieces, UstCheck, Tails };

inline std::string kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Growth: return "growth";
        case ExperimentKind::Escape: return "escape";
        case ExperimentKind::CutPoints: return "cutpoints";
        case ExperimentKind::NonIntersect: return "nonintersect";
        case ExperimentKind::Pieces: return "pieces";
        case ExperimentKind::UstCheck: return "ust-check";
        case ExperimentKind::Tails: return "tails";
    }
    return "?";
}

inline ExperimentKind kind_from_name(const std::string& s) {
    if (s == "growth") return ExperimentKind::Growth;
    if (s == "escape") return ExperimentKind::Escape;
    if (s == "cutpoints") return ExperimentKind::CutPoints;
    if (s == "nonintersect") return ExperimentKind::NonIntersect;
    if (s == "pieces") return ExperimentKind::Pieces;
    if (s == "ust-check") return ExperimentKind::UstCheck;
    if (s == "tails") return ExperimentKind::Tails;
    throw ConfigInvalid("unknown experiment kind: " + s);
}

struct ExperimentConfig {
    std::string name;
    ExperimentKind kind = ExperimentKind::Growth;
    int dimension = 3;
    std::vector<double> radii;  // ball radii; piece counts for kind=pieces
    std::int64_t samples_per_radius = 0;
    std::uint64_t seed = 0;
    int chains = 1;
    std::string out_dir;

    // kind-specific parameters
    std::string escape_mode = "es";  // es | es-annulus | es-diamond
    int walks_per_lerw = 16;
    double annulus_ratio = 4.0;
    double surrogate_factor = 8.0;
    double truncation_radius = 0.0;  // pieces
    std::string graph = "cycle4";    // ust-check
    std::vector<double> thresholds{1.5, 2.0, 3.0, 4.0};  // tails
    std::int64_t raw_cap = 10'000'000;  // rows before switching to reservoir mode
    std::int64_t reservoir_per_cell = 4096;

    nlohmann::json to_json(bool include_out_dir) const {
        nlohmann::json j;
        j["version"] = 1;
        j["name"] = name;
        j["kind"] = kind_name(kind);
        j["dimension"] = dimension;
        j["radii"] = radii;
        j["samples_per_radius"] = samples_per_radius;
        j["seed"] = seed;
        j["chains"] = chains;
        if (include_out_dir && !out_dir.empty()) j["out_dir"] = out_dir;
        nlohmann::json p;
        switch (kind) {
            case ExperimentKind::Escape:
                p["mode"] = escape_mode;
                p["walks_per_lerw"] = walks_per_lerw;
                if (escape_mode == "es-annulus") p["ratio"] = annulus_ratio;
                if (escape_mode == "es-diamond") p["surrogate_factor"] = surrogate_factor;
                break;
            case ExperimentKind::Pieces:
                p["truncation_radius"] = truncation_radius;
                break;
            case ExperimentKind::UstCheck:
                p["graph"] = graph;
                break;
            case ExperimentKind::Tails:
                p["thresholds"] = thresholds;
                break;
            default:
                break;
        }
        if (!p.empty()) j["params"] = p;
        if (raw_cap != 10'000'000) j["raw_cap"] = raw_cap;
        if (reservoir_per_cell != 4096) j["reservoir_per_cell"] = reservoir_per_cell;
        return j;
    }

    std::string canonical() const { return to_json(false).dump(); }
    std::uint64_t hash() const {
        std::string c = canonical();
        return fnv1a64(c.data(), c.size());
    }
};

namespace detail {

template <class T>
T require_field(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw ConfigInvalid(std::string("missing config key: ") + key);
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigInvalid(std::string("bad type for config key: ") + key);
    }
}

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known,
                           const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) ok = true;
        if (!ok) throw ConfigInvalid("unknown key \"" + it.key() + "\" in " + where);
    }
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    detail::reject_unknown(j,
                           {"version", "name", "kind", "dimension", "radii", "samples_per_radius",
                            "seed", "chains", "out_dir", "params", "raw_cap", "reservoir_per_cell"},
                           "config");
    if (detail::require_field<int>(j, "version") != 1)
        throw ConfigInvalid("unsupported config version");
    ExperimentConfig c;
    c.name = detail::require_field<std::string>(j, "name");
    c.kind = kind_from_name(detail::require_field<std::string>(j, "kind"));
    c.dimension = detail::require_field<int>(j, "dimension");
    if (c.dimension != 2 && c.dimension != 3) throw ConfigInvalid("dimension must be 2 or 3");
    c.samples_per_radius = detail::require_field<std::int64_t>(j, "samples_per_radius");
    if (c.samples_per_radius < 1) throw ConfigInvalid("samples_per_radius must be positive");
    c.seed = detail::require_field<std::uint64_t>(j, "seed");
    c.chains = detail::require_field<int>(j, "chains");
    if (c.chains < 1) throw ConfigInvalid("chains must be positive");
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("raw_cap")) c.raw_cap = j.at("raw_cap").get<std::int64_t>();
    if (j.contains("reservoir_per_cell"))
        c.reservoir_per_cell = j.at("reservoir_per_cell").get<std::int64_t>();
    if (c.raw_cap < 1 || c.reservoir_per_cell < 2) throw ConfigInvalid("bad raw/reservoir limits");

    if (c.kind == ExperimentKind::UstCheck) {
        if (j.contains("radii")) throw ConfigInvalid("ust-check takes no radii");
    } else {
        c.radii = detail::require_field<std::vector<double>>(j, "radii");
        if (c.radii.empty()) throw ConfigInvalid("radii must be nonempty");
        for (std::size_t i = 0; i < c.radii.size(); ++i) {
            if (c.radii[i] < (c.kind == ExperimentKind::Pieces ? 0.0 : 1.0))
                throw ConfigInvalid("radius out of range");
            if (i > 0 && c.radii[i] <= c.radii[i - 1])
                throw ConfigInvalid("radii must be strictly increasing");
        }
    }

    nlohmann::json p = j.contains("params") ? j.at("params") : nlohmann::json::object();
    switch (c.kind) {
        case ExperimentKind::Escape: {
            detail::reject_unknown(p, {"mode", "walks_per_lerw", "ratio", "surrogate_factor"},
                                   "params");
            if (p.contains("mode")) c.escape_mode = p.at("mode").get<std::string>();
            if (c.escape_mode != "es" && c.escape_mode != "es-annulus" &&
                c.escape_mode != "es-diamond")
                throw ConfigInvalid("escape mode must be es, es-annulus or es-diamond");
            if (p.contains("walks_per_lerw")) c.walks_per_lerw = p.at("walks_per_lerw").get<int>();
            if (c.walks_per_lerw < 1) throw ConfigInvalid("walks_per_lerw must be positive");
            if (p.contains("ratio")) c.annulus_ratio = p.at("ratio").get<double>();
            if (c.annulus_ratio < 1.0) throw ConfigInvalid("annulus ratio must be >= 1");
            if (p.contains("surrogate_factor"))
                c.surrogate_factor = p.at("surrogate_factor").get<double>();
            if (c.surrogate_factor < 1.0) throw ConfigInvalid("surrogate_factor must be >= 1");
            break;
        }
        case ExperimentKind::Pieces: {
            detail::reject_unknown(p, {"truncation_radius"}, "params");
            c.truncation_radius = detail::require_field<double>(p, "truncation_radius");
            if (c.truncation_radius < 1.0) throw ConfigInvalid("truncation_radius must be >= 1");
            for (double n : c.radii)
                if (n != std::floor(n)) throw ConfigInvalid("piece counts must be integers");
            break;
        }
        case ExperimentKind::UstCheck: {
            detail::reject_unknown(p, {"graph"}, "params");
            if (p.contains("graph")) c.graph = p.at("graph").get<std::string>();
            c.radii = {1.0};  // single internal cell row
            break;
        }
        case ExperimentKind::Tails: {
            detail::reject_unknown(p, {"thresholds"}, "params");
            if (p.contains("thresholds"))
                c.thresholds = p.at("thresholds").get<std::vector<double>>();
            if (c.thresholds.empty()) throw ConfigInvalid("thresholds must be nonempty");
            break;
        }
        default: {
            detail::reject_unknown(p, {}, "params");
            break;
        }
    }
    return c;
}

inline ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigInvalid("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigInvalid(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

inline FiniteGraph named_graph(const std::string& name) {
    if (name == "cycle4") return FiniteGraph::cycle(4);
    if (name == "grid2x3") return FiniteGraph::grid(2, 3);
    if (name == "grid3x3") return FiniteGraph::grid(3, 3);
    throw ConfigInvalid("unknown graph: " + name);
}

// ---------------------------------------------------------------------------
// Cells: the unit of scheduling, persistence and resume. One cell is
// (experiment, n, chain); its stream id is a stable hash of that key, so
// outputs do not depend on worker scheduling or resume pattern.

struct Cell {
    int index = 0;
    double n = 0.0;
    int chain = 0;
    std::int64_t samples = 0;
    std::uint64_t stream_id = 0;
};

inline std::string format_double(double v) {
    if (v == std::floor(v) && std::fabs(v) < 9.007199254740992e15) {
        char buf[32];
        auto r = std::to_chars(buf, buf + sizeof buf, std::int64_t(v));
        return std::string(buf, r.ptr);
    }
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline std::vector<Cell> plan_cells(const ExperimentConfig& c) {
    std::vector<Cell> cells;
    int idx = 0;
    for (double n : c.radii) {
        std::int64_t base = c.samples_per_radius / c.chains;
        std::int64_t extra = c.samples_per_radius % c.chains;
        for (int ch = 0; ch < c.chains; ++ch) {
            Cell cell;
            cell.index = idx++;
            cell.n = n;
            cell.chain = ch;
            cell.samples = base + (ch < extra ? 1 : 0);
            std::string key =
                c.name + "|" + kind_name(c.kind) + "|" + format_double(n) + "|" + std::to_string(ch);
            cell.stream_id = fnv1a64(key.data(), key.size());
            cells.push_back(cell);
        }
    }
    return cells;
}

// ---------------------------------------------------------------------------
// Cell execution: one row per sample. Values are domain quantities
// (|LE|, K_n, acceptance indicators, per-realization escape means, piece
// lengths with -1 flagging shortfall, canonical tree ids).

namespace detail {

template <int D>
std::vector<double> run_cell_dim(const ExperimentConfig& c, const Cell& cell, RngStream rng) {
    std::vector<double> rows;
    rows.reserve(std::size_t(cell.samples));
    switch (c.kind) {
        case ExperimentKind::Growth:
        case ExperimentKind::Tails: {
            LoopErasedWalker<D> w;
            Ball<D> ball = Ball<D>::centered(cell.n);
            for (std::int64_t i = 0; i < cell.samples; ++i)
                rows.push_back(double(w.sample_to_exit(ball, rng).steps()));
            break;
        }
        case ExperimentKind::CutPoints: {
            CutPointCounter<D> counter;
            Ball<D> ball = Ball<D>::centered(cell.n);
            for (std::int64_t i = 0; i < cell.samples; ++i)
                rows.push_back(double(counter.count_to_exit(ball, rng)));
            break;
        }
        case ExperimentKind::NonIntersect: {
            PairSampler<D> sampler;
            for (std::int64_t i = 0; i < cell.samples; ++i)
                rows.push_back(sampler.attempt(cell.n, rng, nullptr, nullptr) ? 1.0 : 0.0);
            break;
        }
        case ExperimentKind::Escape: {
            EscapeEstimator<D> est(c.walks_per_lerw);
            for (std::int64_t i = 0; i < cell.samples; ++i) {
                EstimateRecord r;
                if (c.escape_mode == "es")
                    r = est.estimate_es(cell.n, 1, rng);
                else if (c.escape_mode == "es-annulus")
                    r = est.estimate_es_annulus(cell.n / c.annulus_ratio, cell.n, 1, rng);
                else
                    r = est.estimate_es_diamond(cell.n, 1, rng, c.surrogate_factor);
                rows.push_back(r.mean);
            }
            break;
        }
        case ExperimentKind::Pieces: {
            int piece = int(cell.n);
            for (std::int64_t i = 0; i < cell.samples; ++i) {
                TwoSidedSurrogate<D> s = sample_two_sided<D>(c.truncation_radius, rng);
                std::vector<std::int64_t> lengths = lerw_piece_lengths(s, piece);
                rows.push_back(int(lengths.size()) > piece ? double(lengths[std::size_t(piece)])
                                                           : -1.0);
            }
            break;
        }
        case ExperimentKind::UstCheck: {
            FiniteGraph g = named_graph(c.graph);
            for (std::int64_t i = 0; i < cell.samples; ++i) {
                SpanningTree t = wilson_sample(g, 0, rng);
                std::string key = t.key();
                rows.push_back(double(fnv1a64(key.data(), key.size()) & 0xFFFFFFFFull));
            }
            break;
        }
    }
    return rows;
}

}  // namespace detail

inline std::vector<double> run_cell(const ExperimentConfig& c, const Cell& cell) {
    RngStream rng(c.seed, cell.stream_id);
    return c.dimension == 2 ? detail::run_cell_dim<2>(c, cell, rng)
                            : detail::run_cell_dim<3>(c, cell, rng);
}

// ---------------------------------------------------------------------------
// Persistence: manifest first, then one file per finished cell, then a
// deterministic merge into results.csv and summary.json.

struct CellStatus {
    Cell cell;
    bool done = false;
    // reservoir mode bookkeeping (exact moments over all samples)
    std::int64_t count = 0;
    double sum = 0.0, sumsq = 0.0;
    std::int64_t shortfall = 0;
};

struct RunState {
    ExperimentConfig config;
    std::vector<CellStatus> cells;
    bool reservoir_mode = false;
    std::filesystem::path dir;

    std::filesystem::path manifest_path() const { return dir / "manifest.json"; }
    std::filesystem::path cell_path(int index) const {
        char buf[32];
        std::snprintf(buf, sizeof buf, "cell_%05d.csv", index);
        return dir / "cells" / buf;
    }
    std::filesystem::path results_path() const { return dir / "results.csv"; }
    std::filesystem::path summary_path() const { return dir / "summary.json"; }
};

namespace detail {

inline std::string now_iso8601() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline void atomic_write(const std::filesystem::path& path, const std::string& body) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << body;
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace detail

inline nlohmann::json manifest_json(const RunState& st, const std::string& created) {
    nlohmann::json j;
    j["version"] = 1;
    j["config"] = st.config.to_json(true);
    char hex[19];
    std::snprintf(hex, sizeof hex, "%016llx", (unsigned long long)st.config.hash());
    j["config_hash"] = hex;
    j["csv_columns"] = {"experiment", "kind", "n", "chain", "idx", "value"};
    j["raw_mode"] = st.reservoir_mode ? "reservoir" : "full";
    j["created"] = created;
    j["updated"] = detail::now_iso8601();
    nlohmann::json cells = nlohmann::json::array();
    for (const CellStatus& cs : st.cells) {
        nlohmann::json c;
        c["index"] = cs.cell.index;
        c["n"] = cs.cell.n;
        c["chain"] = cs.cell.chain;
        c["samples"] = cs.cell.samples;
        char sh[19];
        std::snprintf(sh, sizeof sh, "%016llx", (unsigned long long)cs.cell.stream_id);
        c["stream"] = sh;
        c["done"] = cs.done;
        if (st.reservoir_mode && cs.done) {
            c["count"] = cs.count;
            c["sum"] = cs.sum;
            c["sumsq"] = cs.sumsq;
            c["shortfall"] = cs.shortfall;
        }
        cells.push_back(c);
    }
    j["cells"] = cells;
    return j;
}

inline RunState init_run(const ExperimentConfig& config) {
    RunState st;
    st.config = config;
    st.dir = config.out_dir;
    std::vector<Cell> cells = plan_cells(config);
    std::int64_t total_rows = 0;
    for (const Cell& c : cells) total_rows += c.samples;
    st.reservoir_mode = total_rows > config.raw_cap;
    for (const Cell& c : cells) st.cells.push_back(CellStatus{c, false, 0, 0.0, 0.0, 0});
    std::filesystem::create_directories(st.dir / "cells");
    detail::atomic_write(st.manifest_path(), manifest_json(st, detail::now_iso8601()).dump(2) + "\n");
    return st;
}

inline RunState load_manifest(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw ManifestCorrupt("cannot open manifest: " + manifest_path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ManifestCorrupt(std::string("manifest is not valid JSON: ") + e.what());
    }
    RunState st;
    try {
        st.config = parse_config(j.at("config"));
        char hex[19];
        std::snprintf(hex, sizeof hex, "%016llx", (unsigned long long)st.config.hash());
        if (j.at("config_hash").get<std::string>() != hex)
            throw ManifestCorrupt("config hash mismatch: manifest was edited or config changed");
        st.reservoir_mode = j.at("raw_mode").get<std::string>() == "reservoir";
        st.dir = manifest_path.parent_path();
        std::vector<Cell> cells = plan_cells(st.config);
        const nlohmann::json& jc = j.at("cells");
        if (jc.size() != cells.size()) throw ManifestCorrupt("cell list size mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            CellStatus cs;
            cs.cell = cells[i];
            const nlohmann::json& c = jc.at(i);
            if (c.at("index").get<int>() != cells[i].index ||
                c.at("n").get<double>() != cells[i].n ||
                c.at("chain").get<int>() != cells[i].chain ||
                c.at("samples").get<std::int64_t>() != cells[i].samples)
                throw ManifestCorrupt("cell plan mismatch");
            cs.done = c.at("done").get<bool>();
            if (st.reservoir_mode && cs.done) {
                cs.count = c.at("count").get<std::int64_t>();
                cs.sum = c.at("sum").get<double>();
                cs.sumsq = c.at("sumsq").get<double>();
                cs.shortfall = c.at("shortfall").get<std::int64_t>();
            }
            st.cells.push_back(cs);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ManifestCorrupt(std::string("manifest missing fields: ") + e.what());
    }
    return st;
}

// Executes one cell and persists its rows (or its reservoir subsample).
inline void execute_cell(RunState& st, CellStatus& cs) {
    std::vector<double> rows = run_cell(st.config, cs.cell);
    cs.count = std::int64_t(rows.size());
    cs.sum = 0.0;
    cs.sumsq = 0.0;
    cs.shortfall = 0;
    for (double v : rows) {
        if (st.config.kind == ExperimentKind::Pieces && v < 0.0) {
            ++cs.shortfall;
            continue;
        }
        cs.sum += v;
        cs.sumsq += v * v;
    }

    std::string body;
    auto emit = [&](std::int64_t idx, double v) {
        body += st.config.name;
        body += ',';
        body += kind_name(st.config.kind);
        body += ',';
        body += format_double(cs.cell.n);
        body += ',';
        body += std::to_string(cs.cell.chain);
        body += ',';
        body += std::to_string(idx);
        body += ',';
        body += format_double(v);
        body += '\n';
    };
    if (!st.reservoir_mode || cs.count <= st.config.reservoir_per_cell) {
        for (std::size_t i = 0; i < rows.size(); ++i) emit(std::int64_t(i), rows[i]);
    } else {
        // Algorithm R on (idx, value), driven by a dedicated substream so the
        // subsample is reproducible and independent of the sampling stream.
        RngStream res_rng = RngStream(st.config.seed, cs.cell.stream_id).substream(0x7e5e7701);
        std::int64_t k = st.config.reservoir_per_cell;
        std::vector<std::pair<std::int64_t, double>> keep;
        keep.reserve(std::size_t(k));
        for (std::int64_t i = 0; i < std::int64_t(rows.size()); ++i) {
            if (i < k) {
                keep.emplace_back(i, rows[std::size_t(i)]);
            } else {
                std::int64_t r = std::int64_t(res_rng.next_below(std::uint64_t(i) + 1));
                if (r < k) keep[std::size_t(r)] = {i, rows[std::size_t(i)]};
            }
        }
        std::sort(keep.begin(), keep.end());
        for (auto& [idx, v] : keep) emit(idx, v);
    }
    detail::atomic_write(st.cell_path(cs.cell.index), body);
    cs.done = true;
}

// ---------------------------------------------------------------------------
// Summary: per-n estimate series, exponent fits, kind-specific extras.

struct CellData {
    const CellStatus* status;
    std::vector<std::pair<std::int64_t, double>> rows;  // (idx, value)
};

inline std::vector<CellData> read_cell_rows(const RunState& st) {
    std::vector<CellData> data;
    for (const CellStatus& cs : st.cells) {
        CellData cd;
        cd.status = &cs;
        std::ifstream in(st.cell_path(cs.cell.index));
        if (!in) throw ResultsMissing("missing cell file: " + st.cell_path(cs.cell.index).string());
        std::string line;
        while (std::getline(in, line)) {
            // experiment,kind,n,chain,idx,value — take the last two fields
            std::size_t p5 = line.rfind(',');
            std::size_t p4 = line.rfind(',', p5 - 1);
            std::int64_t idx = std::stoll(line.substr(p4 + 1, p5 - p4 - 1));
            double v = std::stod(line.substr(p5 + 1));
            cd.rows.emplace_back(idx, v);
        }
        data.push_back(std::move(cd));
    }
    return data;
}

inline nlohmann::json summarize(const RunState& st, const std::vector<CellData>& data) {
    const ExperimentConfig& c = st.config;
    nlohmann::json out;
    out["version"] = 1;
    out["name"] = c.name;
    out["kind"] = kind_name(c.kind);
    char hex[19];
    std::snprintf(hex, sizeof hex, "%016llx", (unsigned long long)c.hash());
    out["config_hash"] = hex;

    // Group cells per n in grid order.
    EstimateSeries series;
    nlohmann::json shortfall = nlohmann::json::object();
    std::vector<std::vector<double>> raw_per_n;
    std::vector<double> medians;
    for (double n : c.radii) {
        std::int64_t count = 0, short_count = 0, total = 0;
        double sum = 0.0, sumsq = 0.0;
        std::vector<double> values;
        for (const CellData& cd : data) {
            if (cd.status->cell.n != n) continue;
            total += st.reservoir_mode ? cd.status->count : std::int64_t(cd.rows.size());
            if (st.reservoir_mode) {
                count += cd.status->count - cd.status->shortfall;
                sum += cd.status->sum;
                sumsq += cd.status->sumsq;
                short_count += cd.status->shortfall;
                for (auto& [idx, v] : cd.rows)
                    if (!(c.kind == ExperimentKind::Pieces && v < 0.0)) values.push_back(v);
            } else {
                for (auto& [idx, v] : cd.rows) {
                    if (c.kind == ExperimentKind::Pieces && v < 0.0) {
                        ++short_count;
                        continue;
                    }
                    ++count;
                    sum += v;
                    sumsq += v * v;
                    values.push_back(v);
                }
            }
        }
        EstimateRecord r;
        r.n = n;
        r.count = count;
        r.mean = count > 0 ? sum / double(count) : 0.0;
        double var = count > 1 ? (sumsq - sum * sum / double(count)) / double(count - 1) : 0.0;
        r.stderr_ = count > 1 ? std::sqrt(std::max(0.0, var) / double(count)) : 0.0;
        series.push(r);
        raw_per_n.push_back(std::move(values));
        if (c.kind == ExperimentKind::Pieces) {
            shortfall[format_double(n)] =
                total > 0 ? double(short_count) / double(total) : 0.0;
            std::vector<double>& vals = raw_per_n.back();
            std::vector<double> sorted = vals;
            std::sort(sorted.begin(), sorted.end());
            medians.push_back(sorted.empty() ? 0.0
                              : sorted.size() % 2 ? sorted[sorted.size() / 2]
                                                  : 0.5 * (sorted[sorted.size() / 2 - 1] +
                                                           sorted[sorted.size() / 2]));
        }
    }

    nlohmann::json js;
    js["n"] = nlohmann::json::array();
    js["mean"] = nlohmann::json::array();
    js["stderr"] = nlohmann::json::array();
    js["count"] = nlohmann::json::array();
    for (const auto& r : series.records) {
        js["n"].push_back(r.n);
        js["mean"].push_back(r.mean);
        js["stderr"].push_back(r.stderr_);
        js["count"].push_back(r.count);
    }
    out["series"] = js;

    auto fit_to_json = [](const ExponentFit& f) {
        nlohmann::json jf;
        jf["slope"] = f.slope;
        jf["intercept"] = f.intercept;
        jf["ci_low"] = f.ci_low;
        jf["ci_high"] = f.ci_high;
        jf["r_squared"] = f.r_squared;
        return jf;
    };

    bool fittable = c.kind != ExperimentKind::UstCheck && c.kind != ExperimentKind::Tails &&
                    series.size() >= 4 && series.records.back().n >= 4.0 * series.records.front().n;
    if (fittable) {
        bool positives = true;
        for (const auto& r : series.records) positives = positives && r.mean > 0.0;
        if (positives) {
            RngStream boot(c.seed, fnv1a64("bootstrap", 9));
            out["fit"] = fit_to_json(fit_exponent_raw(c.radii, raw_per_n, boot));
            if (series.size() >= 5) {
                std::vector<double> grid2(c.radii.begin() + 1, c.radii.end());
                std::vector<std::vector<double>> raw2(raw_per_n.begin() + 1, raw_per_n.end());
                RngStream boot2(c.seed, fnv1a64("bootstrap2", 10));
                out["fit_drop_smallest"] = fit_to_json(fit_exponent_raw(grid2, raw2, boot2));
            }
        }
    }

    if (c.kind == ExperimentKind::Pieces) {
        out["shortfall_rate"] = shortfall;
        nlohmann::json jm;
        jm["n"] = c.radii;
        jm["median"] = medians;
        out["median_series"] = jm;
        bool positives = true;
        for (double m : medians) positives = positives && m > 0.0;
        if (positives && medians.size() >= 4) {
            EstimateSeries med;
            for (std::size_t i = 0; i < medians.size(); ++i)
                med.push(EstimateRecord{c.radii[i], medians[i], 0.0, 1});
            RngStream boot(c.seed, fnv1a64("bootstrap-median", 16));
            out["median_fit"] = fit_to_json(fit_exponent(med, boot));
        }
    }

    if (c.kind == ExperimentKind::UstCheck) {
        FiniteGraph g = named_graph(c.graph);
        std::int64_t tree_count = spanning_tree_count(g);
        std::map<double, std::int64_t> counts;
        std::int64_t total = 0;
        for (const CellData& cd : data)
            for (auto& [idx, v] : cd.rows) {
                ++counts[v];
                ++total;
            }
        double expect = double(total) / double(tree_count);
        double stat = 0.0;
        for (auto& [key, cnt] : counts) stat += (double(cnt) - expect) * (double(cnt) - expect) / expect;
        // trees never sampled still contribute their expected count
        stat += double(tree_count - std::int64_t(counts.size())) * expect;
        nlohmann::json jc;
        jc["tree_count"] = tree_count;
        jc["observed_distinct"] = std::int64_t(counts.size());
        jc["stat"] = stat;
        jc["dof"] = tree_count - 1;
        jc["p"] = chi_square_pvalue(stat, int(tree_count - 1));
        out["chi_square"] = jc;
    }

    if (c.kind == ExperimentKind::Tails) {
        std::vector<double> all;
        for (std::size_t i = 0; i < raw_per_n.size(); ++i)
            for (double v : raw_per_n[i]) all.push_back(v);
        if (all.size() >= 1000) {
            TailHistogram h = tail_profile(all, c.thresholds);
            nlohmann::json jt;
            jt["mean"] = h.mean;
            jt["thresholds"] = h.thresholds;
            jt["upper_tail"] = h.upper_tail;
            jt["lower_tail"] = h.lower_tail;
            jt["upper_counts"] = h.upper_counts;
            out["tails"] = jt;
        }
    }
    return out;
}

inline void finalize(RunState& st) {
    std::vector<CellData> data = read_cell_rows(st);
    std::string csv = "experiment,kind,n,chain,idx,value\n";
    for (const CellData& cd : data) {
        std::ifstream in(st.cell_path(cd.status->cell.index), std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        csv += ss.str();
    }
    detail::atomic_write(st.results_path(), csv);
    detail::atomic_write(st.summary_path(), summarize(st, data).dump(2) + "\n");
}

// Runs all pending cells with `workers` threads (worker count is execution
// parallelism only; outputs are merged in cell order and do not depend on
// it), then finalizes.
inline void run_pending(RunState& st, int workers = 1) {
    std::string created = detail::now_iso8601();
    std::vector<int> pending;
    for (std::size_t i = 0; i < st.cells.size(); ++i)
        if (!st.cells[i].done || !std::filesystem::exists(st.cell_path(st.cells[i].cell.index)))
            pending.push_back(int(i));

    std::mutex mu;
    std::atomic<std::size_t> next{0};
    std::exception_ptr fail;
    auto worker = [&]() {
        while (true) {
            std::size_t k = next.fetch_add(1);
            if (k >= pending.size()) return;
            CellStatus& cs = st.cells[std::size_t(pending[k])];
            try {
                execute_cell(st, cs);
                std::lock_guard<std::mutex> lk(mu);
                detail::atomic_write(st.manifest_path(),
                                     manifest_json(st, created).dump(2) + "\n");
            } catch (...) {
                std::lock_guard<std::mutex> lk(mu);
                if (!fail) fail = std::current_exception();
                return;
            }
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (fail) std::rethrow_exception(fail);
    finalize(st);
}

inline RunState run_experiment(const ExperimentConfig& config, int workers = 1) {
    if (config.out_dir.empty()) throw ConfigInvalid("run_experiment: out_dir not set");
    RunState st = init_run(config);
    run_pending(st, workers);
    return st;
}

inline RunState resume_experiment(const std::filesystem::path& manifest_path, int workers = 1) {
    RunState st = load_manifest(manifest_path);
    run_pending(st, workers);
    return st;
}

}  // namespace lerwlab
