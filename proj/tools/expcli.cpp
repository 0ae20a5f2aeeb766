// Command-line harness for the lattice Monte Carlo experiments: seeded,
// resumable runs with per-cell persistence, plus plain-text reports and
// plot-data emission.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lerwlab/experiment.hpp"
#include "lerwlab/stats.hpp"
#include "lerwlab/trace_graph.hpp"
#include "lerwlab/wilson.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string default_out_root() {
    const char* env = std::getenv("LERWLAB_OUT");
    return env && *env ? env : "lerwlab-out";
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            std::optional<int> chains, std::optional<std::string> out, int workers) {
    lerwlab::ExperimentConfig cfg = lerwlab::load_config_file(config_path);
    if (seed) cfg.seed = *seed;
    if (chains) cfg.chains = *chains;
    if (chains && *chains < 1) throw lerwlab::ConfigInvalid("--chains must be positive");
    if (out) cfg.out_dir = *out;
    if (cfg.out_dir.empty()) cfg.out_dir = (fs::path(default_out_root()) / cfg.name).string();
    lerwlab::RunState st = lerwlab::run_experiment(cfg, workers);
    std::printf("run complete: %zu cells -> %s\n", st.cells.size(), st.dir.string().c_str());
    std::printf("  results: %s\n  summary: %s\n", st.results_path().string().c_str(),
                st.summary_path().string().c_str());
    return 0;
}

int cmd_resume(const std::string& manifest_path, int workers) {
    lerwlab::RunState st = lerwlab::resume_experiment(manifest_path, workers);
    std::printf("resume complete -> %s\n", st.results_path().string().c_str());
    return 0;
}

json load_summary(const fs::path& dir) {
    fs::path p = fs::is_directory(dir) ? dir / "summary.json" : dir;
    std::ifstream in(p);
    if (!in) throw lerwlab::ResultsMissing("no summary at " + p.string());
    json j;
    in >> j;
    return j;
}

void print_summary_table(const json& s, std::FILE* f) {
    std::fprintf(f, "experiment %s (kind %s)\n", s.at("name").get<std::string>().c_str(),
                 s.at("kind").get<std::string>().c_str());
    std::fprintf(f, "%12s %16s %14s %12s\n", "n", "mean", "stderr", "count");
    const json& se = s.at("series");
    for (std::size_t i = 0; i < se.at("n").size(); ++i)
        std::fprintf(f, "%12g %16.8g %14.4g %12lld\n", se.at("n").at(i).get<double>(),
                     se.at("mean").at(i).get<double>(), se.at("stderr").at(i).get<double>(),
                     (long long)se.at("count").at(i).get<std::int64_t>());
    auto print_fit = [&](const char* label, const json& jf) {
        std::fprintf(f, "%s: slope %.5f  CI [%.5f, %.5f]  R^2 %.6f\n", label,
                     jf.at("slope").get<double>(), jf.at("ci_low").get<double>(),
                     jf.at("ci_high").get<double>(), jf.at("r_squared").get<double>());
    };
    if (s.contains("fit")) print_fit("fit", s.at("fit"));
    if (s.contains("fit_drop_smallest"))
        print_fit("fit (drop smallest octave)", s.at("fit_drop_smallest"));
    if (s.contains("median_fit")) print_fit("median fit", s.at("median_fit"));
    if (s.contains("shortfall_rate")) {
        std::fprintf(f, "shortfall rate:");
        for (auto it = s.at("shortfall_rate").begin(); it != s.at("shortfall_rate").end(); ++it)
            std::fprintf(f, "  n=%s: %.4f", it.key().c_str(), it.value().get<double>());
        std::fprintf(f, "\n");
    }
    if (s.contains("chi_square")) {
        const json& c = s.at("chi_square");
        std::fprintf(f, "chi-square: stat %.4f  dof %lld  p %.6f  (%lld trees, %lld observed)\n",
                     c.at("stat").get<double>(), (long long)c.at("dof").get<std::int64_t>(),
                     c.at("p").get<double>(), (long long)c.at("tree_count").get<std::int64_t>(),
                     (long long)c.at("observed_distinct").get<std::int64_t>());
    }
    if (s.contains("tails")) {
        const json& t = s.at("tails");
        std::fprintf(f, "tails (mean %.6g):\n", t.at("mean").get<double>());
        for (std::size_t i = 0; i < t.at("thresholds").size(); ++i)
            std::fprintf(f, "  t=%-5g upper %.6g  lower %.6g\n",
                         t.at("thresholds").at(i).get<double>(),
                         t.at("upper_tail").at(i).get<double>(),
                         t.at("lower_tail").at(i).get<double>());
    }
}

void write_plot_data(const json& s, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::string name = s.at("name").get<std::string>();
    const json& se = s.at("series");
    {
        std::ofstream f(out_dir / (name + "_series.dat"));
        f << "# n mean stderr count\n";
        for (std::size_t i = 0; i < se.at("n").size(); ++i)
            f << lerwlab::format_double(se.at("n").at(i).get<double>()) << ' '
              << lerwlab::format_double(se.at("mean").at(i).get<double>()) << ' '
              << lerwlab::format_double(se.at("stderr").at(i).get<double>()) << ' '
              << se.at("count").at(i).get<std::int64_t>() << '\n';
    }
    {
        std::ofstream f(out_dir / (name + "_loglog.dat"));
        f << "# log10(n) log10(mean)\n";
        for (std::size_t i = 0; i < se.at("n").size(); ++i) {
            double n = se.at("n").at(i).get<double>();
            double m = se.at("mean").at(i).get<double>();
            if (n > 0 && m > 0)
                f << lerwlab::format_double(std::log10(n)) << ' '
                  << lerwlab::format_double(std::log10(m)) << '\n';
        }
    }
}

int cmd_report(const std::vector<std::string>& results, const std::string& out, double band) {
    std::vector<json> summaries;
    for (const auto& r : results) summaries.push_back(load_summary(r));
    fs::path out_dir = out.empty() ? fs::path(results.front()) / "report" : fs::path(out);
    fs::create_directories(out_dir);
    std::FILE* table = std::fopen((out_dir / "table.txt").string().c_str(), "w");
    if (!table) throw std::runtime_error("cannot write report table");
    for (const json& s : summaries) {
        print_summary_table(s, stdout);
        print_summary_table(s, table);
        write_plot_data(s, out_dir);
        std::printf("\n");
        std::fprintf(table, "\n");
    }
    if (summaries.size() >= 2) {
        // band-check verdict between the first two series on their common grid
        lerwlab::EstimateSeries a, b;
        const json& sa = summaries[0].at("series");
        const json& sb = summaries[1].at("series");
        for (std::size_t i = 0; i < sa.at("n").size() && i < sb.at("n").size(); ++i) {
            if (sa.at("n").at(i).get<double>() != sb.at("n").at(i).get<double>()) break;
            a.push({sa.at("n").at(i).get<double>(), sa.at("mean").at(i).get<double>(), 0, 1});
            b.push({sb.at("n").at(i).get<double>(), sb.at("mean").at(i).get<double>(), 0, 1});
        }
        if (!a.empty()) {
            double spread = lerwlab::band_spread(a, b);
            bool ok = lerwlab::band_check(a, b, band);
            std::printf("band check (factor %.4g): ratio spread %.4f -> %s\n", band * band, spread,
                        ok ? "PASS" : "FAIL");
            std::fprintf(table, "band check (factor %.4g): ratio spread %.4f -> %s\n", band * band,
                         spread, ok ? "PASS" : "FAIL");
        }
    }
    std::fclose(table);
    std::printf("report written to %s\n", out_dir.string().c_str());
    return 0;
}

int selftest_failures = 0;

void check(bool ok, const char* what) {
    std::printf("%s %s\n", ok ? "PASS" : "FAIL", what);
    if (!ok) ++selftest_failures;
}

int cmd_selftest(std::uint64_t seed) {
    using namespace lerwlab;
    {
        RngStream a(seed, 1), b(seed, 1), c(seed, 2);
        bool same = true, diff = false;
        for (int i = 0; i < 64; ++i) {
            std::uint64_t x = a.next_u64();
            same = same && x == b.next_u64();
            diff = diff || x != c.next_u64();
        }
        check(same && diff, "rng replay and stream separation");
    }
    {
        RngStream rng(seed, 2);
        bool ok = true;
        for (int i = 0; i < 200; ++i) {
            Path<2> w = sample_srw_to_exit(origin<2>(), Ball<2>::centered(6), rng);
            Path<2> le = loop_erase(w);
            ok = ok && le.is_simple() && le.unit_steps() && le.front() == w.front() &&
                 le.back() == w.back();
        }
        check(ok, "loop erasure invariants on random walks");
    }
    {
        RngStream rng(seed, 3);
        bool ok = true;
        for (int i = 0; i < 200 && ok; ++i) {
            Path<3> w = sample_srw_to_exit(origin<3>(), Ball<3>::centered(5), rng);
            CutTimes ct = cut_times(w);
            for (std::uint32_t k : ct.indices) {
                PointSet pre(w.size());
                for (std::size_t j = 0; j <= k; ++j) pre.insert(w.packed(j), 0);
                for (std::size_t j = k + 1; j < w.size(); ++j)
                    if (pre.contains(w.packed(j))) ok = false;
            }
        }
        check(ok, "cut times split walks into disjoint halves");
    }
    {
        RngStream rng(seed, 4);
        FiniteGraph g = FiniteGraph::cycle(4);
        std::map<std::string, int> counts;
        for (int i = 0; i < 20000; ++i) ++counts[wilson_sample(g, 0, rng).key()];
        double expect = 20000.0 / 4.0, stat = 0.0;
        for (auto& [k, c] : counts) stat += (c - expect) * (c - expect) / expect;
        check(counts.size() == 4 && chi_square_pvalue(stat, 3) > 0.001,
              "wilson uniformity on the 4-cycle");
    }
    {
        Path<2> straight;
        for (int i = 0; i <= 10; ++i) straight.push_back(Point<2>{{i, 0}});
        TraceGraph<2> pg = TraceGraph<2>::build(straight);
        auto r = effective_resistance(pg, Point<2>{{0, 0}}, Point<2>{{10, 0}});
        check(std::abs(r.value - 10.0) < 1e-8, "path-graph effective resistance");
    }
    std::printf("selftest: %s\n", selftest_failures == 0 ? "all checks passed"
                                                         : "FAILURES PRESENT");
    return selftest_failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lattice Monte Carlo laboratory for loop-erased random walks"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run an experiment from a config file");
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> chains;
    std::optional<std::string> out;
    int workers = 1;
    run->add_option("--config", config_path, "experiment config (JSON)")->required();
    run->add_option("--seed", seed, "override config seed");
    run->add_option("--chains", chains, "override config chain count");
    run->add_option("--out", out, "output directory (default $LERWLAB_OUT/<name>)");
    run->add_option("--workers", workers, "worker threads (execution only)");

    auto* resume = app.add_subcommand("resume", "finish an interrupted run");
    std::string manifest_path;
    int resume_workers = 1;
    resume->add_option("--manifest", manifest_path, "path to manifest.json")->required();
    resume->add_option("--workers", resume_workers, "worker threads");

    auto* report = app.add_subcommand("report", "print tables and emit plot data");
    std::vector<std::string> results;
    std::string report_out;
    double band = std::sqrt(10.0);
    report->add_option("--results", results, "one or more result directories")->required();
    report->add_option("--out", report_out, "report output directory");
    report->add_option("--band", band, "band factor for two-series comparison");

    auto* selftest = app.add_subcommand("selftest", "quick internal consistency checks");
    std::uint64_t st_seed = 20260810;
    selftest->add_option("--seed", st_seed, "selftest seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, seed, chains, out, workers);
        if (resume->parsed()) return cmd_resume(manifest_path, resume_workers);
        if (report->parsed()) return cmd_report(results, report_out, band);
        if (selftest->parsed()) return cmd_selftest(st_seed);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
