// Command-line front end: generate datasets, build indexes, run queries,
// and drive benchmark scenarios.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "coconut/coconut.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct BuildArgs {
    std::string raw, index, report;
    std::string type = "tree";
    bool materialize = false;
    coconut::EngineConfig cfg;
    std::string temp_dir;
};

struct QueryArgs {
    std::string index, raw, queries, output;
    std::string mode = "exact";
    std::uint64_t radius = 1;
    unsigned workers = 1;
    bool oracle = false;
};

json report_to_json(const coconut::BuildReport& r) {
    return json{
        {"records", r.record_count},
        {"leaves", r.leaf_count},
        {"internal_nodes", r.internal_count},
        {"depth", r.depth},
        {"mean_leaf_utilization", r.mean_leaf_utilization},
        {"mean_leaf_utilization_excluding_last", r.mean_leaf_utilization_full},
        {"sort_runs", r.runs_created},
        {"merge_levels", r.merge_levels},
        {"index_bytes", r.index_file_size},
        {"wall_ms", r.wall_ms},
        {"io",
         {{"raw_bytes_read", r.raw_io.bytes_read},
          {"sort_bytes_read", r.sort_io.bytes_read},
          {"sort_bytes_written", r.sort_io.bytes_written},
          {"index_bytes_written", r.index_io.bytes_written}}},
    };
}

int run_gen(const std::string& output, std::uint64_t count, std::size_t length,
            std::uint64_t seed) {
    coconut::generate_random_walks(output, count, length, seed);
    std::cout << json{{"path", output}, {"series", count}, {"length", length}, {"seed", seed}}
                     .dump(2)
              << "\n";
    return 0;
}

int run_build(const BuildArgs& a) {
    coconut::BuildOptions opt;
    opt.config = a.cfg;
    opt.node_type = a.type == "trie" ? coconut::NodeType::trie : coconut::NodeType::tree;
    opt.materialize = a.materialize;
    if (!a.temp_dir.empty()) opt.temp_dir = a.temp_dir;
    coconut::BuildReport rep = coconut::build_index(a.raw, a.index, opt);
    json j = report_to_json(rep);
    j["index"] = a.index;
    j["type"] = a.type;
    j["materialized"] = a.materialize;
    if (!a.report.empty()) {
        std::ofstream out(a.report);
        out << j.dump(2) << "\n";
    }
    std::cout << j.dump(2) << "\n";
    return 0;
}

int run_query(const QueryArgs& a) {
    coconut::IndexReader idx(a.index);
    const coconut::EngineConfig cfg = idx.header().config();
    const bool needs_raw = !idx.header().materialized || a.oracle;
    if (needs_raw && a.raw.empty())
        throw coconut::ConfigError(
            idx.header().materialized
                ? "--oracle needs --raw to scan against"
                : "this index stores no series payloads; pass --raw");
    if (!a.raw.empty()) idx.attach_raw(a.raw);
    std::optional<coconut::RawDataset> oracle_data;
    if (a.oracle) oracle_data.emplace(a.raw, cfg.series_len);

    coconut::RawDataset queries(a.queries, cfg.series_len);
    if (queries.count() == 0) throw coconut::ConfigError("query file holds no series");

    std::ostream* out = &std::cout;
    std::ofstream file_out;
    if (!a.output.empty()) {
        file_out.open(a.output);
        if (!file_out) throw coconut::IoError("cannot write '" + a.output + "'");
        out = &file_out;
    }

    *out << "query,mode,offset,distance,leaves_visited,series_fetched,summaries_scanned,"
            "records_pruned,wall_ms";
    if (a.oracle) *out << ",oracle_offset,oracle_distance,rel_error";
    *out << "\n";

    double dist_sum = 0, ms_sum = 0;
    std::uint64_t fetched_sum = 0, pruned_sum = 0;
    double worst_rel = 0;
    for (std::uint64_t q = 0; q < queries.count(); ++q) {
        coconut::DataSeries series = queries.read_series(q);
        coconut::QueryResult res =
            a.mode == "approx"
                ? coconut::approx_search(idx, series, a.radius)
                : coconut::exact_search(idx, series, {a.radius, a.workers});
        dist_sum += res.distance;
        ms_sum += res.counters.wall_ms;
        fetched_sum += res.counters.series_fetched;
        pruned_sum += res.counters.records_pruned;
        *out << q << ',' << a.mode << ',' << res.offset << ',' << res.distance << ','
             << res.counters.leaves_visited << ',' << res.counters.series_fetched << ','
             << res.counters.summaries_scanned << ',' << res.counters.records_pruned << ','
             << res.counters.wall_ms;
        if (a.oracle) {
            coconut::QueryResult truth = coconut::brute_force_nn(*oracle_data, series);
            double rel = truth.distance == 0
                             ? (res.distance == 0 ? 0 : 1)
                             : (res.distance - truth.distance) / truth.distance;
            worst_rel = std::max(worst_rel, std::abs(rel));
            *out << ',' << truth.offset << ',' << truth.distance << ',' << rel;
        }
        *out << "\n";
    }
    const double nq = double(queries.count());
    *out << "mean," << a.mode << ",," << dist_sum / nq << ",,"
         << double(fetched_sum) / nq << ",," << double(pruned_sum) / nq << ','
         << ms_sum / nq;
    if (a.oracle) *out << ",,," << worst_rel;
    *out << "\n";
    return 0;
}

int run_info(const std::string& index) {
    coconut::IndexReader idx(index);
    const coconut::IndexHeader& h = idx.header();
    json j{
        {"type", h.node_type == coconut::NodeType::tree ? "tree" : "trie"},
        {"materialized", h.materialized},
        {"series_length", h.series_len},
        {"segments", h.segment_count},
        {"bits_per_segment", h.bits_per_segment},
        {"leaf_capacity", h.leaf_capacity},
        {"fill_factor", h.fill_factor},
        {"records", h.record_count},
        {"leaves", h.leaf_count},
        {"internal_nodes", h.internal_count},
        {"depth", h.depth},
        {"file_bytes", h.file_size},
    };
    std::cout << j.dump(2) << "\n";
    return 0;
}

int run_bench(const std::string& scenario_path, const std::string& output_path) {
    std::ifstream in(scenario_path);
    if (!in) throw coconut::IoError("cannot read scenario '" + scenario_path + "'");
    json scenario = json::parse(in);

    const fs::path workdir = scenario.value("workdir", std::string("bench-work"));
    fs::create_directories(workdir);

    coconut::EngineConfig cfg;
    if (scenario.contains("config")) {
        const json& c = scenario["config"];
        cfg.series_len = c.value("length", cfg.series_len);
        cfg.segment_count = c.value("segments", cfg.segment_count);
        cfg.bits_per_segment = c.value("bits", cfg.bits_per_segment);
        cfg.leaf_capacity = c.value("leaf_capacity", cfg.leaf_capacity);
        cfg.fill_factor = c.value("fill_factor", cfg.fill_factor);
        cfg.memory_budget = c.value("memory_budget", cfg.memory_budget);
    }
    cfg.validate();

    // Dataset and query set: given paths, or generated into the workdir.
    const json& ds = scenario.at("dataset");
    fs::path raw_path = ds.contains("path") ? fs::path(ds["path"].get<std::string>())
                                            : workdir / "data.bin";
    if (!ds.contains("path"))
        coconut::generate_random_walks(raw_path, ds.value("count", std::uint64_t{10000}),
                                       cfg.series_len, ds.value("seed", std::uint64_t{1}));
    const json& qs = scenario.at("queries");
    fs::path query_path = qs.contains("path") ? fs::path(qs["path"].get<std::string>())
                                              : workdir / "queries.bin";
    if (!qs.contains("path"))
        coconut::generate_random_walks(query_path, qs.value("count", std::uint64_t{100}),
                                       cfg.series_len, qs.value("seed", std::uint64_t{2}));

    json results{{"dataset", raw_path.string()}, {"queries", query_path.string()},
                 {"cases", json::array()}};
    for (const json& c : scenario.at("cases")) {
        json entry{{"name", c.value("name", std::string("case"))}};
        try {
            coconut::BuildOptions opt;
            opt.config = cfg;
            opt.node_type = c.value("type", std::string("tree")) == "trie"
                                ? coconut::NodeType::trie
                                : coconut::NodeType::tree;
            opt.materialize = c.value("materialize", false);
            fs::path index_path = workdir / (entry["name"].get<std::string>() + ".idx");
            entry["build"] = report_to_json(coconut::build_index(raw_path, index_path, opt));

            coconut::IndexReader idx(index_path);
            if (!opt.materialize) idx.attach_raw(raw_path);
            coconut::RawDataset queries(query_path, cfg.series_len);
            const std::string mode = c.value("mode", std::string("exact"));
            const std::uint64_t radius = c.value("radius", std::uint64_t{1});
            const unsigned workers = c.value("workers", 1u);
            double dist_sum = 0, ms_sum = 0;
            std::uint64_t fetched = 0;
            for (std::uint64_t q = 0; q < queries.count(); ++q) {
                coconut::DataSeries series = queries.read_series(q);
                coconut::QueryResult res = mode == "approx"
                                               ? coconut::approx_search(idx, series, radius)
                                               : coconut::exact_search(idx, series,
                                                                       {radius, workers});
                dist_sum += res.distance;
                ms_sum += res.counters.wall_ms;
                fetched += res.counters.series_fetched;
            }
            entry["query"] = json{{"mode", mode},
                                  {"radius", radius},
                                  {"mean_distance", dist_sum / double(queries.count())},
                                  {"mean_wall_ms", ms_sum / double(queries.count())},
                                  {"series_fetched", fetched}};
            entry["status"] = "ok";
        } catch (const std::exception& e) {
            entry["status"] = "error";
            entry["message"] = e.what();
        }
        results["cases"].push_back(std::move(entry));
    }

    if (!output_path.empty()) {
        std::ofstream out(output_path);
        if (!out) throw coconut::IoError("cannot write '" + output_path + "'");
        out << results.dump(2) << "\n";
    }
    std::cout << results.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sortable-summarization series index"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a random-walk dataset");
    std::string gen_output;
    std::uint64_t gen_count = 0, gen_seed = 1;
    std::size_t gen_length = 256;
    gen->add_option("--output", gen_output, "Output raw file")->required();
    gen->add_option("--count", gen_count, "Number of series")->required();
    gen->add_option("--length", gen_length, "Points per series");
    gen->add_option("--seed", gen_seed, "RNG seed");

    // build
    auto* build = app.add_subcommand("build", "Build an index from a raw file");
    BuildArgs b;
    build->add_option("--raw", b.raw, "Input raw file")->required();
    build->add_option("--index", b.index, "Output index file")->required();
    build->add_option("--type", b.type, "Node structure: tree or trie")
        ->check(CLI::IsMember({"tree", "trie"}));
    build->add_flag("--materialize", b.materialize, "Store series payloads in leaves");
    build->add_option("--length", b.cfg.series_len, "Points per series");
    build->add_option("--segments", b.cfg.segment_count, "Summary segments");
    build->add_option("--bits", b.cfg.bits_per_segment, "Bits per segment");
    build->add_option("--leaf-capacity", b.cfg.leaf_capacity, "Records per leaf");
    build->add_option("--fill-factor", b.cfg.fill_factor, "Leaf fill factor");
    build->add_option("--memory-budget", b.cfg.memory_budget, "Sort memory budget, bytes");
    build->add_option("--temp-dir", b.temp_dir, "Directory for sort runs");
    build->add_option("--report", b.report, "Write the build report JSON here");

    // query
    auto* query = app.add_subcommand("query", "Run nearest-neighbor queries");
    QueryArgs q;
    query->add_option("--index", q.index, "Index file")->required();
    query->add_option("--raw", q.raw, "Raw file the index was built from");
    query->add_option("--queries", q.queries, "Raw file of query series")->required();
    query->add_option("--mode", q.mode, "approx or exact")
        ->check(CLI::IsMember({"approx", "exact"}));
    query->add_option("--radius", q.radius, "Leaf radius (approx / exact seed)");
    query->add_option("--workers", q.workers, "Threads for bound computation");
    query->add_option("--output", q.output, "Write CSV here instead of stdout");
    query->add_flag("--oracle", q.oracle, "Also run the brute-force scan and compare");

    // info
    auto* info = app.add_subcommand("info", "Print an index file's header");
    std::string info_index;
    info->add_option("--index", info_index, "Index file")->required();

    // bench
    auto* bench = app.add_subcommand("bench", "Run a benchmark scenario");
    std::string bench_scenario, bench_output;
    bench->add_option("--scenario", bench_scenario, "Scenario JSON")->required();
    bench->add_option("--output", bench_output, "Write results JSON here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) return run_gen(gen_output, gen_count, gen_length, gen_seed);
        if (build->parsed()) return run_build(b);
        if (query->parsed()) return run_query(q);
        if (info->parsed()) return run_info(info_index);
        if (bench->parsed()) return run_bench(bench_scenario, bench_output);
    } catch (const coconut::FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const coconut::IntegrityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
