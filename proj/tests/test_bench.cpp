#include <catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hlsh/bench.hpp"
#include "helpers.hpp"

using namespace hlsh;
using namespace hlsh::bench;

namespace {

const char* kSmallConfig =
    "# mixed-density smoke config\n"
    "synthetic = true\n"
    "n = 2000\n"
    "d = 8\n"
    "metric = l2\n"
    "clusters = 1.0:800:0.02\n"
    "radii = 0.2,0.4\n"
    "L = 10\n"
    "m = 128\n"
    "delta = 0.1\n"
    "queries = 25\n"
    "repetitions = 2\n"
    "seed = 7\n"
    "cost = preset\n";

struct TempPath {
    std::string path;
    explicit TempPath(const char* tmpl = "/tmp/hlsh_bench_XXXXXX") {
        char name[64];
        std::snprintf(name, sizeof(name), "%s", tmpl);
        int fd = mkstemp(name);
        REQUIRE(fd >= 0);
        close(fd);
        path = name;
    }
    ~TempPath() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("config parsing: keys, defaults, comments, errors") {
    auto cfg = parse_config_text(kSmallConfig);
    CHECK(cfg.synthetic);
    CHECK(cfg.n == 2000);
    CHECK(cfg.d == 8);
    CHECK(cfg.metric == Metric::L2);
    REQUIRE(cfg.clusters.size() == 1);
    CHECK(cfg.clusters[0].size == 800);
    CHECK(cfg.radii == std::vector<double>{0.2, 0.4});
    CHECK(cfg.threshold() == 128);       // defaults to m
    CHECK(cfg.width_for(0.2) == Catch::Approx(0.4));  // l2 preset w = 2r
    cfg.validate();

    CHECK_THROWS_AS(parse_config_text("bogus_key = 1\n"), config_error);
    CHECK_THROWS_AS(parse_config_text("radii\n"), config_error);
    CHECK_THROWS_AS(parse_config_text("L = abc\n"), config_error);
    CHECK_THROWS_AS(parse_config_text("metric = euclidean\n"), config_error);

    auto empty = parse_config_text("");
    CHECK_THROWS_AS(empty.validate(), config_error);
}

TEST_CASE("resolve_params: planner default and preset overrides") {
    auto cfg = parse_config_text(kSmallConfig);
    auto p = resolve_params(cfg, 0.4, 0, 8);
    CHECK(p.family.w == Catch::Approx(0.8));
    PlannerInput in;
    in.delta = cfg.delta;
    in.L = cfg.L;
    in.p1 = collision_prob(p.family, 0.4);
    CHECK(p.k == plan_k(in));

    cfg.k = 7;
    cfg.w_scale = 2.0;
    auto preset = resolve_params(cfg, 0.4, 0, 8);
    CHECK(preset.k == 7);
    CHECK(preset.family.w == Catch::Approx(0.8));
}

TEST_CASE("run_bench: row shape and linear-only exactness") {
    auto cfg = parse_config_text(kSmallConfig);
    auto result = run_bench(cfg, /*timed=*/false, /*want_per_query=*/true);
    REQUIRE(result.rows.size() == cfg.radii.size() * 3);

    for (const auto& row : result.rows) {
        CHECK(row.recall_mean >= 0.0);
        CHECK(row.recall_mean <= 1.0);
        if (row.mode == StrategyMode::LinearOnly) {
            CHECK(row.recall_mean == 1.0);
            CHECK(!row.collisions_mean.has_value());
        } else {
            CHECK(row.collisions_mean.has_value());
        }
        if (row.mode == StrategyMode::Hybrid) {
            REQUIRE(row.linear_call_fraction.has_value());
            CHECK(*row.linear_call_fraction >= 0.0);
            CHECK(*row.linear_call_fraction <= 1.0);
            REQUIRE(row.hll_cost_fraction.has_value());
            CHECK(*row.hll_cost_fraction >= 0.0);
            CHECK(*row.hll_cost_fraction <= 1.0);
        }
    }
    CHECK(result.per_query.size() ==
          cfg.radii.size() * 3 * cfg.queries * cfg.repetitions);
}

TEST_CASE("identical seeds give identical non-timing outputs") {
    auto cfg = parse_config_text(kSmallConfig);
    auto a = run_bench(cfg, false, true);
    auto b = run_bench(cfg, false, true);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); i++) {
        CHECK(a.rows[i].recall_mean == b.rows[i].recall_mean);
        CHECK(a.rows[i].linear_call_fraction == b.rows[i].linear_call_fraction);
        CHECK(a.rows[i].collisions_mean == b.rows[i].collisions_mean);
        CHECK(a.rows[i].cand_exact_mean == b.rows[i].cand_exact_mean);
        CHECK(a.rows[i].cand_est_mean == b.rows[i].cand_est_mean);
        CHECK(a.rows[i].hll_rel_error_mean == b.rows[i].hll_rel_error_mean);
    }
    REQUIRE(a.per_query.size() == b.per_query.size());
    for (std::size_t i = 0; i < a.per_query.size(); i++) {
        CHECK(a.per_query[i].strategy == b.per_query[i].strategy);
        CHECK(a.per_query[i].collisions == b.per_query[i].collisions);
        CHECK(a.per_query[i].cand_est == b.per_query[i].cand_est);
        CHECK(a.per_query[i].recall == b.per_query[i].recall);
    }

    auto other = cfg;
    other.seed = 8;
    auto c = run_bench(other, false, false);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.rows.size(); i++) {
        if (a.rows[i].cand_exact_mean != c.rows[i].cand_exact_mean) any_diff = true;
    }
    CHECK(any_diff);
}

TEST_CASE("bench CSV schema is stable") {
    auto cfg = parse_config_text(kSmallConfig);
    cfg.radii = {0.3};
    cfg.queries = 10;
    cfg.repetitions = 1;
    auto result = run_bench(cfg, false, true);

    std::ostringstream rows_csv;
    write_bench_csv(result.rows, rows_csv);
    std::istringstream lines(rows_csv.str());
    std::string header;
    std::getline(lines, header);
    CHECK(header ==
          "dataset,metric,r,mode,mean_query_ns,median_query_ns,recall_mean,"
          "linear_call_fraction,hll_rel_error_mean,hll_cost_fraction,collisions_mean,"
          "cand_exact_mean,cand_est_mean,seed");
    std::size_t count = 0;
    std::string line;
    while (std::getline(lines, line)) {
        if (!line.empty()) count++;
    }
    CHECK(count == result.rows.size());

    std::ostringstream detail_csv;
    write_per_query_csv(result.per_query, detail_csv);
    std::istringstream dlines(detail_csv.str());
    std::getline(dlines, header);
    CHECK(header ==
          "rep,r,mode,ordinal,query_id,strategy,collisions,cand_est,cand_exact,"
          "neighbors,recall,hash_ns,estimate_ns,search_ns,total_ns,dist_comps");
}

TEST_CASE("hll-eval rows report errors and cost fractions") {
    auto cfg = parse_config_text(kSmallConfig);
    cfg.radii = {0.4};
    auto rows = run_hll_eval(cfg);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].instances > 0);
    CHECK(rows[0].err_mean >= 0.0);
    CHECK(rows[0].err_mean < 0.5);
    CHECK(rows[0].cost_fraction >= 0.0);
    CHECK(rows[0].cost_fraction <= 1.0);
}

TEST_CASE("run_build reports space and writes a loadable index") {
    auto cfg = parse_config_text(kSmallConfig);
    cfg.radii = {0.3};
    TempPath index_path;
    auto report = run_build(cfg, index_path.path);
    CHECK(report.bucket_bytes > 0);
    CHECK(report.k >= 1);

    // Rebuilding with the same seed yields a byte-identical file.
    TempPath second;
    run_build(cfg, second.path);
    std::ifstream a(index_path.path, std::ios::binary), b(second.path, std::ios::binary);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
    CHECK(sa.str().size() > 0);

    // Space accounting: sketch bytes bounded by bucket count times payload.
    std::vector<std::int32_t> assignment;
    Dataset data = load_bench_dataset(cfg, &assignment);
    auto index = build_index(data, resolve_params(cfg, 0.3, 0, data.dim()));
    std::size_t buckets = 0;
    for (const auto& t : index.tables()) buckets += t.size();
    CHECK(report.sketch_bytes <= buckets * (cfg.m + 12));
}

TEST_CASE("ground-truth cache shortcuts repeat runs with identical results") {
    auto cfg = parse_config_text(kSmallConfig);
    cfg.radii = {0.3};
    cfg.queries = 10;
    cfg.repetitions = 1;
    char dir[] = "/tmp/hlsh_gtc_XXXXXX";
    REQUIRE(mkdtemp(dir) != nullptr);
    cfg.gt_cache = std::string(dir) + "/cache";

    auto cold = run_bench(cfg, false, false);
    int cache_files = 0;
    {
        std::string cmd = "ls " + std::string(dir) + " | wc -l";
        FILE* p = popen(cmd.c_str(), "r");
        REQUIRE(p != nullptr);
        REQUIRE(fscanf(p, "%d", &cache_files) == 1);
        pclose(p);
    }
    CHECK(cache_files == 1);

    auto warm = run_bench(cfg, false, false);
    REQUIRE(warm.rows.size() == cold.rows.size());
    for (std::size_t i = 0; i < warm.rows.size(); i++) {
        CHECK(warm.rows[i].recall_mean == cold.rows[i].recall_mean);
    }
    std::string cleanup = "rm -rf " + std::string(dir);
    REQUIRE(std::system(cleanup.c_str()) == 0);
}

TEST_CASE("all-sparse query population never calls linear search") {
    // Background-only set in higher dimension: every query has a tiny
    // candidate set, so the hybrid decision is always the LSH side.
    BenchConfig cfg;
    cfg.synthetic = true;
    cfg.n = 3000;
    cfg.d = 24;
    cfg.metric = Metric::L2;
    cfg.radii = {0.1};
    cfg.L = 10;
    cfg.queries = 20;
    cfg.repetitions = 1;
    cfg.seed = 33;
    auto result = run_bench(cfg);
    for (const auto& row : result.rows) {
        if (row.mode == StrategyMode::Hybrid) {
            CHECK(*row.linear_call_fraction == 0.0);
        }
    }
}

TEST_CASE("synthetic build writes the cluster assignment sidecar") {
    auto cfg = parse_config_text(kSmallConfig);
    cfg.radii = {0.3};
    TempPath index_path;
    std::string sidecar = index_path.path + ".clusters.csv";
    run_build(cfg, index_path.path, sidecar);
    std::ifstream in(sidecar);
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header == "id,cluster");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line)) rows += !line.empty();
    CHECK(rows == cfg.n);
    std::remove(sidecar.c_str());
}

TEST_CASE("empty dataset builds a valid tiny index") {
    TempPath csv;
    std::ofstream(csv.path) << "";  // empty dense file -> n = 0
    BenchConfig cfg;
    cfg.data_path = csv.path;
    cfg.format = Rep::Dense;
    cfg.metric = Metric::L2;
    cfg.radii = {0.5};
    cfg.L = 4;
    cfg.k = 2;
    TempPath index_path;
    auto report = run_build(cfg, index_path.path);
    CHECK(report.sketch_bytes == 0);

    auto data = load_dense(csv.path, Metric::L2);
    auto index = load_index(index_path.path, data);
    CHECK(index.tables().size() == 4);
}

TEST_CASE("CLI: subcommands, exit codes, seed override") {
    TempPath cfg_file, out_file;
    std::ofstream(cfg_file.path) << kSmallConfig;

    auto run_cli = [&](const std::string& args) {
        std::string cmd = std::string(HLSH_BENCH_BIN) + " " + args + " >/dev/null 2>&1";
        int status = std::system(cmd.c_str());
        return WEXITSTATUS(status);
    };

    CHECK(run_cli("bench --config " + cfg_file.path + " --out " + out_file.path) == 0);
    {
        std::ifstream in(out_file.path);
        std::string header;
        std::getline(in, header);
        CHECK(header.rfind("dataset,metric,r,mode", 0) == 0);
    }

    CHECK(run_cli("hll-eval --config " + cfg_file.path + " --out " + out_file.path) == 0);
    CHECK(run_cli("calibrate --config " + cfg_file.path + " --out " + out_file.path) == 0);
    {
        std::ifstream in(out_file.path);
        std::string header;
        std::getline(in, header);
        CHECK(header == "metric,alpha_ns,beta_ns,ratio");
    }

    TempPath index_out;
    CHECK(run_cli("build --config " + cfg_file.path + " --out " + index_out.path) == 0);
    std::remove((index_out.path + ".clusters.csv").c_str());

    // Config errors exit 2.
    CHECK(run_cli("bench --config /nonexistent.conf") == 2);
    TempPath bad_cfg;
    std::ofstream(bad_cfg.path) << "unknown_key = 1\n";
    CHECK(run_cli("bench --config " + bad_cfg.path) == 2);
    CHECK(run_cli("bogus-subcommand") == 2);

    // Data errors exit 3.
    TempPath data_cfg;
    std::ofstream(data_cfg.path) << "data = /nonexistent.csv\nformat = dense\nmetric = l2\nradii = 0.5\n";
    CHECK(run_cli("bench --config " + data_cfg.path) == 3);

    // --seed overrides the config seed: different query sample, different stats.
    TempPath out_a, out_b, out_c;
    REQUIRE(run_cli("bench --config " + cfg_file.path + " --out " + out_a.path + " --seed 1234") == 0);
    REQUIRE(run_cli("bench --config " + cfg_file.path + " --out " + out_b.path + " --seed 1234") == 0);
    REQUIRE(run_cli("bench --config " + cfg_file.path + " --out " + out_c.path + " --seed 999") == 0);

    auto non_timing_cols = [](const std::string& path) {
        std::ifstream in(path);
        std::string line, acc;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            std::stringstream ss(line);
            std::string cell;
            int col = 0;
            while (std::getline(ss, cell, ',')) {
                // drop timing columns (4, 5) and the timing-derived fraction (9)
                if (col != 4 && col != 5 && col != 9) acc += cell + "|";
                col++;
            }
            acc += "\n";
        }
        return acc;
    };
    CHECK(non_timing_cols(out_a.path) == non_timing_cols(out_b.path));
    CHECK(non_timing_cols(out_a.path) != non_timing_cols(out_c.path));
}
