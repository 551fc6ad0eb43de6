#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "hlsh/common.hpp"
#include "hlsh/cost.hpp"
#include "hlsh/dataset.hpp"
#include "hlsh/index.hpp"
#include "hlsh/io.hpp"
#include "hlsh/oracle.hpp"
#include "hlsh/query.hpp"

namespace hlsh {
namespace bench {

enum class StrategyMode : std::uint8_t { Hybrid = 0, LshOnly = 1, LinearOnly = 2 };

inline const char* mode_name(StrategyMode m) {
    switch (m) {
        case StrategyMode::Hybrid: return "hybrid";
        case StrategyMode::LshOnly: return "lsh-only";
        case StrategyMode::LinearOnly: return "linear-only";
    }
    return "?";
}

enum class CostMode : std::uint8_t { Preset = 0, Calibrate = 1, Explicit = 2 };

/// Everything one bench run needs; parsed from UTF-8 key=value lines.
struct BenchConfig {
    // Dataset: either a file ...
    std::string data_path;
    Rep format = Rep::Dense;
    std::uint32_t dim_override = 0;
    // ... or a synthetic spec.
    bool synthetic = false;
    std::size_t n = 0;
    std::uint32_t d = 0;
    std::vector<ClusterSpec> clusters;

    Metric metric = Metric::L2;
    std::vector<double> radii;
    std::uint32_t L = 50;
    std::uint32_t m = 128;
    double delta = 0.1;
    std::int64_t hll_threshold = -1;  // -1: default to m
    std::uint32_t k = 0;              // 0: plan_k from the family's closed form
    double w = 0.0;                   // absolute bucket width; 0: use w_scale * r
    double w_scale = 0.0;             // 0: preset (4 for l1, 2 for l2)
    std::size_t queries = 100;
    std::uint32_t repetitions = 5;
    std::uint64_t seed = 1;
    CostMode cost = CostMode::Preset;
    double alpha = 0.0;
    double beta = 0.0;
    std::string gt_cache;

    std::uint32_t threshold() const {
        return hll_threshold < 0 ? m : static_cast<std::uint32_t>(hll_threshold);
    }

    double width_for(double r) const {
        if (w > 0.0) return w;
        if (w_scale > 0.0) return w_scale * r;
        if (metric == Metric::L1) return 4.0 * r;
        if (metric == Metric::L2) return 2.0 * r;
        return 0.0;
    }

    std::string dataset_name() const { return synthetic ? "synthetic" : data_path; }

    void validate() const {
        if (!synthetic && data_path.empty()) throw config_error("config: need data=<path> or synthetic=true");
        if (synthetic && (n == 0 || d == 0)) throw config_error("config: synthetic needs n and d");
        if (radii.empty()) throw config_error("config: need a non-empty radii list");
        for (double r : radii) {
            if (!(r > 0.0)) throw config_error("config: radii must be positive");
        }
        if (repetitions < 1) throw config_error("config: repetitions must be >= 1");
        if (!(delta > 0.0) || !(delta < 1.0)) throw config_error("config: delta must be in (0,1)");
        if (cost == CostMode::Explicit && (!(alpha > 0.0) || !(beta > 0.0))) {
            throw config_error("config: explicit cost needs alpha > 0 and beta > 0");
        }
    }
};

namespace detail {

inline std::vector<ClusterSpec> parse_clusters(const std::string& text) {
    std::vector<ClusterSpec> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        ClusterSpec c;
        if (std::sscanf(item.c_str(), "%lf:%zu:%lf", &c.center_spread, &c.size, &c.scale) != 3) {
            throw config_error("config: bad cluster spec '" + item + "' (want spread:size:scale)");
        }
        out.push_back(c);
    }
    return out;
}

inline std::vector<double> parse_doubles(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw config_error("config: bad number '" + item + "'");
        }
    }
    return out;
}

}  // namespace detail

inline BenchConfig parse_config_text(const std::string& text) {
    BenchConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto strip = [](std::string s) {
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
            return s;
        };
        line = strip(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw config_error("config line " + std::to_string(line_no) + ": expected key=value");
        }
        std::string key = strip(line.substr(0, eq));
        std::string val = strip(line.substr(eq + 1));
        try {
            if (key == "data") cfg.data_path = val;
            else if (key == "format") {
                if (val == "sparse") cfg.format = Rep::Sparse;
                else if (val == "dense") cfg.format = Rep::Dense;
                else if (val == "bits") cfg.format = Rep::Bits;
                else throw config_error("unknown format " + val);
            }
            else if (key == "dim") cfg.dim_override = static_cast<std::uint32_t>(std::stoul(val));
            else if (key == "synthetic") cfg.synthetic = (val == "true" || val == "1");
            else if (key == "n") cfg.n = std::stoull(val);
            else if (key == "d") cfg.d = static_cast<std::uint32_t>(std::stoul(val));
            else if (key == "clusters") cfg.clusters = detail::parse_clusters(val);
            else if (key == "metric") cfg.metric = metric_from_name(val);
            else if (key == "radii") cfg.radii = detail::parse_doubles(val);
            else if (key == "L") cfg.L = static_cast<std::uint32_t>(std::stoul(val));
            else if (key == "m") cfg.m = static_cast<std::uint32_t>(std::stoul(val));
            else if (key == "delta") cfg.delta = std::stod(val);
            else if (key == "hll_threshold") cfg.hll_threshold = std::stoll(val);
            else if (key == "k") cfg.k = static_cast<std::uint32_t>(std::stoul(val));
            else if (key == "w") cfg.w = std::stod(val);
            else if (key == "w_scale") cfg.w_scale = std::stod(val);
            else if (key == "queries") cfg.queries = std::stoull(val);
            else if (key == "repetitions") cfg.repetitions = static_cast<std::uint32_t>(std::stoul(val));
            else if (key == "seed") cfg.seed = std::stoull(val);
            else if (key == "cost") {
                if (val == "preset") cfg.cost = CostMode::Preset;
                else if (val == "calibrate") cfg.cost = CostMode::Calibrate;
                else if (val == "explicit") cfg.cost = CostMode::Explicit;
                else throw config_error("unknown cost mode " + val);
            }
            else if (key == "alpha") cfg.alpha = std::stod(val);
            else if (key == "beta") cfg.beta = std::stod(val);
            else if (key == "gt_cache") cfg.gt_cache = val;
            else throw config_error("unknown key '" + key + "'");
        } catch (const config_error&) {
            throw;
        } catch (const std::exception&) {
            throw config_error("config line " + std::to_string(line_no) + ": bad value for " + key);
        }
    }
    return cfg;
}

inline BenchConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

/// One aggregated CSV row per (radius, strategy mode).
struct BenchRow {
    std::string dataset;
    Metric metric = Metric::L2;
    double r = 0.0;
    StrategyMode mode = StrategyMode::Hybrid;
    double mean_query_ns = 0.0;
    double median_query_ns = 0.0;  // median over repetition means
    double recall_mean = 0.0;
    std::optional<double> linear_call_fraction;  // hybrid rows only
    std::optional<double> hll_rel_error_mean;    // hybrid rows only
    std::optional<double> hll_cost_fraction;     // hybrid rows only
    std::optional<double> collisions_mean;       // lookup-based rows only
    std::optional<double> cand_exact_mean;
    std::optional<double> cand_est_mean;  // hybrid rows only
    std::uint64_t seed = 0;
};

struct PerQueryRecord {
    std::uint32_t rep = 0;
    double r = 0.0;
    StrategyMode mode = StrategyMode::Hybrid;
    std::size_t ordinal = 0;  // position in the query set
    PointId query_id = 0;
    Strategy strategy = Strategy::LinearSearch;
    std::uint64_t collisions = 0;
    double cand_est = 0.0;
    std::uint64_t cand_exact = 0;
    std::size_t neighbor_count = 0;
    double recall = 1.0;
    std::uint64_t hash_ns = 0;
    std::uint64_t estimate_ns = 0;
    std::uint64_t search_ns = 0;
    std::uint64_t dist_comps = 0;

    std::uint64_t total_ns() const { return hash_ns + estimate_ns + search_ns; }
};

struct BenchResult {
    std::vector<BenchRow> rows;
    std::vector<PerQueryRecord> per_query;
};

namespace detail {

inline double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double stddev(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mu = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t a = 0,
                              std::uint64_t b = 0) {
    return mix64(mix64(mix64(seed ^ tag) + a) + b);
}

constexpr std::uint64_t kTagData = 0xda7a;
constexpr std::uint64_t kTagQueries = 0x9e1;
constexpr std::uint64_t kTagFamily = 0xfa31;
constexpr std::uint64_t kTagSketch = 0x5e7c;

inline std::string gt_cache_path(const std::string& prefix, std::uint64_t dataset_hash, double r) {
    std::ostringstream name;
    name << prefix << "." << std::hex << dataset_hash << std::dec << "_r" << r << ".gt";
    return name.str();
}

}  // namespace detail

/// Loads or generates the configured dataset. Synthetic data uses the run
/// seed; the generated cluster assignment is returned when asked.
inline Dataset load_bench_dataset(const BenchConfig& cfg, std::vector<std::int32_t>* assignment = nullptr) {
    cfg.validate();
    if (cfg.synthetic) {
        SyntheticSpec spec;
        spec.n = cfg.n;
        spec.d = cfg.d;
        spec.metric = cfg.metric;
        spec.clusters = cfg.clusters;
        spec.seed = detail::sub_seed(cfg.seed, detail::kTagData);
        auto out = generate_synthetic(spec);
        if (assignment) *assignment = std::move(out.assignment);
        return std::move(out.data);
    }
    switch (cfg.format) {
        case Rep::Sparse: return load_sparse(cfg.data_path, cfg.metric, cfg.dim_override);
        case Rep::Dense: return load_dense(cfg.data_path, cfg.metric);
        case Rep::Bits: return load_bits(cfg.data_path);
    }
    throw config_error("config: unknown format");
}

/// Resolves IndexParams for one (radius, repetition) pair: bucket width from
/// the config rule, k from plan_k unless pinned, seeds derived from the run
/// seed so identical invocations build identical indexes.
inline IndexParams resolve_params(const BenchConfig& cfg, double r, std::uint32_t rep,
                                  std::uint32_t d) {
    IndexParams p;
    p.r = r;
    p.delta = cfg.delta;
    p.L = cfg.L;
    p.family.kind = family_for_metric(cfg.metric);
    p.family.d = d;
    p.family.w = cfg.width_for(r);
    p.family.rng_seed = detail::sub_seed(cfg.seed, detail::kTagFamily, rep, std::hash<double>{}(r));
    p.sketch.m = cfg.m;
    p.sketch.hash_seed = detail::sub_seed(cfg.seed, detail::kTagSketch, rep, std::hash<double>{}(r));
    p.hll_threshold = cfg.threshold();
    if (cfg.k > 0) {
        p.k = cfg.k;
    } else {
        PlannerInput in;
        in.delta = cfg.delta;
        in.L = cfg.L;
        in.p1 = collision_prob(p.family, r);
        p.k = plan_k(in);
    }
    return p;
}

inline CostParams resolve_costs(const BenchConfig& cfg, const Dataset& reduced,
                                const std::vector<Point>& queries) {
    switch (cfg.cost) {
        case CostMode::Preset: return preset_cost_params(cfg.metric);
        case CostMode::Explicit: {
            CostParams p;
            p.alpha = cfg.alpha;
            p.beta = cfg.beta;
            return p;
        }
        case CostMode::Calibrate: {
            // Default protocol: 10,000 data points and 100 queries. A
            // prefix subsample is fine for beta (distance timing is
            // value-independent); the dedup table is sized to the full
            // dataset, matching what queries will actually touch.
            std::size_t sample_n = std::min<std::size_t>(reduced.size(), 10000);
            std::size_t sample_q = std::min<std::size_t>(queries.size(), 100);
            std::vector<Point> qs(queries.begin(),
                                  queries.begin() + static_cast<std::ptrdiff_t>(sample_q));
            if (sample_n == reduced.size()) return calibrate(reduced, qs);
            return calibrate(reduced.prefix_copy(sample_n), qs, 5, reduced.size());
        }
    }
    throw config_error("config: unknown cost mode");
}

/// Ground truth for a query set, through the optional file cache.
inline oracle::GroundTruth ground_truth_for(const BenchConfig& cfg, const Dataset& reduced,
                                            const std::vector<Point>& queries, double r) {
    std::uint64_t dh = reduced.content_hash();
    oracle::GroundTruth gt;
    std::string cache_path;
    if (!cfg.gt_cache.empty()) {
        cache_path = detail::gt_cache_path(cfg.gt_cache, dh, r);
        if (oracle::load_ground_truth(cache_path, dh, cfg.metric, r, gt) &&
            gt.answers.size() == queries.size()) {
            return gt;
        }
    }
    gt.dataset_hash = dh;
    gt.metric = cfg.metric;
    gt.r = r;
    gt.answers.resize(queries.size());
    unsigned workers = std::min<unsigned>(std::thread::hardware_concurrency(),
                                          static_cast<unsigned>(queries.size()));
    if (workers > 1 && reduced.size() * queries.size() > 1u << 20) {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        for (unsigned wkr = 0; wkr < workers; wkr++) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < queries.size(); i = next.fetch_add(1)) {
                    gt.answers[i] = oracle::brute_force_rnn(reduced, queries[i].ref(), r);
                }
            });
        }
        for (auto& th : pool) th.join();
    } else {
        for (std::size_t i = 0; i < queries.size(); i++) {
            gt.answers[i] = oracle::brute_force_rnn(reduced, queries[i].ref(), r);
        }
    }
    if (!cache_path.empty()) oracle::save_ground_truth(gt, cache_path);
    return gt;
}

namespace detail {

struct ModeAccumulator {
    std::vector<double> totals_ns;      // per query per rep
    std::vector<double> rep_mean_ns;    // per rep
    std::vector<double> recalls;
    std::vector<double> collisions;
    std::vector<double> cand_exact;
    std::vector<double> cand_est;
    std::vector<double> hll_errors;
    std::uint64_t linear_calls = 0;
    std::uint64_t query_count = 0;
    std::uint64_t estimate_ns_sum = 0;
    std::uint64_t total_ns_sum = 0;
};

}  // namespace detail

/// Runs every strategy mode over the radii grid and repetitions.
/// With timed=true the query loops are strictly single-threaded.
inline BenchResult run_bench(const BenchConfig& cfg, bool timed = false, bool want_per_query = false) {
    cfg.validate();
    Dataset base = load_bench_dataset(cfg);
    if (cfg.queries >= base.size()) throw config_error("config: queries must be < n");

    BenchResult result;
    const StrategyMode modes[3] = {StrategyMode::Hybrid, StrategyMode::LshOnly,
                                   StrategyMode::LinearOnly};
    // (radius, mode) accumulators spanning repetitions.
    std::vector<std::vector<detail::ModeAccumulator>> acc(
        cfg.radii.size(), std::vector<detail::ModeAccumulator>(3));

    for (std::uint32_t rep = 0; rep < cfg.repetitions; rep++) {
        auto sample = sample_queries(base, cfg.queries,
                                     detail::sub_seed(cfg.seed, detail::kTagQueries, rep));
        const Dataset& reduced = sample.reduced;
        CostParams costs = resolve_costs(cfg, reduced, sample.queries);

        for (std::size_t ri = 0; ri < cfg.radii.size(); ri++) {
            double r = cfg.radii[ri];
            IndexParams params = resolve_params(cfg, r, rep, reduced.dim());
            HybridIndex index = build_index(reduced, params);
            oracle::GroundTruth gt = ground_truth_for(cfg, reduced, sample.queries, r);

            // Exact candidate stats are mode-independent; compute once.
            std::vector<std::pair<std::uint64_t, std::uint64_t>> exact_stats(sample.queries.size());
            for (std::size_t qi = 0; qi < sample.queries.size(); qi++) {
                exact_stats[qi] = oracle::exact_candidate_stats(index, sample.queries[qi].ref());
            }

            // Fault in the index and dataset before any timed pass so the
            // first mode is not measured cold.
            {
                QueryContext warm_ctx(index);
                for (std::size_t qi = 0; qi < std::min<std::size_t>(3, sample.queries.size());
                     qi++) {
                    lsh_search(index, sample.queries[qi].ref(), r, warm_ctx);
                    linear_search(reduced, sample.queries[qi].ref(), r);
                }
            }

            for (StrategyMode mode : modes) {
                auto& a = acc[ri][static_cast<std::size_t>(mode)];
                std::vector<PerQueryRecord> records(sample.queries.size());

                auto run_one = [&](std::size_t qi, QueryContext& ctx) {
                    const PointRef q = sample.queries[qi].ref();
                    PerQueryRecord rec;
                    rec.rep = rep;
                    rec.r = r;
                    rec.mode = mode;
                    rec.ordinal = qi;
                    rec.query_id = q.id;
                    std::vector<Neighbor> neighbors;
                    if (mode == StrategyMode::Hybrid) {
                        QueryReport rep_q = hybrid_query(index, q, r, costs, ctx);
                        rec.strategy = rep_q.strategy;
                        rec.collisions = rep_q.collisions;
                        rec.cand_est = rep_q.cand_size_est;
                        rec.hash_ns = rep_q.hash_ns;
                        rec.estimate_ns = rep_q.estimate_ns;
                        rec.search_ns = rep_q.search_ns;
                        rec.dist_comps = rep_q.dist_comps;
                        neighbors = std::move(rep_q.neighbors);
                    } else if (mode == StrategyMode::LshOnly) {
                        SearchStats stats;
                        std::uint64_t t0 = now_ns();
                        neighbors = lsh_search(index, q, r, ctx, &stats);
                        std::uint64_t t1 = now_ns();
                        rec.strategy = Strategy::LshSearch;
                        rec.collisions = stats.collisions;
                        rec.search_ns = t1 - t0;
                        rec.dist_comps = stats.dist_comps;
                    } else {
                        SearchStats stats;
                        std::uint64_t t0 = now_ns();
                        neighbors = linear_search(reduced, q, r, &stats);
                        std::uint64_t t1 = now_ns();
                        rec.strategy = Strategy::LinearSearch;
                        rec.search_ns = t1 - t0;
                        rec.dist_comps = stats.dist_comps;
                    }
                    rec.cand_exact = exact_stats[qi].second;
                    rec.neighbor_count = neighbors.size();
                    rec.recall = oracle::recall(neighbors, gt.answers[qi]);
                    records[qi] = rec;
                };

                unsigned workers =
                    timed ? 1
                          : std::min<unsigned>(std::thread::hardware_concurrency(),
                                               static_cast<unsigned>(sample.queries.size()));
                if (workers <= 1 || sample.queries.size() < 32) {
                    QueryContext ctx(index);
                    for (std::size_t qi = 0; qi < sample.queries.size(); qi++) run_one(qi, ctx);
                } else {
                    std::vector<std::thread> pool;
                    std::atomic<std::size_t> next{0};
                    for (unsigned wkr = 0; wkr < workers; wkr++) {
                        pool.emplace_back([&] {
                            QueryContext ctx(index);
                            for (std::size_t qi = next.fetch_add(1); qi < sample.queries.size();
                                 qi = next.fetch_add(1)) {
                                run_one(qi, ctx);
                            }
                        });
                    }
                    for (auto& th : pool) th.join();
                }

                std::vector<double> rep_totals;
                for (const auto& rec : records) {
                    double total = static_cast<double>(rec.total_ns());
                    a.totals_ns.push_back(total);
                    rep_totals.push_back(total);
                    a.recalls.push_back(rec.recall);
                    a.query_count++;
                    if (mode != StrategyMode::LinearOnly) {
                        a.collisions.push_back(static_cast<double>(rec.collisions));
                        a.cand_exact.push_back(static_cast<double>(rec.cand_exact));
                    }
                    if (mode == StrategyMode::Hybrid) {
                        a.cand_est.push_back(rec.cand_est);
                        if (rec.strategy == Strategy::LinearSearch) a.linear_calls++;
                        a.estimate_ns_sum += rec.estimate_ns;
                        a.total_ns_sum += rec.total_ns();
                        if (rec.cand_exact > 0) {
                            a.hll_errors.push_back(
                                std::abs(rec.cand_est - static_cast<double>(rec.cand_exact)) /
                                static_cast<double>(rec.cand_exact));
                        }
                    }
                    if (want_per_query) result.per_query.push_back(rec);
                }
                a.rep_mean_ns.push_back(detail::mean(rep_totals));
            }
        }
    }

    for (std::size_t ri = 0; ri < cfg.radii.size(); ri++) {
        for (StrategyMode mode : modes) {
            const auto& a = acc[ri][static_cast<std::size_t>(mode)];
            BenchRow row;
            row.dataset = cfg.dataset_name();
            row.metric = cfg.metric;
            row.r = cfg.radii[ri];
            row.mode = mode;
            row.mean_query_ns = detail::mean(a.totals_ns);
            row.median_query_ns = detail::median(a.rep_mean_ns);
            row.recall_mean = detail::mean(a.recalls);
            row.seed = cfg.seed;
            if (mode != StrategyMode::LinearOnly) {
                row.collisions_mean = detail::mean(a.collisions);
                row.cand_exact_mean = detail::mean(a.cand_exact);
            }
            if (mode == StrategyMode::Hybrid) {
                row.linear_call_fraction =
                    a.query_count ? static_cast<double>(a.linear_calls) / a.query_count : 0.0;
                row.hll_rel_error_mean =
                    a.hll_errors.empty() ? 0.0 : detail::mean(a.hll_errors);
                row.hll_cost_fraction =
                    a.total_ns_sum ? static_cast<double>(a.estimate_ns_sum) / a.total_ns_sum : 0.0;
                row.cand_est_mean = detail::mean(a.cand_est);
            }
            result.rows.push_back(std::move(row));
        }
    }
    return result;
}

/// HLL evaluation: per-query estimate error and estimation
/// cost fraction on hybrid runs.
struct HllEvalRow {
    std::string dataset;
    Metric metric = Metric::L2;
    double r = 0.0;
    std::uint32_t m = 0;
    std::size_t instances = 0;
    double err_mean = 0.0;
    double err_std = 0.0;
    double cost_fraction = 0.0;
    std::uint64_t seed = 0;
};

inline std::vector<HllEvalRow> run_hll_eval(const BenchConfig& cfg, bool timed = false,
                                            std::vector<PerQueryRecord>* per_query = nullptr) {
    BenchResult res = run_bench(cfg, timed, true);
    std::vector<HllEvalRow> rows;
    for (double r : cfg.radii) {
        HllEvalRow row;
        row.dataset = cfg.dataset_name();
        row.metric = cfg.metric;
        row.r = r;
        row.m = cfg.m;
        row.seed = cfg.seed;
        std::vector<double> errors;
        std::uint64_t est_ns = 0, total_ns = 0;
        for (const auto& rec : res.per_query) {
            if (rec.mode != StrategyMode::Hybrid || rec.r != r) continue;
            if (rec.cand_exact > 0) {
                errors.push_back(std::abs(rec.cand_est - static_cast<double>(rec.cand_exact)) /
                                 static_cast<double>(rec.cand_exact));
            }
            est_ns += rec.estimate_ns;
            total_ns += rec.total_ns();
        }
        row.instances = errors.size();
        row.err_mean = detail::mean(errors);
        row.err_std = detail::stddev(errors);
        row.cost_fraction = total_ns ? static_cast<double>(est_ns) / total_ns : 0.0;
        rows.push_back(row);
    }
    if (per_query) {
        for (auto& rec : res.per_query) {
            if (rec.mode == StrategyMode::Hybrid) per_query->push_back(rec);
        }
    }
    return rows;
}

struct BuildReport {
    std::string index_path;
    std::uint64_t build_ns = 0;
    std::uint64_t bucket_bytes = 0;
    std::uint64_t sketch_bytes = 0;
    std::uint32_t k = 0;
    double w = 0.0;
};

/// Builds and saves an index for the first configured radius.
inline BuildReport run_build(const BenchConfig& cfg, const std::string& index_path,
                             const std::string& assignment_path = "") {
    cfg.validate();
    std::vector<std::int32_t> assignment;
    Dataset data = load_bench_dataset(cfg, &assignment);
    IndexParams params = resolve_params(cfg, cfg.radii.front(), 0, data.dim());
    std::uint64_t t0 = now_ns();
    HybridIndex index = build_index(data, params);
    std::uint64_t t1 = now_ns();
    save_index(index, index_path);

    if (cfg.synthetic && !assignment_path.empty()) {
        std::ofstream out(assignment_path);
        out << "id,cluster\n";
        for (std::size_t i = 0; i < assignment.size(); i++) {
            out << i << ',' << assignment[i] << '\n';
        }
    }

    BuildReport rep;
    rep.index_path = index_path;
    rep.build_ns = t1 - t0;
    index.space_breakdown(rep.bucket_bytes, rep.sketch_bytes);
    rep.k = params.k;
    rep.w = params.family.w;
    return rep;
}

// ---- CSV output ----------------------------------------------------------

namespace detail {

inline std::string opt_cell(const std::optional<double>& v) {
    if (!v) return "";
    std::ostringstream os;
    os << *v;
    return os.str();
}

}  // namespace detail

inline void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out) {
    out << "dataset,metric,r,mode,mean_query_ns,median_query_ns,recall_mean,"
           "linear_call_fraction,hll_rel_error_mean,hll_cost_fraction,collisions_mean,"
           "cand_exact_mean,cand_est_mean,seed\n";
    for (const auto& r : rows) {
        out << r.dataset << ',' << metric_name(r.metric) << ',' << r.r << ',' << mode_name(r.mode)
            << ',' << r.mean_query_ns << ',' << r.median_query_ns << ',' << r.recall_mean << ','
            << detail::opt_cell(r.linear_call_fraction) << ','
            << detail::opt_cell(r.hll_rel_error_mean) << ','
            << detail::opt_cell(r.hll_cost_fraction) << ','
            << detail::opt_cell(r.collisions_mean) << ',' << detail::opt_cell(r.cand_exact_mean)
            << ',' << detail::opt_cell(r.cand_est_mean) << ',' << r.seed << '\n';
    }
}

inline void write_per_query_csv(const std::vector<PerQueryRecord>& records, std::ostream& out) {
    out << "rep,r,mode,ordinal,query_id,strategy,collisions,cand_est,cand_exact,"
           "neighbors,recall,hash_ns,estimate_ns,search_ns,total_ns,dist_comps\n";
    for (const auto& rec : records) {
        out << rec.rep << ',' << rec.r << ',' << mode_name(rec.mode) << ',' << rec.ordinal << ','
            << rec.query_id << ',' << strategy_name(rec.strategy) << ',' << rec.collisions << ','
            << rec.cand_est << ',' << rec.cand_exact << ',' << rec.neighbor_count << ','
            << rec.recall << ',' << rec.hash_ns << ',' << rec.estimate_ns << ',' << rec.search_ns
            << ',' << rec.total_ns() << ',' << rec.dist_comps << '\n';
    }
}

inline void write_hll_eval_csv(const std::vector<HllEvalRow>& rows, std::ostream& out) {
    out << "dataset,metric,r,m,instances,err_mean,err_std,cost_fraction,seed\n";
    for (const auto& r : rows) {
        out << r.dataset << ',' << metric_name(r.metric) << ',' << r.r << ',' << r.m << ','
            << r.instances << ',' << r.err_mean << ',' << r.err_std << ',' << r.cost_fraction
            << ',' << r.seed << '\n';
    }
}

inline void write_calibration_csv(Metric metric, const CostParams& p, std::ostream& out) {
    out << "metric,alpha_ns,beta_ns,ratio\n";
    out << metric_name(metric) << ',' << p.alpha << ',' << p.beta << ',' << p.ratio() << '\n';
}

/// calibrate driver: samples the 10k-point / 100-query protocol from the
/// configured dataset.
inline CostParams run_calibrate(const BenchConfig& cfg) {
    cfg.validate();
    Dataset base = load_bench_dataset(cfg);
    std::size_t q_count = std::min<std::size_t>(cfg.queries, std::max<std::size_t>(base.size() / 2, 1));
    auto sample = sample_queries(base, q_count, detail::sub_seed(cfg.seed, detail::kTagQueries));
    BenchConfig tmp = cfg;
    tmp.cost = CostMode::Calibrate;
    return resolve_costs(tmp, sample.reduced, sample.queries);
}

}  // namespace bench
}  // namespace hlsh
