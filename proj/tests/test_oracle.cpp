#include <catch_amalgamated.hpp>

#include <cstdio>

#include "hlsh/io.hpp"
#include "hlsh/oracle.hpp"
#include "hlsh/query.hpp"
#include "helpers.hpp"

using namespace hlsh;

TEST_CASE("brute force: radius extremes and self-equality") {
    SyntheticSpec spec;
    spec.n = 300;
    spec.d = 4;
    spec.metric = Metric::L2;
    spec.seed = 31;
    auto data = generate_synthetic(spec).data;

    auto far = Point::make_dense(0, {99.0, 99.0, 99.0, 99.0});
    CHECK(oracle::brute_force_rnn(data, far.ref(), 1e-9).empty());
    CHECK(oracle::brute_force_rnn(data, far.ref(), 1e9).size() == data.size());

    auto self = data.copy_point(7, 1000);
    auto res = oracle::brute_force_rnn(data, self.ref(), 0.0);
    REQUIRE(res.size() >= 1);
    CHECK(res[0].first == 7);
    CHECK(res[0].second == 0.0);
}

TEST_CASE("exact_candidate_stats degenerate cases") {
    Dataset one = Dataset::from_dense(4, Metric::L2, {0.5, 0.5, 0.5, 0.5});
    IndexParams params;
    params.r = 0.5;
    params.L = 7;
    params.k = 2;
    params.family.kind = FamilyKind::PStableL2;
    params.family.d = 4;
    params.family.w = 1.0;
    params.family.rng_seed = 5;
    params.sketch.m = 32;
    params.sketch.hash_seed = 6;
    auto index = build_index(one, params);

    auto [c1, d1] = oracle::exact_candidate_stats(index, one[0]);
    CHECK(c1 == params.L);
    CHECK(d1 == 1);

    auto far = Point::make_dense(0, {1e8, 1e8, 1e8, 1e8});
    auto [c0, d0] = oracle::exact_candidate_stats(index, far.ref());
    CHECK(c0 == 0);
    CHECK(d0 == 0);
}

TEST_CASE("recall conventions") {
    std::vector<std::pair<PointId, double>> truth{{1, 0.1}, {2, 0.2}, {3, 0.3}};
    std::vector<std::pair<PointId, double>> all = truth;
    std::vector<std::pair<PointId, double>> none;
    std::vector<std::pair<PointId, double>> half{{1, 0.1}, {9, 0.05}};

    CHECK(oracle::recall(all, truth) == 1.0);
    CHECK(oracle::recall(none, truth) == 0.0);
    CHECK(oracle::recall(half, truth) == Catch::Approx(1.0 / 3.0));
    CHECK(oracle::recall(none, none) == 1.0);  // empty truth counts as success
    CHECK(oracle::recall(all, none) == 1.0);
}

TEST_CASE("linear_search and brute_force_rnn agree on randomized inputs") {
    SplitMix64 rng(37);
    for (Metric metric : {Metric::L2, Metric::L1, Metric::Cosine, Metric::Hamming}) {
        SyntheticSpec spec;
        spec.n = 200;
        spec.d = metric == Metric::Hamming ? 64 : 6;
        spec.metric = metric;
        spec.clusters = {{1.0, 100, metric == Metric::Hamming ? 0.05 : 0.05}};
        spec.seed = 41 + static_cast<std::uint64_t>(metric);
        auto data = generate_synthetic(spec).data;

        for (int t = 0; t < 50; t++) {
            auto q = data.copy_point(rng.next_below(data.size()), 5000 + t);
            double r;
            if (metric == Metric::Hamming) r = static_cast<double>(rng.next_below(30));
            else if (metric == Metric::Cosine) r = rng.next_double() * 0.5;
            else r = rng.next_double() * 2.0;

            auto a = linear_search(data, q.ref(), r);
            auto b = oracle::brute_force_rnn(data, q.ref(), r);
            REQUIRE(a.size() == b.size());
            for (std::size_t i = 0; i < a.size(); i++) CHECK(a[i].first == b[i].first);
        }
    }
}

TEST_CASE("ground truth cache round trip and key mismatch") {
    SyntheticSpec spec;
    spec.n = 150;
    spec.d = 4;
    spec.metric = Metric::L2;
    spec.seed = 47;
    auto data = generate_synthetic(spec).data;

    oracle::GroundTruth gt;
    gt.dataset_hash = data.content_hash();
    gt.metric = Metric::L2;
    gt.r = 0.7;
    for (int i = 0; i < 5; i++) {
        auto q = data.copy_point(static_cast<std::size_t>(i), 900 + i);
        gt.answers.push_back(oracle::brute_force_rnn(data, q.ref(), gt.r));
    }

    char name[] = "/tmp/hlsh_gt_XXXXXX";
    int fd = mkstemp(name);
    REQUIRE(fd >= 0);
    close(fd);
    oracle::save_ground_truth(gt, name);

    oracle::GroundTruth back;
    REQUIRE(oracle::load_ground_truth(name, gt.dataset_hash, Metric::L2, 0.7, back));
    REQUIRE(back.answers.size() == gt.answers.size());
    for (std::size_t i = 0; i < back.answers.size(); i++) {
        CHECK(back.answers[i] == gt.answers[i]);
    }

    // Key mismatches are clean misses, not errors.
    CHECK(!oracle::load_ground_truth(name, gt.dataset_hash + 1, Metric::L2, 0.7, back));
    CHECK(!oracle::load_ground_truth(name, gt.dataset_hash, Metric::L1, 0.7, back));
    CHECK(!oracle::load_ground_truth(name, gt.dataset_hash, Metric::L2, 0.8, back));
    std::remove(name);
}
