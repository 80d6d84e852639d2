#include <gtest/gtest.h>

#include <cmath>

#include "lumpnn/bench.hpp"
#include "lumpnn/quotient.hpp"
#include "test_util.hpp"

using namespace lumpnn;

TEST(Gen, ProportionalPlantingIsRecorded) {
    PlantSpec spec;
    spec.widths = {4, 10, 3};
    spec.count = 4;
    spec.seed = 3;
    auto p = gen_planted(spec);
    ASSERT_EQ(p.truth.duplicates.size(), 4u);
    const Layer& L = p.net.layer(1);
    for (const auto& d : p.truth.duplicates) {
        EXPECT_GE(d.scale, 0.1);
        EXPECT_LE(d.scale, 10.0);
        for (std::size_t i = 0; i < L.in_width(); ++i) EXPECT_EQ(L.weights(i, d.neuron), d.scale * L.weights(i, d.source));
        EXPECT_EQ(L.bias[d.neuron], d.scale * L.bias[d.source]);
        for (const auto& o : p.truth.duplicates) EXPECT_NE(d.source, o.neuron);
    }
}

TEST(Gen, ComboPlantsFollowFixedNeurons) {
    PlantSpec spec;
    spec.widths = {4, 10, 3};
    spec.kind = PlantKind::combo;
    spec.donors = 3;
    spec.count = 4;
    spec.seed = 3;
    auto p = gen_planted(spec);
    ASSERT_EQ(p.truth.combos.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& e = p.truth.combos[i];
        EXPECT_EQ(e.eliminated, 6 + i);
        ASSERT_EQ(e.donors.size(), 3u);
        for (const auto& d : e.donors) {
            EXPECT_LT(d.neuron, 6u);
            EXPECT_GE(d.coefficient, 0.1);
            EXPECT_LE(d.coefficient, 1.0);
        }
    }
}

TEST(Gen, SeedDeterminesNetwork) {
    PlantSpec spec;
    spec.widths = {4, 10, 3};
    spec.count = 2;
    spec.seed = 9;
    EXPECT_EQ(gen_planted(spec).net, gen_planted(spec).net);
    auto other = spec;
    other.seed = 10;
    EXPECT_NE(gen_planted(spec).net, gen_planted(other).net);
    // planting does not disturb the base weights of untouched layers
    auto none = spec;
    none.count = 0;
    EXPECT_EQ(gen_planted(spec).net.layer(2), gen_planted(none).net.layer(2));
}

TEST(Gen, IntegerGrid) {
    PlantSpec spec;
    spec.widths = {3, 8, 2};
    spec.count = 3;
    spec.integer_grid = true;
    spec.seed = 1;
    auto p = gen_planted(spec);
    for (double w : p.net.layer(2).weights.values()) EXPECT_EQ(w, std::round(w));
    for (const auto& d : p.truth.duplicates) EXPECT_EQ(d.scale, std::round(d.scale));
}

TEST(Gen, RejectsBadSpecs) {
    PlantSpec spec;
    spec.widths = {3, 4, 2};
    spec.count = 4;
    EXPECT_THROW(gen_planted(spec), Error);
    spec.count = 1;
    spec.layer = 2;
    EXPECT_THROW(gen_planted(spec), Error);
    spec.layer = 1;
    spec.kind = PlantKind::combo;
    spec.donors = 4;
    EXPECT_THROW(gen_planted(spec), Error);
    spec.donors = 1;
    EXPECT_THROW(gen_planted(spec), Error);
    spec.kind = PlantKind::proportional;
    spec.scale_lo = -1;
    EXPECT_THROW(gen_planted(spec), Error);
}

TEST(Gen, GroundTruthEliminationsAreSorted) {
    PlantSpec spec;
    spec.widths = {4, 12, 3};
    spec.count = 5;
    spec.seed = 4;
    auto e = gen_planted(spec).truth.eliminations();
    ASSERT_EQ(e.size(), 5u);
    for (std::size_t i = 1; i < e.size(); ++i) EXPECT_LT(e[i - 1].eliminated, e[i].eliminated);
}

TEST(Agreement, IdenticalNetworks) {
    Rng rng(2);
    auto net = fixtures::random_network(rng, {4, 6, 3});
    auto m = agreement(net, net, 300, 5);
    EXPECT_EQ(m.agreement, 1.0);
    EXPECT_EQ(m.max_deviation, 0.0);
    EXPECT_EQ(m.samples, 300u);
}

TEST(Agreement, ArgmaxTiesGoLow) {
    EXPECT_EQ(argmax({1, 3, 3}), 1u);
    EXPECT_EQ(argmax({0, 0}), 0u);
}

TEST(Agreement, ShapeMismatch) {
    Rng rng(2);
    auto a = fixtures::random_network(rng, {4, 6, 3});
    auto b = fixtures::random_network(rng, {4, 6, 2});
    EXPECT_THROW(agreement(a, b, 10, 1), ShapeError);
}

TEST(Fig3, SmallRunTrend) {
    Fig3Config cfg;
    cfg.widths = {8, 32, 5};
    cfg.ks = {1, 2, 4};
    cfg.fractions = {0.0, 0.5};
    cfg.seeds = 4;
    cfg.samples = 300;
    auto rows = fig3_experiment(cfg);
    EXPECT_EQ(rows.size(), 3u * 2 * 4);
    auto mean = mean_agreement(rows);
    EXPECT_EQ(mean.at({2, 0.0}), 1.0);
    EXPECT_EQ(mean.at({1, 0.5}), 1.0);
    EXPECT_LE(mean.at({4, 0.5}), mean.at({2, 0.5}));
    EXPECT_LT(mean.at({4, 0.5}), 1.0);
    for (const auto& r : rows)
        if (r.k == 1) EXPECT_LE(r.max_deviation, 1e-9);
}

TEST(Fig3, CsvIsStable) {
    Fig3Config cfg;
    cfg.widths = {4, 12, 3};
    cfg.ks = {2};
    cfg.fractions = {0.25};
    cfg.seeds = 2;
    cfg.samples = 50;
    auto a = fig3_csv(fig3_experiment(cfg));
    EXPECT_EQ(a, fig3_csv(fig3_experiment(cfg)));
    EXPECT_EQ(a.substr(0, a.find('\n')), "k,fraction,seed,agreement,max_deviation");
    EXPECT_EQ(plain_decimal(0.25), "0.25");
    EXPECT_EQ(plain_decimal(1.0), "1");
}

TEST(Fig3, RejectsBadConfig) {
    Fig3Config cfg;
    cfg.fractions = {1.0};
    EXPECT_THROW(fig3_experiment(cfg), Error);
    cfg.fractions = {0.1};
    cfg.ks = {0};
    EXPECT_THROW(fig3_experiment(cfg), Error);
}
