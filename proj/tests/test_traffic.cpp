#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "metafed/rng.hpp"
#include "metafed/traffic.hpp"

using namespace metafed;

namespace {

ScenarioSpec quiet_spec(Regime r, int nodes, int intervals) {
    ScenarioSpec s;
    s.density_regime = r;
    s.incident_rate = 0.0;
    s.daily_amplitude = 0.0;
    s.node_bias_scale = 0.0;
    s.num_nodes = nodes;
    s.intervals_per_node = intervals;
    return s;
}

}  // namespace

TEST_CASE("label_rule thresholds and boundaries") {
    CHECK(label_rule(0.0, 1.0) == 0);
    CHECK(label_rule(1.0, 0.0) == 2);
    CHECK(label_rule(0.5, 0.5) == 1);  // c = 0.25

    // boundary joins the upper class
    CHECK(label_rule(0.15, 0.0) == 1);
    CHECK(label_rule(0.4, 0.0) == 2);
    CHECK(label_rule(0.15 - 1e-12, 0.0) == 0);

    CHECK_THROWS_AS(label_rule(-0.1, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(label_rule(0.5, 1.5), std::invalid_argument);
}

TEST_CASE("quiet scenario pins occupancy to the regime base") {
    const auto ds = gen_node_stream(quiet_spec(Regime::Low, 2, 50), 1, 42);
    CHECK(ds.node_id == 1);
    CHECK(ds.n_k() == 50);
    for (const auto& s : ds.samples) {
        CHECK(s.features[2] == 0.2);  // occupancy column
    }

    const auto high = gen_node_stream(quiet_spec(Regime::High, 1, 10), 0, 42);
    for (const auto& s : high.samples) CHECK(s.features[2] == 0.8);
}

TEST_CASE("node stream generation is deterministic and validated") {
    ScenarioSpec spec = quiet_spec(Regime::Moderate, 3, 40);
    spec.incident_rate = 0.2;
    spec.daily_amplitude = 0.15;
    spec.node_bias_scale = 0.1;

    const auto a = gen_node_stream(spec, 2, 7);
    const auto b = gen_node_stream(spec, 2, 7);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].features == b.samples[i].features);
        CHECK(a.samples[i].label == b.samples[i].label);
    }

    CHECK_THROWS_AS(gen_node_stream(spec, 3, 7), std::invalid_argument);
    CHECK_THROWS_AS(gen_node_stream(spec, -1, 7), std::invalid_argument);
}

TEST_CASE("sample invariants hold across regimes") {
    ScenarioSpec spec = quiet_spec(Regime::High, 2, 200);
    spec.incident_rate = 0.3;
    spec.daily_amplitude = 0.4;
    spec.node_bias_scale = 0.2;
    for (int node = 0; node < 2; ++node) {
        const auto ds = gen_node_stream(spec, node, 11);
        for (const auto& s : ds.samples) {
            CHECK(s.features.allFinite());
            for (int f = 0; f < 3; ++f) {
                CHECK(s.features[f] >= 0.0);
                CHECK(s.features[f] <= 1.0);
            }
            const double circ = s.features[3] * s.features[3] + s.features[4] * s.features[4];
            CHECK(std::abs(circ - 1.0) < 1e-9);
            CHECK(s.label >= 0);
            CHECK(s.label <= 2);
            // labels stay consistent with the rule applied to the features
            CHECK(s.label == label_rule(s.features[2], s.features[1]));
        }
    }
}

TEST_CASE("incident frequency tracks the configured rate") {
    ScenarioSpec spec = quiet_spec(Regime::Low, 1, 10000);
    spec.incident_rate = 0.1;
    const auto ds = gen_node_stream(spec, 0, 13);
    // with every other variation source off, an incident is exactly a +0.3
    // occupancy jump
    int incidents = 0;
    for (const auto& s : ds.samples) {
        if (s.features[2] == 0.5) ++incidents;
    }
    const double frac = static_cast<double>(incidents) / 10000.0;
    CHECK(frac > 0.09);
    CHECK(frac < 0.11);
}

TEST_CASE("balanced partition splits evenly") {
    // pool with known class mix: 40 of class 0, 40 of class 1, 20 of class 2
    std::vector<TrafficSample> pool;
    for (int i = 0; i < 100; ++i) {
        TrafficSample s;
        s.features = Eigen::VectorXd::Constant(kFeatureDim, i / 1000.0);
        s.label = i < 40 ? 0 : (i < 80 ? 1 : 2);
        pool.push_back(s);
    }
    const auto clients = partition_noniid(pool, 2, 0.0, 99);
    REQUIRE(clients.size() == 2);
    CHECK(clients[0].n_k() == 50);
    CHECK(clients[1].n_k() == 50);
    for (const auto& c : clients) {
        std::map<int, int> counts;
        for (const auto& s : c.samples) counts[s.label]++;
        CHECK(std::abs(counts[0] - 20) <= 1);
        CHECK(std::abs(counts[1] - 20) <= 1);
        CHECK(std::abs(counts[2] - 10) <= 1);
    }
}

TEST_CASE("partition is a disjoint cover with no empty client") {
    std::mt19937 meta_rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        std::uniform_int_distribution<int> n_dist(5, 400);
        const int n = n_dist(meta_rng);
        std::uniform_int_distribution<int> k_dist(1, std::min(n, 12));
        const int k = k_dist(meta_rng);
        std::uniform_real_distribution<double> skew_dist(0.0, 8.0);
        const double skew = trial % 3 == 0 ? 0.0 : skew_dist(meta_rng);
        std::uniform_int_distribution<int> lab(0, 2);

        std::vector<int> labels(static_cast<std::size_t>(n));
        for (auto& l : labels) l = lab(meta_rng);

        const auto groups = partition_indices(labels, k, skew, meta_rng());
        REQUIRE(static_cast<int>(groups.size()) == k);
        std::set<int> seen;
        for (const auto& g : groups) {
            CHECK(!g.empty());
            for (int idx : g) {
                CHECK(idx >= 0);
                CHECK(idx < n);
                CHECK(seen.insert(idx).second);  // disjoint
            }
        }
        CHECK(static_cast<int>(seen.size()) == n);  // covers the pool
    }
}

TEST_CASE("skewed partitions concentrate classes") {
    // Monte-Carlo comparison of per-client class-proportion spread
    const int n = 600, k = 10;
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i % 3;
    const std::vector<double> pool_prop = {1.0 / 3, 1.0 / 3, 1.0 / 3};

    auto spread = [&](double skew, std::uint64_t seed) {
        const auto groups = partition_indices(labels, k, skew, seed);
        double total = 0.0;
        for (const auto& g : groups) {
            std::array<double, 3> prop{0, 0, 0};
            for (int idx : g) prop[static_cast<std::size_t>(labels[static_cast<std::size_t>(idx)])] += 1.0;
            for (auto& p : prop) p /= static_cast<double>(g.size());
            for (int c = 0; c < 3; ++c) {
                const double d = prop[static_cast<std::size_t>(c)] - pool_prop[static_cast<std::size_t>(c)];
                total += d * d;
            }
        }
        return total / k;
    };

    double v_iid = 0.0, v_skew = 0.0;
    const int seeds = 100;
    for (int s = 0; s < seeds; ++s) {
        v_iid += spread(0.0, 1000 + static_cast<std::uint64_t>(s));
        v_skew += spread(5.0, 1000 + static_cast<std::uint64_t>(s));
    }
    v_iid /= seeds;
    v_skew /= seeds;
    CHECK(v_skew >= 3.0 * std::max(v_iid, 1e-12));
}

TEST_CASE("make_task splits support and query deterministically") {
    ScenarioSpec spec = quiet_spec(Regime::Moderate, 1, 1);
    spec.daily_amplitude = 0.2;
    spec.node_bias_scale = 0.1;
    spec.incident_rate = 0.05;

    const Task t = make_task(spec, 5, 20, 31);
    CHECK(t.support.size() == 5);
    CHECK(t.query.size() == 20);

    const Task t2 = make_task(spec, 5, 20, 31);
    for (std::size_t i = 0; i < t.support.size(); ++i) {
        CHECK(t.support[i].features == t2.support[i].features);
    }
    for (std::size_t i = 0; i < t.query.size(); ++i) {
        CHECK(t.query[i].features == t2.query[i].features);
    }

    CHECK_THROWS_AS(make_task(spec, 0, 5, 1), std::invalid_argument);
}

TEST_CASE("high regime tasks carry more occupancy than low regime tasks") {
    ScenarioSpec low = quiet_spec(Regime::Low, 1, 1);
    low.daily_amplitude = 0.15;
    low.node_bias_scale = 0.1;
    ScenarioSpec high = low;
    high.density_regime = Regime::High;

    auto mean_occ = [](const Task& t) {
        double acc = 0.0;
        for (const auto& s : t.query) acc += s.features[2];
        return acc / static_cast<double>(t.query.size());
    };
    const Task tl = make_task(low, 1, 100, 17);
    const Task th = make_task(high, 1, 100, 17);
    CHECK(mean_occ(th) > mean_occ(tl));
}

TEST_CASE("label rule recovers generated labels across regimes") {
    // the learning problem is well-posed: features determine the label
    for (Regime r : {Regime::Low, Regime::Moderate, Regime::High}) {
        ScenarioSpec spec = quiet_spec(r, 4, 100);
        spec.incident_rate = 0.1;
        spec.daily_amplitude = 0.15;
        spec.node_bias_scale = 0.1;
        int agree = 0, total = 0;
        for (int node = 0; node < spec.num_nodes; ++node) {
            const auto ds = gen_node_stream(spec, node, 23);
            for (const auto& s : ds.samples) {
                agree += label_rule(s.features[2], s.features[1]) == s.label;
                ++total;
            }
        }
        CHECK(static_cast<double>(agree) / total >= 0.9);
    }
}
