#include "metafed/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "metafed/rng.hpp"

namespace metafed {

namespace {

constexpr int kIntervalsPerDay = 96;  // 15-minute intervals
constexpr double kIncidentOccupancyJump = 0.3;
constexpr double kIncidentSpeedFactor = 0.5;
constexpr double kSpeedDensitySlope = 0.8;  // free-flow speed drop per unit occupancy
constexpr double kFlowScale = 1.5;          // flow ~ occupancy * speed, rescaled to [0,1]
constexpr double kObservationJitter = 0.05;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// One observation interval. Draw order is fixed (incident, speed jitter, flow
// jitter) so the stream stays aligned across parameter settings.
TrafficSample make_interval(const ScenarioSpec& spec, double node_bias, int t,
                            std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> jitter(-kObservationJitter, kObservationJitter);

    const bool incident = unit(rng) < spec.incident_rate;
    const double speed_jitter = jitter(rng);
    const double flow_jitter = jitter(rng);

    const double phase = static_cast<double>(t % kIntervalsPerDay) / kIntervalsPerDay;
    const double wave = std::sin(2.0 * std::numbers::pi * phase);

    double occupancy = clamp01(regime_base_occupancy(spec.density_regime) +
                               spec.daily_amplitude * wave + node_bias);
    double speed = clamp01(1.0 - kSpeedDensitySlope * occupancy + speed_jitter);
    if (incident) {
        occupancy = clamp01(occupancy + kIncidentOccupancyJump);
        speed = clamp01(speed * kIncidentSpeedFactor);
    }
    const double vehicle_count = clamp01(kFlowScale * occupancy * speed + flow_jitter);

    TrafficSample s;
    s.features = Eigen::VectorXd(kFeatureDim);
    s.features << vehicle_count, speed, occupancy,
        std::sin(2.0 * std::numbers::pi * phase), std::cos(2.0 * std::numbers::pi * phase);
    s.label = label_rule(occupancy, speed);
    return s;
}

}  // namespace

const char* regime_name(Regime r) {
    switch (r) {
        case Regime::Low: return "Low";
        case Regime::Moderate: return "Moderate";
        case Regime::High: return "High";
    }
    return "?";
}

Regime regime_from_name(const std::string& name) {
    if (name == "Low") return Regime::Low;
    if (name == "Moderate") return Regime::Moderate;
    if (name == "High") return Regime::High;
    throw std::invalid_argument("unknown regime: " + name);
}

double regime_base_occupancy(Regime r) {
    switch (r) {
        case Regime::Low: return 0.2;
        case Regime::Moderate: return 0.5;
        case Regime::High: return 0.8;
    }
    return 0.5;
}

int label_rule(double occupancy, double speed) {
    if (!(occupancy >= 0.0 && occupancy <= 1.0) || !(speed >= 0.0 && speed <= 1.0)) {
        throw std::invalid_argument("label_rule inputs must lie in [0,1]");
    }
    const double congestion = occupancy * (1.0 - speed);
    if (congestion < 0.15) return 0;
    if (congestion < 0.4) return 1;
    return 2;
}

ClientDataset gen_node_stream(const ScenarioSpec& spec, int node_id, std::uint64_t seed) {
    if (node_id < 0 || node_id >= spec.num_nodes) {
        throw std::invalid_argument("node_id out of range");
    }
    auto rng = make_rng({seed, seed_tag::data, static_cast<std::uint64_t>(node_id)});
    std::normal_distribution<double> std_normal(0.0, 1.0);
    const double node_bias = spec.node_bias_scale * std_normal(rng);

    ClientDataset ds;
    ds.node_id = node_id;
    ds.samples.reserve(static_cast<std::size_t>(spec.intervals_per_node));
    for (int t = 0; t < spec.intervals_per_node; ++t) {
        ds.samples.push_back(make_interval(spec, node_bias, t, rng));
    }
    return ds;
}

std::vector<std::vector<int>> partition_indices(std::span<const int> labels, int k, double skew,
                                                std::uint64_t seed) {
    const int n = static_cast<int>(labels.size());
    if (k <= 0) throw std::invalid_argument("k must be positive");
    if (n < k) throw std::invalid_argument("pool smaller than client count");
    if (skew < 0.0) throw std::invalid_argument("skew must be non-negative");

    int num_classes = 0;
    for (int lb : labels) {
        if (lb < 0) throw std::invalid_argument("labels must be non-negative");
        num_classes = std::max(num_classes, lb + 1);
    }

    auto rng = make_rng({seed, seed_tag::partition});
    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(num_classes));
    for (int i = 0; i < n; ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    for (auto& idx : by_class) std::shuffle(idx.begin(), idx.end(), rng);

    std::vector<std::vector<int>> out(static_cast<std::size_t>(k));

    if (skew == 0.0) {
        // Exactly balanced split: deal round-robin, carrying the cursor across
        // classes so both per-class and total counts stay within one.
        int cursor = 0;
        for (const auto& idx : by_class) {
            for (int sample : idx) {
                out[static_cast<std::size_t>(cursor)].push_back(sample);
                cursor = (cursor + 1) % k;
            }
        }
    } else {
        const double alpha = 1.0 / std::max(skew, 1e-9);
        std::gamma_distribution<double> gamma(alpha, 1.0);

        // Per-client class proportions q_i ~ Dirichlet(alpha).
        std::vector<std::vector<double>> q(static_cast<std::size_t>(k),
                                           std::vector<double>(static_cast<std::size_t>(num_classes)));
        for (auto& row : q) {
            double sum = 0.0;
            for (auto& v : row) {
                v = gamma(rng);
                sum += v;
            }
            if (sum <= 0.0) {
                std::fill(row.begin(), row.end(), 1.0);
                sum = static_cast<double>(num_classes);
            }
            for (auto& v : row) v /= sum;
        }

        // Allocate each class across clients by largest remainder over the
        // clients' normalized shares of that class.
        for (int c = 0; c < num_classes; ++c) {
            const auto& idx = by_class[static_cast<std::size_t>(c)];
            const int m = static_cast<int>(idx.size());
            if (m == 0) continue;

            double share_sum = 0.0;
            for (int i = 0; i < k; ++i) share_sum += q[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
            std::vector<int> counts(static_cast<std::size_t>(k), 0);
            std::vector<std::pair<double, int>> remainders;
            int assigned = 0;
            for (int i = 0; i < k; ++i) {
                const double target =
                    m * q[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] / share_sum;
                counts[static_cast<std::size_t>(i)] = static_cast<int>(std::floor(target));
                assigned += counts[static_cast<std::size_t>(i)];
                remainders.emplace_back(target - std::floor(target), i);
            }
            std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second;
            });
            for (int r = 0; r < m - assigned; ++r) {
                counts[static_cast<std::size_t>(remainders[static_cast<std::size_t>(r)].second)]++;
            }

            int pos = 0;
            for (int i = 0; i < k; ++i) {
                for (int j = 0; j < counts[static_cast<std::size_t>(i)]; ++j) {
                    out[static_cast<std::size_t>(i)].push_back(idx[static_cast<std::size_t>(pos++)]);
                }
            }
        }
    }

    // No client may end up empty: move one index from the largest group.
    for (int i = 0; i < k; ++i) {
        while (out[static_cast<std::size_t>(i)].empty()) {
            int donor = -1;
            std::size_t donor_size = 1;
            for (int j = 0; j < k; ++j) {
                if (out[static_cast<std::size_t>(j)].size() > donor_size) {
                    donor = j;
                    donor_size = out[static_cast<std::size_t>(j)].size();
                }
            }
            if (donor < 0) throw std::logic_error("partition repair failed");
            out[static_cast<std::size_t>(i)].push_back(out[static_cast<std::size_t>(donor)].back());
            out[static_cast<std::size_t>(donor)].pop_back();
        }
    }
    return out;
}

std::vector<ClientDataset> partition_noniid(std::span<const TrafficSample> pool, int k,
                                            double skew, std::uint64_t seed) {
    std::vector<int> labels(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) labels[i] = pool[i].label;
    const auto groups = partition_indices(labels, k, skew, seed);

    std::vector<ClientDataset> clients(groups.size());
    for (std::size_t i = 0; i < groups.size(); ++i) {
        clients[i].node_id = static_cast<int>(i);
        clients[i].samples.reserve(groups[i].size());
        for (int idx : groups[i]) clients[i].samples.push_back(pool[static_cast<std::size_t>(idx)]);
    }
    return clients;
}

Task make_task(const ScenarioSpec& spec, int support_size, int query_size, std::uint64_t seed) {
    if (support_size < 1 || query_size < 1) {
        throw std::invalid_argument("support_size and query_size must be >= 1");
    }
    auto rng = make_rng({seed, seed_tag::task});
    std::normal_distribution<double> std_normal(0.0, 1.0);
    const double bias = spec.node_bias_scale * std_normal(rng);
    // Random day offset so tasks cover different parts of the daily wave.
    std::uniform_int_distribution<int> offset(0, kIntervalsPerDay - 1);
    const int t0 = offset(rng);

    Task task;
    task.regime = spec;
    task.support.reserve(static_cast<std::size_t>(support_size));
    task.query.reserve(static_cast<std::size_t>(query_size));
    for (int t = 0; t < support_size + query_size; ++t) {
        TrafficSample s = make_interval(spec, bias, t0 + t, rng);
        if (t < support_size) {
            task.support.push_back(std::move(s));
        } else {
            task.query.push_back(std::move(s));
        }
    }
    return task;
}

}  // namespace metafed
