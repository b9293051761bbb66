#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace metafed {

// Feature layout of one observation interval:
//   [vehicle_count, mean_speed, occupancy, tod_sin, tod_cos]
// vehicle_count / mean_speed / occupancy are normalized to [0,1];
// tod_sin/tod_cos encode the daily phase on the unit circle.
inline constexpr int kFeatureDim = 5;
inline constexpr int kNumClasses = 3;  // low / moderate / high congestion

// Wire size of one sample (feature f64s plus a u32 label); prices the data
// upload the centralized baseline pays after a shift.
inline constexpr std::uint64_t kSampleWireBytes = 8 * kFeatureDim + 4;

struct TrafficSample {
    Eigen::VectorXd features;  // size kFeatureDim
    int label = 0;             // congestion class in {0,1,2}
};

enum class Regime { Low, Moderate, High };

const char* regime_name(Regime r);
Regime regime_from_name(const std::string& name);

struct ScenarioSpec {
    Regime density_regime = Regime::Moderate;
    double incident_rate = 0.0;     // probability per interval
    double daily_amplitude = 0.0;   // occupancy swing of the daily wave
    double node_bias_scale = 0.0;   // stddev of the fixed per-node occupancy bias
    int num_nodes = 1;              // K
    int intervals_per_node = 1;
};

struct ClientDataset {
    int node_id = 0;
    std::vector<TrafficSample> samples;

    int n_k() const { return static_cast<int>(samples.size()); }
};

// Support/query split drawn from one traffic regime.
struct Task {
    std::vector<TrafficSample> support;
    std::vector<TrafficSample> query;
    ScenarioSpec regime;
};

// Mean occupancy each density regime fluctuates around.
double regime_base_occupancy(Regime r);

// Ground-truth congestion class from a congestion index c = occupancy*(1-speed):
// c < 0.15 -> 0, 0.15 <= c < 0.4 -> 1, c >= 0.4 -> 2 (boundaries join the
// upper class). Throws std::invalid_argument outside [0,1]^2.
int label_rule(double occupancy, double speed);

// Synthesizes one node's observation stream. Occupancy is the regime base
// plus a sinusoidal daily wave scaled by daily_amplitude, plus a fixed
// per-node bias drawn from Normal(0, node_bias_scale); with probability
// incident_rate an interval is hit by an incident that raises occupancy by
// +0.3 and halves speed. Deterministic in (spec, node_id, seed); streams for
// distinct nodes are independent, so nodes may be generated concurrently.
ClientDataset gen_node_stream(const ScenarioSpec& spec, int node_id, std::uint64_t seed);

// Label-skew partition of [0, labels.size()) into k disjoint index groups.
// skew = 0 is an exactly balanced split; skew > 0 draws per-client class
// proportions from Dirichlet(1/skew). Every group receives at least one index.
std::vector<std::vector<int>> partition_indices(std::span<const int> labels, int k,
                                                double skew, std::uint64_t seed);

// Same partition applied to a sample pool; union of the returned datasets
// equals the pool and the datasets are disjoint.
std::vector<ClientDataset> partition_noniid(std::span<const TrafficSample> pool, int k,
                                            double skew, std::uint64_t seed);

// Draws support_size + query_size fresh intervals from spec's generative
// process (fresh bias, random day offset) and splits them in order.
Task make_task(const ScenarioSpec& spec, int support_size, int query_size,
               std::uint64_t seed);

}  // namespace metafed
