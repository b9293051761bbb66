#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace metafed {

// Linear cost model for simulated time: a fixed per-message latency, a
// per-kilobyte transfer cost and a per-gradient-step compute cost. Jitter is
// off by default; when enabled each transmission adds a uniform draw from
// [0, 0.1 * base_latency_s] taken from a stream seeded by `seed`.
struct CostModel {
    double base_latency_s = 0.0;
    double per_kb_s = 0.0;
    double grad_step_s = 0.0;
    std::uint64_t seed = 0;
    bool jitter = false;
};

double transmit(const CostModel& model, std::uint64_t payload_bytes);
double transmit(const CostModel& model, std::uint64_t payload_bytes, std::mt19937_64& jitter_rng);

double compute_time(const CostModel& model, std::int64_t gradient_steps);

// Per-client time for one synchronous round trip:
// downlink transfer + local compute + uplink transfer.
double round_trip_time(const CostModel& model, std::uint64_t payload_down,
                       std::uint64_t payload_up, std::int64_t gradient_steps);

enum class EventKind { Send, Receive, ComputeStart, ComputeEnd };

const char* event_kind_name(EventKind k);

inline constexpr int kCoordinatorActor = -1;

struct SimEvent {
    double time_s = 0.0;
    EventKind kind = EventKind::Send;
    int actor = kCoordinatorActor;  // client id, or kCoordinatorActor
    std::uint64_t payload_bytes = 0;
};

struct ClientRoundCost {
    int node_id = 0;
    std::uint64_t down_bytes = 0;
    std::uint64_t up_bytes = 0;
    std::int64_t gradient_steps = 0;
};

// Virtual clock plus append-only event log for one simulation run. Rounds are
// synchronous: the clock advances by the slowest client's round-trip time and
// the appended events stay sorted by time.
class EventLog {
  public:
    explicit EventLog(const CostModel& model);

    // Records broadcast / compute / upload events for every client of one
    // round and returns the round duration (max over clients).
    double record_round(std::span<const ClientRoundCost> clients);

    double now_s() const { return now_s_; }
    const std::vector<SimEvent>& events() const { return events_; }

    // JSON-lines export, one {"t":..,"kind":..,"actor":..,"bytes":..} per line.
    void write_jsonl(std::ostream& out) const;

  private:
    CostModel model_;
    std::mt19937_64 jitter_rng_;
    double now_s_ = 0.0;
    std::vector<SimEvent> events_;
};

}  // namespace metafed
