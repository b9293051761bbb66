#include "metafed/simnet.hpp"

#include <algorithm>
#include <stdexcept>

#include "metafed/format.hpp"
#include "metafed/rng.hpp"

namespace metafed {

namespace {

void check_model(const CostModel& m) {
    if (m.base_latency_s < 0.0 || m.per_kb_s < 0.0 || m.grad_step_s < 0.0) {
        throw std::invalid_argument("cost model components must be non-negative");
    }
}

double wire_time(const CostModel& m, std::uint64_t payload_bytes) {
    return m.base_latency_s + m.per_kb_s * (static_cast<double>(payload_bytes) / 1024.0);
}

}  // namespace

double transmit(const CostModel& model, std::uint64_t payload_bytes) {
    check_model(model);
    return wire_time(model, payload_bytes);
}

double transmit(const CostModel& model, std::uint64_t payload_bytes, std::mt19937_64& jitter_rng) {
    check_model(model);
    double t = wire_time(model, payload_bytes);
    if (model.jitter) {
        std::uniform_real_distribution<double> u(0.0, 0.1 * model.base_latency_s);
        t += u(jitter_rng);
    }
    return t;
}

double compute_time(const CostModel& model, std::int64_t gradient_steps) {
    check_model(model);
    if (gradient_steps < 0) throw std::invalid_argument("gradient_steps must be non-negative");
    return model.grad_step_s * static_cast<double>(gradient_steps);
}

double round_trip_time(const CostModel& model, std::uint64_t payload_down,
                       std::uint64_t payload_up, std::int64_t gradient_steps) {
    return transmit(model, payload_down) + compute_time(model, gradient_steps) +
           transmit(model, payload_up);
}

const char* event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::Send: return "send";
        case EventKind::Receive: return "receive";
        case EventKind::ComputeStart: return "compute_start";
        case EventKind::ComputeEnd: return "compute_end";
    }
    return "?";
}

EventLog::EventLog(const CostModel& model)
    : model_(model), jitter_rng_(mix_seed({model.seed, 0x4a697474ULL})) {
    check_model(model);
}

double EventLog::record_round(std::span<const ClientRoundCost> clients) {
    const double t0 = now_s_;
    std::vector<SimEvent> round_events;
    double round_end = t0;

    for (const auto& c : clients) {
        const double down = transmit(model_, c.down_bytes, jitter_rng_);
        const double compute = compute_time(model_, c.gradient_steps);
        const double up = transmit(model_, c.up_bytes, jitter_rng_);

        const double t_recv = t0 + down;
        const double t_done = t_recv + compute;
        const double t_back = t_done + up;

        round_events.push_back({t0, EventKind::Send, kCoordinatorActor, c.down_bytes});
        round_events.push_back({t_recv, EventKind::Receive, c.node_id, c.down_bytes});
        round_events.push_back({t_recv, EventKind::ComputeStart, c.node_id, 0});
        round_events.push_back({t_done, EventKind::ComputeEnd, c.node_id, 0});
        round_events.push_back({t_done, EventKind::Send, c.node_id, c.up_bytes});
        round_events.push_back({t_back, EventKind::Receive, kCoordinatorActor, c.up_bytes});

        round_end = std::max(round_end, t_back);
    }

    std::stable_sort(round_events.begin(), round_events.end(),
                     [](const SimEvent& a, const SimEvent& b) { return a.time_s < b.time_s; });
    events_.insert(events_.end(), round_events.begin(), round_events.end());
    now_s_ = round_end;
    return round_end - t0;
}

void EventLog::write_jsonl(std::ostream& out) const {
    for (const auto& e : events_) {
        out << "{\"t\":" << fmt_g9(e.time_s) << ",\"kind\":\"" << event_kind_name(e.kind)
            << "\",\"actor\":" << e.actor << ",\"bytes\":" << e.payload_bytes << "}\n";
    }
}

}  // namespace metafed
