#include "metafed/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace metafed {

namespace {

using ojson = nlohmann::ordered_json;

std::ofstream open_out(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

// Re-parse a 9-significant-digit rendering so nlohmann prints the short form.
ojson num_g9(double v) { return ojson::parse(fmt_g9(v)); }

void put_u32le_stream(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
}

}  // namespace

void write_checkpoint(const std::string& path, const ParamVector& params, std::uint32_t round) {
    auto out = open_out(path);
    const auto blob = serialize_params(params);
    out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
    put_u32le_stream(out, round);
    if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

std::pair<ParamVector, std::uint32_t> read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < 4) throw std::runtime_error("checkpoint too short: " + path);
    std::uint32_t round = 0;
    for (int i = 0; i < 4; ++i) {
        round |= static_cast<std::uint32_t>(bytes[bytes.size() - 4 + i]) << (8 * i);
    }
    bytes.resize(bytes.size() - 4);
    return {deserialize_params(bytes), round};
}

void write_dataset_csv(const std::string& path, std::span<const ClientDataset> clients) {
    auto out = open_out(path);
    out << "node_id,vehicle_count,mean_speed,occupancy,tod_sin,tod_cos,label\n";
    for (const auto& c : clients) {
        for (const auto& s : c.samples) {
            out << c.node_id;
            for (int f = 0; f < kFeatureDim; ++f) out << ',' << fmt_g9(s.features[f]);
            out << ',' << s.label << '\n';
        }
    }
    if (!out) throw std::runtime_error("failed writing dataset: " + path);
}

void write_round_log_csv(const std::string& path, std::span<const RoundRecord> history) {
    auto out = open_out(path);
    out << "round,loss_before,loss_after,delta_loss,eta,duration_s\n";
    for (const auto& r : history) {
        out << r.round << ',' << fmt_g9(r.mean_client_loss_before) << ','
            << fmt_g9(r.mean_client_loss_after) << ',' << fmt_g9(r.delta_loss) << ','
            << fmt_g9(r.eta_used) << ',' << fmt_g9(r.round_duration_s) << '\n';
    }
    if (!out) throw std::runtime_error("failed writing round log: " + path);
}

void write_events_jsonl(const std::string& path, std::span<const SimEvent> events) {
    auto out = open_out(path);
    for (const auto& e : events) {
        out << "{\"t\":" << fmt_g9(e.time_s) << ",\"kind\":\"" << event_kind_name(e.kind)
            << "\",\"actor\":" << e.actor << ",\"bytes\":" << e.payload_bytes << "}\n";
    }
    if (!out) throw std::runtime_error("failed writing event log: " + path);
}

void write_comparison_csv(const std::string& path, std::span<const CellResult> cells) {
    auto out = open_out(path);
    out << "variant,regime,seed,accuracy,response_time_s,steps_to_threshold\n";
    for (const auto& c : cells) {
        out << variant_name(c.variant) << ',' << regime_name(c.regime) << ',' << c.seed << ','
            << fmt_g9(c.accuracy) << ',' << fmt_g9(c.response_time_s) << ','
            << c.steps_to_threshold << '\n';
    }
    if (!out) throw std::runtime_error("failed writing comparison: " + path);
}

std::vector<CellResult> read_comparison_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open comparison csv: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty comparison csv: " + path);
    if (line != "variant,regime,seed,accuracy,response_time_s,steps_to_threshold") {
        throw std::runtime_error("unexpected comparison csv header in " + path);
    }

    std::vector<CellResult> cells;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string field;
        CellResult c;
        std::getline(row, field, ',');
        c.variant = variant_from_name(field);
        std::getline(row, field, ',');
        c.regime = regime_from_name(field);
        std::getline(row, field, ',');
        c.seed = std::stoull(field);
        std::getline(row, field, ',');
        c.accuracy = std::stod(field);
        std::getline(row, field, ',');
        c.response_time_s = std::stod(field);
        std::getline(row, field, ',');
        c.steps_to_threshold = std::stoi(field);
        cells.push_back(c);
    }
    return cells;
}

std::string render_summary_json(const ComparisonReport& report) {
    ojson j;
    j["seeds"] = report.seeds;
    ojson summary = ojson::object();
    for (const auto& [key, stats] : report.stats) {
        const auto& [variant, regime] = key;
        ojson cell = {{"accuracy_mean", num_g9(stats.accuracy_mean)},
                      {"accuracy_sd", num_g9(stats.accuracy_sd)},
                      {"response_time_s_mean", num_g9(stats.response_time_mean)},
                      {"response_time_s_sd", num_g9(stats.response_time_sd)},
                      {"steps_to_threshold_mean", num_g9(stats.steps_mean)},
                      {"steps_to_threshold_sd", num_g9(stats.steps_sd)}};
        summary[variant_name(variant)][regime_name(regime)] = cell;
    }
    j["summary"] = summary;
    return j.dump(2) + "\n";
}

void write_summary_json(const std::string& path, const ComparisonReport& report) {
    auto out = open_out(path);
    out << render_summary_json(report);
    if (!out) throw std::runtime_error("failed writing summary: " + path);
}

std::string render_manifest_json(const std::string& command, const std::string& mode,
                                 const ExperimentConfig& config) {
    ojson j;
    j["command"] = command;
    if (!mode.empty()) j["mode"] = mode;
    j["config"] = ojson::parse(render_config_json(config));
    return j.dump(2) + "\n";
}

void write_manifest(const std::string& path, const std::string& command, const std::string& mode,
                    const ExperimentConfig& config) {
    auto out = open_out(path);
    out << render_manifest_json(command, mode, config);
    if (!out) throw std::runtime_error("failed writing manifest: " + path);
}

}  // namespace metafed
