#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "metafed/traffic.hpp"

namespace metafed {

// Probabilities are clamped to at least this value before taking logs, so the
// loss stays finite on confidently wrong predictions.
inline constexpr double kProbClamp = 1e-12;

struct ModelArch {
    int input_dim = kFeatureDim;
    int hidden_width = 16;
    int num_classes = kNumClasses;

    int param_count() const {
        return (input_dim + 1) * hidden_width + (hidden_width + 1) * num_classes;
    }
    bool operator==(const ModelArch&) const = default;
};

// Flat parameter container for the one-hidden-layer classifier.
// Storage layout (column-major blocks, in order):
//   W1 (hidden_width x input_dim), b1 (hidden_width),
//   W2 (num_classes x hidden_width), b2 (num_classes)
struct ParamVector {
    Eigen::VectorXd values;
    ModelArch arch;

    ParamVector() = default;
    explicit ParamVector(const ModelArch& a)
        : values(Eigen::VectorXd::Zero(a.param_count())), arch(a) {}

    Eigen::Index size() const { return values.size(); }
};

// Block offsets into ParamVector::values.
struct ParamLayout {
    int w1_off, w1_rows, w1_cols;
    int b1_off;
    int w2_off, w2_rows, w2_cols;
    int b2_off;
};

inline ParamLayout param_layout(const ModelArch& a) {
    ParamLayout l{};
    l.w1_off = 0;
    l.w1_rows = a.hidden_width;
    l.w1_cols = a.input_dim;
    l.b1_off = l.w1_off + l.w1_rows * l.w1_cols;
    l.w2_off = l.b1_off + a.hidden_width;
    l.w2_rows = a.num_classes;
    l.w2_cols = a.hidden_width;
    l.b2_off = l.w2_off + l.w2_rows * l.w2_cols;
    return l;
}

// Fan-in-scaled uniform weights, zero biases. Deterministic in (arch, seed):
// weight blocks are filled in storage order from one seeded stream.
ParamVector init_params(const ModelArch& arch, std::uint64_t seed);

// tanh hidden layer followed by softmax; returns the class-probability vector.
Eigen::VectorXd forward(const ParamVector& params, const Eigen::Ref<const Eigen::VectorXd>& x);

// Mean cross-entropy over the batch.
double loss(const ParamVector& params, std::span<const TrafficSample> batch);

// Analytic gradient of loss() with respect to every parameter.
ParamVector grad(const ParamVector& params, std::span<const TrafficSample> batch);

// One plain gradient-descent step: params - eta * g.
ParamVector sgd_step(const ParamVector& params, const ParamVector& g, double eta);

// Wire format: three little-endian u32 (input_dim, hidden_width, num_classes)
// followed by the values as little-endian f64.
std::vector<std::uint8_t> serialize_params(const ParamVector& params);
ParamVector deserialize_params(std::span<const std::uint8_t> bytes);
std::uint64_t serialized_param_bytes(const ModelArch& arch);

}  // namespace metafed
