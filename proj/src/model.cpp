#include "metafed/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>

#include "metafed/rng.hpp"

namespace metafed {

namespace {

void check_arch(const ModelArch& a) {
    if (a.input_dim <= 0 || a.hidden_width <= 0 || a.num_classes <= 0) {
        throw std::invalid_argument("ModelArch dimensions must be positive");
    }
}

void check_params(const ParamVector& p) {
    check_arch(p.arch);
    if (p.values.size() != p.arch.param_count()) {
        throw std::invalid_argument("ParamVector length does not match arch");
    }
}

void check_batch(const ParamVector& p, std::span<const TrafficSample> batch) {
    if (batch.empty()) {
        throw std::invalid_argument("batch must be non-empty");
    }
    for (const auto& s : batch) {
        if (s.features.size() != p.arch.input_dim) {
            throw std::invalid_argument("sample feature size does not match input_dim");
        }
        if (s.label < 0 || s.label >= p.arch.num_classes) {
            throw std::invalid_argument("sample label out of range");
        }
    }
}

using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

struct Views {
    ConstMatMap w1;
    ConstVecMap b1;
    ConstMatMap w2;
    ConstVecMap b2;
};

Views make_views(const ParamVector& p) {
    const ParamLayout l = param_layout(p.arch);
    const double* d = p.values.data();
    return Views{ConstMatMap(d + l.w1_off, l.w1_rows, l.w1_cols),
                 ConstVecMap(d + l.b1_off, p.arch.hidden_width),
                 ConstMatMap(d + l.w2_off, l.w2_rows, l.w2_cols),
                 ConstVecMap(d + l.b2_off, p.arch.num_classes)};
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    Eigen::VectorXd shifted = logits.array() - logits.maxCoeff();
    Eigen::VectorXd e = shifted.array().exp();
    return e / e.sum();
}

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32le(std::span<const std::uint8_t> in, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[off + i]) << (8 * i);
    return v;
}

void put_f64le(std::vector<std::uint8_t>& out, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

double get_f64le(std::span<const std::uint8_t> in, std::size_t off) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(in[off + i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

}  // namespace

ParamVector init_params(const ModelArch& arch, std::uint64_t seed) {
    check_arch(arch);
    ParamVector p(arch);
    const ParamLayout l = param_layout(arch);
    auto rng = make_rng({seed, seed_tag::init});

    // Weight blocks are filled in flat storage order; biases stay zero.
    const double r1 = 1.0 / std::sqrt(static_cast<double>(arch.input_dim));
    std::uniform_real_distribution<double> u1(-r1, r1);
    for (int i = 0; i < l.w1_rows * l.w1_cols; ++i) p.values[l.w1_off + i] = u1(rng);

    const double r2 = 1.0 / std::sqrt(static_cast<double>(arch.hidden_width));
    std::uniform_real_distribution<double> u2(-r2, r2);
    for (int i = 0; i < l.w2_rows * l.w2_cols; ++i) p.values[l.w2_off + i] = u2(rng);

    return p;
}

Eigen::VectorXd forward(const ParamVector& params, const Eigen::Ref<const Eigen::VectorXd>& x) {
    check_params(params);
    if (x.size() != params.arch.input_dim) {
        throw std::invalid_argument("input size does not match input_dim");
    }
    const Views v = make_views(params);
    Eigen::VectorXd h = ((v.w1 * x + v.b1).array().tanh()).matrix();
    return softmax(v.w2 * h + v.b2);
}

double loss(const ParamVector& params, std::span<const TrafficSample> batch) {
    check_params(params);
    check_batch(params, batch);
    double total = 0.0;
    for (const auto& s : batch) {
        const Eigen::VectorXd p = forward(params, s.features);
        total += -std::log(std::max(p[s.label], kProbClamp));
    }
    return total / static_cast<double>(batch.size());
}

ParamVector grad(const ParamVector& params, std::span<const TrafficSample> batch) {
    check_params(params);
    check_batch(params, batch);

    const ModelArch& arch = params.arch;
    const ParamLayout l = param_layout(arch);
    const Views v = make_views(params);

    ParamVector g(arch);
    Eigen::Map<Eigen::MatrixXd> gw1(g.values.data() + l.w1_off, l.w1_rows, l.w1_cols);
    Eigen::Map<Eigen::VectorXd> gb1(g.values.data() + l.b1_off, arch.hidden_width);
    Eigen::Map<Eigen::MatrixXd> gw2(g.values.data() + l.w2_off, l.w2_rows, l.w2_cols);
    Eigen::Map<Eigen::VectorXd> gb2(g.values.data() + l.b2_off, arch.num_classes);

    for (const auto& s : batch) {
        Eigen::VectorXd pre = v.w1 * s.features + v.b1;
        Eigen::VectorXd h = pre.array().tanh();
        Eigen::VectorXd p = softmax(v.w2 * h + v.b2);

        // The loss clamps the predicted probability from below, so a sample in
        // the clamped region contributes a zero gradient.
        if (p[s.label] <= kProbClamp) continue;

        Eigen::VectorXd dlogits = p;
        dlogits[s.label] -= 1.0;

        gw2.noalias() += dlogits * h.transpose();
        gb2 += dlogits;
        Eigen::VectorXd dh = v.w2.transpose() * dlogits;
        Eigen::VectorXd dpre = dh.array() * (1.0 - h.array().square());
        gw1.noalias() += dpre * s.features.transpose();
        gb1 += dpre;
    }

    g.values /= static_cast<double>(batch.size());
    return g;
}

ParamVector sgd_step(const ParamVector& params, const ParamVector& g, double eta) {
    check_params(params);
    check_params(g);
    if (params.values.size() != g.values.size()) {
        throw std::invalid_argument("params and gradient length mismatch");
    }
    if (!(eta > 0.0) || !std::isfinite(eta)) {
        throw std::invalid_argument("eta must be positive and finite");
    }
    if (!params.values.allFinite() || !g.values.allFinite()) {
        throw std::invalid_argument("non-finite values in sgd_step inputs");
    }
    ParamVector out = params;
    out.values = params.values - eta * g.values;
    return out;
}

std::vector<std::uint8_t> serialize_params(const ParamVector& params) {
    check_params(params);
    std::vector<std::uint8_t> out;
    out.reserve(12 + 8 * static_cast<std::size_t>(params.values.size()));
    put_u32le(out, static_cast<std::uint32_t>(params.arch.input_dim));
    put_u32le(out, static_cast<std::uint32_t>(params.arch.hidden_width));
    put_u32le(out, static_cast<std::uint32_t>(params.arch.num_classes));
    for (Eigen::Index i = 0; i < params.values.size(); ++i) put_f64le(out, params.values[i]);
    return out;
}

ParamVector deserialize_params(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 12) {
        throw std::invalid_argument("param blob too short for arch header");
    }
    ModelArch arch{static_cast<int>(get_u32le(bytes, 0)), static_cast<int>(get_u32le(bytes, 4)),
                   static_cast<int>(get_u32le(bytes, 8))};
    check_arch(arch);
    const std::size_t expected = 12 + 8 * static_cast<std::size_t>(arch.param_count());
    if (bytes.size() != expected) {
        throw std::invalid_argument("param blob length does not match arch");
    }
    ParamVector p(arch);
    for (int i = 0; i < arch.param_count(); ++i) {
        p.values[i] = get_f64le(bytes, 12 + 8 * static_cast<std::size_t>(i));
    }
    if (!p.values.allFinite()) {
        throw std::invalid_argument("param blob contains non-finite values");
    }
    return p;
}

std::uint64_t serialized_param_bytes(const ModelArch& arch) {
    return 12 + 8 * static_cast<std::uint64_t>(arch.param_count());
}

}  // namespace metafed
