#include "prunebench/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "prunebench/common.hpp"
#include "prunebench/rng.hpp"

namespace prunebench {

namespace {

// Offsets into the canonical weight vector.
struct Offsets {
    std::size_t w1, b1, w2, b2, total;
};

Offsets offsets(const ModelLayout& l) {
    const auto d = static_cast<std::size_t>(l.input_dim);
    const auto h = static_cast<std::size_t>(l.hidden_dim);
    const auto c = static_cast<std::size_t>(l.num_classes);
    Offsets o{};
    if (l.hidden_dim == 0) {
        o.w1 = o.b1 = 0;
        o.w2 = 0;
        o.b2 = c * d;
        o.total = c * d + c;
    } else {
        o.w1 = 0;
        o.b1 = d * h;
        o.w2 = d * h + h;
        o.b2 = d * h + h + h * c;
        o.total = d * h + h + h * c + c;
    }
    return o;
}

void check_input(const ModelParams& params, std::span<const double> x) {
    if (x.size() != static_cast<std::size_t>(params.layout.input_dim)) {
        throw PipelineError("input shape mismatch: got " + std::to_string(x.size()) +
                            " features, model expects " +
                            std::to_string(params.layout.input_dim));
    }
}

// z = W*x + b with W row-major (rows x cols).
void affine(const double* w, const double* b, const double* x,
            std::size_t rows, std::size_t cols, double* out) {
    for (std::size_t i = 0; i < rows; ++i) {
        double s = b[i];
        const double* wi = w + i * cols;
        for (std::size_t j = 0; j < cols; ++j) s += wi[j] * x[j];
        out[i] = s;
    }
}

void softmax_stable(std::span<double> z) {
    double zmax = *std::max_element(z.begin(), z.end());
    double denom = 0.0;
    for (auto& v : z) {
        v = std::exp(v - zmax);
        denom += v;
    }
    for (auto& v : z) v /= denom;
}

// Shared scratch for one forward/backward pass over a batch.
struct Workspace {
    std::vector<double> z1, a1, probs, dz1;
};

// Forward pass for one sample; fills ws.z1/a1 (hidden) and ws.probs.
void forward_into(const ModelParams& p, const double* x, Workspace& ws) {
    const auto& l = p.layout;
    const auto d = static_cast<std::size_t>(l.input_dim);
    const auto h = static_cast<std::size_t>(l.hidden_dim);
    const auto c = static_cast<std::size_t>(l.num_classes);
    ws.probs.resize(c);
    if (l.linear()) {
        affine(p.w2().data(), p.b2().data(), x, c, d, ws.probs.data());
    } else {
        ws.z1.resize(h);
        ws.a1.resize(h);
        affine(p.w1().data(), p.b1().data(), x, h, d, ws.z1.data());
        for (std::size_t i = 0; i < h; ++i) ws.a1[i] = ws.z1[i] > 0.0 ? ws.z1[i] : 0.0;
        affine(p.w2().data(), p.b2().data(), ws.a1.data(), c, h, ws.probs.data());
    }
    softmax_stable(ws.probs);
}

GradStats batch_grad_impl(const ModelParams& p, const double* features,
                          std::size_t feature_dim, const int* labels,
                          std::span<const std::uint32_t> rows) {
    const auto& l = p.layout;
    if (rows.empty()) throw PipelineError("empty batch");
    if (feature_dim != static_cast<std::size_t>(l.input_dim)) {
        throw PipelineError("input shape mismatch: batch has " +
                            std::to_string(feature_dim) + " features, model expects " +
                            std::to_string(l.input_dim));
    }
    const auto d = static_cast<std::size_t>(l.input_dim);
    const auto h = static_cast<std::size_t>(l.hidden_dim);
    const auto c = static_cast<std::size_t>(l.num_classes);

    GradStats out;
    out.grad.assign(p.weights.size(), 0.0);
    out.sample_losses.resize(rows.size());

    const double inv_b = 1.0 / static_cast<double>(rows.size());
    double* gw1 = l.linear() ? nullptr : out.grad.data();
    double* gb1 = l.linear() ? nullptr : out.grad.data() + d * h;
    double* gw2 = l.linear() ? out.grad.data() : out.grad.data() + d * h + h;
    double* gb2 = l.linear() ? out.grad.data() + c * d
                             : out.grad.data() + d * h + h + h * c;

    Workspace ws;
    ws.dz1.resize(h);
    double loss_sum = 0.0;

    for (std::size_t bi = 0; bi < rows.size(); ++bi) {
        const double* x = features + static_cast<std::size_t>(rows[bi]) * d;
        const int y = labels[rows[bi]];
        if (y < 0 || y >= l.num_classes) {
            throw PipelineError("label " + std::to_string(y) + " out of range [0, " +
                                std::to_string(l.num_classes) + ")");
        }
        forward_into(p, x, ws);
        const double loss = -std::log(ws.probs[static_cast<std::size_t>(y)]);
        out.sample_losses[bi] = loss;
        loss_sum += loss;

        // dL/dz2 = (p - onehot(y)) / B
        for (std::size_t k = 0; k < c; ++k) {
            const double dz2 = (ws.probs[k] - (static_cast<int>(k) == y ? 1.0 : 0.0)) * inv_b;
            gb2[k] += dz2;
            if (l.linear()) {
                double* gw2k = gw2 + k * d;
                for (std::size_t j = 0; j < d; ++j) gw2k[j] += dz2 * x[j];
            } else {
                double* gw2k = gw2 + k * h;
                for (std::size_t j = 0; j < h; ++j) gw2k[j] += dz2 * ws.a1[j];
            }
        }
        if (!l.linear()) {
            const double* w2 = p.w2().data();
            for (std::size_t j = 0; j < h; ++j) {
                if (ws.z1[j] <= 0.0) {
                    ws.dz1[j] = 0.0;
                    continue;
                }
                double s = 0.0;
                for (std::size_t k = 0; k < c; ++k) {
                    s += (ws.probs[k] - (static_cast<int>(k) == y ? 1.0 : 0.0)) * w2[k * h + j];
                }
                ws.dz1[j] = s * inv_b;
            }
            for (std::size_t j = 0; j < h; ++j) {
                if (ws.dz1[j] == 0.0) continue;
                gb1[j] += ws.dz1[j];
                double* gw1j = gw1 + j * d;
                for (std::size_t i = 0; i < d; ++i) gw1j[i] += ws.dz1[j] * x[i];
            }
        }
    }
    out.mean_loss = loss_sum * inv_b;
    return out;
}

}  // namespace

std::size_t ModelLayout::param_count() const { return offsets(*this).total; }

void ModelLayout::validate() const {
    if (input_dim < 1) throw ConfigError("model input_dim must be >= 1");
    if (num_classes < 2) throw ConfigError("model num_classes must be >= 2");
    if (hidden_dim < 0) throw ConfigError("model hidden_dim must be >= 0");
}

std::span<double> ModelParams::w1() {
    const auto o = offsets(layout);
    return {weights.data() + o.w1, o.b1 - o.w1};
}
std::span<double> ModelParams::b1() {
    const auto o = offsets(layout);
    return {weights.data() + o.b1, o.w2 - o.b1};
}
std::span<double> ModelParams::w2() {
    const auto o = offsets(layout);
    return {weights.data() + o.w2, o.b2 - o.w2};
}
std::span<double> ModelParams::b2() {
    const auto o = offsets(layout);
    return {weights.data() + o.b2, o.total - o.b2};
}
std::span<const double> ModelParams::w1() const {
    const auto o = offsets(layout);
    return {weights.data() + o.w1, o.b1 - o.w1};
}
std::span<const double> ModelParams::b1() const {
    const auto o = offsets(layout);
    return {weights.data() + o.b1, o.w2 - o.b1};
}
std::span<const double> ModelParams::w2() const {
    const auto o = offsets(layout);
    return {weights.data() + o.w2, o.b2 - o.w2};
}
std::span<const double> ModelParams::b2() const {
    const auto o = offsets(layout);
    return {weights.data() + o.b2, o.total - o.b2};
}

ModelParams init_params(const ModelLayout& layout, std::uint64_t seed) {
    layout.validate();
    ModelParams p{layout, std::vector<double>(layout.param_count(), 0.0)};
    Rng rng = make_rng(derive_seed(seed, Stream::ParamInit));
    if (!layout.linear()) {
        const double bound1 = 1.0 / std::sqrt(static_cast<double>(layout.input_dim));
        for (auto& w : p.w1()) w = uniform_real(rng, -bound1, bound1);
        const double bound2 = 1.0 / std::sqrt(static_cast<double>(layout.hidden_dim));
        for (auto& w : p.w2()) w = uniform_real(rng, -bound2, bound2);
    } else {
        const double bound = 1.0 / std::sqrt(static_cast<double>(layout.input_dim));
        for (auto& w : p.w2()) w = uniform_real(rng, -bound, bound);
    }
    return p;
}

ModelParams zero_params(const ModelLayout& layout) {
    layout.validate();
    return ModelParams{layout, std::vector<double>(layout.param_count(), 0.0)};
}

std::vector<double> forward(const ModelParams& params, std::span<const double> x) {
    check_input(params, x);
    Workspace ws;
    forward_into(params, x.data(), ws);
    return std::move(ws.probs);
}

double sample_loss(const ModelParams& params, std::span<const double> x, int y) {
    if (y < 0 || y >= params.layout.num_classes) {
        throw PipelineError("label " + std::to_string(y) + " out of range [0, " +
                            std::to_string(params.layout.num_classes) + ")");
    }
    return -std::log(forward(params, x)[static_cast<std::size_t>(y)]);
}

GradStats batch_grad(const ModelParams& params, std::span<const double> features,
                     std::size_t feature_dim, std::span<const int> labels) {
    if (labels.empty()) throw PipelineError("empty batch");
    if (feature_dim == 0 || features.size() != labels.size() * feature_dim) {
        throw PipelineError("batch feature matrix shape mismatch");
    }
    std::vector<std::uint32_t> rows(labels.size());
    std::iota(rows.begin(), rows.end(), 0u);
    return batch_grad_impl(params, features.data(), feature_dim, labels.data(), rows);
}

GradStats batch_grad_rows(const ModelParams& params, const double* features,
                          std::size_t feature_dim, const int* labels,
                          std::span<const std::uint32_t> rows) {
    return batch_grad_impl(params, features, feature_dim, labels, rows);
}

std::uint64_t flops_per_sample(const ModelLayout& layout, Pass pass) {
    layout.validate();
    const auto d = static_cast<std::uint64_t>(layout.input_dim);
    const auto h = static_cast<std::uint64_t>(layout.hidden_dim);
    const auto c = static_cast<std::uint64_t>(layout.num_classes);
    const std::uint64_t macs = layout.linear() ? d * c : d * h + h * c;
    const std::uint64_t fwd = 2 * macs;
    return pass == Pass::Forward ? fwd : 3 * fwd;
}

}  // namespace prunebench
