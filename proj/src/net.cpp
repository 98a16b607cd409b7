#include "mvcca/net.hpp"

#include <cmath>
#include <stdexcept>

namespace mvcca {

namespace {

inline double act_apply(Activation a, double x) {
    return a == Activation::Sigmoid ? 1.0 / (1.0 + std::exp(-x)) : std::tanh(x);
}

// Derivative expressed through the activation output h.
inline double act_deriv_from_output(Activation a, double h) {
    return a == Activation::Sigmoid ? h * (1.0 - h) : 1.0 - h * h;
}

}  // namespace

double NetGradients::norm() const {
    double s = 0.0;
    for (const auto& w : d_weights) {
        const double f = w.frob_norm();
        s += f * f;
    }
    for (const auto& b : d_biases)
        for (double x : b) s += x * x;
    return std::sqrt(s);
}

ViewNetwork net_init(const std::vector<int>& layer_widths, Activation activation,
                     double dropout, uint64_t seed) {
    if (layer_widths.size() < 2)
        throw std::invalid_argument("net_init: need at least input and output widths");
    for (int w : layer_widths)
        if (w <= 0) throw std::invalid_argument("net_init: zero or negative layer width");
    if (dropout < 0.0 || dropout >= 1.0)
        throw std::invalid_argument("net_init: dropout must be in [0, 1)");

    ViewNetwork net;
    net.activation = activation;
    net.dropout = dropout;
    std::mt19937_64 rng(seed);
    for (size_t i = 1; i < layer_widths.size(); ++i) {
        const int fan_out = layer_widths[i], fan_in = layer_widths[i - 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> u(-bound, bound);
        Matrix w(fan_out, fan_in);
        for (int a = 0; a < fan_out; ++a)
            for (int b = 0; b < fan_in; ++b) w(a, b) = u(rng);
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(fan_out, 0.0);
    }
    return net;
}

ForwardCache forward(const ViewNetwork& net, const Matrix& x, bool train,
                     std::mt19937_64& rng) {
    if (x.rows() != net.input_dim())
        throw std::invalid_argument("forward: input dimension mismatch");
    const int layers = net.layer_count();
    ForwardCache cache;
    cache.inputs.reserve(layers);
    cache.activations.reserve(layers);
    cache.masks.resize(layers);

    Matrix h = x;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < layers; ++i) {
        cache.inputs.push_back(h);
        Matrix a = matmul(net.weights[i], h);
        for (int r = 0; r < a.rows(); ++r)
            for (int c = 0; c < a.cols(); ++c) a(r, c) += net.biases[i][r];
        const bool is_output = i == layers - 1;
        if (train && net.dropout > 0.0 && !is_output) {
            const double keep = 1.0 - net.dropout;
            Matrix mask(a.rows(), a.cols());
            for (int r = 0; r < a.rows(); ++r)
                for (int c = 0; c < a.cols(); ++c)
                    mask(r, c) = u(rng) < keep ? 1.0 / keep : 0.0;
            for (int r = 0; r < a.rows(); ++r)
                for (int c = 0; c < a.cols(); ++c) a(r, c) *= mask(r, c);
            cache.masks[i] = std::move(mask);
        }
        if (!(is_output && net.linear_output))
            for (int r = 0; r < a.rows(); ++r)
                for (int c = 0; c < a.cols(); ++c)
                    a(r, c) = act_apply(net.activation, a(r, c));
        cache.activations.push_back(a);
        h = std::move(a);
    }
    cache.output = h;
    return cache;
}

Matrix forward_eval(const ViewNetwork& net, const Matrix& x) {
    std::mt19937_64 unused(0);
    return forward(net, x, false, unused).output;
}

NetGradients backward(const ViewNetwork& net, const ForwardCache& cache,
                      const Matrix& d_output) {
    const int layers = net.layer_count();
    if (static_cast<int>(cache.activations.size()) != layers)
        throw std::invalid_argument("backward: cache does not match network");
    if (d_output.rows() != net.output_dim() ||
        d_output.cols() != cache.output.cols())
        throw std::invalid_argument("backward: output gradient shape mismatch");

    NetGradients g;
    g.d_weights.resize(layers);
    g.d_biases.resize(layers);

    Matrix dh = d_output;
    for (int i = layers - 1; i >= 0; --i) {
        const bool is_output = i == layers - 1;
        Matrix da = std::move(dh);
        if (!(is_output && net.linear_output)) {
            const Matrix& h = cache.activations[i];
            for (int r = 0; r < da.rows(); ++r)
                for (int c = 0; c < da.cols(); ++c)
                    da(r, c) *= act_deriv_from_output(net.activation, h(r, c));
        }
        if (!cache.masks[i].empty())
            for (int r = 0; r < da.rows(); ++r)
                for (int c = 0; c < da.cols(); ++c)
                    da(r, c) *= cache.masks[i](r, c);
        g.d_weights[i] = matmul_nt(da, cache.inputs[i]);
        g.d_biases[i].assign(da.rows(), 0.0);
        for (int r = 0; r < da.rows(); ++r)
            for (int c = 0; c < da.cols(); ++c) g.d_biases[i][r] += da(r, c);
        dh = matmul_tn(net.weights[i], da);
    }
    g.d_input = std::move(dh);
    return g;
}

AdamState adam_init(const ViewNetwork& net, double lr) {
    AdamState s;
    s.lr = lr;
    for (const auto& w : net.weights) {
        s.m_weights.emplace_back(w.rows(), w.cols());
        s.v_weights.emplace_back(w.rows(), w.cols());
    }
    for (const auto& b : net.biases) {
        s.m_biases.emplace_back(b.size(), 0.0);
        s.v_biases.emplace_back(b.size(), 0.0);
    }
    return s;
}

namespace {
inline void adam_update(double* p, double* m, double* v, const double* g,
                        size_t count, const AdamState& s, double c1, double c2) {
    for (size_t i = 0; i < count; ++i) {
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        p[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
    }
}
}  // namespace

void adam_step(ViewNetwork& net, const NetGradients& grads, AdamState& state) {
    state.step += 1;
    const double c1 = 1.0 - std::pow(state.beta1, state.step);
    const double c2 = 1.0 - std::pow(state.beta2, state.step);
    for (size_t i = 0; i < net.weights.size(); ++i) {
        adam_update(net.weights[i].data(), state.m_weights[i].data(),
                    state.v_weights[i].data(), grads.d_weights[i].data(),
                    static_cast<size_t>(net.weights[i].rows()) * net.weights[i].cols(),
                    state, c1, c2);
        adam_update(net.biases[i].data(), state.m_biases[i].data(),
                    state.v_biases[i].data(), grads.d_biases[i].data(),
                    net.biases[i].size(), state, c1, c2);
    }
}

}  // namespace mvcca
