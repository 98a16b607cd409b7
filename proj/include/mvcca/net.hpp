#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mvcca/matrix.hpp"

namespace mvcca {

enum class Activation { Sigmoid, Tanh };

// Per-view multilayer perceptron. Layer i maps width[i-1] -> width[i]; the
// activation is applied at every layer including the output unless
// linear_output is set. Inverted dropout sits between each linear map and its
// nonlinearity, except at the output layer.
struct ViewNetwork {
    std::vector<Matrix> weights;              // W_i: width[i] x width[i-1]
    std::vector<std::vector<double>> biases;  // b_i: width[i]
    Activation activation = Activation::Sigmoid;
    double dropout = 0.0;
    bool linear_output = false;

    int input_dim() const { return weights.front().cols(); }
    int output_dim() const { return weights.back().rows(); }
    int layer_count() const { return static_cast<int>(weights.size()); }
};

struct ForwardCache {
    std::vector<Matrix> inputs;       // input to each layer (h_{i-1})
    std::vector<Matrix> activations;  // output of each layer (h_i)
    std::vector<Matrix> masks;        // scaled dropout multipliers; empty in eval mode
    Matrix output;
};

struct NetGradients {
    std::vector<Matrix> d_weights;
    std::vector<std::vector<double>> d_biases;
    Matrix d_input;

    double norm() const;
};

struct AdamState {
    std::vector<Matrix> m_weights, v_weights;
    std::vector<std::vector<double>> m_biases, v_biases;
    long step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Glorot-uniform weights, zero biases; layer_widths runs input first, output
// width (= m) last.
ViewNetwork net_init(const std::vector<int>& layer_widths, Activation activation,
                     double dropout, uint64_t seed);

// Train mode applies inverted dropout and records masks in the cache; eval
// mode is deterministic and ignores the rng.
ForwardCache forward(const ViewNetwork& net, const Matrix& x, bool train,
                     std::mt19937_64& rng);
Matrix forward_eval(const ViewNetwork& net, const Matrix& x);

NetGradients backward(const ViewNetwork& net, const ForwardCache& cache,
                      const Matrix& d_output);

AdamState adam_init(const ViewNetwork& net, double lr = 1e-3);
void adam_step(ViewNetwork& net, const NetGradients& grads, AdamState& state);

}  // namespace mvcca
