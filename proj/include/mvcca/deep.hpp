#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mvcca/cca.hpp"
#include "mvcca/net.hpp"
#include "mvcca/tensor.hpp"

namespace mvcca {

struct TrainConfig {
    int epochs = 100;
    double lr = 1e-3;
    uint64_t seed = 0;
    double eps = 1e-4;
    CpOptions als;
    bool freeze_whitening = false;
    Activation activation = Activation::Sigmoid;
    std::vector<int> hidden_widths = {500, 500};
    double dropout = 0.1;
    bool linear_output = false;
    int inner_steps = 1;
};

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;
    double rho = 0.0;
    double grad_norm = 0.0;
};

using DiagnosticSink = std::function<void(const EpochRecord&)>;

struct DtccaModel {
    std::vector<ViewNetwork> nets;
    std::vector<Matrix> whiteners;           // (C_rr + eps I)^{-1/2}, eval mode
    CpFactors factors;                       // U_r, weights
    std::vector<std::vector<double>> means;  // eval-mode training output means
    std::vector<EpochRecord> diagnostics;
    double eps = 0.0;
    TrainConfig config;
};

struct DgccaModel {
    std::vector<ViewNetwork> nets;
    Matrix g;  // m x n, rows orthonormal
    std::vector<Matrix> projections;
    std::vector<std::vector<double>> means;
    std::vector<EpochRecord> diagnostics;
    double eps = 0.0;
    TrainConfig config;
};

// Whitened covariance tensor of centered outputs plus its ingredients.
struct WhitenedTensor {
    DenseTensor m;                  // whitened covariance tensor
    DenseTensor c;                  // raw covariance tensor
    std::vector<Matrix> whiteners;  // per view
};

WhitenedTensor whitened_tensor(const std::vector<Matrix>& centered_outputs,
                               double eps);

// Squared Frobenius loss ||M - M^||^2 of the whitened covariance tensor of
// the centered outputs against a constant target, with gradients w.r.t. each
// output matrix. The gradient flows through the covariance tensor and, unless
// freeze_whitening, through the whiteners as well.
struct DtccaLossGrad {
    double loss = 0.0;
    std::vector<Matrix> d_outputs;  // dL/d centered output, per view
};

DtccaLossGrad dtcca_loss_and_grad(const std::vector<Matrix>& centered_outputs,
                                  const DenseTensor& target, double eps,
                                  bool freeze_whitening);

DtccaModel dtcca_fit(const std::vector<Matrix>& views, int m,
                     const TrainConfig& config, const DiagnosticSink& sink = {});

Matrix dtcca_transform(const DtccaModel& model, int r, const Matrix& x);
std::vector<Matrix> dtcca_transform(const DtccaModel& model,
                                    const std::vector<Matrix>& views);

DgccaModel dgcca_fit(const std::vector<Matrix>& views, int m,
                     const TrainConfig& config, const DiagnosticSink& sink = {});

Matrix dgcca_transform(const DgccaModel& model, int r, const Matrix& x);
std::vector<Matrix> dgcca_transform(const DgccaModel& model,
                                    const std::vector<Matrix>& views);

struct DepthResult {
    int depth = 0;            // total layer count, output included
    bool completed = false;   // false when training aborted
    double rho = 0.0;         // final eval-mode high-order correlation
    int epochs_run = 0;
    std::string abort_reason;
};

// Trains one model per depth; aborts (divergence, vanishing gradients) are
// recorded rather than thrown.
std::vector<DepthResult> depth_sweep(const std::vector<Matrix>& views, int m,
                                     const std::vector<int>& depths,
                                     Activation activation,
                                     const TrainConfig& config);

}  // namespace mvcca
