#include "mvcca/deep.hpp"

#include <cmath>
#include <sstream>

#include "mvcca/errors.hpp"
#include "mvcca/kernels.hpp"
#include "mvcca/linalg.hpp"

namespace mvcca {

namespace {

uint64_t mix_seed(uint64_t seed, uint64_t salt) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Subtract per-row means (the chain rule through the centering map).
Matrix row_center(const Matrix& a) {
    Matrix out = a;
    for (int i = 0; i < a.rows(); ++i) {
        double mean = 0.0;
        for (int j = 0; j < a.cols(); ++j) mean += a(i, j);
        mean /= a.cols();
        for (int j = 0; j < a.cols(); ++j) out(i, j) -= mean;
    }
    return out;
}

Matrix symmetrize(const Matrix& a) {
    Matrix s(a.rows(), a.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
    return s;
}

std::vector<int> net_widths(int input, const std::vector<int>& hidden, int m) {
    std::vector<int> widths = {input};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(m);
    return widths;
}

}  // namespace

WhitenedTensor whitened_tensor(const std::vector<Matrix>& centered_outputs,
                               double eps) {
    WhitenedTensor wt;
    wt.c = outer_accumulate(centered_outputs);
    wt.m = wt.c;
    for (size_t r = 0; r < centered_outputs.size(); ++r) {
        const Matrix cov = matmul_nt(centered_outputs[r], centered_outputs[r]);
        wt.whiteners.push_back(inv_sqrt_sym(cov, eps));
        wt.m = mode_product(wt.m, wt.whiteners.back(), static_cast<int>(r));
    }
    return wt;
}

DtccaLossGrad dtcca_loss_and_grad(const std::vector<Matrix>& centered_outputs,
                                  const DenseTensor& target, double eps,
                                  bool freeze_whitening) {
    const int k = static_cast<int>(centered_outputs.size());
    const WhitenedTensor wt = whitened_tensor(centered_outputs, eps);
    if (wt.m.dims() != target.dims())
        throw std::invalid_argument("dtcca_loss_and_grad: target dims mismatch");

    DenseTensor diff = wt.m;
    double loss = 0.0;
    for (size_t i = 0; i < diff.size(); ++i) {
        diff[i] -= target[i];
        loss += diff[i] * diff[i];
    }

    DtccaLossGrad out;
    out.loss = loss;
    out.d_outputs.resize(k);

    // dL/dC: pull dL/dM = 2*diff back through every whitener (symmetric).
    DenseTensor d_cov = diff;
    for (size_t i = 0; i < d_cov.size(); ++i) d_cov[i] *= 2.0;
    const DenseTensor d_m = d_cov;  // 2 (M - target)
    for (int r = 0; r < k; ++r) d_cov = mode_product(d_cov, wt.whiteners[r], r);

    const int n = centered_outputs[0].cols();
    std::vector<const double*> output_ptrs;
    for (const auto& y : centered_outputs) output_ptrs.push_back(y.data());
    for (int r = 0; r < k; ++r) {
        // Covariance path: MTTKRP of dL/dC against the other views' outputs.
        Matrix d_y(centered_outputs[r].rows(), n);
        kernels::mttkrp(d_cov.data(), d_cov.dims(), r, output_ptrs, n, d_y.data(),
                        kernels::default_exec());
        out.d_outputs[r] = std::move(d_y);
    }

    if (!freeze_whitening) {
        for (int r = 0; r < k; ++r) {
            // B_r = C with every whitener applied except mode r.
            DenseTensor b = wt.c;
            for (int s = 0; s < k; ++s)
                if (s != r) b = mode_product(b, wt.whiteners[s], s);
            const Matrix d_w = matmul_nt(unfold(d_m, r), unfold(b, r));
            const Matrix cov =
                matmul_nt(centered_outputs[r], centered_outputs[r]);
            // The Daleckii-Krein map is self-adjoint on symmetric matrices.
            const Matrix d_cov_r = frechet_inv_sqrt(cov, symmetrize(d_w), eps);
            out.d_outputs[r] += matmul(d_cov_r, centered_outputs[r]) * 2.0;
        }
    }
    return out;
}

DtccaModel dtcca_fit(const std::vector<Matrix>& views, int m,
                     const TrainConfig& config, const DiagnosticSink& sink) {
    if (views.empty()) throw std::invalid_argument("dtcca_fit: no views");
    const int k = static_cast<int>(views.size());
    const int n = views[0].cols();
    for (const auto& v : views)
        if (v.cols() != n)
            throw std::invalid_argument("dtcca_fit: views disagree on sample count");
    if (config.epochs < 1) throw std::invalid_argument("dtcca_fit: epochs must be >= 1");

    DtccaModel model;
    model.eps = config.eps;
    model.config = config;
    std::vector<AdamState> adam;
    for (int r = 0; r < k; ++r) {
        ViewNetwork net = net_init(net_widths(views[r].rows(), config.hidden_widths, m),
                                   config.activation, config.dropout,
                                   mix_seed(config.seed, r));
        net.linear_output = config.linear_output;
        adam.push_back(adam_init(net, config.lr));
        model.nets.push_back(std::move(net));
    }
    std::mt19937_64 dropout_rng(mix_seed(config.seed, 0x5eedULL));

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
      try {
        std::vector<ForwardCache> caches(k);
        std::vector<Matrix> centered(k);
        for (int r = 0; r < k; ++r) {
            caches[r] = forward(model.nets[r], views[r], true, dropout_rng);
            centered[r] = center_columns(caches[r].output).first;
        }
        const WhitenedTensor wt = whitened_tensor(centered, config.eps);
        const CpFactors factors = cp_als(wt.m, m, config.als);
        const DenseTensor target = cp_reconstruct(factors);

        EpochRecord rec;
        rec.epoch = epoch;
        rec.rho = factors.weight_sum();
        for (int step = 0; step < config.inner_steps; ++step) {
            if (step > 0) {
                for (int r = 0; r < k; ++r) {
                    caches[r] = forward(model.nets[r], views[r], true, dropout_rng);
                    centered[r] = center_columns(caches[r].output).first;
                }
            }
            const DtccaLossGrad lg =
                dtcca_loss_and_grad(centered, target, config.eps,
                                    config.freeze_whitening);
            if (!std::isfinite(lg.loss)) {
                std::ostringstream msg;
                msg << "dtcca_fit: non-finite loss at epoch " << epoch;
                throw NumericError(msg.str());
            }
            rec.loss = lg.loss;
            double gn2 = 0.0;
            for (int r = 0; r < k; ++r) {
                const NetGradients grads =
                    backward(model.nets[r], caches[r], row_center(lg.d_outputs[r]));
                const double gn = grads.norm();
                gn2 += gn * gn;
                adam_step(model.nets[r], grads, adam[r]);
            }
            rec.grad_norm = std::sqrt(gn2);
        }
        model.diagnostics.push_back(rec);
        if (sink) sink(rec);
      } catch (const NumericError& err) {
        std::ostringstream msg;
        msg << err.what() << " (dtcca_fit, epoch " << epoch << ")";
        throw NumericError(msg.str());
      }
    }

    // Freeze the deployed model from an eval-mode pass (no dropout).
    std::vector<Matrix> centered(k);
    model.means.resize(k);
    for (int r = 0; r < k; ++r) {
        auto [c, mu] = center_columns(forward_eval(model.nets[r], views[r]));
        centered[r] = std::move(c);
        model.means[r] = std::move(mu);
    }
    WhitenedTensor wt = whitened_tensor(centered, config.eps);
    model.whiteners = std::move(wt.whiteners);
    model.factors = cp_als(wt.m, m, config.als);
    return model;
}

Matrix dtcca_transform(const DtccaModel& model, int r, const Matrix& x) {
    if (r < 0 || r >= static_cast<int>(model.nets.size()))
        throw std::invalid_argument("dtcca_transform: view index out of range");
    Matrix y = forward_eval(model.nets[r], x);
    for (int i = 0; i < y.rows(); ++i)
        for (int j = 0; j < y.cols(); ++j) y(i, j) -= model.means[r][i];
    return matmul_tn(model.factors.factors[r], matmul(model.whiteners[r], y));
}

std::vector<Matrix> dtcca_transform(const DtccaModel& model,
                                    const std::vector<Matrix>& views) {
    std::vector<Matrix> z;
    for (size_t r = 0; r < views.size(); ++r)
        z.push_back(dtcca_transform(model, static_cast<int>(r), views[r]));
    return z;
}

DgccaModel dgcca_fit(const std::vector<Matrix>& views, int m,
                     const TrainConfig& config, const DiagnosticSink& sink) {
    if (views.empty()) throw std::invalid_argument("dgcca_fit: no views");
    const int k = static_cast<int>(views.size());
    const int n = views[0].cols();
    if (n < m) throw std::invalid_argument("dgcca_fit: need n >= m");

    DgccaModel model;
    model.eps = config.eps;
    model.config = config;
    std::vector<AdamState> adam;
    for (int r = 0; r < k; ++r) {
        ViewNetwork net = net_init(net_widths(views[r].rows(), config.hidden_widths, m),
                                   config.activation, config.dropout,
                                   mix_seed(config.seed, r));
        net.linear_output = config.linear_output;
        adam.push_back(adam_init(net, config.lr));
        model.nets.push_back(std::move(net));
    }
    std::mt19937_64 dropout_rng(mix_seed(config.seed, 0x5eedULL));

    // One refresh of G and P per epoch (before the gradient step), then a
    // gradient step with G and P held fixed.
    auto refresh = [&](const std::vector<Matrix>& centered, Matrix& g,
                       std::vector<Matrix>& projections, double& objective) {
        Matrix q(n, n);
        std::vector<Matrix> solved(k);
        for (int r = 0; r < k; ++r) {
            Matrix key = matmul_nt(centered[r], centered[r]);
            for (int i = 0; i < key.rows(); ++i) key(i, i) += config.eps;
            const Matrix w = inv_sqrt_sym(key, 0.0);
            solved[r] = matmul(w, matmul(w, centered[r]));  // (FF^T + eps I)^{-1} F
            q += matmul_tn(centered[r], solved[r]);
        }
        const SymEig e = sym_eig(q);
        g = Matrix(m, n);
        objective = 0.0;
        for (int l = 0; l < m; ++l) {
            objective += e.eigenvalues[l];
            for (int j = 0; j < n; ++j) g(l, j) = e.eigenvectors(j, l);
        }
        projections.resize(k);
        for (int r = 0; r < k; ++r) projections[r] = matmul_nt(solved[r], g);
    };

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::vector<ForwardCache> caches(k);
        std::vector<Matrix> centered(k);
        for (int r = 0; r < k; ++r) {
            caches[r] = forward(model.nets[r], views[r], true, dropout_rng);
            centered[r] = center_columns(caches[r].output).first;
        }
        Matrix g;
        std::vector<Matrix> projections;
        double objective = 0.0;
        refresh(centered, g, projections, objective);

        EpochRecord rec;
        rec.epoch = epoch;
        rec.rho = objective;
        double loss = 0.0, gn2 = 0.0;
        for (int r = 0; r < k; ++r) {
            const Matrix recon = matmul_tn(projections[r], centered[r]);
            const Matrix resid = g - recon;
            loss += resid.frob_norm() * resid.frob_norm();
            // dL/dF = 2 P P^T F - 2 P G with G, P frozen.
            const Matrix d_f = matmul(projections[r], recon - g) * 2.0;
            const NetGradients grads =
                backward(model.nets[r], caches[r], row_center(d_f));
            const double gn = grads.norm();
            gn2 += gn * gn;
            adam_step(model.nets[r], grads, adam[r]);
        }
        if (!std::isfinite(loss)) {
            std::ostringstream msg;
            msg << "dgcca_fit: non-finite loss at epoch " << epoch;
            throw NumericError(msg.str());
        }
        rec.loss = loss;
        rec.grad_norm = std::sqrt(gn2);
        model.diagnostics.push_back(rec);
        if (sink) sink(rec);
    }

    std::vector<Matrix> centered(k);
    model.means.resize(k);
    for (int r = 0; r < k; ++r) {
        auto [c, mu] = center_columns(forward_eval(model.nets[r], views[r]));
        centered[r] = std::move(c);
        model.means[r] = std::move(mu);
    }
    double objective = 0.0;
    refresh(centered, model.g, model.projections, objective);
    return model;
}

Matrix dgcca_transform(const DgccaModel& model, int r, const Matrix& x) {
    Matrix y = forward_eval(model.nets[r], x);
    for (int i = 0; i < y.rows(); ++i)
        for (int j = 0; j < y.cols(); ++j) y(i, j) -= model.means[r][i];
    return matmul_tn(model.projections[r], y);
}

std::vector<Matrix> dgcca_transform(const DgccaModel& model,
                                    const std::vector<Matrix>& views) {
    std::vector<Matrix> z;
    for (size_t r = 0; r < views.size(); ++r)
        z.push_back(dgcca_transform(model, static_cast<int>(r), views[r]));
    return z;
}

std::vector<DepthResult> depth_sweep(const std::vector<Matrix>& views, int m,
                                     const std::vector<int>& depths,
                                     Activation activation,
                                     const TrainConfig& config) {
    std::vector<DepthResult> results;
    const int hidden_width =
        config.hidden_widths.empty() ? 500 : config.hidden_widths[0];
    for (int depth : depths) {
        if (depth < 2)
            throw std::invalid_argument("depth_sweep: depth must be >= 2");
        TrainConfig cfg = config;
        cfg.activation = activation;
        cfg.hidden_widths.assign(depth - 1, hidden_width);

        DepthResult res;
        res.depth = depth;
        int epochs_seen = 0;
        double last_grad = 0.0;
        const DiagnosticSink sink = [&](const EpochRecord& rec) {
            epochs_seen = rec.epoch;
            last_grad = rec.grad_norm;
        };
        try {
            const DtccaModel model = dtcca_fit(views, m, cfg, sink);
            res.epochs_run = epochs_seen;
            res.rho = tcc_objective(dtcca_transform(model, views)).first;
            if (last_grad < 1e-12) {
                res.completed = false;
                res.abort_reason = "vanishing gradient";
            } else {
                res.completed = true;
            }
        } catch (const NumericError& err) {
            res.completed = false;
            res.epochs_run = epochs_seen;
            res.abort_reason = err.what();
        }
        results.push_back(res);
    }
    return results;
}

}  // namespace mvcca
