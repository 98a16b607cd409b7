#include "mvcca/eval.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "mvcca/errors.hpp"

namespace mvcca {

namespace {

uint64_t mix_seed(uint64_t seed, uint64_t salt) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<int> labels_subset(const std::vector<int>& labels,
                               const std::vector<int>& idx) {
    std::vector<int> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(labels[i]);
    return out;
}

}  // namespace

std::vector<SplitPlan> make_splits(const std::vector<int>& labels, double ratio,
                                   int folds, uint64_t seed) {
    if (ratio <= 0.0 || ratio >= 1.0)
        throw std::invalid_argument("make_splits: ratio must be in (0, 1)");
    if (folds < 1) throw std::invalid_argument("make_splits: folds must be >= 1");
    std::map<int, std::vector<int>> by_class;
    for (size_t i = 0; i < labels.size(); ++i)
        by_class[labels[i]].push_back(static_cast<int>(i));
    for (const auto& [cls, idx] : by_class)
        if (idx.size() < 2) {
            std::ostringstream msg;
            msg << "make_splits: class " << cls << " has " << idx.size()
                << " sample(s); need at least 2";
            throw DataError(msg.str());
        }

    std::vector<SplitPlan> plans;
    for (int f = 0; f < folds; ++f) {
        SplitPlan plan;
        plan.seed = seed;
        plan.fold = f;
        plan.ratio = ratio;
        std::mt19937_64 rng(mix_seed(seed, static_cast<uint64_t>(f)));
        for (const auto& [cls, idx] : by_class) {
            std::vector<int> shuffled = idx;
            std::shuffle(shuffled.begin(), shuffled.end(), rng);
            const int take = static_cast<int>(
                std::ceil(ratio * static_cast<double>(shuffled.size())));
            for (size_t i = 0; i < shuffled.size(); ++i)
                (static_cast<int>(i) < take ? plan.train : plan.test)
                    .push_back(shuffled[i]);
        }
        std::sort(plan.train.begin(), plan.train.end());
        std::sort(plan.test.begin(), plan.test.end());
        plans.push_back(std::move(plan));
    }
    return plans;
}

Matrix concat_projections(const std::vector<Matrix>& z) {
    if (z.empty()) throw std::invalid_argument("concat_projections: empty input");
    int total = 0;
    for (const auto& zr : z) {
        if (zr.cols() != z[0].cols())
            throw std::invalid_argument("concat_projections: sample counts differ");
        total += zr.rows();
    }
    Matrix out(total, z[0].cols());
    int row = 0;
    for (const auto& zr : z) {
        for (int i = 0; i < zr.rows(); ++i, ++row)
            for (int j = 0; j < zr.cols(); ++j) out(row, j) = zr(i, j);
    }
    return out;
}

namespace {

// Primal damped Newton on the squared-hinge objective
// 0.5 ||w||^2 + (c/n) sum_i max(0, 1 - t_i (w.x_i + b))^2.
void svm_binary_fit(const Matrix& x, const std::vector<double>& t, double c,
                    double* w_out, double* b_out) {
    const int d = x.rows(), n = x.cols(), dim = d + 1;
    const double scale = c / n;
    std::vector<double> w(dim, 0.0);  // bias last, unregularized

    const auto objective = [&](const std::vector<double>& wv,
                               std::vector<double>& margins) {
        double f = 0.0;
        for (int j = 0; j < d; ++j) f += 0.5 * wv[j] * wv[j];
        for (int i = 0; i < n; ++i) {
            double s = wv[d];
            for (int j = 0; j < d; ++j) s += wv[j] * x(j, i);
            margins[i] = t[i] * s;
            const double viol = 1.0 - margins[i];
            if (viol > 0.0) f += scale * viol * viol;
        }
        return f;
    };

    std::vector<double> margins(n), trial_margins(n);
    double f = objective(w, margins);
    for (int iter = 0; iter < 100; ++iter) {
        std::vector<double> g(dim, 0.0);
        for (int j = 0; j < d; ++j) g[j] = w[j];
        std::vector<int> active;
        for (int i = 0; i < n; ++i)
            if (margins[i] < 1.0) {
                active.push_back(i);
                const double coef = -2.0 * scale * t[i] * (1.0 - margins[i]);
                for (int j = 0; j < d; ++j) g[j] += coef * x(j, i);
                g[d] += coef;
            }
        double gnorm = 0.0;
        for (double v : g) gnorm += v * v;
        if (std::sqrt(gnorm) < 1e-10) break;

        Matrix h(dim, dim);
        for (int j = 0; j < d; ++j) h(j, j) = 1.0;
        h(d, d) = 1e-12;
        for (int i : active) {
            for (int a = 0; a < dim; ++a) {
                const double xa = a < d ? x(a, i) : 1.0;
                const double f2 = 2.0 * scale * xa;
                for (int b = a; b < dim; ++b)
                    h(a, b) += f2 * (b < d ? x(b, i) : 1.0);
            }
        }
        for (int a = 0; a < dim; ++a)
            for (int b = 0; b < a; ++b) h(a, b) = h(b, a);

        std::vector<double> step = g;
        const int info = LAPACKE_dposv(LAPACK_ROW_MAJOR, 'U', dim, 1, h.data(),
                                       dim, step.data(), 1);
        if (info != 0) throw NumericError("linear_svm_fit: singular Hessian");

        double gdots = 0.0;
        for (int j = 0; j < dim; ++j) gdots += g[j] * step[j];
        double alpha = 1.0;
        std::vector<double> trial(dim);
        double f_new = f;
        for (int ls = 0; ls < 30; ++ls) {
            for (int j = 0; j < dim; ++j) trial[j] = w[j] - alpha * step[j];
            f_new = objective(trial, trial_margins);
            if (f_new <= f - 1e-4 * alpha * gdots) break;
            alpha *= 0.5;
        }
        const double drop = f - f_new;
        w = trial;
        margins = trial_margins;
        f = f_new;
        if (drop <= 1e-6 * std::max(1.0, std::abs(f))) break;
    }
    for (int j = 0; j < d; ++j) w_out[j] = w[j];
    *b_out = w[d];
}

}  // namespace

LinearSvm linear_svm_fit(const Matrix& x, const std::vector<int>& y, double c) {
    if (c <= 0.0) throw std::invalid_argument("linear_svm_fit: C must be > 0");
    if (static_cast<int>(y.size()) != x.cols())
        throw std::invalid_argument("linear_svm_fit: label count mismatch");
    if (!x.all_finite())
        throw DataError("linear_svm_fit: non-finite feature values");
    std::vector<int> classes = y;
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    if (classes.size() < 2)
        throw std::invalid_argument("linear_svm_fit: need at least 2 classes");

    LinearSvm svm;
    svm.c = c;
    svm.class_ids = classes;
    svm.weights = Matrix(static_cast<int>(classes.size()), x.rows());
    svm.biases.assign(classes.size(), 0.0);
    std::vector<double> t(y.size());
    for (size_t ci = 0; ci < classes.size(); ++ci) {
        for (size_t i = 0; i < y.size(); ++i)
            t[i] = y[i] == classes[ci] ? 1.0 : -1.0;
        svm_binary_fit(x, t, c, svm.weights.row(static_cast<int>(ci)),
                       &svm.biases[ci]);
    }
    return svm;
}

std::vector<int> linear_svm_predict(const LinearSvm& svm, const Matrix& x) {
    if (x.rows() != svm.weights.cols())
        throw std::invalid_argument("linear_svm_predict: feature dim mismatch");
    std::vector<int> pred(x.cols());
    for (int i = 0; i < x.cols(); ++i) {
        int best = 0;
        double best_margin = -1e300;
        for (int ci = 0; ci < svm.weights.rows(); ++ci) {
            double s = svm.biases[ci];
            for (int j = 0; j < x.rows(); ++j) s += svm.weights(ci, j) * x(j, i);
            if (s > best_margin) {
                best_margin = s;
                best = ci;
            }
        }
        pred[i] = svm.class_ids[best];
    }
    return pred;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.size() != truth.size() || predicted.empty())
        throw std::invalid_argument("accuracy: size mismatch");
    int hits = 0;
    for (size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == truth[i]) ++hits;
    return static_cast<double>(hits) / predicted.size();
}

namespace {

struct FoldFeatures {
    Matrix train;  // (k*m) x n_train
    Matrix test;
};

FoldFeatures fit_and_project(const std::vector<Matrix>& train_views,
                             const std::vector<Matrix>& test_views,
                             const EvalMethod& method, int m, uint64_t fold_seed) {
    std::vector<Matrix> z_train, z_test;
    if (method.name == "cca2") {
        if (train_views.size() != 2)
            throw std::invalid_argument("cca2 requires exactly 2 views");
        const ProjectionModel model =
            fit_cca2(train_views[0], train_views[1], m, method.eps);
        z_train = transform(model, train_views);
        z_test = transform(model, test_views);
    } else if (method.name == "mcca" || method.name == "lscca") {
        const ProjectionModel model = fit_mcca_sumcor(train_views, m, method.eps);
        z_train = transform(model, train_views);
        z_test = transform(model, test_views);
    } else if (method.name == "gcca") {
        const GccaModel model = fit_gcca(train_views, m, method.eps);
        z_train = transform(model, train_views);
        z_test = transform(model, test_views);
    } else if (method.name == "tcca") {
        const ProjectionModel model =
            fit_tcca(train_views, m, method.eps, method.tcca);
        z_train = transform(model, train_views);
        z_test = transform(model, test_views);
    } else if (method.name == "dtcca") {
        TrainConfig cfg = method.train;
        cfg.eps = method.eps;
        cfg.seed = fold_seed;
        const DtccaModel model = dtcca_fit(train_views, m, cfg);
        z_train = dtcca_transform(model, train_views);
        z_test = dtcca_transform(model, test_views);
    } else if (method.name == "dgcca") {
        TrainConfig cfg = method.train;
        cfg.eps = method.eps;
        cfg.seed = fold_seed;
        const DgccaModel model = dgcca_fit(train_views, m, cfg);
        z_train = dgcca_transform(model, train_views);
        z_test = dgcca_transform(model, test_views);
    } else {
        throw ConfigError("unknown method '" + method.name + "'");
    }
    return {concat_projections(z_train), concat_projections(z_test)};
}

double select_and_score(const Matrix& f_train, const std::vector<int>& y_train,
                        const Matrix& f_test, const std::vector<int>& y_test,
                        const std::vector<double>& c_grid, uint64_t seed) {
    if (c_grid.empty()) throw std::invalid_argument("empty C grid");
    double best_c = c_grid[0];
    if (c_grid.size() > 1) {
        bool tuned = false;
        try {
            const SplitPlan inner =
                make_splits(y_train, 0.8, 1, mix_seed(seed, 99))[0];
            const Matrix fi = f_train.cols_subset(inner.train);
            const Matrix fv = f_train.cols_subset(inner.test);
            const std::vector<int> yi = labels_subset(y_train, inner.train);
            const std::vector<int> yv = labels_subset(y_train, inner.test);
            if (!inner.test.empty()) {
                double best_acc = -1.0;
                for (double c : c_grid) {
                    const LinearSvm svm = linear_svm_fit(fi, yi, c);
                    const double acc = accuracy(linear_svm_predict(svm, fv), yv);
                    if (acc > best_acc) {
                        best_acc = acc;
                        best_c = c;
                    }
                }
                tuned = true;
            }
        } catch (const DataError&) {
            // classes too small to split further
        } catch (const std::invalid_argument&) {
        }
        if (!tuned) best_c = c_grid[std::min<size_t>(1, c_grid.size() - 1)];
    }
    const LinearSvm svm = linear_svm_fit(f_train, y_train, best_c);
    return accuracy(linear_svm_predict(svm, f_test), y_test);
}

}  // namespace

AccuracyReport run_protocol(const MultiViewDataset& dataset,
                            const EvalMethod& method, int m, double ratio,
                            int folds, uint64_t seed,
                            const std::vector<double>& c_grid) {
    if (!dataset.has_labels())
        throw std::invalid_argument("run_protocol: dataset has no labels");
    const auto splits = make_splits(dataset.labels, ratio, folds, seed);

    AccuracyReport report;
    report.method = method.name;
    report.m = m;
    report.ratio = ratio;
    for (int r = 0; r < dataset.k(); ++r) report.view_indices.push_back(r);

    for (const SplitPlan& split : splits) {
        const uint64_t fold_seed = mix_seed(seed, 1000 + split.fold);
        std::vector<Matrix> train_views, test_views;
        for (const Matrix& view : dataset.views) {
            Matrix tr = view.cols_subset(split.train);
            Matrix te = view.cols_subset(split.test);
            if (method.pca) {
                auto [centered, mean] = center_columns(tr);
                const Matrix proj =
                    pca_fit(centered, method.pca_energy, method.pca_max_dim);
                tr = matmul(proj, centered);
                for (int i = 0; i < te.rows(); ++i)
                    for (int j = 0; j < te.cols(); ++j) te(i, j) -= mean[i];
                te = matmul(proj, te);
            }
            train_views.push_back(std::move(tr));
            test_views.push_back(std::move(te));
        }
        const FoldFeatures feats =
            fit_and_project(train_views, test_views, method, m, fold_seed);
        const double acc = select_and_score(
            feats.train, labels_subset(dataset.labels, split.train), feats.test,
            labels_subset(dataset.labels, split.test), c_grid, fold_seed);
        report.fold_accuracies.push_back(acc);
    }

    const double n = static_cast<double>(report.fold_accuracies.size());
    for (double a : report.fold_accuracies) report.mean += a;
    report.mean /= n;
    for (double a : report.fold_accuracies)
        report.stddev += (a - report.mean) * (a - report.mean);
    report.stddev = std::sqrt(report.stddev / n);
    return report;
}

std::vector<std::vector<int>> view_combinations(int k, int min_size) {
    if (k < 1 || min_size < 1 || min_size > k)
        throw std::invalid_argument("view_combinations: bad sizes");
    std::vector<std::vector<int>> out;
    std::vector<int> current;
    // lexicographic within each size, sizes ascending
    const std::function<void(int, int)> rec = [&](int start, int need) {
        if (need == 0) {
            out.push_back(current);
            return;
        }
        for (int i = start; i <= k - need; ++i) {
            current.push_back(i);
            rec(i + 1, need - 1);
            current.pop_back();
        }
    };
    for (int size = min_size; size <= k; ++size) rec(0, size);
    return out;
}

std::vector<SweepRow> sweep(const MultiViewDataset& dataset,
                            const std::vector<EvalMethod>& methods,
                            const std::vector<int>& m_grid,
                            const std::vector<std::vector<int>>& combinations,
                            const std::vector<double>& ratios, int folds,
                            uint64_t seed) {
    if (methods.empty() || m_grid.empty() || combinations.empty() ||
        ratios.empty())
        throw std::invalid_argument("sweep: empty grid");
    std::vector<SweepRow> rows;
    uint64_t cell = 0;
    for (const EvalMethod& method : methods)
        for (const std::vector<int>& combo : combinations)
            for (int m : m_grid)
                for (double ratio : ratios) {
                    SweepRow row;
                    row.method = method.name;
                    row.view_indices = combo;
                    row.m = m;
                    row.ratio = ratio;
                    MultiViewDataset sub;
                    sub.labels = dataset.labels;
                    for (int v : combo) {
                        sub.views.push_back(dataset.views[v]);
                        sub.view_names.push_back(dataset.view_names[v]);
                    }
                    try {
                        AccuracyReport rep = run_protocol(
                            sub, method, m, ratio, folds, mix_seed(seed, cell));
                        rep.view_indices = combo;
                        row.report = std::move(rep);
                    } catch (const std::exception& e) {
                        row.error = e.what();
                    }
                    rows.push_back(std::move(row));
                    ++cell;
                }
    return rows;
}

}  // namespace mvcca
