#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mvcca/cca.hpp"
#include "mvcca/data.hpp"
#include "mvcca/deep.hpp"

namespace mvcca {

struct SplitPlan {
    uint64_t seed = 0;
    int fold = 0;
    double ratio = 0.0;
    std::vector<int> train;
    std::vector<int> test;
};

// Stratified: each class contributes ceil(ratio * n_c) train samples.
std::vector<SplitPlan> make_splits(const std::vector<int>& labels, double ratio,
                                   int folds, uint64_t seed);

// Row-stacks the per-view projections into a (k*m) x n feature matrix.
Matrix concat_projections(const std::vector<Matrix>& z);

// One-vs-rest L2-regularized squared-hinge linear classifier, trained by a
// damped Newton method to objective tolerance 1e-6. The hinge term is scaled
// by C/n so the decision function is invariant to duplicating the data.
struct LinearSvm {
    std::vector<int> class_ids;  // sorted ascending
    Matrix weights;              // classes x features
    std::vector<double> biases;  // per class
    double c = 1.0;
};

LinearSvm linear_svm_fit(const Matrix& x, const std::vector<int>& y, double c);
std::vector<int> linear_svm_predict(const LinearSvm& svm, const Matrix& x);
double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

struct EvalMethod {
    std::string name;  // cca2|mcca|lscca|gcca|tcca|dgcca|dtcca
    double eps = 1e-4;
    TccaOptions tcca;
    TrainConfig train;  // deep methods
    bool pca = false;
    double pca_energy = 0.95;
    int pca_max_dim = 20;
};

struct AccuracyReport {
    std::string method;
    std::vector<int> view_indices;
    int m = 0;
    double ratio = 0.0;
    std::vector<double> fold_accuracies;
    double mean = 0.0;
    double stddev = 0.0;  // population (divide by fold count)
};

// Per fold: fit on train, transform train+test, pick C from the grid on an
// inner 80/20 train-side split, retrain and score the test set. PCA (when
// enabled) is fitted on train data only.
AccuracyReport run_protocol(const MultiViewDataset& dataset,
                            const EvalMethod& method, int m, double ratio,
                            int folds, uint64_t seed,
                            const std::vector<double>& c_grid = {0.1, 1.0, 10.0});

struct SweepRow {
    std::string method;
    std::vector<int> view_indices;
    int m = 0;
    double ratio = 0.0;
    std::optional<AccuracyReport> report;
    std::string error;  // non-empty when the cell failed
};

// All subsets of {0..k-1} of size >= min_size, lexicographic.
std::vector<std::vector<int>> view_combinations(int k, int min_size);

// One row per (method, combination, m, ratio) cell; failures recorded, not
// thrown.
std::vector<SweepRow> sweep(const MultiViewDataset& dataset,
                            const std::vector<EvalMethod>& methods,
                            const std::vector<int>& m_grid,
                            const std::vector<std::vector<int>>& combinations,
                            const std::vector<double>& ratios, int folds,
                            uint64_t seed);

}  // namespace mvcca
