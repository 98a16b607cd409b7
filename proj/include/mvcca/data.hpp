#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvcca/matrix.hpp"

namespace mvcca {

enum class Layout { SamplesRows, FeaturesRows };

struct MultiViewDataset {
    std::vector<Matrix> views;  // d_r x n, shared sample order
    std::vector<int> labels;    // empty when absent
    std::vector<std::string> view_names;
    std::string provenance;

    int k() const { return static_cast<int>(views.size()); }
    int n() const { return views.empty() ? 0 : views[0].cols(); }
    bool has_labels() const { return !labels.empty(); }
};

// Parses a plain-text numeric matrix. delimiter 0 means any whitespace.
// Returns features x samples regardless of the file layout.
Matrix load_matrix(const std::string& path, Layout layout, char delimiter = 0);

void save_matrix(const std::string& path, const Matrix& m, Layout layout,
                 char delimiter = 0);

// UCI handwritten-digit views (fac, fou, kar, mor, pix, zer), 2000 samples,
// labels 0..9 in row blocks of 200.
MultiViewDataset load_mfeat(const std::string& dir);

struct SynthConfig {
    int k = 3;
    int latent_dim = 5;
    std::vector<int> view_dims;  // default: 10 per view
    int n = 1000;
    bool nonlinear = false;
    double noise = 0.1;
    int classes = 10;
};

// Class-conditioned latent mixture pushed through per-view maps:
// x_r = A_r * phi_r(z) + noise, phi_r = identity or tanh of a seeded linear map.
MultiViewDataset synth_multiview(const SynthConfig& config, uint64_t seed);

// JSON manifest: {"views": [{"name", "path", "layout", "delimiter"?}...],
// "labels"?: path, "standardize"?: bool}.
MultiViewDataset load_manifest(const std::string& path);

// Per-feature zero-mean unit-variance scaling (in place); constant features
// are left centered.
void standardize_features(MultiViewDataset& ds);

}  // namespace mvcca
