#pragma once

#include <string>
#include <variant>

#include "mvcca/cca.hpp"
#include "mvcca/deep.hpp"

namespace mvcca {

// Versioned little-endian binary model container. Round trips are bit-exact;
// files written by a newer format version are refused.
using ModelVariant = std::variant<ProjectionModel, GccaModel, DtccaModel, DgccaModel>;

struct ModelArtifact {
    static constexpr uint8_t kVersion = 1;
    std::string method;  // cca2|mcca|gcca|tcca|dtcca|dgcca
    ModelVariant model;
};

ModelArtifact make_artifact(ProjectionModel model);
ModelArtifact make_artifact(GccaModel model);
ModelArtifact make_artifact(DtccaModel model);
ModelArtifact make_artifact(DgccaModel model);

void save_artifact(const std::string& path, const ModelArtifact& artifact);
ModelArtifact load_artifact(const std::string& path);

// Applies the contained model to one view.
Matrix artifact_transform(const ModelArtifact& artifact, int view,
                          const Matrix& x);
int artifact_view_count(const ModelArtifact& artifact);

}  // namespace mvcca
