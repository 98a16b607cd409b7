#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <string>

#include "mvcca/cca.hpp"
#include "mvcca/data.hpp"
#include "mvcca/errors.hpp"

using namespace mvcca;

namespace {

struct TempDir {
    std::string path;
    TempDir() {
        char tmpl[] = "/tmp/mvcca_test_XXXXXX";
        path = mkdtemp(tmpl);
    }
    std::string file(const std::string& name) const { return path + "/" + name; }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

}  // namespace

TEST_CASE("load_matrix layouts and round trip") {
    TempDir dir;
    write_file(dir.file("m.txt"), "1 2\n3 4\n5 6\n");
    const Matrix samples = load_matrix(dir.file("m.txt"), Layout::SamplesRows);
    CHECK(samples.rows() == 2);  // 2 features
    CHECK(samples.cols() == 3);  // 3 samples
    CHECK(samples(0, 0) == 1.0);
    CHECK(samples(1, 2) == 6.0);

    const Matrix features = load_matrix(dir.file("m.txt"), Layout::FeaturesRows);
    CHECK(features.rows() == 3);
    CHECK(features.cols() == 2);

    save_matrix(dir.file("rt.txt"), samples, Layout::SamplesRows);
    const Matrix back = load_matrix(dir.file("rt.txt"), Layout::SamplesRows);
    CHECK((back - samples).max_abs() == 0.0);

    // comma delimiter
    write_file(dir.file("c.csv"), "1,2,3\n4,5,6\n");
    const Matrix csv = load_matrix(dir.file("c.csv"), Layout::FeaturesRows, ',');
    CHECK(csv(1, 2) == 6.0);
}

TEST_CASE("load_matrix error reporting") {
    TempDir dir;
    write_file(dir.file("ragged.txt"), "1 2\n3 4 5\n");
    try {
        load_matrix(dir.file("ragged.txt"), Layout::SamplesRows);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);  // line 2
    }
    write_file(dir.file("bad.txt"), "1 2\n3 foo\n");
    try {
        load_matrix(dir.file("bad.txt"), Layout::SamplesRows);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("foo") != std::string::npos);
        CHECK(msg.find(":2") != std::string::npos);
    }
    write_file(dir.file("empty.txt"), "");
    CHECK_THROWS_AS(load_matrix(dir.file("empty.txt"), Layout::SamplesRows),
                    DataError);
    CHECK_THROWS_AS(load_matrix(dir.file("missing.txt"), Layout::SamplesRows),
                    DataError);
}

TEST_CASE("load_mfeat errors name the missing view") {
    TempDir dir;
    try {
        load_mfeat(dir.path);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("fac") != std::string::npos);
    }
}

TEST_CASE("load_mfeat block labels on a miniature stand-in") {
    TempDir dir;
    for (const std::string suffix : {"fac", "fou", "kar", "mor", "pix", "zer"}) {
        std::string content;
        for (int i = 0; i < 2000; ++i)
            content += std::to_string(i % 7) + " " + std::to_string(i % 3) + "\n";
        write_file(dir.file("mfeat-" + suffix), content);
    }
    const MultiViewDataset ds = load_mfeat(dir.path);
    CHECK(ds.k() == 6);
    CHECK(ds.n() == 2000);
    std::vector<int> hist(10, 0);
    for (int lab : ds.labels) ++hist[lab];
    for (int c = 0; c < 10; ++c) CHECK(hist[c] == 200);
    CHECK(ds.labels[0] == 0);
    CHECK(ds.labels[1999] == 9);
    CHECK(ds.view_names[5] == "zer");

    // wrong row count
    write_file(dir.file("mfeat-zer"), "1 2\n3 4\n");
    CHECK_THROWS_AS(load_mfeat(dir.path), DataError);
}

TEST_CASE("synth_multiview determinism, dims, and planted correlation") {
    SynthConfig sc;
    sc.k = 2;
    sc.latent_dim = 3;
    sc.view_dims = {5, 7};
    sc.n = 200;
    sc.noise = 0.0;
    sc.classes = 4;
    const MultiViewDataset a = synth_multiview(sc, 7);
    const MultiViewDataset b = synth_multiview(sc, 7);
    CHECK(a.views[0].rows() == 5);
    CHECK(a.views[1].rows() == 7);
    CHECK(a.n() == 200);
    CHECK(static_cast<int>(a.labels.size()) == 200);
    CHECK((a.views[0] - b.views[0]).max_abs() == 0.0);
    CHECK((a.views[1] - b.views[1]).max_abs() == 0.0);

    // noiseless linear views share the latent exactly: top correlation ~ 1
    const ProjectionModel model = fit_cca2(a.views[0], a.views[1], 1, 1e-10);
    CHECK(model.objective >= 0.99);

    const MultiViewDataset c = synth_multiview(sc, 8);
    CHECK((a.views[0] - c.views[0]).max_abs() > 0.0);
}

TEST_CASE("manifest loading with labels and standardization") {
    TempDir dir;
    write_file(dir.file("v1.txt"), "1 2\n3 4\n5 6\n");      // 3 samples x 2 feats
    write_file(dir.file("v2.csv"), "10,20,30\n40,50,60\n");  // features-rows
    write_file(dir.file("labels.txt"), "0\n1\n0\n");
    write_file(dir.file("manifest.json"), R"({
      "views": [
        {"name": "a", "path": "v1.txt", "layout": "samples-rows"},
        {"name": "b", "path": "v2.csv", "layout": "features-rows", "delimiter": ","}
      ],
      "labels": "labels.txt"
    })");
    const MultiViewDataset ds = load_manifest(dir.file("manifest.json"));
    CHECK(ds.k() == 2);
    CHECK(ds.n() == 3);
    CHECK(ds.view_names[0] == "a");
    CHECK(ds.labels == std::vector<int>{0, 1, 0});
    CHECK(ds.views[1](1, 2) == 60.0);

    // standardize flag
    write_file(dir.file("manifest2.json"), R"({
      "views": [{"path": "v1.txt", "layout": "samples-rows"}],
      "standardize": true
    })");
    const MultiViewDataset std_ds = load_manifest(dir.file("manifest2.json"));
    for (int i = 0; i < std_ds.views[0].rows(); ++i) {
        double mean = 0.0, var = 0.0;
        for (int j = 0; j < 3; ++j) mean += std_ds.views[0](i, j);
        mean /= 3.0;
        for (int j = 0; j < 3; ++j) {
            const double d = std_ds.views[0](i, j) - mean;
            var += d * d;
        }
        CHECK(std::abs(mean) < 1e-12);
        CHECK(var / 3.0 == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("manifest error paths") {
    TempDir dir;
    CHECK_THROWS_AS(load_manifest(dir.file("nope.json")), ConfigError);
    write_file(dir.file("bad.json"), "{ not json");
    CHECK_THROWS_AS(load_manifest(dir.file("bad.json")), ConfigError);
    write_file(dir.file("noviews.json"), R"({"views": []})");
    CHECK_THROWS_AS(load_manifest(dir.file("noviews.json")), ConfigError);
    // sample count mismatch across views
    write_file(dir.file("v1.txt"), "1 2\n3 4\n");
    write_file(dir.file("v2.txt"), "1 2\n3 4\n5 6\n");
    write_file(dir.file("mismatch.json"), R"({
      "views": [{"path": "v1.txt"}, {"path": "v2.txt"}]
    })");
    CHECK_THROWS_AS(load_manifest(dir.file("mismatch.json")), DataError);
    // label count mismatch
    write_file(dir.file("labels.txt"), "0\n1\n1\n");
    write_file(dir.file("badlab.json"), R"({
      "views": [{"path": "v1.txt"}], "labels": "labels.txt"
    })");
    CHECK_THROWS_AS(load_manifest(dir.file("badlab.json")), DataError);
}
