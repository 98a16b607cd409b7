// End-to-end checks of the command-line front end. argv[1] is the path to the
// built binary; everything runs in a scratch directory.
#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "mvcca/artifact.hpp"
#include "mvcca/data.hpp"

using namespace mvcca;

namespace {

std::string g_binary;

struct TempDir {
    std::string path;
    TempDir() {
        char tmpl[] = "/tmp/mvcca_cli_XXXXXX";
        path = mkdtemp(tmpl);
    }
    std::string file(const std::string& name) const { return path + "/" + name; }
};

int run(const std::string& args, const std::string& out_file = "/dev/null") {
    const std::string cmd = g_binary + " " + args + " > " + out_file + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

// writes a small labeled 2-view dataset and manifest, returns manifest path
std::string make_dataset(const TempDir& dir, uint64_t seed) {
    SynthConfig sc;
    sc.k = 2;
    sc.latent_dim = 3;
    sc.view_dims = {5, 4};
    sc.n = 90;
    sc.noise = 0.05;
    sc.classes = 3;
    const MultiViewDataset ds = synth_multiview(sc, seed);
    save_matrix(dir.file("v0.txt"), ds.views[0], Layout::SamplesRows);
    save_matrix(dir.file("v1.txt"), ds.views[1], Layout::SamplesRows);
    std::ofstream lab(dir.file("labels.txt"));
    for (int l : ds.labels) lab << l << "\n";
    write_file(dir.file("manifest.json"), R"({
      "views": [
        {"name": "a", "path": "v0.txt"},
        {"name": "b", "path": "v1.txt"}
      ],
      "labels": "labels.txt"
    })");
    return dir.file("manifest.json");
}

}  // namespace

TEST_CASE("fit writes an artifact whose transform matches in-process") {
    TempDir dir;
    const std::string manifest = make_dataset(dir, 7);
    write_file(dir.file("fit.json"), "{\n"
        "  \"dataset\": \"" + manifest + "\",\n"
        "  \"method\": \"mcca\",\n"
        "  \"m\": 2,\n"
        "  \"model_out\": \"" + dir.file("model.bin") + "\"\n"
        "}\n");
    CHECK(run("fit -c " + dir.file("fit.json")) == 0);

    const ModelArtifact artifact = load_artifact(dir.file("model.bin"));
    const MultiViewDataset ds = load_manifest(manifest);
    CHECK(run("transform -m " + dir.file("model.bin") + " -i " +
              dir.file("v0.txt") + " -o " + dir.file("z0.txt") + " -v 0") == 0);
    const Matrix z_cli = load_matrix(dir.file("z0.txt"), Layout::SamplesRows);
    const Matrix z_lib = artifact_transform(artifact, 0, ds.views[0]);
    CHECK((z_cli - z_lib).max_abs() < 1e-12);
    CHECK(slurp(dir.file("model.bin") + ".log").find("objective") !=
          std::string::npos);
}

TEST_CASE("deterministic fit produces identical artifact bytes") {
    TempDir dir;
    const std::string manifest = make_dataset(dir, 8);
    write_file(dir.file("fit.json"), "{\n"
        "  \"dataset\": \"" + manifest + "\",\n"
        "  \"method\": \"dtcca\",\n"
        "  \"m\": 2,\n"
        "  \"epochs\": 4,\n"
        "  \"hidden_widths\": [6],\n"
        "  \"seed\": 5,\n"
        "  \"model_out\": \"" + dir.file("m1.bin") + "\"\n"
        "}\n");
    CHECK(run("fit -c " + dir.file("fit.json")) == 0);
    // re-fit to a second path via env var override
    CHECK(run("fit -c " + dir.file("fit.json"),
              "/dev/null") == 0);  // overwrite same path is fine
    const std::string first = slurp(dir.file("m1.bin"));
    CHECK(run("fit -c " + dir.file("fit.json")) == 0);
    CHECK(slurp(dir.file("m1.bin")) == first);
    // diagnostics log exists with epoch lines
    const std::string log = slurp(dir.file("m1.bin") + ".log");
    CHECK(log.find("epoch 1 ") != std::string::npos);
    CHECK(log.find("rho") != std::string::npos);
}

TEST_CASE("config errors exit 2, data errors exit 3") {
    TempDir dir;
    const std::string manifest = make_dataset(dir, 9);
    // malformed: missing 'm'
    write_file(dir.file("bad.json"), "{\n"
        "  \"dataset\": \"" + manifest + "\",\n"
        "  \"method\": \"mcca\",\n"
        "  \"model_out\": \"" + dir.file("x.bin") + "\"\n"
        "}\n");
    CHECK(run("fit -c " + dir.file("bad.json"), dir.file("err.txt")) == 2);
    CHECK(slurp(dir.file("err.txt")).find("'m'") != std::string::npos);

    // unknown method
    write_file(dir.file("bad2.json"), "{\n"
        "  \"dataset\": \"" + manifest + "\",\n"
        "  \"method\": \"frobnicate\", \"m\": 2,\n"
        "  \"model_out\": \"" + dir.file("x.bin") + "\"\n"
        "}\n");
    CHECK(run("fit -c " + dir.file("bad2.json")) == 2);

    // missing dataset file
    write_file(dir.file("bad3.json"), "{\n"
        "  \"dataset\": \"" + dir.file("absent.json") + "\",\n"
        "  \"method\": \"mcca\", \"m\": 2,\n"
        "  \"model_out\": \"" + dir.file("x.bin") + "\"\n"
        "}\n");
    CHECK(run("fit -c " + dir.file("bad3.json")) == 2);  // manifest open: config

    // manifest referencing a broken matrix file -> data error
    write_file(dir.file("ragged.txt"), "1 2\n3\n");
    write_file(dir.file("badmani.json"),
               R"({"views": [{"path": "ragged.txt"}]})");
    write_file(dir.file("bad4.json"), "{\n"
        "  \"dataset\": \"" + dir.file("badmani.json") + "\",\n"
        "  \"method\": \"mcca\", \"m\": 2,\n"
        "  \"model_out\": \"" + dir.file("x.bin") + "\"\n"
        "}\n");
    CHECK(run("fit -c " + dir.file("bad4.json")) == 3);

    // no subcommand
    CHECK(run("") == 2);
}

TEST_CASE("eval prints a two-decimal table and full-precision csv") {
    TempDir dir;
    const std::string manifest = make_dataset(dir, 10);
    write_file(dir.file("eval.json"), "{\n"
        "  \"dataset\": \"" + manifest + "\",\n"
        "  \"method\": \"cca2\", \"m\": 2,\n"
        "  \"ratio\": 0.3, \"folds\": 3, \"seed\": 1\n"
        "}\n");
    CHECK(run("eval -c " + dir.file("eval.json"), dir.file("out.txt")) == 0);
    const std::string out = slurp(dir.file("out.txt"));
    CHECK(out.find("method") != std::string::npos);
    CHECK(out.find("cca2") != std::string::npos);
    CHECK(out.find("+-") != std::string::npos);
    CHECK(out.find("fold_accuracies") != std::string::npos);
    // env var override changes the fold count
    CHECK(std::system(("MVCCA_FOLDS=2 " + g_binary + " eval -c " +
                       dir.file("eval.json") + " > " + dir.file("out2.txt") +
                       " 2>&1")
                          .c_str()) == 0);
    const std::string out2 = slurp(dir.file("out2.txt"));
    // 2 folds -> exactly one ';' in the fold accuracy column
    const size_t row = out2.find("cca2,");
    REQUIRE(row != std::string::npos);
    std::istringstream line(out2.substr(row));
    std::string col;
    for (int i = 0; i < 5; ++i) std::getline(line, col, ',');  // 5th = folds
    CHECK(std::count(col.begin(), col.end(), ';') == 1);
}

TEST_CASE("sweep resumes from an existing csv") {
    TempDir dir;
    const std::string manifest = make_dataset(dir, 11);
    write_file(dir.file("sweep.json"), "{\n"
        "  \"dataset\": \"" + manifest + "\",\n"
        "  \"methods\": [\"cca2\", \"mcca\"],\n"
        "  \"m_grid\": [2, 3],\n"
        "  \"ratios\": [0.3], \"folds\": 2, \"seed\": 2,\n"
        "  \"csv_out\": \"" + dir.file("sweep.csv") + "\"\n"
        "}\n");
    CHECK(run("sweep -c " + dir.file("sweep.json"), dir.file("s1.txt")) == 0);
    const std::string csv1 = slurp(dir.file("sweep.csv"));
    // 2 methods x 2 m values = 4 rows + header
    CHECK(std::count(csv1.begin(), csv1.end(), '\n') == 5);

    // resume: rerun must keep identical rows (cells skipped, file rewritten)
    CHECK(run("sweep --resume -c " + dir.file("sweep.json"), dir.file("s2.txt")) == 0);
    CHECK(slurp(dir.file("sweep.csv")) == csv1);
    const std::string table = slurp(dir.file("s2.txt"));
    CHECK(table.find("method") != std::string::npos);
}

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: test_cli <path-to-mvcca-binary>\n");
        return 1;
    }
    g_binary = argv[1];
    doctest::Context context;
    return context.run();
}
