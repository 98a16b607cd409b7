#include "mvcca/artifact.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "mvcca/errors.hpp"

namespace mvcca {

namespace {

constexpr char kMagic[8] = {'M', 'V', 'C', 'C', 'A', 'M', 'D', 'L'};

// All integers and doubles are written in the host's little-endian layout.
struct Writer {
    std::ofstream out;
    explicit Writer(const std::string& path) : out(path, std::ios::binary) {
        if (!out) throw DataError("cannot write artifact: " + path);
    }
    void raw(const void* p, size_t n) {
        out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    }
    void u8(uint8_t v) { raw(&v, 1); }
    void u32(uint32_t v) { raw(&v, 4); }
    void u64(uint64_t v) { raw(&v, 8); }
    void i32(int32_t v) { raw(&v, 4); }
    void f64(double v) { raw(&v, 8); }
    void str(const std::string& s) {
        u32(static_cast<uint32_t>(s.size()));
        raw(s.data(), s.size());
    }
    void vec(const std::vector<double>& v) {
        u32(static_cast<uint32_t>(v.size()));
        raw(v.data(), v.size() * sizeof(double));
    }
    void ivec(const std::vector<int>& v) {
        u32(static_cast<uint32_t>(v.size()));
        for (int x : v) i32(x);
    }
    void matrix(const Matrix& m) {
        i32(m.rows());
        i32(m.cols());
        raw(m.data(), static_cast<size_t>(m.rows()) * m.cols() * sizeof(double));
    }
    void matrices(const std::vector<Matrix>& ms) {
        u32(static_cast<uint32_t>(ms.size()));
        for (const auto& m : ms) matrix(m);
    }
    void vecs(const std::vector<std::vector<double>>& vs) {
        u32(static_cast<uint32_t>(vs.size()));
        for (const auto& v : vs) vec(v);
    }
};

struct Reader {
    std::ifstream in;
    std::string path;
    explicit Reader(const std::string& p) : in(p, std::ios::binary), path(p) {
        if (!in) throw DataError("cannot open artifact: " + p);
    }
    void raw(void* p, size_t n) {
        in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<size_t>(in.gcount()) != n)
            throw DataError("truncated artifact: " + path);
    }
    uint8_t u8() { uint8_t v; raw(&v, 1); return v; }
    uint32_t u32() { uint32_t v; raw(&v, 4); return v; }
    uint64_t u64() { uint64_t v; raw(&v, 8); return v; }
    int32_t i32() { int32_t v; raw(&v, 4); return v; }
    double f64() { double v; raw(&v, 8); return v; }
    std::string str() {
        std::string s(u32(), '\0');
        raw(s.data(), s.size());
        return s;
    }
    std::vector<double> vec() {
        std::vector<double> v(u32());
        raw(v.data(), v.size() * sizeof(double));
        return v;
    }
    std::vector<int> ivec() {
        std::vector<int> v(u32());
        for (auto& x : v) x = i32();
        return v;
    }
    Matrix matrix() {
        const int r = i32(), c = i32();
        if (r < 0 || c < 0) throw DataError("corrupt artifact: " + path);
        Matrix m(r, c);
        raw(m.data(), static_cast<size_t>(r) * c * sizeof(double));
        return m;
    }
    std::vector<Matrix> matrices() {
        std::vector<Matrix> ms(u32());
        for (auto& m : ms) m = matrix();
        return ms;
    }
    std::vector<std::vector<double>> vecs() {
        std::vector<std::vector<double>> vs(u32());
        for (auto& v : vs) v = vec();
        return vs;
    }
};

void write_factors(Writer& w, const CpFactors& f) {
    w.i32(f.m);
    w.vec(f.weights);
    w.matrices(f.factors);
}

CpFactors read_factors(Reader& r) {
    CpFactors f;
    f.m = r.i32();
    f.weights = r.vec();
    f.factors = r.matrices();
    return f;
}

void write_config(Writer& w, const TrainConfig& c) {
    w.i32(c.epochs);
    w.f64(c.lr);
    w.u64(c.seed);
    w.f64(c.eps);
    w.i32(c.als.max_iter);
    w.f64(c.als.tol);
    w.u64(c.als.seed);
    w.u8(c.als.hosvd_init ? 1 : 0);
    w.u8(c.freeze_whitening ? 1 : 0);
    w.u8(c.activation == Activation::Tanh ? 1 : 0);
    w.ivec(c.hidden_widths);
    w.f64(c.dropout);
    w.u8(c.linear_output ? 1 : 0);
    w.i32(c.inner_steps);
}

TrainConfig read_config(Reader& r) {
    TrainConfig c;
    c.epochs = r.i32();
    c.lr = r.f64();
    c.seed = r.u64();
    c.eps = r.f64();
    c.als.max_iter = r.i32();
    c.als.tol = r.f64();
    c.als.seed = r.u64();
    c.als.hosvd_init = r.u8() != 0;
    c.freeze_whitening = r.u8() != 0;
    c.activation = r.u8() ? Activation::Tanh : Activation::Sigmoid;
    c.hidden_widths = r.ivec();
    c.dropout = r.f64();
    c.linear_output = r.u8() != 0;
    c.inner_steps = r.i32();
    return c;
}

void write_nets(Writer& w, const std::vector<ViewNetwork>& nets) {
    w.u32(static_cast<uint32_t>(nets.size()));
    for (const auto& net : nets) {
        w.u8(net.activation == Activation::Tanh ? 1 : 0);
        w.f64(net.dropout);
        w.u8(net.linear_output ? 1 : 0);
        w.matrices(net.weights);
        w.vecs(net.biases);
    }
}

std::vector<ViewNetwork> read_nets(Reader& r) {
    std::vector<ViewNetwork> nets(r.u32());
    for (auto& net : nets) {
        net.activation = r.u8() ? Activation::Tanh : Activation::Sigmoid;
        net.dropout = r.f64();
        net.linear_output = r.u8() != 0;
        net.weights = r.matrices();
        net.biases = r.vecs();
    }
    return nets;
}

void write_diagnostics(Writer& w, const std::vector<EpochRecord>& d) {
    w.u32(static_cast<uint32_t>(d.size()));
    for (const auto& rec : d) {
        w.i32(rec.epoch);
        w.f64(rec.loss);
        w.f64(rec.rho);
        w.f64(rec.grad_norm);
    }
}

std::vector<EpochRecord> read_diagnostics(Reader& r) {
    std::vector<EpochRecord> d(r.u32());
    for (auto& rec : d) {
        rec.epoch = r.i32();
        rec.loss = r.f64();
        rec.rho = r.f64();
        rec.grad_norm = r.f64();
    }
    return d;
}

}  // namespace

ModelArtifact make_artifact(ProjectionModel model) {
    ModelArtifact a;
    a.method = model.method;
    a.model = std::move(model);
    return a;
}

ModelArtifact make_artifact(GccaModel model) {
    return {"gcca", std::move(model)};
}

ModelArtifact make_artifact(DtccaModel model) {
    return {"dtcca", std::move(model)};
}

ModelArtifact make_artifact(DgccaModel model) {
    return {"dgcca", std::move(model)};
}

void save_artifact(const std::string& path, const ModelArtifact& artifact) {
    Writer w(path);
    w.raw(kMagic, sizeof(kMagic));
    w.u8(ModelArtifact::kVersion);
    w.str(artifact.method);
    if (const auto* pm = std::get_if<ProjectionModel>(&artifact.model)) {
        w.u8(0);
        w.str(pm->method);
        w.f64(pm->eps);
        w.vecs(pm->means);
        w.matrices(pm->projections);
        w.f64(pm->objective);
        write_factors(w, pm->factors);
        w.matrices(pm->whiteners);
        w.vec(pm->gen_eigenvalues);
    } else if (const auto* gm = std::get_if<GccaModel>(&artifact.model)) {
        w.u8(1);
        w.f64(gm->eps);
        w.matrix(gm->g);
        w.vecs(gm->means);
        w.matrices(gm->projections);
        w.f64(gm->objective);
    } else if (const auto* dm = std::get_if<DtccaModel>(&artifact.model)) {
        w.u8(2);
        w.f64(dm->eps);
        write_config(w, dm->config);
        write_nets(w, dm->nets);
        w.matrices(dm->whiteners);
        write_factors(w, dm->factors);
        w.vecs(dm->means);
        write_diagnostics(w, dm->diagnostics);
    } else {
        const auto& dg = std::get<DgccaModel>(artifact.model);
        w.u8(3);
        w.f64(dg.eps);
        write_config(w, dg.config);
        write_nets(w, dg.nets);
        w.matrix(dg.g);
        w.matrices(dg.projections);
        w.vecs(dg.means);
        write_diagnostics(w, dg.diagnostics);
    }
}

ModelArtifact load_artifact(const std::string& path) {
    Reader r(path);
    char magic[8];
    r.raw(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw DataError("not a model artifact: " + path);
    const uint8_t version = r.u8();
    if (version > ModelArtifact::kVersion) {
        std::ostringstream msg;
        msg << "artifact " << path << " has format version " << int(version)
            << "; this build reads up to " << int(ModelArtifact::kVersion);
        throw DataError(msg.str());
    }
    ModelArtifact a;
    a.method = r.str();
    switch (r.u8()) {
        case 0: {
            ProjectionModel pm;
            pm.method = r.str();
            pm.eps = r.f64();
            pm.means = r.vecs();
            pm.projections = r.matrices();
            pm.objective = r.f64();
            pm.factors = read_factors(r);
            pm.whiteners = r.matrices();
            pm.gen_eigenvalues = r.vec();
            a.model = std::move(pm);
            break;
        }
        case 1: {
            GccaModel gm;
            gm.eps = r.f64();
            gm.g = r.matrix();
            gm.means = r.vecs();
            gm.projections = r.matrices();
            gm.objective = r.f64();
            a.model = std::move(gm);
            break;
        }
        case 2: {
            DtccaModel dm;
            dm.eps = r.f64();
            dm.config = read_config(r);
            dm.nets = read_nets(r);
            dm.whiteners = r.matrices();
            dm.factors = read_factors(r);
            dm.means = r.vecs();
            dm.diagnostics = read_diagnostics(r);
            a.model = std::move(dm);
            break;
        }
        case 3: {
            DgccaModel dg;
            dg.eps = r.f64();
            dg.config = read_config(r);
            dg.nets = read_nets(r);
            dg.g = r.matrix();
            dg.projections = r.matrices();
            dg.means = r.vecs();
            dg.diagnostics = read_diagnostics(r);
            a.model = std::move(dg);
            break;
        }
        default:
            throw DataError("corrupt artifact: " + path);
    }
    return a;
}

Matrix artifact_transform(const ModelArtifact& artifact, int view,
                          const Matrix& x) {
    if (const auto* pm = std::get_if<ProjectionModel>(&artifact.model))
        return transform_view(*pm, view, x);
    if (const auto* gm = std::get_if<GccaModel>(&artifact.model)) {
        if (view < 0 || view >= static_cast<int>(gm->projections.size()))
            throw std::invalid_argument("artifact_transform: view out of range");
        Matrix centered = x;
        for (int i = 0; i < x.rows(); ++i)
            for (int j = 0; j < x.cols(); ++j) centered(i, j) -= gm->means[view][i];
        return matmul_tn(gm->projections[view], centered);
    }
    if (const auto* dm = std::get_if<DtccaModel>(&artifact.model))
        return dtcca_transform(*dm, view, x);
    return dgcca_transform(std::get<DgccaModel>(artifact.model), view, x);
}

int artifact_view_count(const ModelArtifact& artifact) {
    if (const auto* pm = std::get_if<ProjectionModel>(&artifact.model))
        return static_cast<int>(pm->projections.size());
    if (const auto* gm = std::get_if<GccaModel>(&artifact.model))
        return static_cast<int>(gm->projections.size());
    if (const auto* dm = std::get_if<DtccaModel>(&artifact.model))
        return static_cast<int>(dm->nets.size());
    return static_cast<int>(std::get<DgccaModel>(artifact.model).nets.size());
}

}  // namespace mvcca
