#include "mvcca/data.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "mvcca/errors.hpp"

namespace mvcca {

namespace {

std::vector<std::string> split_tokens(const std::string& line, char delimiter) {
    std::vector<std::string> tokens;
    if (delimiter == 0) {
        std::istringstream ss(line);
        std::string tok;
        while (ss >> tok) tokens.push_back(tok);
    } else {
        std::string tok;
        std::istringstream ss(line);
        while (std::getline(ss, tok, delimiter)) {
            // trim surrounding whitespace
            const size_t a = tok.find_first_not_of(" \t\r");
            const size_t b = tok.find_last_not_of(" \t\r");
            tokens.push_back(a == std::string::npos ? std::string()
                                                    : tok.substr(a, b - a + 1));
        }
    }
    return tokens;
}

std::vector<std::vector<double>> read_rows(const std::string& path,
                                           char delimiter) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto tokens = split_tokens(line, delimiter);
        if (tokens.empty()) continue;
        std::vector<double> row;
        row.reserve(tokens.size());
        for (const auto& tok : tokens) {
            try {
                size_t pos = 0;
                const double v = std::stod(tok, &pos);
                if (pos != tok.size()) throw std::invalid_argument(tok);
                row.push_back(v);
            } catch (const std::exception&) {
                std::ostringstream msg;
                msg << path << ":" << lineno << ": non-numeric token '" << tok
                    << "'";
                throw DataError(msg.str());
            }
        }
        if (!rows.empty() && row.size() != rows[0].size()) {
            std::ostringstream msg;
            msg << path << ":" << lineno << ": ragged row (" << row.size()
                << " values, expected " << rows[0].size() << ")";
            throw DataError(msg.str());
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("empty matrix file: " + path);
    return rows;
}

Layout parse_layout(const std::string& s, const std::string& where) {
    if (s == "samples-rows") return Layout::SamplesRows;
    if (s == "features-rows") return Layout::FeaturesRows;
    throw ConfigError(where + ": unknown layout '" + s +
                      "' (expected samples-rows or features-rows)");
}

}  // namespace

Matrix load_matrix(const std::string& path, Layout layout, char delimiter) {
    const auto rows = read_rows(path, delimiter);
    const int nr = static_cast<int>(rows.size());
    const int nc = static_cast<int>(rows[0].size());
    if (layout == Layout::FeaturesRows) {
        Matrix m(nr, nc);
        for (int i = 0; i < nr; ++i)
            for (int j = 0; j < nc; ++j) m(i, j) = rows[i][j];
        return m;
    }
    Matrix m(nc, nr);  // transpose: file rows are samples
    for (int i = 0; i < nr; ++i)
        for (int j = 0; j < nc; ++j) m(j, i) = rows[i][j];
    return m;
}

void save_matrix(const std::string& path, const Matrix& m, Layout layout,
                 char delimiter) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    const char sep = delimiter == 0 ? ' ' : delimiter;
    out.precision(17);
    const bool transpose = layout == Layout::SamplesRows;
    const int nr = transpose ? m.cols() : m.rows();
    const int nc = transpose ? m.rows() : m.cols();
    for (int i = 0; i < nr; ++i) {
        for (int j = 0; j < nc; ++j) {
            if (j) out << sep;
            out << (transpose ? m(j, i) : m(i, j));
        }
        out << '\n';
    }
}

MultiViewDataset load_mfeat(const std::string& dir) {
    static const char* kSuffixes[] = {"fac", "fou", "kar", "mor", "pix", "zer"};
    MultiViewDataset ds;
    ds.provenance = "mfeat:" + dir;
    for (const char* suffix : kSuffixes) {
        std::string path = dir + "/mfeat-" + suffix;
        if (!std::ifstream(path)) {
            const std::string alt = dir + "/" + suffix;
            if (std::ifstream(alt)) {
                path = alt;
            } else {
                throw DataError("load_mfeat: missing view file '" +
                                std::string(suffix) + "' in " + dir);
            }
        }
        Matrix view = load_matrix(path, Layout::SamplesRows);
        if (view.cols() != 2000) {
            std::ostringstream msg;
            msg << "load_mfeat: " << path << " has " << view.cols()
                << " rows, expected 2000";
            throw DataError(msg.str());
        }
        ds.views.push_back(std::move(view));
        ds.view_names.emplace_back(suffix);
    }
    ds.labels.resize(2000);
    for (int i = 0; i < 2000; ++i) ds.labels[i] = i / 200;
    return ds;
}

MultiViewDataset synth_multiview(const SynthConfig& config, uint64_t seed) {
    if (config.k < 1 || config.latent_dim < 1 || config.n < 1 ||
        config.classes < 1)
        throw std::invalid_argument("synth_multiview: sizes must be >= 1");
    std::vector<int> dims = config.view_dims;
    if (dims.empty()) dims.assign(config.k, 10);
    if (static_cast<int>(dims.size()) != config.k)
        throw std::invalid_argument("synth_multiview: view_dims size != k");
    for (int d : dims)
        if (d < 1) throw std::invalid_argument("synth_multiview: dims must be >= 1");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int q = config.latent_dim;

    // Mixture component centers, spread enough to separate classes.
    Matrix centers(q, config.classes);
    for (int i = 0; i < q; ++i)
        for (int c = 0; c < config.classes; ++c) centers(i, c) = 2.0 * gauss(rng);

    Matrix z(q, config.n);
    MultiViewDataset ds;
    ds.labels.resize(config.n);
    for (int j = 0; j < config.n; ++j) {
        const int c = j % config.classes;
        ds.labels[j] = c;
        for (int i = 0; i < q; ++i) z(i, j) = centers(i, c) + 0.5 * gauss(rng);
    }

    for (int r = 0; r < config.k; ++r) {
        const int d = dims[r];
        Matrix s = z;  // phi_r(z)
        if (config.nonlinear) {
            Matrix b(d, q);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < q; ++j) b(i, j) = gauss(rng);
            s = matmul(b, z);
            for (int i = 0; i < s.rows(); ++i)
                for (int j = 0; j < s.cols(); ++j) s(i, j) = std::tanh(s(i, j));
        }
        Matrix a(d, s.rows());
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < s.rows(); ++j) a(i, j) = gauss(rng);
        Matrix x = matmul(a, s);
        if (config.noise > 0.0)
            for (int i = 0; i < x.rows(); ++i)
                for (int j = 0; j < x.cols(); ++j)
                    x(i, j) += config.noise * gauss(rng);
        ds.views.push_back(std::move(x));
        ds.view_names.push_back("synth" + std::to_string(r));
    }
    ds.provenance = config.nonlinear ? "synth:nonlinear" : "synth:linear";
    return ds;
}

MultiViewDataset load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open manifest: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("manifest parse error in " + path + ": " + e.what());
    }
    if (!j.contains("views") || !j["views"].is_array() || j["views"].empty())
        throw ConfigError("manifest " + path + ": missing non-empty 'views' array");

    // Paths resolve relative to the manifest's directory.
    std::string base;
    const size_t slash = path.find_last_of('/');
    if (slash != std::string::npos) base = path.substr(0, slash + 1);
    const auto resolve = [&](const std::string& p) {
        return (p.empty() || p[0] == '/') ? p : base + p;
    };

    MultiViewDataset ds;
    ds.provenance = "manifest:" + path;
    for (const auto& v : j["views"]) {
        if (!v.contains("path"))
            throw ConfigError("manifest " + path + ": view entry missing 'path'");
        const std::string vpath = v["path"].get<std::string>();
        const Layout layout = parse_layout(
            v.value("layout", std::string("samples-rows")), "manifest view");
        const std::string delim = v.value("delimiter", std::string());
        Matrix view = load_matrix(resolve(vpath), layout,
                                  delim.empty() ? 0 : delim[0]);
        if (!ds.views.empty() && view.cols() != ds.n()) {
            std::ostringstream msg;
            msg << "manifest " << path << ": view '" << vpath << "' has "
                << view.cols() << " samples, expected " << ds.n();
            throw DataError(msg.str());
        }
        if (!view.all_finite())
            throw DataError("manifest " + path + ": non-finite entries in " + vpath);
        ds.view_names.push_back(v.value("name", vpath));
        ds.views.push_back(std::move(view));
    }
    if (j.contains("labels")) {
        const std::string lpath = resolve(j["labels"].get<std::string>());
        const Matrix lab = load_matrix(lpath, Layout::FeaturesRows);
        const int count = lab.rows() * lab.cols();
        if (count != ds.n()) {
            std::ostringstream msg;
            msg << "manifest " << path << ": " << count
                << " labels for " << ds.n() << " samples";
            throw DataError(msg.str());
        }
        ds.labels.reserve(count);
        for (int i = 0; i < lab.rows(); ++i)
            for (int c = 0; c < lab.cols(); ++c) {
                const double v = lab(i, c);
                if (v != std::floor(v))
                    throw DataError("manifest " + path +
                                    ": non-integer label in " + lpath);
                ds.labels.push_back(static_cast<int>(v));
            }
    }
    if (j.value("standardize", false)) standardize_features(ds);
    return ds;
}

void standardize_features(MultiViewDataset& ds) {
    for (auto& view : ds.views) {
        const int n = view.cols();
        for (int i = 0; i < view.rows(); ++i) {
            double mean = 0.0;
            for (int j = 0; j < n; ++j) mean += view(i, j);
            mean /= n;
            double var = 0.0;
            for (int j = 0; j < n; ++j) {
                view(i, j) -= mean;
                var += view(i, j) * view(i, j);
            }
            var /= n;
            if (var > 0.0) {
                const double inv = 1.0 / std::sqrt(var);
                for (int j = 0; j < n; ++j) view(i, j) *= inv;
            }
        }
    }
}

}  // namespace mvcca
