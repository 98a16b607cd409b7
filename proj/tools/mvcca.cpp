// Batch front end: fit / transform / eval / sweep over a JSON config.
#include <CLI11.hpp>
#include <json.hpp>

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "mvcca/artifact.hpp"
#include "mvcca/errors.hpp"
#include "mvcca/eval.hpp"

using json = nlohmann::json;
using namespace mvcca;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

const char* kConfigKeys[] = {
    "dataset",     "method",       "methods",     "m",           "m_grid",
    "ratio",       "ratios",       "folds",       "seed",        "eps",
    "epochs",      "lr",           "dropout",     "activation",  "hidden_widths",
    "linear_output", "freeze_whitening", "inner_steps", "als_max_iter",
    "als_tol",     "als_seed",     "pca",         "pca_energy",  "pca_max_dim",
    "model_out",   "log_out",      "csv_out",     "view_min_size", "combinations",
};

uint64_t mix_seed(uint64_t seed, uint64_t salt) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string upper(std::string s) {
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    json cfg;
    try {
        in >> cfg;
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
    // Environment overrides: MVCCA_<UPPERCASE KEY>.
    for (const char* key : kConfigKeys) {
        const char* env = std::getenv(("MVCCA_" + upper(key)).c_str());
        if (!env) continue;
        try {
            cfg[key] = json::parse(env);
        } catch (const json::exception&) {
            cfg[key] = std::string(env);  // bare strings need no quoting
        }
    }
    return cfg;
}

template <typename T>
T require(const json& cfg, const std::string& key) {
    if (!cfg.contains(key)) throw ConfigError("config: missing field '" + key + "'");
    try {
        return cfg.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: field '" + key + "' has the wrong type");
    }
}

template <typename T>
T value_or(const json& cfg, const std::string& key, T fallback) {
    if (!cfg.contains(key)) return fallback;
    try {
        return cfg.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: field '" + key + "' has the wrong type");
    }
}

Activation parse_activation(const std::string& s) {
    if (s == "sigmoid") return Activation::Sigmoid;
    if (s == "tanh") return Activation::Tanh;
    throw ConfigError("config: activation must be 'sigmoid' or 'tanh', got '" + s + "'");
}

EvalMethod method_from_config(const json& cfg, const std::string& name) {
    EvalMethod m;
    m.name = name;
    m.eps = value_or(cfg, "eps", 1e-4);
    m.train.epochs = value_or(cfg, "epochs", 100);
    m.train.lr = value_or(cfg, "lr", 1e-3);
    m.train.seed = value_or<uint64_t>(cfg, "seed", 0);
    m.train.dropout = value_or(cfg, "dropout", 0.1);
    m.train.activation =
        parse_activation(value_or<std::string>(cfg, "activation", "sigmoid"));
    m.train.hidden_widths =
        value_or<std::vector<int>>(cfg, "hidden_widths", {500, 500});
    m.train.linear_output = value_or(cfg, "linear_output", false);
    m.train.freeze_whitening = value_or(cfg, "freeze_whitening", false);
    m.train.inner_steps = value_or(cfg, "inner_steps", 1);
    m.train.als.max_iter = value_or(cfg, "als_max_iter", 200);
    m.train.als.tol = value_or(cfg, "als_tol", 1e-8);
    m.train.als.seed = value_or<uint64_t>(cfg, "als_seed", 0);
    m.tcca.als = m.train.als;
    m.pca = value_or(cfg, "pca", false);
    m.pca_energy = value_or(cfg, "pca_energy", 0.95);
    m.pca_max_dim = value_or(cfg, "pca_max_dim", 20);
    if (m.train.epochs < 1) throw ConfigError("config: 'epochs' must be >= 1");
    if (m.eps < 0.0) throw ConfigError("config: 'eps' must be >= 0");
    return m;
}

int checked_m(const json& cfg) {
    const int m = require<int>(cfg, "m");
    if (m < 1) throw ConfigError("config: 'm' must be >= 1");
    return m;
}

double checked_ratio(const json& cfg) {
    const double ratio = value_or(cfg, "ratio", 0.1);
    if (ratio <= 0.0 || ratio >= 1.0)
        throw ConfigError("config: 'ratio' must be in (0, 1)");
    return ratio;
}

std::string join_views(const std::vector<int>& views) {
    std::string s;
    for (size_t i = 0; i < views.size(); ++i) {
        if (i) s += ';';
        s += std::to_string(views[i]);
    }
    return s;
}

std::string csv_header() {
    return "method,views,m,ratio,fold_accuracies,mean,std,error";
}

std::string csv_row(const SweepRow& row) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << row.method << ',' << join_views(row.view_indices) << ',' << row.m
        << ',' << row.ratio << ',';
    if (row.report) {
        const auto& rep = *row.report;
        for (size_t i = 0; i < rep.fold_accuracies.size(); ++i) {
            if (i) out << ';';
            out << rep.fold_accuracies[i];
        }
        out << ',' << rep.mean << ',' << rep.stddev << ',';
    } else {
        std::string err = row.error;
        for (char& c : err)
            if (c == ',' || c == '\n') c = ';';
        out << ",,," << err;
    }
    return out.str();
}

void print_table(const std::vector<SweepRow>& rows) {
    std::cout << std::left << std::setw(8) << "method" << std::setw(16)
              << "views" << std::setw(5) << "m" << std::setw(8) << "ratio"
              << "accuracy\n";
    for (const auto& row : rows) {
        std::cout << std::left << std::setw(8) << row.method << std::setw(16)
                  << join_views(row.view_indices) << std::setw(5) << row.m
                  << std::setw(8) << std::setprecision(3) << row.ratio;
        if (row.report) {
            std::cout << std::fixed << std::setprecision(2)
                      << 100.0 * row.report->mean << " +- "
                      << 100.0 * row.report->stddev;
            std::cout.unsetf(std::ios::fixed);
        } else {
            std::cout << "error: " << row.error;
        }
        std::cout << '\n';
    }
}

int cmd_fit(const std::string& config_path) {
    const json cfg = load_config(config_path);
    const MultiViewDataset ds = load_manifest(require<std::string>(cfg, "dataset"));
    const std::string name = require<std::string>(cfg, "method");
    const int m = checked_m(cfg);
    const EvalMethod method = method_from_config(cfg, name);
    if (method.pca)
        throw ConfigError("config: 'pca' preprocessing applies to eval/sweep only");
    const std::string model_out = require<std::string>(cfg, "model_out");
    const std::string log_out = value_or(cfg, "log_out", model_out + ".log");

    std::ofstream log(log_out);
    if (!log) throw DataError("cannot write log: " + log_out);
    log << std::setprecision(17);
    const DiagnosticSink sink = [&log](const EpochRecord& rec) {
        log << "epoch " << rec.epoch << " loss " << rec.loss << " rho "
            << rec.rho << " grad " << rec.grad_norm << '\n';
    };

    ModelArtifact artifact;
    if (name == "cca2") {
        if (ds.k() != 2) throw ConfigError("cca2 requires a 2-view dataset");
        artifact = make_artifact(fit_cca2(ds.views[0], ds.views[1], m, method.eps));
    } else if (name == "mcca" || name == "lscca") {
        artifact = make_artifact(fit_mcca_sumcor(ds.views, m, method.eps));
    } else if (name == "gcca") {
        artifact = make_artifact(fit_gcca(ds.views, m, method.eps));
    } else if (name == "tcca") {
        artifact = make_artifact(fit_tcca(ds.views, m, method.eps, method.tcca));
    } else if (name == "dtcca") {
        TrainConfig tc = method.train;
        tc.eps = method.eps;
        artifact = make_artifact(dtcca_fit(ds.views, m, tc, sink));
    } else if (name == "dgcca") {
        TrainConfig tc = method.train;
        tc.eps = method.eps;
        artifact = make_artifact(dgcca_fit(ds.views, m, tc, sink));
    } else {
        throw ConfigError("config: unknown method '" + name + "'");
    }
    if (const auto* pm = std::get_if<ProjectionModel>(&artifact.model))
        log << "objective " << pm->objective << '\n';
    if (const auto* gm = std::get_if<GccaModel>(&artifact.model))
        log << "objective " << gm->objective << '\n';
    save_artifact(model_out, artifact);
    std::cout << "wrote " << model_out << '\n';
    return 0;
}

int cmd_transform(const std::string& model_path, const std::string& input,
                  const std::string& output, int view,
                  const std::string& layout_str) {
    const ModelArtifact artifact = load_artifact(model_path);
    const Layout layout =
        layout_str == "features-rows" ? Layout::FeaturesRows : Layout::SamplesRows;
    const Matrix x = load_matrix(input, layout);
    const Matrix z = artifact_transform(artifact, view, x);
    save_matrix(output, z, layout);
    std::cout << "wrote " << output << " (" << z.rows() << " x " << z.cols()
              << ")\n";
    return 0;
}

int cmd_eval(const std::string& config_path) {
    const json cfg = load_config(config_path);
    const MultiViewDataset ds = load_manifest(require<std::string>(cfg, "dataset"));
    const std::string name = require<std::string>(cfg, "method");
    const EvalMethod method = method_from_config(cfg, name);
    const int m = checked_m(cfg);
    const double ratio = checked_ratio(cfg);
    const int folds = value_or(cfg, "folds", 10);
    const uint64_t seed = value_or<uint64_t>(cfg, "seed", 0);

    const AccuracyReport report = run_protocol(ds, method, m, ratio, folds, seed);
    SweepRow row;
    row.method = report.method;
    row.view_indices = report.view_indices;
    row.m = m;
    row.ratio = ratio;
    row.report = report;
    print_table({row});
    std::cout << csv_header() << '\n' << csv_row(row) << '\n';
    if (cfg.contains("csv_out")) {
        const std::string path = cfg.at("csv_out").get<std::string>();
        std::ofstream out(path);
        if (!out) throw DataError("cannot write CSV: " + path);
        out << csv_header() << '\n' << csv_row(row) << '\n';
    }
    return 0;
}

std::string cell_key(const std::string& method, const std::vector<int>& views,
                     int m, double ratio) {
    std::ostringstream key;
    key << method << '|' << join_views(views) << '|' << m << '|'
        << std::setprecision(17) << ratio;
    return key.str();
}

int cmd_sweep(const std::string& config_path, bool resume) {
    const json cfg = load_config(config_path);
    const MultiViewDataset ds = load_manifest(require<std::string>(cfg, "dataset"));
    const auto method_names = require<std::vector<std::string>>(cfg, "methods");
    if (method_names.empty()) throw ConfigError("config: 'methods' is empty");
    std::vector<EvalMethod> methods;
    for (const auto& name : method_names)
        methods.push_back(method_from_config(cfg, name));
    const auto m_grid = require<std::vector<int>>(cfg, "m_grid");
    for (int m : m_grid)
        if (m < 1) throw ConfigError("config: 'm_grid' entries must be >= 1");
    std::vector<double> ratios =
        value_or<std::vector<double>>(cfg, "ratios", {0.1});
    for (double r : ratios)
        if (r <= 0.0 || r >= 1.0)
            throw ConfigError("config: 'ratios' entries must be in (0, 1)");
    const int folds = value_or(cfg, "folds", 10);
    const uint64_t seed = value_or<uint64_t>(cfg, "seed", 0);

    std::vector<std::vector<int>> combos;
    if (cfg.contains("combinations")) {
        combos = require<std::vector<std::vector<int>>>(cfg, "combinations");
        for (const auto& combo : combos)
            for (int v : combo)
                if (v < 0 || v >= ds.k())
                    throw ConfigError("config: view index out of range in 'combinations'");
    } else if (cfg.contains("view_min_size")) {
        combos = view_combinations(ds.k(), require<int>(cfg, "view_min_size"));
    } else {
        std::vector<int> all(ds.k());
        for (int i = 0; i < ds.k(); ++i) all[i] = i;
        combos = {all};
    }

    const std::string csv_out = value_or(cfg, "csv_out", std::string());
    std::set<std::string> done;
    std::vector<std::string> kept_lines;
    if (resume && !csv_out.empty()) {
        std::ifstream in(csv_out);
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            if (first) {
                first = false;
                continue;  // header
            }
            if (line.empty()) continue;
            std::istringstream ss(line);
            std::string method, views, m_str, ratio_str;
            std::getline(ss, method, ',');
            std::getline(ss, views, ',');
            std::getline(ss, m_str, ',');
            std::getline(ss, ratio_str, ',');
            std::vector<int> vidx;
            std::istringstream vs(views);
            std::string tok;
            while (std::getline(vs, tok, ';'))
                if (!tok.empty()) vidx.push_back(std::stoi(tok));
            done.insert(cell_key(method, vidx, std::stoi(m_str),
                                 std::stod(ratio_str)));
            kept_lines.push_back(line);
        }
    }

    // The full grid is enumerated cell by cell so --resume keeps cell seeds
    // aligned with a fresh run.
    std::vector<SweepRow> rows;
    uint64_t cell = 0;
    int succeeded = 0;
    for (const EvalMethod& method : methods)
        for (const std::vector<int>& combo : combos)
            for (int m : m_grid)
                for (double ratio : ratios) {
                    const uint64_t cell_seed = mix_seed(seed, cell++);
                    if (resume &&
                        done.count(cell_key(method.name, combo, m, ratio)))
                        continue;
                    MultiViewDataset sub;
                    sub.labels = ds.labels;
                    for (int v : combo) {
                        sub.views.push_back(ds.views[v]);
                        sub.view_names.push_back(ds.view_names[v]);
                    }
                    SweepRow row;
                    row.method = method.name;
                    row.view_indices = combo;
                    row.m = m;
                    row.ratio = ratio;
                    try {
                        AccuracyReport rep =
                            run_protocol(sub, method, m, ratio, folds, cell_seed);
                        rep.view_indices = combo;
                        row.report = std::move(rep);
                        ++succeeded;
                    } catch (const std::exception& e) {
                        row.error = e.what();
                    }
                    rows.push_back(std::move(row));
                }

    print_table(rows);
    std::cout << csv_header() << '\n';
    for (const auto& row : rows) std::cout << csv_row(row) << '\n';
    if (!csv_out.empty()) {
        std::ofstream out(csv_out);
        if (!out) throw DataError("cannot write CSV: " + csv_out);
        out << csv_header() << '\n';
        for (const auto& line : kept_lines) out << line << '\n';
        for (const auto& row : rows) out << csv_row(row) << '\n';
    }
    if (succeeded == 0 && !rows.empty()) {
        std::cerr << "sweep: every cell failed\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Multi-view canonical correlation toolkit.\n"
        "CSV schema (eval/sweep): method,views,m,ratio,fold_accuracies,mean,std,"
        "error — views and fold accuracies are ';'-joined, accuracies in [0,1] "
        "at full precision; the table prints percentages to two decimals.\n"
        "Config keys may be overridden with MVCCA_<KEY> environment variables."};
    app.require_subcommand(1);

    std::string config_path, model_path, input_path, output_path;
    std::string layout = "samples-rows";
    int view = 0;
    bool resume = false;

    auto* fit = app.add_subcommand("fit", "Train a model and write an artifact");
    fit->add_option("-c,--config", config_path, "JSON config file")->required();

    auto* trans = app.add_subcommand("transform", "Project data with a saved model");
    trans->add_option("-m,--model", model_path, "model artifact")->required();
    trans->add_option("-i,--input", input_path, "input matrix file")->required();
    trans->add_option("-o,--output", output_path, "output matrix file")->required();
    trans->add_option("-v,--view", view, "view index (0-based)");
    trans->add_option("--layout", layout, "samples-rows|features-rows");

    auto* eval_cmd = app.add_subcommand("eval", "Run the split/SVM protocol once");
    eval_cmd->add_option("-c,--config", config_path, "JSON config file")->required();

    auto* sweep_cmd = app.add_subcommand("sweep", "Grid of protocol runs");
    sweep_cmd->add_option("-c,--config", config_path, "JSON config file")->required();
    sweep_cmd->add_flag("--resume", resume, "skip cells already in csv_out");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (fit->parsed()) return cmd_fit(config_path);
        if (trans->parsed())
            return cmd_transform(model_path, input_path, output_path, view, layout);
        if (eval_cmd->parsed()) return cmd_eval(config_path);
        return cmd_sweep(config_path, resume);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    }
}
