#include "prorl/dataset.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "prorl/math_util.hpp"

namespace prorl {

namespace {

using nlohmann::json;

std::string meta_path_for(const std::string& csv_path) {
    std::filesystem::path p(csv_path);
    p.replace_extension(".meta");
    return p.string();
}

double parse_cell(const std::string& cell, int row, int col) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0' || errno == ERANGE) {
        throw ConfigError("dataset: bad number '" + cell + "' at row " +
                          std::to_string(row) + ", column " + std::to_string(col));
    }
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

} // namespace

void Dataset::validate() const {
    require(state_dim > 0 && dyn_dim > 0, "Dataset: empty schema");
    require(static_cast<int>(columns.size()) == 2 * state_dim + 2 + dyn_dim,
            "Dataset: column count does not match schema");
    require(rows.cols() == static_cast<int>(columns.size()),
            "Dataset: row width does not match schema");
    require(rows.allFinite(), "Dataset: non-finite entries");
}

std::vector<std::string> dataset_columns(const EnvModel& env) {
    std::vector<std::string> cols;
    for (const auto& s : env.state_names) cols.push_back("s0_" + s);
    cols.emplace_back("action");
    for (const auto& v : env.dynamism.vars) cols.push_back(v.name);
    for (const auto& s : env.state_names) cols.push_back("s1_" + s);
    cols.emplace_back("reward");
    return cols;
}

LhsPlan dataset_plan(const EnvModel& env, int n) {
    require(n >= 1, "dataset_plan: n must be >= 1");
    LhsPlan plan;
    plan.n = n;
    for (int i = 0; i < env.state_dim(); ++i) {
        const auto& [lo, hi] = env.lhs_state_box.at(static_cast<std::size_t>(i));
        plan.dims.push_back(LhsDim::uniform(env.state_names[static_cast<std::size_t>(i)], lo, hi));
    }
    if (env.id == EnvId::CartPole) {
        plan.dims.push_back(LhsDim::discrete("action", {-1.0, 1.0}));
    } else {
        plan.dims.push_back(LhsDim::uniform("action", -env.episode.torque_limit,
                                            env.episode.torque_limit));
    }
    for (const auto& v : env.dynamism.vars) {
        plan.dims.push_back(LhsDim::gaussian(v.name, v.mean, v.std, v.low, v.high));
    }
    plan.validate();
    return plan;
}

Dataset collect_dataset(const EnvModel& env, int n, std::uint64_t seed) {
    const LhsPlan plan = dataset_plan(env, n);
    Rng design_rng = Rng::derive(seed, 1);
    const Eigen::MatrixXd design = lhs_sample(plan, design_rng);

    const int ds = env.state_dim();
    const int dp = env.dynamism.size();

    Dataset out;
    out.env = env.id;
    out.seed = seed;
    out.state_dim = ds;
    out.dyn_dim = dp;
    out.columns = dataset_columns(env);
    out.rows.resize(n, static_cast<int>(out.columns.size()));

    int rejected = 0;
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd point = design.row(i).transpose();
        Rng step_rng = Rng::derive(seed, 2, static_cast<std::uint64_t>(i));
        Rng retry_rng = Rng::derive(seed, 3, static_cast<std::uint64_t>(i));

        constexpr int kMaxAttempts = 64;
        for (int attempt = 0;; ++attempt) {
            const State s0 = point.head(ds);
            const double action = point[ds];
            const DynamismSample phi = point.segment(ds + 1, dp);

            State s1;
            double reward = 0.0;
            bool ok = true;
            try {
                s1 = env_step(env, s0, action, phi, step_rng);
                reward = transition_reward(env, s1, action);
                ok = s1.allFinite() && std::isfinite(reward);
            } catch (const ContractViolation&) {
                ok = false; // divergent integration surfaces as non-finite state
            }
            if (ok) {
                out.rows.row(i).segment(out.col_s0(), ds) = s0.transpose();
                out.rows(i, out.col_action()) = action;
                out.rows.row(i).segment(out.col_phi(), dp) = phi.transpose();
                out.rows.row(i).segment(out.col_s1(), ds) = s1.transpose();
                out.rows(i, out.col_reward()) = reward;
                break;
            }
            ++rejected;
            if (attempt + 1 >= kMaxAttempts) {
                throw NumericError("collect_dataset: row " + std::to_string(i) +
                                   " kept diverging after " +
                                   std::to_string(kMaxAttempts) + " redraws");
            }
            // Redraw the whole row from the plan's marginals and retry.
            for (int d = 0; d < point.size(); ++d) {
                point[d] = lhs_dim_value(plan.dims[static_cast<std::size_t>(d)],
                                         retry_rng.uniform());
            }
            step_rng = Rng::derive(seed, 2, static_cast<std::uint64_t>(i),
                                   static_cast<std::uint64_t>(attempt + 1));
        }
    }
    out.rejected_rows = rejected;
    out.validate();
    return out;
}

void write_dataset(const Dataset& ds, const std::string& csv_path) {
    ds.validate();

    std::ofstream csv(csv_path);
    if (!csv) throw ConfigError("dataset: cannot open for writing: " + csv_path);
    for (std::size_t c = 0; c < ds.columns.size(); ++c) {
        if (c) csv << ',';
        csv << ds.columns[c];
    }
    csv << '\n';
    for (int i = 0; i < ds.n(); ++i) {
        for (int c = 0; c < ds.rows.cols(); ++c) {
            if (c) csv << ',';
            csv << format_full(ds.rows(i, c));
        }
        csv << '\n';
    }
    if (!csv) throw ConfigError("dataset: write failed: " + csv_path);
    csv.close();

    json meta;
    meta["columns"] = ds.columns;
    meta["dyn_dim"] = ds.dyn_dim;
    meta["environment"] = env_name(ds.env);
    meta["rejected_rows"] = ds.rejected_rows;
    meta["rows"] = ds.n();
    meta["seed"] = ds.seed;
    meta["state_dim"] = ds.state_dim;
    std::ofstream mf(meta_path_for(csv_path));
    if (!mf) throw ConfigError("dataset: cannot open for writing: " + meta_path_for(csv_path));
    mf << meta.dump(2) << '\n';
}

Dataset read_dataset(const std::string& csv_path) {
    std::ifstream mf(meta_path_for(csv_path));
    if (!mf) throw ConfigError("dataset: missing sidecar: " + meta_path_for(csv_path));
    json meta;
    try {
        mf >> meta;
    } catch (const json::exception& e) {
        throw ConfigError("dataset: bad sidecar JSON: " + std::string(e.what()));
    }

    Dataset ds;
    try {
        ds.env = env_from_name(meta.at("environment").get<std::string>());
        ds.seed = meta.at("seed").get<std::uint64_t>();
        ds.state_dim = meta.at("state_dim").get<int>();
        ds.dyn_dim = meta.at("dyn_dim").get<int>();
        ds.rejected_rows = meta.at("rejected_rows").get<int>();
        ds.columns = meta.at("columns").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw ConfigError("dataset: sidecar missing fields: " + std::string(e.what()));
    }
    const auto expected = dataset_columns(EnvModel::defaults(ds.env));
    if (ds.columns != expected) {
        throw ConfigError("dataset: column schema does not match environment '" +
                          env_name(ds.env) + "'");
    }
    const int n_rows = meta.at("rows").get<int>();

    std::ifstream csv(csv_path);
    if (!csv) throw ConfigError("dataset: cannot open: " + csv_path);
    std::string line;
    if (!std::getline(csv, line)) throw ConfigError("dataset: empty file: " + csv_path);
    {
        const auto header = split_csv_line(line);
        if (header != ds.columns) {
            throw ConfigError("dataset: CSV header does not match sidecar columns");
        }
    }

    ds.rows.resize(n_rows, static_cast<int>(ds.columns.size()));
    int row = 0;
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        if (row >= n_rows) throw ConfigError("dataset: more rows than sidecar declares");
        const auto cells = split_csv_line(line);
        if (cells.size() != ds.columns.size()) {
            throw ConfigError("dataset: row " + std::to_string(row + 1) + " has " +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(ds.columns.size()));
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            ds.rows(row, static_cast<int>(c)) = parse_cell(cells[c], row + 1, static_cast<int>(c));
        }
        ++row;
    }
    if (row != n_rows) {
        throw ConfigError("dataset: expected " + std::to_string(n_rows) + " rows, found " +
                          std::to_string(row));
    }
    ds.validate();
    return ds;
}

} // namespace prorl
