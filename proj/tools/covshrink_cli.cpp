// Command-line front end: six subcommands over the shrinkage library, each
// writing deterministic result files plus a JSON metadata sidecar.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "covshrink/covshrink.hpp"

using json = nlohmann::ordered_json;
using namespace covshrink;

namespace {

// ---------------------------------------------------------------------------
// Config-file plumbing.  Flags always override config values; unknown keys
// anywhere in the file are rejected outright.

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::BadConfig, "config file not readable: " + path);
    try {
        return json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::BadConfig, std::string("config is not valid JSON: ") + e.what());
    }
}

void require_keys(const json& obj, std::initializer_list<const char*> allowed,
                  const std::string& where) {
    if (!obj.is_object()) throw Error(ErrorCode::BadConfig, where + " must be a JSON object");
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (item.key() == a) {
                known = true;
                break;
            }
        if (!known)
            throw Error(ErrorCode::BadConfig,
                        "unknown config key \"" + item.key() + "\" in " + where);
    }
}

double get_double(const json& obj, const char* key) {
    if (!obj.at(key).is_number())
        throw Error(ErrorCode::BadConfig, std::string("config key \"") + key + "\" must be a number");
    return obj.at(key).get<double>();
}

std::uint64_t get_u64(const json& obj, const char* key) {
    if (!obj.at(key).is_number_unsigned())
        throw Error(ErrorCode::BadConfig,
                    std::string("config key \"") + key + "\" must be a non-negative integer");
    return obj.at(key).get<std::uint64_t>();
}

std::string get_string(const json& obj, const char* key) {
    if (!obj.at(key).is_string())
        throw Error(ErrorCode::BadConfig, std::string("config key \"") + key + "\" must be a string");
    return obj.at(key).get<std::string>();
}

std::vector<double> get_double_list(const json& obj, const char* key) {
    if (!obj.at(key).is_array())
        throw Error(ErrorCode::BadConfig, std::string("config key \"") + key + "\" must be an array");
    std::vector<double> out;
    for (const auto& v : obj.at(key)) {
        if (!v.is_number())
            throw Error(ErrorCode::BadConfig,
                        std::string("config key \"") + key + "\" must hold numbers only");
        out.push_back(v.get<double>());
    }
    return out;
}

std::vector<std::size_t> get_size_list(const json& obj, const char* key) {
    std::vector<std::size_t> out;
    for (double v : get_double_list(obj, key)) {
        if (!(v >= 1.0) || v != std::floor(v))
            throw Error(ErrorCode::BadConfig,
                        std::string("config key \"") + key + "\" must hold positive integers");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

std::vector<double> parse_double_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::string field =
            text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        try {
            std::size_t used = 0;
            out.push_back(std::stod(field, &used));
            if (used != field.size()) throw std::invalid_argument(field);
        } catch (const std::exception&) {
            throw Error(ErrorCode::BadConfig,
                        std::string(what) + ": \"" + field + "\" is not a number");
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.empty()) throw Error(ErrorCode::BadConfig, std::string(what) + ": empty list");
    return out;
}

std::vector<std::size_t> parse_size_list(const std::string& text, const char* what) {
    std::vector<std::size_t> out;
    for (double v : parse_double_list(text, what)) {
        if (!(v >= 1.0) || v != std::floor(v))
            throw Error(ErrorCode::BadConfig, std::string(what) + ": entries must be positive integers");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

std::vector<std::string> split_names(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        out.push_back(text.substr(
            start, comma == std::string::npos ? std::string::npos : comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

CvScore parse_cv_score(const std::string& name) {
    if (name == "portfolio-variance") return CvScore::PortfolioVariance;
    if (name == "frobenius-holdout") return CvScore::FrobeniusHoldout;
    if (name == "quadratic-loss") return CvScore::QuadraticLoss;
    throw Error(ErrorCode::BadConfig, "unknown validation score \"" + name + "\"");
}

// Radius schedule from a config object such as {"policy": "root_n", "c": 5.0}.
RadiusSchedule parse_radius_schedule(const json& obj, const std::string& where) {
    if (!obj.is_object() || !obj.contains("policy"))
        throw Error(ErrorCode::BadConfig, where + " needs a \"policy\" field");
    const std::string policy = get_string(obj, "policy");
    if (policy == "fixed") {
        require_keys(obj, {"policy", "eps"}, where);
        return RadiusSchedule::fixed(get_double(obj, "eps"));
    }
    if (policy == "root_n") {
        require_keys(obj, {"policy", "c"}, where);
        return RadiusSchedule::root_n(obj.contains("c") ? get_double(obj, "c") : 5.0);
    }
    if (policy == "finite_sample") {
        require_keys(obj, {"policy", "c0", "sigma2", "lambda_min", "eta"}, where);
        return RadiusSchedule::finite_sample(
            obj.contains("c0") ? get_double(obj, "c0") : 1.0,
            obj.contains("sigma2") ? get_double(obj, "sigma2") : 1.0,
            obj.contains("lambda_min") ? get_double(obj, "lambda_min") : 1.0,
            obj.contains("eta") ? get_double(obj, "eta") : 0.05);
    }
    if (policy == "cross_validate") {
        require_keys(obj, {"policy", "grid", "grid_lo", "grid_hi", "grid_points", "folds",
                           "score", "fold_seed"},
                     where);
        std::vector<double> grid;
        if (obj.contains("grid")) {
            grid = get_double_list(obj, "grid");
        } else {
            const double lo = obj.contains("grid_lo") ? get_double(obj, "grid_lo") : 1e-5;
            const double hi = obj.contains("grid_hi") ? get_double(obj, "grid_hi") : 1e2;
            const std::size_t points =
                obj.contains("grid_points")
                    ? static_cast<std::size_t>(get_double(obj, "grid_points"))
                    : 50;
            if (!(lo > 0.0) || !(hi > lo))
                throw Error(ErrorCode::BadConfig, where + ": need 0 < grid_lo < grid_hi");
            grid = detail::log_grid(lo, hi, points);
        }
        int folds = 5;
        if (obj.contains("folds")) {
            if (obj.at("folds").is_string()) {
                if (obj.at("folds").get<std::string>() != "loo")
                    throw Error(ErrorCode::BadConfig, where + ": folds must be an integer or \"loo\"");
                folds = kLeaveOneOut;
            } else {
                folds = static_cast<int>(get_double(obj, "folds"));
            }
        }
        const CvScore score = parse_cv_score(
            obj.contains("score") ? get_string(obj, "score") : "quadratic-loss");
        const std::uint64_t fold_seed = obj.contains("fold_seed") ? get_u64(obj, "fold_seed") : 0;
        return RadiusSchedule::cross_validate(std::move(grid), folds, score, fold_seed);
    }
    if (policy == "ternary_search")
        throw Error(ErrorCode::BadConfig,
                    "ternary search needs a programmatic loss and is not available here");
    throw Error(ErrorCode::BadConfig, where + ": unknown radius policy \"" + policy + "\"");
}

json echo_radius_schedule(const RadiusSchedule& s) {
    json out;
    out["policy"] = radius_policy_name(s.policy);
    switch (s.policy) {
        case RadiusPolicy::Fixed:
            out["eps"] = s.fixed_radius;
            break;
        case RadiusPolicy::RootN:
            out["c"] = s.root_n_c;
            break;
        case RadiusPolicy::FiniteSample:
            out["c0"] = s.c0;
            out["sigma2"] = s.sigma2;
            out["lambda_min"] = s.lambda_min;
            out["eta"] = s.eta;
            break;
        case RadiusPolicy::CrossValidate:
            out["grid"] = s.grid;
            out["folds"] = s.folds == kLeaveOneOut ? json("loo") : json(s.folds);
            out["score"] = cv_score_name(s.score);
            out["fold_seed"] = s.fold_seed;
            break;
        case RadiusPolicy::TernarySearch:
            out["lo"] = s.search_lo;
            out["hi"] = s.search_hi;
            out["trials"] = s.search_trials;
            break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Shared output plumbing.

struct RunContext {
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    double tol = 1e-10;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    std::string path(const std::string& name) const {
        return (std::filesystem::path(out_dir) / name).string();
    }

    void write_meta(const std::string& command, json config_echo) const {
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        json meta;
        meta["command"] = command;
        meta["config"] = std::move(config_echo);
        meta["versions"] = {{"covshrink", kLibraryVersion}, {"rng_scheme", kRngSchemeName}};
        meta["wall_time_seconds"] = wall;
        std::string name = command;
        for (auto& ch : name)
            if (ch == '-') ch = '_';
        std::ofstream out(path(name + "_meta.json"));
        out << meta.dump(2) << '\n';
    }
};

void write_json_file(const std::string& path, const json& value) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::MalformedInput, path + ": cannot open file for writing");
    out << value.dump(2) << '\n';
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

// Pulls a command section out of the config file, if any.
json section_of(const json& config, const char* name) {
    if (config.is_null() || !config.contains(name)) return json::object();
    return config.at(name);
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateArgs {
    std::string input;       // square covariance CSV
    std::string samples;     // samples CSV (rows = observations)
    std::string centering = "sample-mean";
    std::string divergence;
    double eps = 0.0;
    bool eps_set = false;
    json radius;  // schedule object, exclusive with eps
};

void cmd_estimate(const RunContext& ctx, const EstimateArgs& args) {
    if (args.input.empty() == args.samples.empty())
        throw Error(ErrorCode::BadConfig, "estimate needs exactly one of --input or --samples");
    if (args.divergence.empty())
        throw Error(ErrorCode::BadConfig, "estimate needs a divergence");
    const DivergenceSpec spec = DivergenceSpec::from_name(args.divergence);
    if (args.centering != "sample-mean" && args.centering != "zero")
        throw Error(ErrorCode::BadConfig, "centering must be \"sample-mean\" or \"zero\"");
    if (args.eps_set && !args.radius.is_null())
        throw Error(ErrorCode::BadConfig, "give either --eps or a radius schedule, not both");
    if (!args.eps_set && args.radius.is_null())
        throw Error(ErrorCode::BadConfig, "estimate needs --eps or a radius schedule");

    SymMatrix nominal(1);
    double eps = args.eps;
    if (!args.input.empty()) {
        nominal = read_matrix_csv(args.input);
        if (!args.radius.is_null()) {
            const RadiusSchedule schedule = parse_radius_schedule(args.radius, "radius");
            if (schedule.policy != RadiusPolicy::Fixed)
                throw Error(ErrorCode::BadConfig,
                            "a covariance input carries no sample count; only the fixed radius "
                            "policy applies (use --samples for data-driven schedules)");
            eps = schedule.fixed_radius;
        }
    } else {
        const SamplesTable table = read_samples_csv(args.samples);
        const SampleSet data = to_sample_set(
            table, args.centering == "zero" ? Centering::AssumeZeroMean : Centering::SampleMean);
        nominal = sample_covariance(data);
        if (!args.radius.is_null()) {
            const RadiusSchedule schedule = parse_radius_schedule(args.radius, "radius");
            std::vector<std::string> warnings;
            eps = resolve_radius(schedule, data, spec, &warnings);
            print_warnings(warnings);
        }
    }

    EstimateOptions opts;
    opts.tol = ctx.tol;
    const ShrinkageSolution sol = estimate(nominal, spec, eps, opts);

    write_matrix_csv(ctx.path("estimate_estimator.csv"), sol.estimator);

    const auto kappa = [](const std::vector<double>& eigs) {
        return eigs.front() > 0.0 ? eigs.back() / eigs.front()
                                  : std::numeric_limits<double>::infinity();
    };
    json solution;
    solution["divergence"] = spec.name();
    solution["radius"] = eps;
    solution["gamma_star"] = sol.gamma_star;
    solution["eigenvalues_nominal"] = sol.nominal_eigenvalues;
    solution["eigenvalues_shrunk"] = sol.shrunk_eigenvalues;
    solution["achieved_divergence"] = sol.achieved_divergence;
    solution["residual"] = sol.residual;
    solution["condition_numbers"] = {{"nominal", kappa(sol.nominal_eigenvalues)},
                                     {"estimator", kappa(sol.shrunk_eigenvalues)}};
    write_json_file(ctx.path("estimate_solution.json"), solution);

    json echo;
    echo["input"] = args.input;
    echo["samples"] = args.samples;
    echo["centering"] = args.centering;
    echo["divergence"] = args.divergence;
    echo["eps"] = eps;
    if (!args.radius.is_null()) echo["radius"] = args.radius;
    echo["tol"] = ctx.tol;
    echo["out"] = ctx.out_dir;
    ctx.write_meta("estimate", std::move(echo));
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
    std::string divergence = "wasserstein";
    std::vector<double> spectrum = {1.0, 2.0, 3.0};
    double eps_lo = 1e-3;
    double eps_hi = 0.0;  // 0 = auto: eps_max*(1-1e-6) when finite, else 1e2
    std::size_t eps_points = 50;
};

void cmd_sweep(const RunContext& ctx, const SweepArgs& args) {
    const DivergenceSpec spec = DivergenceSpec::from_name(args.divergence);
    for (double v : args.spectrum)
        if (!(v > 0.0))
            throw Error(ErrorCode::BadConfig, "spectrum entries must be positive");
    double hi = args.eps_hi;
    if (hi == 0.0) {
        const ExtReal eps_bar = epsilon_max(spec, args.spectrum);
        hi = eps_bar.is_finite() ? eps_bar.value() * (1.0 - 1e-6) : 1e2;
    }
    if (!(args.eps_lo > 0.0) || !(hi > args.eps_lo))
        throw Error(ErrorCode::BadConfig, "need 0 < eps_lo < eps_hi");
    if (args.eps_points < 2) throw Error(ErrorCode::BadConfig, "need at least two grid points");

    const auto grid = detail::log_grid(args.eps_lo, hi, args.eps_points);
    const auto rows = run_sweep(spec, args.spectrum, grid, ctx.tol);
    write_sweep_csv(ctx.path("sweep_paths.csv"), rows);

    json echo;
    echo["divergence"] = args.divergence;
    echo["spectrum"] = args.spectrum;
    echo["eps_lo"] = args.eps_lo;
    echo["eps_hi"] = hi;
    echo["eps_points"] = args.eps_points;
    echo["tol"] = ctx.tol;
    echo["out"] = ctx.out_dir;
    ctx.write_meta("sweep", std::move(echo));
}

// ---------------------------------------------------------------------------
// synthetic-risk

void cmd_synthetic_risk(const RunContext& ctx, const SyntheticRiskConfig& config,
                        const std::vector<std::string>& kind_names) {
    const auto rows = run_synthetic_risk(config);
    write_metrics_csv(ctx.path("synthetic_risk_metrics.csv"), rows);

    json echo;
    echo["p"] = config.p;
    echo["spikes"] = config.spikes;
    echo["spike_values"] = config.spike_values;
    echo["sample_sizes"] = config.sample_sizes;
    echo["trials"] = config.trials;
    echo["kinds"] = kind_names;
    echo["alpha_points"] = config.alpha_points;
    echo["eps_points"] = config.eps_points;
    echo["seed"] = config.base_seed;
    echo["tol"] = config.tol;
    echo["out"] = ctx.out_dir;
    ctx.write_meta("synthetic-risk", std::move(echo));
}

// ---------------------------------------------------------------------------
// consistency

void cmd_consistency(const RunContext& ctx, ConsistencyConfig config,
                     const std::string& population,
                     const std::vector<std::string>& kind_names) {
    std::vector<MetricRow> rows;
    const auto append = [&](ConsistencyPopulation pop) {
        config.population = pop;
        auto part = run_consistency(config);
        rows.insert(rows.end(), part.begin(), part.end());
    };
    if (population == "identity" || population == "both")
        append(ConsistencyPopulation::Identity);
    if (population == "banded" || population == "both") append(ConsistencyPopulation::Banded);
    if (rows.empty())
        throw Error(ErrorCode::BadConfig,
                    "population must be \"identity\", \"banded\", or \"both\"");
    write_metrics_csv(ctx.path("consistency_metrics.csv"), rows);

    json echo;
    echo["p"] = config.p;
    echo["sample_sizes"] = config.sample_sizes;
    echo["trials"] = config.trials;
    echo["c"] = config.c;
    echo["population"] = population;
    echo["kinds"] = kind_names;
    echo["seed"] = config.base_seed;
    echo["tol"] = config.tol;
    echo["out"] = ctx.out_dir;
    ctx.write_meta("consistency", std::move(echo));
}

// ---------------------------------------------------------------------------
// portfolio

struct PortfolioArgs {
    std::string returns;
    std::size_t window = 50;
    std::size_t holding = 1;
    std::string estimator = "sample";
    double alpha = -1.0;  // required for "linear"
    int folds = 5;
    json radius;  // schedule object for divergence estimators
};

// In-window hyperparameter grids for the cross-validated variants.
std::vector<double> portfolio_eps_grid(DivergenceKind kind) {
    switch (kind) {
        case DivergenceKind::KullbackLeibler:
            return detail::log_grid(1e-5, 1e2, 50);
        case DivergenceKind::FisherRao:
            return detail::log_grid(1e-10, 1e4, 50);
        case DivergenceKind::Wasserstein:
            return detail::log_grid(1e-10, 1e8, 50);
        default:
            return detail::log_grid(1e-5, 1e2, 50);
    }
}

void cmd_portfolio(const RunContext& ctx, const PortfolioArgs& args) {
    if (args.returns.empty()) throw Error(ErrorCode::BadConfig, "portfolio needs --returns");
    const ReturnsTable table = read_returns_csv(args.returns);
    const SampleSet returns(table.n, table.p, table.values, Centering::SampleMean);

    EstimatorFactory factory;
    RadiusSchedule schedule = RadiusSchedule::root_n(5.0);
    bool has_schedule = false;
    if (args.estimator == "sample") {
        factory = sample_factory();
    } else if (args.estimator == "linear") {
        if (!(args.alpha >= 0.0 && args.alpha <= 1.0))
            throw Error(ErrorCode::BadConfig, "linear estimator needs --alpha in [0, 1]");
        factory = linear_factory(args.alpha);
    } else if (args.estimator == "linear-cv") {
        factory = linear_cv_factory(detail::log_grid(1e-5, 1.0, 50), args.folds,
                                    CvScore::PortfolioVariance);
    } else {
        const DivergenceSpec spec = DivergenceSpec::from_name(args.estimator);
        if (!args.radius.is_null()) {
            schedule = parse_radius_schedule(args.radius, "radius");
        } else {
            schedule = RadiusSchedule::cross_validate(portfolio_eps_grid(spec.kind), args.folds,
                                                      CvScore::PortfolioVariance);
        }
        has_schedule = true;
        factory = dro_factory(spec, schedule, ctx.tol);
    }

    BacktestConfig bt;
    bt.window = args.window;
    bt.holding = args.holding;
    bt.estimator_id = args.estimator;
    bt.radius_policy = has_schedule ? radius_policy_name(schedule.policy) : "";
    const BacktestReport report = rolling_backtest(returns, bt, factory);

    json out;
    out["estimator"] = report.config.estimator_id;
    out["window"] = report.config.window;
    out["holding"] = report.config.holding;
    out["radius_policy"] = report.config.radius_policy;
    out["mean_return"] = report.mean_return;
    out["std_return"] = report.std_return;
    out["sharpe"] = report.sharpe;
    out["period_returns"] = report.period_returns;
    write_json_file(ctx.path("portfolio_report.json"), out);

    json echo;
    echo["returns"] = args.returns;
    echo["window"] = args.window;
    echo["holding"] = args.holding;
    echo["estimator"] = args.estimator;
    if (args.estimator == "linear") echo["alpha"] = args.alpha;
    if (args.estimator == "linear-cv" ||
        (has_schedule && schedule.policy == RadiusPolicy::CrossValidate))
        echo["folds"] = args.folds;
    if (has_schedule) echo["radius"] = echo_radius_schedule(schedule);
    echo["tol"] = ctx.tol;
    echo["out"] = ctx.out_dir;
    ctx.write_meta("portfolio", std::move(echo));
}

// ---------------------------------------------------------------------------
// classify

struct ClassifyArgs {
    std::string data;
    std::string method = "qda";
    std::vector<std::string> estimators = {"plain"};
    double alpha = 0.5;
    int splits = 20;
    double train_fraction = 0.5;
    json radius;
};

void cmd_classify(const RunContext& ctx, const ClassifyArgs& args) {
    if (args.data.empty()) throw Error(ErrorCode::BadConfig, "classify needs --data");
    if (args.method != "lda" && args.method != "qda")
        throw Error(ErrorCode::BadConfig, "method must be \"lda\" or \"qda\"");
    const LabeledTable table = read_labeled_csv(args.data);
    const LabeledSampleSet data(
        SampleSet(table.n, table.p, table.features, Centering::SampleMean), table.labels);

    RadiusSchedule schedule = RadiusSchedule::root_n(5.0);
    if (!args.radius.is_null()) schedule = parse_radius_schedule(args.radius, "radius");

    std::vector<std::pair<std::string, CovarianceTransform>> estimators;
    for (const auto& name : args.estimators) {
        if (name == "plain") {
            estimators.emplace_back(name, identity_transform());
        } else if (name == "linear") {
            if (!(args.alpha >= 0.0 && args.alpha <= 1.0))
                throw Error(ErrorCode::BadConfig, "linear estimator needs --alpha in [0, 1]");
            estimators.emplace_back(name, linear_transform(args.alpha));
        } else {
            const DivergenceSpec spec = DivergenceSpec::from_name(name);
            estimators.emplace_back(name, dro_transform(spec, schedule, ctx.tol));
        }
    }

    ClassifyConfig config;
    config.method = args.method == "lda" ? ClassifierMethod::LDA : ClassifierMethod::QDA;
    config.train_fraction = args.train_fraction;
    config.splits = args.splits;
    config.base_seed = ctx.seed;
    const auto rows = run_classify(data, estimators, config);
    write_metrics_csv(ctx.path("classify_accuracy.csv"), rows);

    json echo;
    echo["data"] = args.data;
    echo["method"] = args.method;
    echo["estimators"] = args.estimators;
    echo["alpha"] = args.alpha;
    echo["splits"] = args.splits;
    echo["train_fraction"] = args.train_fraction;
    echo["radius"] = echo_radius_schedule(schedule);
    echo["seed"] = ctx.seed;
    echo["tol"] = ctx.tol;
    echo["out"] = ctx.out_dir;
    ctx.write_meta("classify", std::move(echo));
}

// ---------------------------------------------------------------------------
// Wiring.

int run(int argc, char** argv) {
    CLI::App app{"Distributionally robust covariance shrinkage toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".";
    std::uint64_t seed = 1;
    double tol = 1e-10;
    auto* o_config = app.add_option("--config", config_path, "JSON config file");
    auto* o_seed = app.add_option("--seed", seed, "base RNG seed");
    auto* o_out = app.add_option("--out", out_dir, "output directory");
    auto* o_tol = app.add_option("--tol", tol, "root-solve tolerance");

    // estimate
    auto* sub_est = app.add_subcommand("estimate", "solve one shrinkage instance");
    sub_est->fallthrough();
    EstimateArgs est;
    auto* oe_input = sub_est->add_option("--input", est.input, "square covariance CSV");
    auto* oe_samples = sub_est->add_option("--samples", est.samples, "samples CSV");
    auto* oe_centering =
        sub_est->add_option("--centering", est.centering, "sample-mean | zero");
    auto* oe_div = sub_est->add_option("--divergence", est.divergence, "divergence name");
    auto* oe_eps = sub_est->add_option("--eps", est.eps, "ambiguity radius");

    // sweep
    auto* sub_sweep = app.add_subcommand("sweep", "eigenvalue paths over a radius grid");
    sub_sweep->fallthrough();
    SweepArgs sweep;
    std::string sweep_spectrum_text;
    auto* os_div = sub_sweep->add_option("--divergence", sweep.divergence, "divergence name");
    auto* os_spec =
        sub_sweep->add_option("--spectrum", sweep_spectrum_text, "comma list, default 1,2,3");
    auto* os_lo = sub_sweep->add_option("--eps-lo", sweep.eps_lo, "grid start");
    auto* os_hi = sub_sweep->add_option("--eps-hi", sweep.eps_hi, "grid end (default: auto)");
    auto* os_pts = sub_sweep->add_option("--eps-points", sweep.eps_points, "grid size");

    // synthetic-risk
    auto* sub_risk = app.add_subcommand("synthetic-risk", "Frobenius risk on the spiked model");
    sub_risk->fallthrough();
    SyntheticRiskConfig risk;
    std::string risk_spikes_text, risk_sizes_text, risk_kinds_text;
    auto* or_p = sub_risk->add_option("--p", risk.p, "dimension");
    auto* or_spikes = sub_risk->add_option("--spikes", risk.spikes, "spiked eigenvalue count");
    auto* or_values =
        sub_risk->add_option("--spike-values", risk_spikes_text, "comma list of M values");
    auto* or_sizes =
        sub_risk->add_option("--sample-sizes", risk_sizes_text, "comma list of n values");
    auto* or_trials = sub_risk->add_option("--trials", risk.trials, "seeds per point");
    auto* or_kinds = sub_risk->add_option("--kinds", risk_kinds_text, "divergence names");
    auto* or_alpha = sub_risk->add_option("--alpha-points", risk.alpha_points, "linear grid size");
    auto* or_eps = sub_risk->add_option("--eps-points", risk.eps_points, "radius grid size");

    // consistency
    auto* sub_cons = app.add_subcommand("consistency", "loss decay under the root-n schedule");
    sub_cons->fallthrough();
    ConsistencyConfig cons;
    std::string cons_sizes_text, cons_kinds_text, cons_population = "both";
    auto* oc_p = sub_cons->add_option("--p", cons.p, "dimension");
    auto* oc_sizes =
        sub_cons->add_option("--sample-sizes", cons_sizes_text, "comma list of n values");
    auto* oc_trials = sub_cons->add_option("--trials", cons.trials, "seeds per n");
    auto* oc_c = sub_cons->add_option("--c", cons.c, "radius constant in c/sqrt(n)");
    auto* oc_pop =
        sub_cons->add_option("--population", cons_population, "identity | banded | both");
    auto* oc_kinds = sub_cons->add_option("--kinds", cons_kinds_text, "divergence names");

    // portfolio
    auto* sub_port = app.add_subcommand("portfolio", "rolling minimum-variance backtest");
    sub_port->fallthrough();
    PortfolioArgs port;
    auto* op_returns = sub_port->add_option("--returns", port.returns, "returns CSV");
    auto* op_window = sub_port->add_option("--window", port.window, "estimation window");
    auto* op_holding = sub_port->add_option("--holding", port.holding, "holding period");
    auto* op_est = sub_port->add_option("--estimator", port.estimator,
                                        "sample | linear | linear-cv | divergence name");
    auto* op_alpha = sub_port->add_option("--alpha", port.alpha, "linear mixing weight");
    auto* op_folds = sub_port->add_option("--folds", port.folds, "CV folds inside windows");

    // classify
    auto* sub_cls = app.add_subcommand("classify", "LDA/QDA accuracy over random splits");
    sub_cls->fallthrough();
    ClassifyArgs cls;
    std::string cls_estimators_text;
    auto* ol_data = sub_cls->add_option("--data", cls.data, "labeled CSV");
    auto* ol_method = sub_cls->add_option("--method", cls.method, "lda | qda");
    auto* ol_est = sub_cls->add_option("--estimators", cls_estimators_text,
                                       "comma list: plain | linear | divergence names");
    auto* ol_alpha = sub_cls->add_option("--alpha", cls.alpha, "linear mixing weight");
    auto* ol_splits = sub_cls->add_option("--splits", cls.splits, "random splits");
    auto* ol_frac = sub_cls->add_option("--train-fraction", cls.train_fraction, "train share");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "BadConfig: " << e.what() << '\n';
        return 2;
    }

    json config;
    if (o_config->count()) config = load_config(config_path);
    if (!config.is_null())
        require_keys(config,
                     {"seed", "out", "tol", "estimate", "sweep", "synthetic-risk", "consistency",
                      "portfolio", "classify"},
                     "config");

    RunContext ctx;
    if (!o_seed->count() && !config.is_null() && config.contains("seed"))
        seed = get_u64(config, "seed");
    if (!o_out->count() && !config.is_null() && config.contains("out"))
        out_dir = get_string(config, "out");
    if (!o_tol->count() && !config.is_null() && config.contains("tol"))
        tol = get_double(config, "tol");
    ctx.seed = seed;
    ctx.out_dir = out_dir;
    ctx.tol = tol;
    if (!(ctx.tol > 0.0)) throw Error(ErrorCode::BadConfig, "tol must be positive");
    std::filesystem::create_directories(ctx.out_dir);

    const auto kinds_from = [](const std::string& text) {
        std::vector<DivergenceKind> kinds;
        std::vector<std::string> names;
        for (const auto& name : split_names(text)) {
            kinds.push_back(DivergenceSpec::from_name(name).kind);
            names.push_back(name);
        }
        return std::make_pair(kinds, names);
    };

    if (sub_est->parsed()) {
        const json sec = section_of(config, "estimate");
        require_keys(sec, {"input", "samples", "centering", "divergence", "eps", "radius"},
                     "estimate section");
        if (!oe_input->count() && sec.contains("input")) est.input = get_string(sec, "input");
        if (!oe_samples->count() && sec.contains("samples"))
            est.samples = get_string(sec, "samples");
        if (!oe_centering->count() && sec.contains("centering"))
            est.centering = get_string(sec, "centering");
        if (!oe_div->count() && sec.contains("divergence"))
            est.divergence = get_string(sec, "divergence");
        est.eps_set = oe_eps->count() > 0;
        if (!est.eps_set && sec.contains("eps")) {
            est.eps = get_double(sec, "eps");
            est.eps_set = true;
        }
        if (sec.contains("radius") && !est.eps_set) est.radius = sec.at("radius");
        cmd_estimate(ctx, est);
        return 0;
    }

    if (sub_sweep->parsed()) {
        const json sec = section_of(config, "sweep");
        require_keys(sec, {"divergence", "spectrum", "eps_lo", "eps_hi", "eps_points"},
                     "sweep section");
        if (!os_div->count() && sec.contains("divergence"))
            sweep.divergence = get_string(sec, "divergence");
        if (os_spec->count())
            sweep.spectrum = parse_double_list(sweep_spectrum_text, "--spectrum");
        else if (sec.contains("spectrum"))
            sweep.spectrum = get_double_list(sec, "spectrum");
        if (!os_lo->count() && sec.contains("eps_lo")) sweep.eps_lo = get_double(sec, "eps_lo");
        if (!os_hi->count() && sec.contains("eps_hi")) sweep.eps_hi = get_double(sec, "eps_hi");
        if (!os_pts->count() && sec.contains("eps_points"))
            sweep.eps_points = static_cast<std::size_t>(get_double(sec, "eps_points"));
        cmd_sweep(ctx, sweep);
        return 0;
    }

    if (sub_risk->parsed()) {
        const json sec = section_of(config, "synthetic-risk");
        require_keys(sec,
                     {"p", "spikes", "spike_values", "sample_sizes", "trials", "kinds",
                      "alpha_points", "eps_points"},
                     "synthetic-risk section");
        if (!or_p->count() && sec.contains("p"))
            risk.p = static_cast<std::size_t>(get_double(sec, "p"));
        if (!or_spikes->count() && sec.contains("spikes"))
            risk.spikes = static_cast<std::size_t>(get_double(sec, "spikes"));
        if (or_values->count())
            risk.spike_values = parse_double_list(risk_spikes_text, "--spike-values");
        else if (sec.contains("spike_values"))
            risk.spike_values = get_double_list(sec, "spike_values");
        if (or_sizes->count())
            risk.sample_sizes = parse_size_list(risk_sizes_text, "--sample-sizes");
        else if (sec.contains("sample_sizes"))
            risk.sample_sizes = get_size_list(sec, "sample_sizes");
        if (!or_trials->count() && sec.contains("trials"))
            risk.trials = static_cast<int>(get_double(sec, "trials"));
        std::vector<std::string> kind_names = {"kl", "wasserstein", "fisher-rao"};
        if (or_kinds->count())
            std::tie(risk.kinds, kind_names) = kinds_from(risk_kinds_text);
        else if (sec.contains("kinds")) {
            risk.kinds.clear();
            kind_names.clear();
            for (const auto& v : sec.at("kinds")) {
                kind_names.push_back(v.get<std::string>());
                risk.kinds.push_back(DivergenceSpec::from_name(kind_names.back()).kind);
            }
        }
        if (!or_alpha->count() && sec.contains("alpha_points"))
            risk.alpha_points = static_cast<std::size_t>(get_double(sec, "alpha_points"));
        if (!or_eps->count() && sec.contains("eps_points"))
            risk.eps_points = static_cast<std::size_t>(get_double(sec, "eps_points"));
        risk.base_seed = ctx.seed;
        risk.tol = ctx.tol;
        cmd_synthetic_risk(ctx, risk, kind_names);
        return 0;
    }

    if (sub_cons->parsed()) {
        const json sec = section_of(config, "consistency");
        require_keys(sec, {"p", "sample_sizes", "trials", "c", "population", "kinds"},
                     "consistency section");
        if (!oc_p->count() && sec.contains("p"))
            cons.p = static_cast<std::size_t>(get_double(sec, "p"));
        if (oc_sizes->count())
            cons.sample_sizes = parse_size_list(cons_sizes_text, "--sample-sizes");
        else if (sec.contains("sample_sizes"))
            cons.sample_sizes = get_size_list(sec, "sample_sizes");
        if (!oc_trials->count() && sec.contains("trials"))
            cons.trials = static_cast<int>(get_double(sec, "trials"));
        if (!oc_c->count() && sec.contains("c")) cons.c = get_double(sec, "c");
        if (!oc_pop->count() && sec.contains("population"))
            cons_population = get_string(sec, "population");
        std::vector<std::string> kind_names = {"kl", "wasserstein", "fisher-rao"};
        if (oc_kinds->count())
            std::tie(cons.kinds, kind_names) = kinds_from(cons_kinds_text);
        else if (sec.contains("kinds")) {
            cons.kinds.clear();
            kind_names.clear();
            for (const auto& v : sec.at("kinds")) {
                kind_names.push_back(v.get<std::string>());
                cons.kinds.push_back(DivergenceSpec::from_name(kind_names.back()).kind);
            }
        }
        cons.base_seed = ctx.seed;
        cons.tol = ctx.tol;
        cmd_consistency(ctx, cons, cons_population, kind_names);
        return 0;
    }

    if (sub_port->parsed()) {
        const json sec = section_of(config, "portfolio");
        require_keys(sec,
                     {"returns", "window", "holding", "estimator", "alpha", "folds", "radius"},
                     "portfolio section");
        if (!op_returns->count() && sec.contains("returns"))
            port.returns = get_string(sec, "returns");
        if (!op_window->count() && sec.contains("window"))
            port.window = static_cast<std::size_t>(get_double(sec, "window"));
        if (!op_holding->count() && sec.contains("holding"))
            port.holding = static_cast<std::size_t>(get_double(sec, "holding"));
        if (!op_est->count() && sec.contains("estimator"))
            port.estimator = get_string(sec, "estimator");
        if (!op_alpha->count() && sec.contains("alpha")) port.alpha = get_double(sec, "alpha");
        if (!op_folds->count() && sec.contains("folds"))
            port.folds = static_cast<int>(get_double(sec, "folds"));
        if (sec.contains("radius")) port.radius = sec.at("radius");
        cmd_portfolio(ctx, port);
        return 0;
    }

    if (sub_cls->parsed()) {
        const json sec = section_of(config, "classify");
        require_keys(sec,
                     {"data", "method", "estimators", "alpha", "splits", "train_fraction",
                      "radius"},
                     "classify section");
        if (!ol_data->count() && sec.contains("data")) cls.data = get_string(sec, "data");
        if (!ol_method->count() && sec.contains("method")) cls.method = get_string(sec, "method");
        if (ol_est->count())
            cls.estimators = split_names(cls_estimators_text);
        else if (sec.contains("estimators")) {
            cls.estimators.clear();
            for (const auto& v : sec.at("estimators")) cls.estimators.push_back(v.get<std::string>());
        }
        if (!ol_alpha->count() && sec.contains("alpha")) cls.alpha = get_double(sec, "alpha");
        if (!ol_splits->count() && sec.contains("splits"))
            cls.splits = static_cast<int>(get_double(sec, "splits"));
        if (!ol_frac->count() && sec.contains("train_fraction"))
            cls.train_fraction = get_double(sec, "train_fraction");
        if (sec.contains("radius")) cls.radius = sec.at("radius");
        cmd_classify(ctx, cls);
        return 0;
    }

    throw Error(ErrorCode::BadConfig, "no subcommand selected");
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return is_numerical_failure(e.code()) ? 3 : 2;
    } catch (const std::exception& e) {
        std::cerr << "InternalError: " << e.what() << '\n';
        return 2;
    }
}
