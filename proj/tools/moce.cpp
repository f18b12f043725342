// moce: command-line front end.
//
//   moce fit       --x X.csv --y y.csv [--lambda v | --cv-folds K] ... --out fit.json
//   moce test      --fit fit.json --group "1,2,3" --kind w1|wbs|both
//   moce simulate  --config study.cfg [--replicates N] [--jobs J] --out-dir DIR
//   moce generate  --n 50 --p 80 --signals 3 --out-dir DIR
//
// Exit codes: 0 success, 2 usage or input error, 3 numerical failure.

#include "moce/moce.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using moce::report::Json;

namespace {

struct FitArgs {
    std::string x_path, y_path, out, table;
    bool header = false;
    std::optional<double> lambda;
    int cv_folds = 10;
    double C = moce::kDefaultExpansionConstant;
    double level = 0.95;
    std::uint64_t seed = 1;
    std::optional<double> tau_a, tau_c;
    std::string scaling = "unit_variance";
    bool timing = false;
};

struct TestArgs {
    std::string fit, group, kind = "both", out, table;
    double level = 0.05;
};

struct SimArgs {
    std::string config, out_dir = ".";
    std::optional<moce::Index> replicates;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    bool timing = false;
};

struct GenArgs {
    moce::Index n = 50, p = 80, signals = 3;
    double alpha = 0.0, sigma = 0.5, low = 0.8, high = 1.5;
    std::uint64_t seed = 7;
    std::string out_dir = ".", prefix = "example";
};

moce::ColumnScaling parse_scaling(const std::string& s)
{
    if (s == "unit_variance") return moce::ColumnScaling::unit_variance;
    if (s == "unit_norm") return moce::ColumnScaling::unit_norm;
    throw moce::InvalidArgument("--scaling must be unit_variance or unit_norm");
}

Json base_manifest(const std::string& command, std::uint64_t seed, const std::string& config_text)
{
    Json m;
    m["command"] = command;
    m["library_version"] = moce::kVersion;
    m["seed"] = seed;
    m["config_hash"] = moce::sha256_hex(config_text);
    m["rng"] = moce::kRngName;
    return m;
}

Json input_entry(const std::string& path)
{
    return {{"path", path}, {"sha256", moce::sha256_file(path)}};
}

// Canonical text of the options that determine a fit; its digest is the config hash.
std::string fit_config_text(const FitArgs& a)
{
    std::ostringstream o;
    o.precision(17);
    o << "header = " << a.header << "\nlambda = ";
    if (a.lambda) o << *a.lambda; else o << "cv";
    o << "\ncv_folds = " << a.cv_folds << "\nC = " << a.C << "\nlevel = " << a.level << "\nseed = " << a.seed
      << "\ntau_a = ";
    if (a.tau_a) o << *a.tau_a; else o << "default";
    o << "\ntau_c = ";
    if (a.tau_c) o << *a.tau_c; else o << "default";
    o << "\nscaling = " << a.scaling << "\n";
    return o.str();
}

Json fit_options_json(const FitArgs& a)
{
    Json j;
    j["header"] = a.header;
    j["lambda"] = a.lambda ? Json(*a.lambda) : Json(nullptr);
    j["cv_folds"] = a.cv_folds;
    j["C"] = a.C;
    j["level"] = a.level;
    j["seed"] = a.seed;
    j["tau_a"] = a.tau_a ? Json(*a.tau_a) : Json(nullptr);
    j["tau_c"] = a.tau_c ? Json(*a.tau_c) : Json(nullptr);
    j["scaling"] = a.scaling;
    return j;
}

FitArgs fit_args_from_json(const Json& j)
{
    FitArgs a;
    a.header = j.at("header").get<bool>();
    if (!j.at("lambda").is_null()) a.lambda = j.at("lambda").get<double>();
    a.cv_folds = j.at("cv_folds").get<int>();
    a.C = j.at("C").get<double>();
    a.level = j.at("level").get<double>();
    a.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("tau_a").is_null()) a.tau_a = j.at("tau_a").get<double>();
    if (!j.at("tau_c").is_null()) a.tau_c = j.at("tau_c").get<double>();
    a.scaling = j.at("scaling").get<std::string>();
    return a;
}

struct LoadedFit {
    moce::Dataset data;
    std::optional<moce::PipelineResult> result;  ///< empty when the centered response is identically zero
};

LoadedFit run_fit(const FitArgs& a)
{
    const auto xt = moce::io::read_numeric_csv(a.x_path, a.header);
    const auto yt = moce::io::read_numeric_csv(a.y_path, a.header);
    const moce::Vector y = moce::io::as_response(yt, a.y_path);
    if (xt.values.rows() != y.size())
        throw moce::InvalidArgument("dimension mismatch: " + a.x_path + " has " + std::to_string(xt.values.rows()) +
                                    " rows but " + a.y_path + " has " + std::to_string(y.size()));
    moce::detail::require(a.level > 0.0 && a.level < 1.0, "--level must lie in (0, 1)");
    moce::detail::require(a.C >= 4.0 && a.C <= 12.0, "--C must lie in [4, 12]");
    moce::detail::require(a.cv_folds >= 2, "--cv-folds must be at least 2");

    LoadedFit out;
    out.data = moce::standardize(xt.values, y, parse_scaling(a.scaling));
    moce::detail::require(out.data.p() >= 2, "need at least two non-constant columns");
    moce::PipelineOptions o;
    o.lambda = a.lambda;
    o.cv_folds = a.cv_folds;
    o.C = a.C;
    o.seed = a.seed;
    o.tau_a = a.tau_a;
    o.tau_c = a.tau_c;
    if (moce::lambda_max(out.data) > 0.0) out.result = moce::run_pipeline(out.data, o);
    return out;
}

Json one_based(const moce::IndexSet& s, const moce::Dataset& d)
{
    Json j = Json::array();
    for (auto k : s) j.push_back(d.kept[static_cast<std::size_t>(k)] + 1);
    return j;
}

// Constant response: every estimate is zero and nothing can be tested.
Json degenerate_fit_report(const FitArgs& a, const moce::Dataset& d, Json j)
{
    j["lasso"] = {{"lambda", nullptr}, {"lambda_max", 0.0}, {"a_hat", 0}, {"active", Json::array()},
                  {"sigma_hat", 0.0}, {"sigma_degenerate", true},
                  {"note", "response is constant after centering; the LASSO path is degenerate"}};
    j["expansion"] = nullptr;
    Json coef = Json::array();
    for (moce::Index k = 0; k < d.p(); ++k)
        coef.push_back({{"column", d.kept[static_cast<std::size_t>(k)] + 1}, {"expanded", false}, {"beta_hat", 0.0},
                        {"beta_tilde", 0.0}, {"se", 0.0}, {"lower", 0.0}, {"upper", 0.0}, {"zero_variance", true},
                        {"raw", {{"beta_tilde", 0.0}, {"se", 0.0}, {"lower", 0.0}, {"upper", 0.0}}}});
    j["coefficients"] = {{"level", a.level}, {"critical_value", moce::dist::two_sided_critical(a.level)},
                         {"scale", "standardized columns; raw holds original units"}, {"rows", coef}};
    return j;
}

Json fit_report(const FitArgs& a, const LoadedFit& f, const Json& manifest)
{
    const auto& d = f.data;
    Json j;
    j["schema_version"] = moce::report::kSchemaVersion;
    j["manifest"] = manifest;
    j["options"] = fit_options_json(a);
    Json dropped = Json::array();
    for (auto k : d.dropped) dropped.push_back(k + 1);
    j["data"] = {{"n", d.n()}, {"p", d.raw_p}, {"p_used", d.p()}, {"dropped_constant_columns", dropped},
                 {"scaling", moce::to_string(d.scaling)}};
    if (!f.result) return degenerate_fit_report(a, d, std::move(j));
    const auto& r = *f.result;
    const auto ci = moce::confidence_intervals(r.moce, a.level);
    const auto raw = moce::rescale_intervals(ci, d.column_scale, true);

    Json lasso;
    lasso["lambda"] = r.lasso.lambda;
    lasso["lambda_max"] = r.expanded.lambda_max;
    if (r.cv) lasso["cv"] = {{"folds", a.cv_folds}, {"grid_index", r.cv->index}, {"grid_points_used", r.cv->reached}};
    lasso["a_hat"] = r.lasso.a_hat;
    lasso["active"] = one_based(r.lasso.active_set, d);
    lasso["sigma_hat"] = r.moce.sigma_hat;
    lasso["sigma_degenerate"] = r.moce.sigma_degenerate || !(r.moce.sigma_hat > 0.0);
    lasso["iterations"] = r.lasso.iterations;
    j["lasso"] = lasso;

    const auto& e = r.expanded;
    j["expansion"] = {{"a_tilde", e.a_tilde},
                      {"indices", one_based(e.indices, d)},
                      {"injected", one_based(e.injected, d)},
                      {"filled_by_order", one_based(e.filled_by_order, d)},
                      {"truncated", e.truncated},
                      {"size_clamped", e.size_clamped},
                      {"lambda_s", e.lambda_s},
                      {"lambda_a", e.lambda_a},
                      {"tau_a", e.tau_a},
                      {"tau_c", e.tau_c},
                      {"tau_c_degenerate", e.tau_c_degenerate},
                      {"injection_seed", e.seed}};

    std::vector<bool> in_expanded(static_cast<std::size_t>(d.p()), false);
    for (auto k : e.indices) in_expanded[static_cast<std::size_t>(k)] = true;
    Json coef = Json::array();
    for (moce::Index k = 0; k < d.p(); ++k) {
        const auto sk = static_cast<std::size_t>(k);
        coef.push_back({{"column", d.kept[sk] + 1},
                        {"expanded", static_cast<bool>(in_expanded[sk])},
                        {"beta_hat", r.moce.beta_hat(k)},
                        {"beta_tilde", ci.estimate(k)},
                        {"se", ci.se(k)},
                        {"lower", ci.lower(k)},
                        {"upper", ci.upper(k)},
                        {"zero_variance", static_cast<bool>(ci.degenerate[sk])},
                        {"raw", {{"beta_tilde", raw.estimate(k)}, {"se", raw.se(k)}, {"lower", raw.lower(k)}, {"upper", raw.upper(k)}}}});
    }
    j["coefficients"] = {{"level", a.level}, {"critical_value", ci.critical}, {"scale", "standardized columns; raw holds original units"}, {"rows", coef}};
    return j;
}

void write_fit_table(std::ostream& o, const Json& j)
{
    const auto& c = j["coefficients"];
    const auto& lam = j["lasso"]["lambda"];
    o << "n=" << j["data"]["n"] << " p=" << j["data"]["p"] << " lambda="
      << (lam.is_null() ? std::string("none") : moce::report::detail::fixed(lam.get<double>(), 6))
      << " a_hat=" << j["lasso"]["a_hat"] << " a_tilde=" << (j["expansion"].is_null() ? Json(0) : j["expansion"]["a_tilde"])
      << " sigma_hat=" << moce::report::detail::fixed(j["lasso"]["sigma_hat"].get<double>(), 4) << "\n";
    if (j["lasso"]["sigma_degenerate"].get<bool>()) o << "warning: residual scale estimate is degenerate\n";
    const int pct = static_cast<int>(std::lround(100.0 * c["level"].get<double>()));
    o << "\n" << std::setw(7) << "column" << std::setw(5) << "exp" << std::setw(11) << "beta_hat" << std::setw(11)
      << "debiased" << std::setw(10) << "se" << std::setw(11) << ("lo" + std::to_string(pct)) << std::setw(11)
      << ("hi" + std::to_string(pct)) << "\n";
    using moce::report::detail::fixed;
    for (const auto& r : c["rows"])
        o << std::setw(7) << r["column"].get<long>() << std::setw(5) << (r["expanded"].get<bool>() ? "*" : "")
          << std::setw(11) << fixed(r["beta_hat"].get<double>(), 4) << std::setw(11)
          << fixed(r["beta_tilde"].get<double>(), 4) << std::setw(10) << fixed(r["se"].get<double>(), 4)
          << std::setw(11) << fixed(r["lower"].get<double>(), 4) << std::setw(11)
          << fixed(r["upper"].get<double>(), 4) << "\n";
}

void write_text(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw moce::InvalidArgument("cannot write '" + path + "'");
    f << text;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

int cmd_fit(const FitArgs& a)
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto f = run_fit(a);
    Json m = base_manifest("fit", a.seed, fit_config_text(a));
    m["inputs"] = {input_entry(a.x_path), input_entry(a.y_path)};
    if (a.timing)
        m["timing"] = {{"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
    const Json j = fit_report(a, f, m);
    write_text(a.out, dump(j));
    if (!a.table.empty()) {
        std::ostringstream o;
        write_fit_table(o, j);
        write_text(a.table, o.str());
    }
    return 0;
}

moce::IndexSet parse_group(const std::string& text, const moce::Dataset& d)
{
    std::vector<moce::Index> raw_to_kept(static_cast<std::size_t>(d.raw_p), -1);
    for (std::size_t k = 0; k < d.kept.size(); ++k) raw_to_kept[static_cast<std::size_t>(d.kept[k])] = static_cast<moce::Index>(k);
    moce::IndexSet g;
    for (const auto& cell : moce::io::detail::split(text)) {
        if (cell.empty()) continue;
        long long v = 0;
        auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || ptr != cell.data() + cell.size())
            throw moce::InvalidArgument("--group: '" + cell + "' is not an integer");
        if (v < 1 || v > d.raw_p)
            throw moce::InvalidArgument("--group: index " + cell + " outside 1.." + std::to_string(d.raw_p));
        const auto k = raw_to_kept[static_cast<std::size_t>(v - 1)];
        if (k < 0) throw moce::InvalidArgument("--group: column " + cell + " is constant and was dropped");
        g.push_back(k);
    }
    if (g.empty()) throw moce::InvalidArgument("--group: empty group");
    std::sort(g.begin(), g.end());
    if (std::adjacent_find(g.begin(), g.end()) != g.end()) throw moce::InvalidArgument("--group: repeated index");
    return g;
}

std::string locate_input(const std::string& recorded, const fs::path& fit_dir)
{
    if (fs::exists(recorded)) return recorded;
    const fs::path alt = fit_dir / fs::path(recorded).filename();
    if (fs::exists(alt)) return alt.string();
    throw moce::InvalidArgument("input '" + recorded + "' recorded in the fit report was not found");
}

int cmd_test(const TestArgs& a)
{
    std::ifstream in(a.fit);
    if (!in) throw moce::InvalidArgument("cannot open '" + a.fit + "'");
    Json fit;
    try {
        fit = Json::parse(in);
    } catch (const std::exception& e) {
        throw moce::InvalidArgument("fit report '" + a.fit + "' is not valid JSON");
    }
    if (fit.value("schema_version", 0) != moce::report::kSchemaVersion)
        throw moce::InvalidArgument("fit report has unsupported schema_version");
    if (a.kind != "w1" && a.kind != "wbs" && a.kind != "both")
        throw moce::InvalidArgument("--kind must be w1, wbs or both");
    moce::detail::require(a.level > 0.0 && a.level < 1.0, "--level must lie in (0, 1)");

    // Refit from the recorded inputs; the pipeline is deterministic given the seed.
    FitArgs fa = fit_args_from_json(fit.at("options"));
    const auto& inputs = fit.at("manifest").at("inputs");
    const fs::path dir = fs::path(a.fit).parent_path();
    fa.x_path = locate_input(inputs.at(0).at("path").get<std::string>(), dir);
    fa.y_path = locate_input(inputs.at(1).at("path").get<std::string>(), dir);
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& path = i == 0 ? fa.x_path : fa.y_path;
        if (moce::sha256_file(path) != inputs.at(i).at("sha256").get<std::string>())
            throw moce::InvalidArgument("input '" + path + "' changed since the fit was produced");
    }
    const auto f = run_fit(fa);
    const auto group = parse_group(a.group, f.data);
    if (!f.result) throw moce::NumericalError("the fit is degenerate (constant response); group tests are undefined");

    Json m = base_manifest("test", fa.seed, fit_config_text(fa) + "group = " + a.group + "\nkind = " + a.kind + "\n");
    m["inputs"] = {input_entry(fa.x_path), input_entry(fa.y_path), input_entry(a.fit)};
    Json j;
    j["schema_version"] = moce::report::kSchemaVersion;
    j["manifest"] = m;
    j["group"] = one_based(group, f.data);
    j["level"] = a.level;
    Json tests = Json::array();
    std::ostringstream table;
    for (const char* kind : {"w1", "wbs"}) {
        if (a.kind != "both" && a.kind != kind) continue;
        Json t;
        t["kind"] = kind == std::string("w1") ? "W1" : "Wbs";
        try {
            const auto r = kind == std::string("w1") ? moce::wald_w1(f.result->moce, group, std::nullopt, {a.level})
                                                     : moce::wald_wbs(f.result->moce, group, std::nullopt, {a.level});
            t["statistic"] = r.statistic;
            t["reference"] = r.reference;
            if (r.kind == moce::TestKind::w1) t["df"] = r.df;
            t["p_value"] = r.p_value;
            if (r.kind == moce::TestKind::wbs) t["p_value_two_sided"] = r.p_value_two_sided;
            t["group_size"] = r.g;
            t["gamma"] = r.gamma;
            t["sigma"] = r.sigma;
            t["reject"] = r.rejects(a.level);
            table << std::left << std::setw(5) << t["kind"].get<std::string>() << std::right << " statistic "
                  << moce::report::detail::fixed(r.statistic, 4) << "  p-value " << moce::report::detail::g17(r.p_value)
                  << "  " << (r.rejects(a.level) ? "reject" : "retain") << " at " << a.level << "\n";
        } catch (const moce::NumericalError& e) {
            // W1 on an ill-conditioned block is reported, not fatal, when both kinds were asked for
            if (a.kind != "both") throw;
            t["error"] = e.what();
            table << std::left << std::setw(5) << t["kind"].get<std::string>() << std::right << " not computable: " << e.what() << "\n";
        }
        tests.push_back(t);
    }
    j["tests"] = tests;
    write_text(a.out, dump(j));
    if (!a.table.empty()) write_text(a.table, table.str());
    return 0;
}

int cmd_simulate(const SimArgs& a)
{
    auto c = moce::sim::load_config(a.config);
    if (a.replicates) c.replicates = *a.replicates;
    if (a.seed) c.seed = *a.seed;
    if (a.timing) c.report_timing = true;
    c.validate();
    moce::detail::require(a.jobs >= 1, "--jobs must be at least 1");

    std::vector<moce::sim::ReplicateRecord> recs;
    const auto rep = moce::sim::run_study(c, a.jobs, &recs);

    // jobs is deliberately absent from the manifest: the report must not depend on it
    Json m = base_manifest("simulate", c.seed, moce::sim::canonical_config(c));
    m["inputs"] = {input_entry(a.config)};
    const Json j = moce::report::sim_report_json(rep, m);

    fs::create_directories(a.out_dir);
    const fs::path dir(a.out_dir);
    write_text((dir / "report.json").string(), dump(j));
    std::ostringstream t, csv;
    moce::report::write_sim_table(t, rep);
    write_text((dir / "report.txt").string(), t.str());
    moce::report::write_records_csv(csv, c, recs);
    write_text((dir / "replicates.csv").string(), csv.str());
    std::cout << t.str();
    return 0;
}

int cmd_generate(const GenArgs& a)
{
    moce::detail::require(a.n >= 2 && a.p >= 2, "generate: need n >= 2 and p >= 2");
    moce::detail::require(a.signals >= 0 && a.signals <= a.p, "generate: signals must lie in 0..p");
    moce::detail::require(a.alpha >= 0.0 && a.alpha < 1.0, "generate: alpha must lie in [0, 1)");
    moce::detail::require(a.sigma >= 0.0 && a.low > 0.0 && a.high >= a.low, "generate: bad signal or noise settings");

    moce::Rng design(moce::derive_seed(a.seed, 0, 1)), pick(moce::derive_seed(a.seed, 0, 2)),
        noise(moce::derive_seed(a.seed, 0, 3));
    moce::Matrix x(a.n, a.p);
    const double innov = std::sqrt(1.0 - a.alpha * a.alpha);
    for (moce::Index i = 0; i < a.n; ++i) {
        x(i, 0) = design.normal();
        for (moce::Index j = 1; j < a.p; ++j) x(i, j) = a.alpha * x(i, j - 1) + innov * design.normal();
    }
    std::vector<moce::Index> all(static_cast<std::size_t>(a.p));
    std::iota(all.begin(), all.end(), moce::Index{0});
    auto support = pick.sample(std::span<const moce::Index>(all), static_cast<std::size_t>(a.signals));
    moce::Vector beta = moce::Vector::Zero(a.p);
    for (auto j : support) beta(j) = (pick.below(2) ? 1.0 : -1.0) * pick.uniform(a.low, a.high);
    moce::Vector y = x * beta;
    for (moce::Index i = 0; i < a.n; ++i) y(i) += a.sigma * noise.normal();

    fs::create_directories(a.out_dir);
    const fs::path dir(a.out_dir);
    std::ostringstream xs, ys, bs;
    moce::io::write_matrix_csv(xs, x, 10);
    moce::io::write_matrix_csv(ys, y, 10);
    moce::io::write_matrix_csv(bs, beta, 17);
    write_text((dir / (a.prefix + "_X.csv")).string(), xs.str());
    write_text((dir / (a.prefix + "_y.csv")).string(), ys.str());
    write_text((dir / (a.prefix + "_beta.csv")).string(), bs.str());
    std::sort(support.begin(), support.end());
    std::cout << "planted columns (1-based):";
    for (auto j : support) std::cout << " " << j + 1;
    std::cout << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Inference for high-dimensional linear models by contraction, expansion and debiasing"};
    app.set_version_flag("--version", std::string(moce::kVersion));
    app.require_subcommand(1);

    FitArgs fa;
    auto* fit = app.add_subcommand("fit", "Fit CSV data and report debiased estimates with confidence intervals");
    fit->add_option("--x", fa.x_path, "design matrix CSV (n rows, p columns)")->required();
    fit->add_option("--y", fa.y_path, "response CSV (n values)")->required();
    fit->add_flag("--header", fa.header, "both CSV files start with a header row");
    auto* lam = fit->add_option("--lambda", fa.lambda, "fixed LASSO tuning value (standardized scale)");
    fit->add_option("--cv-folds", fa.cv_folds, "cross-validation folds when --lambda is absent")->excludes(lam);
    fit->add_option("--C", fa.C, "expansion constant in [4, 12]");
    fit->add_option("--level", fa.level, "confidence level");
    fit->add_option("--seed", fa.seed, "seed for fold assignment and injection");
    fit->add_option("--tau-a", fa.tau_a, "override the expanded-block ridge level");
    fit->add_option("--tau-c", fa.tau_c, "override the complement-block ridge level");
    fit->add_option("--scaling", fa.scaling, "column scaling: unit_variance or unit_norm");
    fit->add_option("--out", fa.out, "JSON report path (default stdout)");
    fit->add_option("--table", fa.table, "aligned text table path");
    fit->add_flag("--timing", fa.timing, "record wall time in the manifest (makes output non-reproducible)");

    TestArgs ta;
    auto* test = app.add_subcommand("test", "Group test of H0: beta_G = 0 on a fitted report");
    test->add_option("--fit", ta.fit, "JSON report written by 'moce fit'")->required();
    test->add_option("--group", ta.group, "1-based column indices, e.g. \"1,2,3\"")->required();
    test->add_option("--kind", ta.kind, "w1, wbs or both");
    test->add_option("--level", ta.level, "test level");
    test->add_option("--out", ta.out, "JSON report path (default stdout)");
    test->add_option("--table", ta.table, "text summary path");

    SimArgs sa;
    auto* sim = app.add_subcommand("simulate", "Run a simulation study from a key = value config file");
    sim->add_option("--config", sa.config, "config file")->required();
    sim->add_option("--replicates", sa.replicates, "override the replicate count");
    sim->add_option("--seed", sa.seed, "override the base seed");
    sim->add_option("--jobs", sa.jobs, "worker threads (results do not depend on this)");
    sim->add_option("--out-dir", sa.out_dir, "directory for report.json, report.txt, replicates.csv");
    sim->add_flag("--timing", sa.timing, "include wall time in the reports");

    GenArgs ga;
    auto* gen = app.add_subcommand("generate", "Write a synthetic dataset with planted signals");
    gen->add_option("--n", ga.n);
    gen->add_option("--p", ga.p);
    gen->add_option("--signals", ga.signals);
    gen->add_option("--alpha", ga.alpha, "AR(1) correlation between neighbouring columns");
    gen->add_option("--sigma", ga.sigma, "noise standard deviation");
    gen->add_option("--low", ga.low, "smallest planted magnitude");
    gen->add_option("--high", ga.high, "largest planted magnitude");
    gen->add_option("--seed", ga.seed);
    gen->add_option("--out-dir", ga.out_dir);
    gen->add_option("--prefix", ga.prefix);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        if (*fit) return cmd_fit(fa);
        if (*test) return cmd_test(ta);
        if (*sim) return cmd_simulate(sa);
        if (*gen) return cmd_generate(ga);
    } catch (const moce::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const moce::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const moce::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
