#pragma once

// Monte-Carlo harness: synthetic AR(1) designs, replicate orchestration and
// the Bias / ASE / coverage and rejection-rate summaries.
//
// Replicate r draws every random quantity from derive_seed(seed, r, tag) with
// a fixed tag per purpose, so results do not depend on scheduling.

#include "moce/core.hpp"
#include "moce/distributions.hpp"
#include "moce/expand.hpp"
#include "moce/group_test.hpp"
#include "moce/lasso.hpp"
#include "moce/pipeline.hpp"
#include "moce/rng.hpp"

#include <array>
#include <atomic>
#include <chrono>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>

namespace moce::sim {

namespace detail {
using namespace moce::detail;
}

enum class ErrorLaw { gaussian, student_t5 };
enum class SigmaMode { estimated, truth };

inline const char* to_string(ErrorLaw e) { return e == ErrorLaw::gaussian ? "gaussian" : "t5"; }
inline const char* to_string(SigmaMode s) { return s == SigmaMode::estimated ? "estimated" : "true"; }

struct GroupSpec {
    Index size = 0;     ///< |G|
    Index signals = 0;  ///< |G intersect A|
    bool operator==(const GroupSpec&) const = default;
};

/// Coverage levels reported, as confidence levels.
inline constexpr std::array<double, 3> kCoverageLevels{0.99, 0.95, 0.90};

struct SimConfig {
    Index n = 200;
    Index p = 200;
    Index a = 3;
    double alpha = 0.0;
    double signal_low = 0.05;
    double signal_high = 0.6;
    ErrorLaw error_law = ErrorLaw::gaussian;
    Index replicates = 200;
    std::uint64_t seed = 20240607;
    double C = kDefaultExpansionConstant;
    int cv_folds = 10;
    Index grid_size = 100;
    ColumnScaling scaling = ColumnScaling::unit_variance;
    linalg::ComplementSolver solver = linalg::ComplementSolver::automatic;
    std::vector<GroupSpec> groups;
    double test_level = 0.05;
    SigmaMode sigma_mode = SigmaMode::estimated;
    bool oracle = true;
    bool report_timing = false;

    double sigma() const { return 2.0 * std::sqrt(static_cast<double>(a) / static_cast<double>(n)); }

    void validate() const
    {
        using detail::require;
        require(n >= 10, "config: n must be at least 10");
        require(p >= 2, "config: p must be at least 2");
        require(a >= 1 && a < p, "config: a must satisfy 1 <= a < p");
        require(a < n - 1, "config: a must be smaller than n - 1");
        require(alpha >= 0.0 && alpha < 1.0, "config: alpha must lie in [0, 1)");
        require(signal_low > 0.0 && signal_high > signal_low, "config: signal range must satisfy 0 < low < high");
        require(replicates >= 1, "config: replicates must be at least 1");
        require(C >= 4.0 && C <= 12.0, "config: C must lie in [4, 12]");
        require(cv_folds >= 2 && cv_folds <= n, "config: cv_folds must lie in [2, n]");
        require(grid_size >= 2, "config: grid_size must be at least 2");
        require(test_level > 0.0 && test_level < 1.0, "config: test_level must lie in (0, 1)");
        for (const auto& g : groups) {
            require(g.size >= 1 && g.size < n, "config: group size must lie in [1, n)");
            require(g.signals >= 0 && g.signals <= std::min(g.size, a), "config: group signals must be <= min(|G|, a)");
            require(g.size - g.signals <= p - a, "config: group needs more nulls than exist");
        }
    }
};

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v)
{
    std::istringstream is(v);
    T out{};
    is >> out;
    std::string rest;
    if (is.fail() || (is >> rest)) throw InvalidArgument("config: invalid value '" + v + "' for key '" + key + "'");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw InvalidArgument("config: invalid value '" + v + "' for key '" + key + "'");
}

// "5:0, 5:2, 50:0" -> {(5,0), (5,2), (50,0)}
inline std::vector<GroupSpec> parse_groups(const std::string& key, const std::string& v)
{
    std::vector<GroupSpec> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw InvalidArgument("config: invalid group spec '" + item + "' for key '" + key + "' (want size:signals)");
        out.push_back({parse_number<Index>(key, trim(item.substr(0, colon))),
                       parse_number<Index>(key, trim(item.substr(colon + 1)))});
    }
    return out;
}

} // namespace detail

inline void apply_config_value(SimConfig& c, const std::string& key, const std::string& v)
{
    using namespace detail;
    if (key == "n") c.n = parse_number<Index>(key, v);
    else if (key == "p") c.p = parse_number<Index>(key, v);
    else if (key == "a") c.a = parse_number<Index>(key, v);
    else if (key == "alpha") c.alpha = parse_number<double>(key, v);
    else if (key == "signal_low") c.signal_low = parse_number<double>(key, v);
    else if (key == "signal_high") c.signal_high = parse_number<double>(key, v);
    else if (key == "replicates") c.replicates = parse_number<Index>(key, v);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, v);
    else if (key == "C") c.C = parse_number<double>(key, v);
    else if (key == "cv_folds") c.cv_folds = parse_number<int>(key, v);
    else if (key == "grid_size") c.grid_size = parse_number<Index>(key, v);
    else if (key == "test_level") c.test_level = parse_number<double>(key, v);
    else if (key == "oracle") c.oracle = parse_bool(key, v);
    else if (key == "report_timing") c.report_timing = parse_bool(key, v);
    else if (key == "groups") c.groups = parse_groups(key, v);
    else if (key == "error_law") {
        if (v == "gaussian") c.error_law = ErrorLaw::gaussian;
        else if (v == "t5") c.error_law = ErrorLaw::student_t5;
        else throw InvalidArgument("config: invalid value '" + v + "' for key 'error_law' (gaussian|t5)");
    } else if (key == "sigma_mode") {
        if (v == "estimated") c.sigma_mode = SigmaMode::estimated;
        else if (v == "true") c.sigma_mode = SigmaMode::truth;
        else throw InvalidArgument("config: invalid value '" + v + "' for key 'sigma_mode' (estimated|true)");
    } else if (key == "scaling") {
        if (v == "unit_variance") c.scaling = ColumnScaling::unit_variance;
        else if (v == "unit_norm") c.scaling = ColumnScaling::unit_norm;
        else throw InvalidArgument("config: invalid value '" + v + "' for key 'scaling' (unit_variance|unit_norm)");
    } else if (key == "solver") {
        if (v == "automatic") c.solver = linalg::ComplementSolver::automatic;
        else if (v == "direct") c.solver = linalg::ComplementSolver::direct;
        else if (v == "woodbury") c.solver = linalg::ComplementSolver::woodbury;
        else throw InvalidArgument("config: invalid value '" + v + "' for key 'solver' (automatic|direct|woodbury)");
    } else {
        throw InvalidArgument("config: unknown key '" + key + "'");
    }
}

/// `key = value` lines; `#` starts a comment. Unknown keys are errors.
inline SimConfig parse_config(std::istream& in)
{
    SimConfig c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument("config: line " + std::to_string(lineno) + " is not 'key = value'");
        apply_config_value(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
    c.validate();
    return c;
}

inline SimConfig load_config(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw InvalidArgument("config: cannot open '" + path + "'");
    return parse_config(f);
}

inline const char* to_string(linalg::ComplementSolver s)
{
    switch (s) {
    case linalg::ComplementSolver::direct: return "direct";
    case linalg::ComplementSolver::woodbury: return "woodbury";
    default: return "automatic";
    }
}

/// Canonical text form; the basis of the config hash.
inline std::string canonical_config(const SimConfig& c)
{
    std::ostringstream o;
    o.precision(17);
    o << "n = " << c.n << "\np = " << c.p << "\na = " << c.a << "\nalpha = " << c.alpha
      << "\nsignal_low = " << c.signal_low << "\nsignal_high = " << c.signal_high
      << "\nerror_law = " << to_string(c.error_law) << "\nreplicates = " << c.replicates << "\nseed = " << c.seed
      << "\nC = " << c.C << "\ncv_folds = " << c.cv_folds << "\ngrid_size = " << c.grid_size
      << "\nscaling = " << moce::to_string(c.scaling) << "\nsolver = " << to_string(c.solver) << "\ngroups = ";
    for (std::size_t i = 0; i < c.groups.size(); ++i)
        o << (i ? ", " : "") << c.groups[i].size << ":" << c.groups[i].signals;
    o << "\ntest_level = " << c.test_level << "\nsigma_mode = " << to_string(c.sigma_mode)
      << "\noracle = " << (c.oracle ? "true" : "false") << "\nreport_timing = " << (c.report_timing ? "true" : "false")
      << "\n";
    return o.str();
}

// Purpose tags within a replicate.
inline constexpr std::uint64_t kTagDesign = 10;
inline constexpr std::uint64_t kTagSupport = 11;
inline constexpr std::uint64_t kTagNoise = 12;
inline constexpr std::uint64_t kTagPipeline = 13;
inline constexpr std::uint64_t kTagGroups = 100;  ///< + group spec index

struct SimDataset {
    Dataset data;
    Vector beta_star;
    IndexSet support;   ///< ascending
    IndexSet drawn;     ///< support in draw order
    double sigma = 0.0;
};

/// Rows ~ N(0, 0.5 R(alpha)) with R_jk = alpha^|j-k|, built by the AR(1)
/// recursion x_1 = s z_1, x_j = alpha x_{j-1} + s sqrt(1 - alpha^2) z_j with
/// s = sqrt(0.5). Columns are then standardized and y = X b + e.
inline SimDataset generate_dataset(const SimConfig& c, Index replicate)
{
    const auto r = static_cast<std::uint64_t>(replicate);
    SimDataset out;
    out.sigma = c.sigma();

    Rng design(derive_seed(c.seed, r, kTagDesign));
    Matrix raw(c.n, c.p);
    const double s = std::sqrt(0.5), innov = s * std::sqrt(1.0 - c.alpha * c.alpha);
    for (Index i = 0; i < c.n; ++i) {
        double prev = s * design.normal();
        raw(i, 0) = prev;
        for (Index j = 1; j < c.p; ++j) {
            prev = c.alpha * prev + innov * design.normal();
            raw(i, j) = prev;
        }
    }

    Rng support(derive_seed(c.seed, r, kTagSupport));
    IndexSet all(static_cast<std::size_t>(c.p));
    std::iota(all.begin(), all.end(), Index{0});
    out.drawn = support.sample(std::span<const Index>(all), static_cast<std::size_t>(c.a));
    out.beta_star = Vector::Zero(c.p);
    for (Index j : out.drawn) out.beta_star(j) = support.uniform(c.signal_low, c.signal_high);
    out.support = out.drawn;
    std::sort(out.support.begin(), out.support.end());

    Dataset tmp = standardize(raw, Vector::Zero(c.n), c.scaling);
    detail::require(tmp.p() == c.p, "generate_dataset: a simulated column was constant");

    Rng noise(derive_seed(c.seed, r, kTagNoise));
    Vector eps(c.n);
    for (Index i = 0; i < c.n; ++i)
        eps(i) = c.error_law == ErrorLaw::gaussian ? out.sigma * noise.normal()
                                                   : out.sigma * std::sqrt(3.0 / 5.0) * noise.student_t(5);
    const Vector y = tmp.x * out.beta_star + eps;
    tmp.y_mean = y.mean();
    tmp.y = y.array() - tmp.y_mean;
    out.data = std::move(tmp);
    return out;
}

/// Per-set sums for one replicate.
struct SetSummary {
    double bias = 0.0;  ///< mean of beta_tilde_j - beta*_j over the set
    double ase = 0.0;   ///< mean standard error
    std::array<double, 3> cover{};  ///< fraction covered at kCoverageLevels
    Index count = 0;
};

struct GroupOutcome {
    GroupSpec spec;
    IndexSet group;
    bool w1_ok = false;
    double w1 = 0.0, w1_p = 1.0;
    bool wbs_ok = false;
    double wbs = 0.0, wbs_p = 1.0;
};

struct ReplicateRecord {
    Index index = 0;
    bool ok = false;
    std::string failure;

    double lambda = 0.0;
    Index a_hat = 0;
    Index a_tilde = 0;
    Index injected = 0;
    Index filled_by_order = 0;
    bool truncated = false;
    double tau_a = 0.0, tau_c = 0.0;
    double sigma_hat = 0.0;
    Index signals_in_expanded = 0;
    Index strong_missed = 0;  ///< members of the lambda_s * sigma signal set outside the expanded model
    Index a_star = 0;

    SetSummary signal, null;   ///< A and its complement
    SetSummary oracle;         ///< least squares on the true support, A only
    std::vector<double> pivots;  ///< (beta_tilde_j - beta*_j) / se_j for the signals, in draw order
    bool variance_ordered = false;   ///< min var over expanded set >= max var over complement
    double width_expanded = 0.0, width_complement = 0.0;  ///< mean 95% CI widths
    double remainder_expanded = 0.0, remainder_complement = 0.0;  ///< sqrt(n) ||r||
    double l2_ratio = 0.0;   ///< ||beta_tilde - beta*||_expanded / sqrt(a log a / n)
    std::vector<GroupOutcome> groups;
    double seconds = 0.0;
};

namespace detail {

inline SetSummary summarize(const Vector& est, const Vector& se, const Vector& truth, const IndexSet& set)
{
    SetSummary s;
    s.count = static_cast<Index>(set.size());
    if (set.empty()) return s;
    std::array<double, 3> z{};
    for (std::size_t l = 0; l < kCoverageLevels.size(); ++l) z[l] = dist::two_sided_critical(kCoverageLevels[l]);
    for (Index j : set) {
        const double err = est(j) - truth(j);
        s.bias += err;
        s.ase += se(j);
        for (std::size_t l = 0; l < z.size(); ++l)
            if (std::abs(err) <= z[l] * se(j)) s.cover[l] += 1.0;
    }
    const double k = static_cast<double>(set.size());
    s.bias /= k;
    s.ase /= k;
    for (double& c : s.cover) c /= k;
    return s;
}

inline SetSummary oracle_summary(const Dataset& d, const Vector& truth, const IndexSet& support)
{
    const Matrix xa = gather_columns(d.x, support);
    const Eigen::LDLT<Matrix> g(xa.transpose() * xa);
    const Vector b = g.solve(xa.transpose() * d.y);
    const double dof = static_cast<double>(d.n() - static_cast<Index>(support.size()));
    const double s = std::sqrt((d.y - xa * b).squaredNorm() / dof);
    const Vector var = g.solve(Matrix::Identity(xa.cols(), xa.cols())).diagonal();
    Vector est = Vector::Zero(d.p()), se = Vector::Zero(d.p());
    for (std::size_t k = 0; k < support.size(); ++k) {
        est(support[k]) = b(static_cast<Index>(k));
        se(support[k]) = s * std::sqrt(std::max(var(static_cast<Index>(k)), 0.0));
    }
    return summarize(est, se, truth, support);
}

} // namespace detail

/// Draw G with `signals` members of the support and the rest uniformly from its complement.
inline IndexSet draw_group(const GroupSpec& spec, const IndexSet& support, Index p, Rng& rng)
{
    const IndexSet nulls = moce::detail::complement(support, p);
    IndexSet g = rng.sample(std::span<const Index>(support), static_cast<std::size_t>(spec.signals));
    const IndexSet rest = rng.sample(std::span<const Index>(nulls), static_cast<std::size_t>(spec.size - spec.signals));
    g.insert(g.end(), rest.begin(), rest.end());
    std::sort(g.begin(), g.end());
    return g;
}

inline PipelineOptions pipeline_options(const SimConfig& c, Index replicate)
{
    PipelineOptions o;
    o.cv_folds = c.cv_folds;
    o.grid_size = c.grid_size;
    o.C = c.C;
    o.seed = derive_seed(c.seed, static_cast<std::uint64_t>(replicate), kTagPipeline);
    o.moce.solver = c.solver;
    return o;
}

/// One end-to-end replicate. Exceptions from the pipeline are caught and
/// recorded as a failure.
inline ReplicateRecord run_replication(const SimConfig& c, Index replicate)
{
    ReplicateRecord rec;
    rec.index = replicate;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const SimDataset ds = generate_dataset(c, replicate);
        const PipelineResult pr = run_pipeline(ds.data, pipeline_options(c, replicate));
        const MoceFit& m = pr.moce;
        const auto& ex = pr.expanded;

        rec.lambda = pr.lasso.lambda;
        rec.a_hat = pr.lasso.a_hat;
        rec.a_tilde = ex.a_tilde;
        rec.injected = static_cast<Index>(ex.injected.size());
        rec.filled_by_order = static_cast<Index>(ex.filled_by_order.size());
        rec.truncated = ex.truncated;
        rec.tau_a = ex.tau_a;
        rec.tau_c = ex.tau_c;
        rec.sigma_hat = m.sigma_hat;
        for (Index j : ds.support)
            if (std::binary_search(ex.indices.begin(), ex.indices.end(), j)) ++rec.signals_in_expanded;
        const auto strength = signal_strength(ds.beta_star, ex.lambda_s, ds.sigma);
        rec.a_star = strength.a_star;
        for (Index j : strength.signal_set)
            if (!std::binary_search(ex.indices.begin(), ex.indices.end(), j)) ++rec.strong_missed;

        rec.signal = detail::summarize(m.beta_tilde, m.se, ds.beta_star, ds.support);
        rec.null = detail::summarize(m.beta_tilde, m.se, ds.beta_star, moce::detail::complement(ds.support, c.p));
        if (c.oracle) rec.oracle = detail::oracle_summary(ds.data, ds.beta_star, ds.support);
        for (Index j : ds.drawn) rec.pivots.push_back((m.beta_tilde(j) - ds.beta_star(j)) / m.se(j));

        const IndexSet comp = ex.complement(c.p);
        double min_a = INFINITY, max_c = 0.0;
        for (Index j : ex.indices) min_a = std::min(min_a, m.se(j));
        for (Index j : comp) max_c = std::max(max_c, m.se(j));
        rec.variance_ordered = min_a >= max_c;
        const double z95 = dist::two_sided_critical(0.95);
        for (Index j : ex.indices) rec.width_expanded += 2.0 * z95 * m.se(j);
        rec.width_expanded /= static_cast<double>(ex.indices.size());
        for (Index j : comp) rec.width_complement += 2.0 * z95 * m.se(j);
        if (!comp.empty()) rec.width_complement /= static_cast<double>(comp.size());

        const double sn = std::sqrt(static_cast<double>(c.n));
        const auto rem = remainder_terms(m, ds.beta_star);
        rec.remainder_expanded = sn * rem.expanded_part.norm();
        rec.remainder_complement = sn * rem.complement_part.norm();
        const double at = static_cast<double>(ex.a_tilde);
        const double denom = std::sqrt(at * std::log(std::max(at, 2.0)) / static_cast<double>(c.n));
        rec.l2_ratio = (moce::detail::gather(m.beta_tilde, ex.indices) - moce::detail::gather(ds.beta_star, ex.indices)).norm() / denom;

        const std::optional<double> sigma =
            c.sigma_mode == SigmaMode::truth ? std::optional<double>(ds.sigma) : std::nullopt;
        const std::vector<double> levels{c.test_level};
        for (std::size_t k = 0; k < c.groups.size(); ++k) {
            Rng rng(derive_seed(c.seed, static_cast<std::uint64_t>(replicate), kTagGroups + k));
            GroupOutcome go;
            go.spec = c.groups[k];
            go.group = draw_group(go.spec, ds.support, c.p, rng);
            try {
                const auto t = wald_w1(m, go.group, sigma, levels);
                go.w1_ok = true;
                go.w1 = t.statistic;
                go.w1_p = t.p_value;
            } catch (const NumericalError&) {
            }
            try {
                const auto t = wald_wbs(m, go.group, sigma, levels);
                go.wbs_ok = true;
                go.wbs = t.statistic;
                go.wbs_p = t.p_value;
            } catch (const NumericalError&) {
            }
            rec.groups.push_back(std::move(go));
        }
        rec.ok = true;
    } catch (const Error& e) {
        rec.ok = false;
        rec.failure = e.what();
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

/// Replicates [first, first + count) on `jobs` worker threads. The output is
/// ordered by replicate index whatever the scheduling.
inline std::vector<ReplicateRecord> run_replications(const SimConfig& c, Index count, int jobs = 1, Index first = 0)
{
    std::vector<ReplicateRecord> out(static_cast<std::size_t>(count));
    std::atomic<Index> next{0};
    auto worker = [&] {
        for (Index k = next++; k < count; k = next++) out[static_cast<std::size_t>(k)] = run_replication(c, first + k);
    };
    const int t = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
    if (t == 1) {
        worker();
        return out;
    }
    std::vector<std::thread> pool;
    for (int i = 0; i < t; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return out;
}

struct SetMetrics {
    double bias = 0.0, ase = 0.0;
    std::array<double, 3> cp{};  ///< CP99, CP95, CP90
};

struct PowerEntry {
    GroupSpec spec;
    Index w1_computable = 0, w1_rejections = 0;
    Index wbs_computable = 0, wbs_rejections = 0;
    double w1_rate() const { return w1_computable ? static_cast<double>(w1_rejections) / static_cast<double>(w1_computable) : NAN; }
    double wbs_rate() const { return wbs_computable ? static_cast<double>(wbs_rejections) / static_cast<double>(wbs_computable) : NAN; }
};

struct SimReport {
    SimConfig config;
    Index successes = 0;
    std::vector<std::pair<Index, std::string>> failures;
    SetMetrics signal, null, oracle;
    double mean_a_hat = 0.0, mean_a_tilde = 0.0, mean_lambda = 0.0, mean_sigma_hat = 0.0;
    double all_signals_in_expanded = 0.0;  ///< fraction of replicates
    double variance_ordered = 0.0;         ///< fraction of replicates
    double tau_a_below_tau_c = 0.0;        ///< fraction of replicates
    Index truncated = 0, short_pool = 0;
    std::vector<PowerEntry> power;
    double mean_seconds = 0.0;             ///< reported only with report_timing
};

/// Means over successful replicates of the per-replicate set means. Folded in
/// replicate order so the floating-point result is reproducible.
inline SimReport aggregate_metrics(const SimConfig& c, const std::vector<ReplicateRecord>& records)
{
    SimReport r;
    r.config = c;
    for (const auto& g : c.groups) r.power.push_back({g});
    auto add = [](SetMetrics& m, const SetSummary& s) {
        m.bias += s.bias;
        m.ase += s.ase;
        for (std::size_t l = 0; l < 3; ++l) m.cp[l] += s.cover[l];
    };
    Index tau_ok = 0;
    for (const auto& rec : records) {
        if (!rec.ok) {
            r.failures.emplace_back(rec.index, rec.failure);
            continue;
        }
        ++r.successes;
        add(r.signal, rec.signal);
        add(r.null, rec.null);
        add(r.oracle, rec.oracle);
        r.mean_a_hat += static_cast<double>(rec.a_hat);
        r.mean_a_tilde += static_cast<double>(rec.a_tilde);
        r.mean_lambda += rec.lambda;
        r.mean_sigma_hat += rec.sigma_hat;
        r.mean_seconds += rec.seconds;
        if (rec.signals_in_expanded == c.a) r.all_signals_in_expanded += 1.0;
        if (rec.variance_ordered) r.variance_ordered += 1.0;
        if (rec.tau_a < rec.tau_c) ++tau_ok;
        if (rec.truncated) ++r.truncated;
        if (rec.filled_by_order > 0) ++r.short_pool;
        for (std::size_t k = 0; k < rec.groups.size() && k < r.power.size(); ++k) {
            const auto& go = rec.groups[k];
            auto& pe = r.power[k];
            if (go.w1_ok) {
                ++pe.w1_computable;
                if (go.w1_p < c.test_level) ++pe.w1_rejections;
            }
            if (go.wbs_ok) {
                ++pe.wbs_computable;
                if (go.wbs_p < c.test_level) ++pe.wbs_rejections;
            }
        }
    }
    if (r.successes == 0) throw InvalidArgument("aggregate_metrics: no successful replicates");
    const double k = static_cast<double>(r.successes);
    for (SetMetrics* m : {&r.signal, &r.null, &r.oracle}) {
        m->bias /= k;
        m->ase /= k;
        for (double& v : m->cp) v /= k;
    }
    r.mean_a_hat /= k;
    r.mean_a_tilde /= k;
    r.mean_lambda /= k;
    r.mean_sigma_hat /= k;
    r.mean_seconds /= k;
    r.all_signals_in_expanded /= k;
    r.variance_ordered /= k;
    r.tau_a_below_tau_c = static_cast<double>(tau_ok) / k;
    return r;
}

/// Rejection rates at the configured level for every group spec.
inline std::vector<PowerEntry> run_power_study(const SimConfig& c, int jobs = 1)
{
    detail::require(!c.groups.empty(), "run_power_study: no group specs configured");
    return aggregate_metrics(c, run_replications(c, c.replicates, jobs)).power;
}

inline SimReport run_study(const SimConfig& c, int jobs = 1, std::vector<ReplicateRecord>* keep = nullptr)
{
    c.validate();
    auto recs = run_replications(c, c.replicates, jobs);
    SimReport r = aggregate_metrics(c, recs);
    if (keep) *keep = std::move(recs);
    return r;
}

} // namespace moce::sim
