#include "sglab/experiment.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "sglab/csv.hpp"
#include "sglab/errors.hpp"

namespace sglab {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config parsing

namespace {

/// Walks one JSON object, tracking which keys were read so leftovers can be rejected.
class ObjectReader
{
public:
    ObjectReader(const json& obj, std::string path)
        : m_obj(obj)
        , m_path(std::move(path))
    {
        if (!obj.is_object())
            throw ConfigError(m_path + ": expected an object");
    }

    const json* get(const std::string& key)
    {
        m_seen.insert(key);
        auto it = m_obj.find(key);
        return it == m_obj.end() || it->is_null() ? nullptr : &*it;
    }

    std::string path(const std::string& key) const { return m_path + "/" + key; }

    double number(const std::string& key, double fallback)
    {
        const json* v = get(key);
        if (!v)
            return fallback;
        if (!v->is_number())
            throw ConfigError(path(key) + ": expected a number");
        return v->get<double>();
    }

    long integer(const std::string& key, long fallback)
    {
        const json* v = get(key);
        if (!v)
            return fallback;
        if (!v->is_number_integer())
            throw ConfigError(path(key) + ": expected an integer");
        return v->get<long>();
    }

    bool boolean(const std::string& key, bool fallback)
    {
        const json* v = get(key);
        if (!v)
            return fallback;
        if (!v->is_boolean())
            throw ConfigError(path(key) + ": expected true or false");
        return v->get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback)
    {
        const json* v = get(key);
        if (!v)
            return fallback;
        if (!v->is_string())
            throw ConfigError(path(key) + ": expected a string");
        return v->get<std::string>();
    }

    void finish() const
    {
        for (auto it = m_obj.begin(); it != m_obj.end(); ++it)
            if (!m_seen.count(it.key()))
                throw ConfigError(path(it.key()) + ": unknown key");
    }

private:
    const json& m_obj;
    std::string m_path;
    std::set<std::string> m_seen;
};

Matrix parse_matrix(const json& v, const std::string& path)
{
    if (!v.is_array() || v.empty() || !v[0].is_array() || v[0].empty())
        throw ConfigError(path + ": expected a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(v.size());
    const auto cols = static_cast<Eigen::Index>(v[0].size());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = v[i];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw ConfigError(path + "/" + std::to_string(i) + ": ragged row");
        for (Eigen::Index j = 0; j < cols; ++j) {
            if (!row[j].is_number())
                throw ConfigError(path + "/" + std::to_string(i) + "/" + std::to_string(j) +
                                  ": expected a number");
            m(i, j) = row[j].get<double>();
        }
    }
    return m;
}

std::vector<Matrix> parse_matrix_list(const json* v, const std::string& path)
{
    std::vector<Matrix> out;
    if (!v)
        return out;
    if (!v->is_array())
        throw ConfigError(path + ": expected an array of matrices");
    for (std::size_t i = 0; i < v->size(); ++i)
        out.push_back(parse_matrix((*v)[i], path + "/" + std::to_string(i)));
    return out;
}

json matrix_to_json(const Matrix& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

template <class Enum>
Enum parse_enum(ObjectReader& r, const std::string& key, Enum fallback,
                const std::vector<std::pair<std::string, Enum>>& names)
{
    const json* v = r.get(key);
    if (!v)
        return fallback;
    if (!v->is_string())
        throw ConfigError(r.path(key) + ": expected a string");
    for (const auto& [name, value] : names)
        if (*v == name)
            return value;
    std::string allowed;
    for (const auto& [name, _] : names)
        allowed += (allowed.empty() ? "" : ", ") + name;
    throw ConfigError(r.path(key) + ": expected one of " + allowed);
}

template <class Enum>
std::string enum_name(Enum value, const std::vector<std::pair<std::string, Enum>>& names)
{
    for (const auto& [name, v] : names)
        if (v == value)
            return name;
    return "?";
}

const std::vector<std::pair<std::string, RunMode>> kModes{{"direct", RunMode::Direct},
                                                          {"armax", RunMode::Armax}};
const std::vector<std::pair<std::string, DesignKind>> kDesigns{
    {"allocator", DesignKind::Allocator}, {"adversarial", DesignKind::Adversarial}};
const std::vector<std::pair<std::string, ExcitationMode>> kExcitationModes{
    {"direct-regressor", ExcitationMode::DirectRegressor},
    {"input-driven", ExcitationMode::InputDriven}};
const std::vector<std::pair<std::string, InputKind>> kInputs{
    {"rademacher", InputKind::Rademacher}, {"gaussian", InputKind::Gaussian},
    {"zero", InputKind::Zero}};
const std::vector<std::pair<std::string, NoiseKind>> kNoises{
    {"gaussian", NoiseKind::Gaussian}, {"bounded-uniform", NoiseKind::BoundedUniform},
    {"zero", NoiseKind::Zero}};
const std::vector<std::pair<std::string, SprGate>> kGates{
    {"off", SprGate::Off}, {"warn", SprGate::Warn}, {"error", SprGate::Error}};

} // namespace

double ExperimentConfig::envelope_alpha() const
{
    if (analysis_alpha)
        return *analysis_alpha;
    return mode == RunMode::Direct ? excitation.alpha : 0.0;
}

int ExperimentConfig::regressor_dim() const
{
    return mode == RunMode::Direct ? excitation.dim : system.regressor_dim();
}

ExperimentConfig parse_config(const json& doc)
{
    ExperimentConfig cfg;
    ObjectReader top(doc, "");

    cfg.name = top.string("name", cfg.name);
    cfg.mode = parse_enum(top, "mode", cfg.mode, kModes);
    {
        const json* v = top.get("seed");
        if (v) {
            if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<std::int64_t>() < 0))
                throw ConfigError(top.path("seed") + ": expected a nonnegative integer");
            cfg.seed = v->get<std::uint64_t>();
        }
    }
    cfg.horizon = top.integer("horizon", cfg.horizon);
    if (cfg.horizon < 100)
        throw ConfigError(top.path("horizon") + ": must be >= 100");
    cfg.stride = top.integer("stride", cfg.stride);
    if (cfg.stride < 1)
        throw ConfigError(top.path("stride") + ": must be >= 1");

    if (const json* ex = top.get("excitation")) {
        ObjectReader r(*ex, top.path("excitation"));
        cfg.excitation.dim = static_cast<int>(r.integer("dim", cfg.excitation.dim));
        cfg.excitation.alpha = r.number("alpha", cfg.excitation.alpha);
        cfg.excitation.step_energy = r.number("step_energy", cfg.excitation.step_energy);
        cfg.excitation.beta = r.number("beta", cfg.excitation.beta);
        cfg.excitation.mode = parse_enum(r, "mode", cfg.excitation.mode, kExcitationModes);
        cfg.design = parse_enum(r, "design", cfg.design, kDesigns);
        r.finish();
    }
    cfg.excitation.horizon = cfg.horizon;

    if (const json* t = top.get("truth"))
        cfg.truth = parse_matrix(*t, top.path("truth"));

    if (const json* s = top.get("system")) {
        ObjectReader r(*s, top.path("system"));
        cfg.system.d = static_cast<int>(r.integer("d", 1));
        cfg.system.l = static_cast<int>(r.integer("l", 1));
        cfg.system.A = parse_matrix_list(r.get("A"), r.path("A"));
        cfg.system.B = parse_matrix_list(r.get("B"), r.path("B"));
        cfg.system.C = parse_matrix_list(r.get("C"), r.path("C"));
        r.finish();
    }

    if (const json* in = top.get("input")) {
        ObjectReader r(*in, top.path("input"));
        cfg.input = parse_enum(r, "kind", cfg.input, kInputs);
        cfg.input_scale = r.number("scale", cfg.input_scale);
        r.finish();
    }

    if (const json* nz = top.get("noise")) {
        ObjectReader r(*nz, top.path("noise"));
        cfg.noise.kind = parse_enum(r, "kind", cfg.noise.kind, kNoises);
        cfg.noise.c0 = r.number("c0", cfg.noise.c0);
        cfg.noise.epsilon = r.number("epsilon", cfg.noise.epsilon);
        if (!(cfg.noise.c0 > 0.0))
            throw ConfigError(r.path("c0") + ": must be > 0");
        if (!(cfg.noise.epsilon >= 0.0 && cfg.noise.epsilon <= 1.0))
            throw ConfigError(r.path("epsilon") + ": must lie in [0, 1]");
        r.finish();
    }
    cfg.noise.seed = cfg.seed;

    if (const json* est = top.get("estimator")) {
        ObjectReader r(*est, top.path("estimator"));
        if (const json* t0 = r.get("theta0"))
            cfg.theta0 = parse_matrix(*t0, r.path("theta0"));
        cfg.spr_gate = parse_enum(r, "spr_gate", cfg.spr_gate, kGates);
        r.finish();
    }

    if (const json* an = top.get("analysis")) {
        ObjectReader r(*an, top.path("analysis"));
        if (const json* a = r.get("alpha")) {
            if (!a->is_number() || !(a->get<double>() >= 0.0))
                throw ConfigError(r.path("alpha") + ": expected a number >= 0");
            cfg.analysis_alpha = a->get<double>();
        }
        cfg.condition_a = r.boolean("condition_a", cfg.condition_a);
        r.finish();
    }

    if (const json* sc = top.get("schedule")) {
        ObjectReader r(*sc, top.path("schedule"));
        if (r.string("mode", "factorial") != "factorial")
            throw ConfigError(r.path("mode") + ": only \"factorial\" is supported");
        r.finish();
    }

    if (const json* em = top.get("emit")) {
        ObjectReader r(*em, top.path("emit"));
        cfg.emit.regressors = r.boolean("regressors", cfg.emit.regressors);
        cfg.emit.trace = r.boolean("trace", cfg.emit.trace);
        cfg.emit.plots = r.boolean("plots", cfg.emit.plots);
        r.finish();
    }
    top.finish();

    // Cross-field checks.
    if (cfg.mode == RunMode::Direct) {
        try {
            cfg.excitation.validate();
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("/excitation: ") + e.what());
        }
        if (cfg.design == DesignKind::Adversarial && !(cfg.excitation.alpha > 1.0))
            throw ConfigError("/excitation/design: adversarial design needs alpha > 1");
        if (cfg.truth && cfg.truth->rows() != cfg.excitation.dim)
            throw ConfigError("/truth: expected " + std::to_string(cfg.excitation.dim) + " rows");
    } else {
        try {
            cfg.system.validate();
        } catch (const Error& e) {
            throw ConfigError(std::string("/system: ") + e.what());
        }
        if (cfg.truth)
            throw ConfigError("/truth: not used in armax mode (the system defines theta)");
    }
    const int m = cfg.regressor_dim();
    const int d = cfg.mode == RunMode::Direct ? (cfg.truth ? static_cast<int>(cfg.truth->cols()) : 1)
                                              : cfg.system.d;
    if (cfg.theta0 && (cfg.theta0->rows() != m || cfg.theta0->cols() != d))
        throw ConfigError("/estimator/theta0: expected shape " + std::to_string(m) + "x" +
                          std::to_string(d));
    return cfg;
}

ExperimentConfig load_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": malformed JSON: " + e.what());
    }
    return parse_config(doc);
}

json to_json(const ExperimentConfig& cfg)
{
    json j;
    j["name"] = cfg.name;
    j["mode"] = enum_name(cfg.mode, kModes);
    j["seed"] = cfg.seed;
    j["horizon"] = cfg.horizon;
    j["stride"] = cfg.stride;
    j["excitation"] = {{"dim", cfg.excitation.dim},
                       {"alpha", cfg.excitation.alpha},
                       {"step_energy", cfg.excitation.step_energy},
                       {"beta", cfg.excitation.beta},
                       {"mode", enum_name(cfg.excitation.mode, kExcitationModes)},
                       {"design", enum_name(cfg.design, kDesigns)}};
    if (cfg.truth)
        j["truth"] = matrix_to_json(*cfg.truth);
    if (cfg.mode == RunMode::Armax) {
        json sys{{"d", cfg.system.d}, {"l", cfg.system.l}};
        for (const char* key : {"A", "B", "C"}) {
            const auto& list = key[0] == 'A' ? cfg.system.A : key[0] == 'B' ? cfg.system.B
                                                                             : cfg.system.C;
            json arr = json::array();
            for (const auto& mat : list)
                arr.push_back(matrix_to_json(mat));
            sys[key] = arr;
        }
        j["system"] = sys;
        j["input"] = {{"kind", enum_name(cfg.input, kInputs)}, {"scale", cfg.input_scale}};
    }
    j["noise"] = {{"kind", enum_name(cfg.noise.kind, kNoises)},
                  {"c0", cfg.noise.c0},
                  {"epsilon", cfg.noise.epsilon}};
    json est{{"spr_gate", enum_name(cfg.spr_gate, kGates)}};
    if (cfg.theta0)
        est["theta0"] = matrix_to_json(*cfg.theta0);
    j["estimator"] = est;
    json an{{"condition_a", cfg.condition_a}};
    if (cfg.analysis_alpha)
        an["alpha"] = *cfg.analysis_alpha;
    j["analysis"] = an;
    j["schedule"] = {{"mode", "factorial"}};
    j["emit"] = {{"regressors", cfg.emit.regressors},
                 {"trace", cfg.emit.trace},
                 {"plots", cfg.emit.plots}};
    return j;
}

// ---------------------------------------------------------------------------
// Pipeline

double RunResult::final_theta_err() const
{
    if (theta_final.size() == 0 || truth.size() == 0)
        return std::numeric_limits<double>::quiet_NaN();
    return (theta_final - truth).norm();
}

double RunResult::final_phi_norm() const
{
    return phi_norm_full.empty() ? std::numeric_limits<double>::quiet_NaN()
                                 : phi_norm_full.back();
}

namespace {

Rng stream(std::uint64_t seed, std::uint64_t id)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(id)};
    return Rng(seq);
}

Vector draw_input(InputKind kind, double scale, int l, Rng& rng)
{
    Vector u = Vector::Zero(l);
    if (kind == InputKind::Rademacher) {
        std::bernoulli_distribution coin(0.5);
        for (int i = 0; i < l; ++i)
            u(i) = coin(rng) ? scale : -scale;
    } else if (kind == InputKind::Gaussian) {
        std::normal_distribution<double> dist(0.0, scale);
        for (int i = 0; i < l; ++i)
            u(i) = dist(rng);
    }
    return u;
}

void log_row(RunResult& out, const EstimatorState& state, const Vector& residual)
{
    out.estimator_log.push_back(
        {state.n, state.r, (state.theta - out.truth).norm(), residual.norm()});
}

} // namespace

Matrix run_generation(const ExperimentConfig& cfg, RunResult& out)
{
    out.config = cfg;
    const long N = cfg.horizon;
    Rng noise_rng = stream(cfg.seed, 2);

    EstimatorState state;
    std::vector<Vector> inputs; // direct mode: designed regressors
    if (cfg.mode == RunMode::Direct) {
        Rng design_rng = stream(cfg.seed, 1);
        ExcitationSpec spec = cfg.excitation;
        spec.horizon = N;
        DesignedRegressors designed = cfg.design == DesignKind::Adversarial
                                          ? adversarial_regressors(spec, design_rng)
                                          : design_regressors(spec, design_rng);
        out.audit = designed.audit;
        out.phis = std::move(designed.phis);
        out.truth = cfg.truth.value_or(Matrix::Ones(spec.dim, 1));
        const RegressorLayout layout{static_cast<int>(out.truth.cols()), spec.dim, 0, 1, 0};
        state = make_estimator(layout, {cfg.theta0, Vector(out.phis.col(0)), {}, {}});
    } else {
        const auto& sys = cfg.system;
        out.truth = true_theta(sys);
        if (sys.r() > 0 && cfg.spr_gate != SprGate::Off) {
            out.spr = check_spr(sys);
            if (!out.spr->is_spr) {
                const std::string msg = "C(z) - I/2 is not SPR on the frequency grid (min " +
                                        format_real(out.spr->min_real_eig) + ")";
                if (cfg.spr_gate == SprGate::Error)
                    throw ConfigError("/system/C: " + msg);
                out.warnings.push_back(msg);
            }
        }
        out.trace.emplace(sys.d, sys.l);
        const Vector y0 = Vector::Zero(sys.d);
        const Vector u0 = Vector::Zero(sys.l);
        out.trace->push_initial(y0, u0, y0);
        const RegressorLayout layout{sys.d, sys.l, sys.p(), sys.q(), sys.r()};
        state = make_estimator(layout, {cfg.theta0, {}, y0, u0});
        out.phis = Matrix::Zero(layout.dim(), N + 1);
        out.phis.col(0) = state.phi;
    }

    const int d = static_cast<int>(out.truth.cols());
    out.rs = Vector::Zero(N + 1);
    out.rs(0) = state.r;
    Matrix eps(d, N);
    Rng input_rng = stream(cfg.seed, 3);
    log_row(out, state, Vector::Zero(d));

    for (long n = 0; n < N; ++n) {
        const Vector w = generate_noise(cfg.noise, d, state.r, noise_rng);
        Vector residual;
        if (cfg.mode == RunMode::Direct) {
            const Vector y = out.truth.transpose() * out.phis.col(n) + w;
            eps.col(n) = w;
            residual = sg_update(state, y, out.phis.col(n + 1));
        } else {
            const Vector u = draw_input(cfg.input, cfg.input_scale, cfg.system.l, input_rng);
            const Vector y = simulate_step(cfg.system, *out.trace, u, w);
            eps.col(n) = out.trace->eps(n + 1);
            residual = sg_update(state, y, u);
            out.phis.col(n + 1) = state.phi;
        }
        out.rs(n + 1) = state.r;
        if ((n + 1) % cfg.stride == 0 || n + 1 == N)
            log_row(out, state, residual);
    }
    out.theta_final = state.theta;
    return eps;
}

namespace {

double ratio_of(double kappa, double r, double alpha)
{
    // Same convention as measure_kappa_profile: (log 1)^0 = 1.
    const double scale = std::pow(std::log(r), alpha);
    if (!(scale > 0.0) || !std::isfinite(kappa))
        return std::numeric_limits<double>::infinity();
    return kappa / scale;
}

/// Stage 2: transition products, Fisher snapshots and the kappa profile.
void track(const ExperimentConfig& cfg, RunResult& out,
           std::map<int, double>& block_exact_sq, std::map<long, SymmetricMatrix>& snapshots)
{
    const long N = out.phis.cols() - 1;
    const int m = static_cast<int>(out.phis.rows());
    const double alpha = cfg.envelope_alpha();
    const auto& t = out.schedule.t;

    std::set<long> anchors{0};
    std::set<long> snap_at;
    std::set<long> boundaries(t.begin(), t.end());
    for (long tk : t) {
        anchors.insert(tk);
        if (tk >= 1)
            snap_at.insert(tk - 1);
    }

    TransitionTracker tracker(m, anchors);
    SymmetricMatrix S(m);
    out.kappa.alpha = alpha;
    out.phi_norm_full.assign(N + 1, 1.0);

    for (long n = 0; n <= N; ++n) {
        if (n >= 1)
            S.add_outer(out.phis.col(n));
        if (snap_at.count(n))
            snapshots.emplace(n, S);
        if (n >= 1 && (n % cfg.stride == 0 || n == N)) {
            const double kappa = condition_number_or_inf(S);
            out.kappa.points.push_back({n, out.rs(n), kappa, ratio_of(kappa, out.rs(n), alpha)});
        }
        if (boundaries.count(n)) {
            for (int k = 2; k <= out.schedule.max_k(); ++k) {
                if (t[k - 1] != n)
                    continue;
                const double norm = tracker.exact_norm(t[k - 2]);
                block_exact_sq[k] = norm * norm;
            }
            for (long a : tracker.live_anchors())
                if (a != 0 && a < n)
                    tracker.drop_anchor(a);
        }

        const double norm0 = tracker.exact_norm(0);
        out.phi_norm_full[n] = norm0;
        if (n > 0 && norm0 > out.phi_norm_full[n - 1] + 1e-12)
            out.phi_norm_monotone = false;
        if (n % cfg.stride == 0 || n == N)
            out.phi_norm_series.push_back({n, 0, norm0});

        if (n < N)
            tracker.step(out.phis.col(n), out.rs(n));
    }
}

/// Stage 3: block bounds, series criteria and the inequality ledger.
void analyse(const ExperimentConfig& cfg, RunResult& out,
             const std::map<int, double>& block_exact_sq,
             const std::map<long, SymmetricMatrix>& snapshots)
{
    const auto& sched = out.schedule;
    const auto& rs = out.rs;
    const int m = static_cast<int>(out.phis.rows());
    const double alpha = cfg.envelope_alpha();
    const double l = sched.l_const;

    // Envelope constant: the largest measured kappa / (log r)^alpha, including
    // every block end used below.
    out.kappa_M = out.kappa.max_ratio();
    for (int k = 3; k <= sched.max_k(); ++k) {
        const long idx = sched.t[k - 1] - 1;
        auto it = snapshots.find(idx);
        if (it == snapshots.end())
            continue;
        const double ratio = ratio_of(condition_number_or_inf(it->second), rs(idx), alpha);
        if (std::isfinite(ratio))
            out.kappa_M = std::max(out.kappa_M, ratio);
    }

    const Matrix phisn = normalize_regressors(out.phis, rs);
    const WeightScheme weights = WeightScheme::r_weighted(rs);
    for (int k = 2; k <= sched.max_k(); ++k) {
        auto it = block_exact_sq.find(k);
        if (it == block_exact_sq.end())
            break;
        out.blocks.push_back(theorem_bound(phisn, weights, sched.t[k - 2], sched.t[k - 1],
                                           it->second));
    }
    out.criterion_dk = criterion_partial_sums(out.phis, rs, sched, CriterionVariant::Dk);
    out.criterion_general =
        criterion_partial_sums(out.phis, rs, sched, CriterionVariant::GeneralMu);
    for (const auto& pt : out.criterion_dk)
        if (pt.empty_block)
            out.warnings.push_back("empty block k = " + std::to_string(pt.k) + "; term set to 0");

    auto& rows = out.ledger.rows;
    for (const auto& c : sched.ratio_certs) {
        LedgerRow lo{"ratio_lower", c.k, c.lower, c.ratio, c.ratio - c.lower, c.lower < c.ratio};
        LedgerRow hi{"ratio_upper", c.k, c.ratio, c.upper, c.upper - c.ratio, c.ratio < c.upper};
        rows.push_back(lo);
        rows.push_back(hi);
    }
    for (std::size_t b = 0; b < out.blocks.size(); ++b) {
        const auto& rep = out.blocks[b];
        const int k = static_cast<int>(b) + 2;
        rows.push_back(make_row("transition_bound", k, rep.exact_norm_sq, rep.bound_value));

        const auto& dk = out.criterion_dk[b];
        const auto& gen = out.criterion_general[b];
        if (!dk.empty_block)
            rows.push_back(make_row("dk_vs_general", k, dk.term, 2.0 * gen.term));
        if (k < 3 || dk.empty_block)
            continue;

        const long t_prev = sched.t[k - 2];
        const long t_cur = sched.t[k - 1];
        const double r_end = rs(t_cur - 1);
        const double r_start = rs(t_prev - 1);
        rows.push_back(make_row("integral_estimate", k, rep.sum_muB,
                                r_end * (std::log(r_end) - std::log(r_start)) - (r_end - r_start)));
        rows.push_back(make_row("dk_upper", k, dk.denominator,
                                r_end * (std::log(r_end) - std::log(r_start) + 1.0)));

        const auto end_it = snapshots.find(t_cur - 1);
        const auto start_it = snapshots.find(t_prev - 1);
        if (end_it != snapshots.end() && start_it != snapshots.end())
            out.ledger.append(weyl_split_check(end_it->second, start_it->second, out.kappa_M,
                                               alpha, r_end, m, k));
        rows.push_back(make_row("stirling", k, std::log(r_end), std::log(l) + log_factorial(k)));
        rows.push_back(make_row("stirling_envelope", k, std::log(l) + log_factorial(k),
                                std::log(l) + k * std::log(static_cast<double>(k))));
    }
}

} // namespace

void run_pipeline(const ExperimentConfig& cfg, RunResult& out)
{
    const auto t0 = std::chrono::steady_clock::now();
    out.config = cfg;

    const Matrix eps = run_generation(cfg, out);
    out.schedule = factorial_schedule(out.rs);
    if (out.schedule.max_k() < 2)
        out.warnings.push_back("horizon too short for a second block boundary");

    std::map<int, double> block_exact_sq;
    std::map<long, SymmetricMatrix> snapshots;
    track(cfg, out, block_exact_sq, snapshots);
    analyse(cfg, out, block_exact_sq, snapshots);

    if (cfg.condition_a) {
        const long N = out.phis.cols() - 1;
        out.condition_a = condition_a_diagnostic(out.phis.leftCols(N), out.rs.head(N), eps,
                                                 cfg.stride);
    }
    out.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RunResult run_pipeline(const ExperimentConfig& cfg)
{
    RunResult out;
    run_pipeline(cfg, out);
    return out;
}

// ---------------------------------------------------------------------------
// Outputs

namespace {

json finite_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

double last_increment(const std::vector<CriterionPoint>& pts)
{
    return pts.empty() ? 0.0 : pts.back().term;
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw Error("cannot write " + path.string());
    os << text;
}

template <class Fn>
void write_csv(const fs::path& path, Fn&& fn)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw Error("cannot write " + path.string());
    fn(os);
}

void write_criterion_csv(std::ostream& os, const RunResult& r)
{
    CsvWriter csv(os);
    csv.header({"K", "lambda_min", "term_dk", "partial_sum_dk", "term_general",
                "partial_sum_general", "empty_block"});
    for (std::size_t i = 0; i < r.criterion_dk.size(); ++i) {
        const auto& a = r.criterion_dk[i];
        const auto& b = r.criterion_general[i];
        csv.field(a.k).field(a.lambda_min).field(a.term).field(a.partial_sum);
        csv.field(b.term).field(b.partial_sum).field(a.empty_block);
        csv.end_row();
    }
}

json ledger_json(const MainTheoremLedger& ledger)
{
    json rows = json::array();
    for (const auto& r : ledger.rows)
        rows.push_back({{"name", r.name},
                        {"k", r.k},
                        {"lhs", finite_or_null(r.lhs)},
                        {"rhs", finite_or_null(r.rhs)},
                        {"slack", finite_or_null(r.slack)},
                        {"pass", r.pass},
                        {"applicable", r.applicable}});
    return rows;
}

} // namespace

RunSummary summarize(const RunResult& r)
{
    const auto& cfg = r.config;
    json doc;
    doc["name"] = cfg.name;
    doc["mode"] = enum_name(cfg.mode, kModes);
    doc["alpha"] = cfg.envelope_alpha();
    doc["horizon"] = cfg.horizon;
    doc["seed"] = cfg.seed;
    doc["regressor_dim"] = r.phis.rows();
    doc["final_theta_err"] = finite_or_null(r.final_theta_err());
    doc["final_phi_norm"] = finite_or_null(r.final_phi_norm());
    doc["phi_norm_monotone"] = r.phi_norm_monotone;

    const long tail_from = cfg.horizon / 10;
    doc["kappa"] = {{"M", finite_or_null(r.kappa_M)},
                    {"min_ratio_tail", finite_or_null(r.kappa.min_ratio(tail_from))},
                    {"max_ratio_tail", finite_or_null(r.kappa.max_ratio(tail_from))},
                    {"final_kappa", r.kappa.points.empty()
                                        ? json(nullptr)
                                        : finite_or_null(r.kappa.points.back().kappa)}};

    auto final_sum = [](const std::vector<CriterionPoint>& v) {
        return v.empty() ? 0.0 : v.back().partial_sum;
    };
    doc["criterion"] = {{"blocks", r.criterion_dk.size()},
                        {"dk_final", final_sum(r.criterion_dk)},
                        {"general_final", final_sum(r.criterion_general)},
                        {"dk_last_increment", last_increment(r.criterion_dk)},
                        {"general_last_increment", last_increment(r.criterion_general)}};

    long pass = 0;
    long fail = 0;
    long skipped = 0;
    for (const auto& row : r.ledger.rows)
        (!row.applicable ? skipped : row.pass ? pass : fail)++;
    long violations = 0;
    for (const auto& b : r.blocks)
        violations += b.holds ? 0 : 1;
    doc["ledger"] = {{"pass", pass}, {"fail", fail}, {"not_applicable", skipped}};
    doc["transition_bound_violations"] = violations;
    doc["schedule"] = {{"max_k", r.schedule.max_k()}, {"l_const", r.schedule.l_const}};
    doc["allocator"] = {{"fallback_steps", r.audit.fallback_steps},
                        {"last_fallback_n", r.audit.last_fallback_n}};
    doc["condition_a"] = r.condition_a ? json{{"delta_fit", finite_or_null(r.condition_a->delta_fit)}}
                                       : json(nullptr);
    doc["spr"] = r.spr ? json{{"is_spr", r.spr->is_spr},
                              {"min_real_eig", finite_or_null(r.spr->min_real_eig)},
                              {"argmin_freq", r.spr->argmin_freq}}
                       : json(nullptr);
    doc["warnings"] = r.warnings;
    doc["wall_time_s"] = r.wall_seconds;
    return {doc};
}

void write_outputs(const RunResult& r, const fs::path& dir)
{
    fs::create_directories(dir);
    write_text(dir / "config.json", to_json(r.config).dump(2) + "\n");

    if (!r.estimator_log.empty())
        write_csv(dir / "estimator.csv", [&](std::ostream& os) { write_estimator_csv(os, r.estimator_log); });
    if (!r.phi_norm_series.empty())
        write_csv(dir / "phi_norm.csv", [&](std::ostream& os) { write_norm_csv(os, r.phi_norm_series); });
    if (!r.kappa.points.empty())
        write_csv(dir / "kappa_profile.csv", [&](std::ostream& os) { write_kappa_csv(os, r.kappa); });
    if (r.rs.size() > 0 && !r.schedule.t.empty())
        write_csv(dir / "schedule.csv",
                  [&](std::ostream& os) { write_schedule_csv(os, r.schedule, r.rs); });
    if (!r.blocks.empty())
        write_csv(dir / "blocks.csv", [&](std::ostream& os) { write_blocks_csv(os, r.blocks); });
    if (!r.criterion_dk.empty())
        write_csv(dir / "criterion.csv", [&](std::ostream& os) { write_criterion_csv(os, r); });
    if (!r.ledger.rows.empty()) {
        write_csv(dir / "ledger.csv", [&](std::ostream& os) { write_ledger_csv(os, r.ledger); });
        write_text(dir / "ledger.json", ledger_json(r.ledger).dump(2) + "\n");
    }
    if (r.config.emit.regressors && r.phis.size() > 0)
        write_csv(dir / "regressors.csv", [&](std::ostream& os) { write_regressors_csv(os, r.phis); });
    if (r.config.emit.trace && r.trace)
        write_csv(dir / "trace.csv", [&](std::ostream& os) { write_trace_csv(os, *r.trace); });
    if (r.condition_a)
        write_csv(dir / "condition_a.csv", [&](std::ostream& os) {
            CsvWriter csv(os);
            csv.header({"n", "tail_norm"});
            for (const auto& [n, tail] : r.condition_a->tail_norm_series) {
                csv.field(n).field(tail);
                csv.end_row();
            }
        });

    write_text(dir / "summary.json", summarize(r).doc.dump(2) + "\n");
    if (r.config.emit.plots)
        emit_plots(dir);
}

RunSummary run_experiment(const ExperimentConfig& cfg, const fs::path& dir)
{
    RunResult result;
    try {
        run_pipeline(cfg, result);
    } catch (const std::exception& e) {
        try {
            write_outputs(result, dir);
        } catch (...) {
        }
        fs::create_directories(dir);
        write_text(dir / "error.json",
                   json{{"error", e.what()}, {"stage", "pipeline"}}.dump(2) + "\n");
        throw;
    }
    write_outputs(result, dir);
    return summarize(result);
}

std::vector<fs::path> emit_plots(const fs::path& run_dir, std::vector<std::string>* warnings)
{
    std::vector<fs::path> written;
    auto warn = [&](const std::string& msg) {
        if (warnings)
            warnings->push_back(msg);
    };
    if (!fs::is_directory(run_dir)) {
        warn("run directory " + run_dir.string() + " does not exist");
        return written;
    }

    double alpha = 1.0;
    if (fs::exists(run_dir / "summary.json")) {
        try {
            std::ifstream in(run_dir / "summary.json");
            const json s = json::parse(in);
            if (s.contains("alpha") && s["alpha"].is_number())
                alpha = s["alpha"].get<double>();
        } catch (const std::exception&) {
            warn("summary.json unreadable; kappa plot assumes alpha = 1");
        }
    }

    const std::string preamble =
        "set datafile separator ','\nset key autotitle columnhead\nset grid\n"
        "set terminal pngcairo size 900,600\n";
    struct Script
    {
        const char* file;
        const char* csv;
        std::string body;
    };
    const std::vector<Script> scripts{
        {"theta_err.gp", "estimator.csv",
         "set output 'theta_err.png'\nset logscale xy\nset xlabel 'n'\nset ylabel 'theta error'\n"
         "plot 'estimator.csv' using ($1 > 0 ? $1 : 1/0):3 with lines title 'theta_err'\n"},
        {"phi_norm.gp", "phi_norm.csv",
         "set output 'phi_norm.png'\nset logscale x\nset xlabel 'n'\nset ylabel '|Phi(n,0)|'\n"
         "plot 'phi_norm.csv' using ($1 > 0 ? $1 : 1/0):3 with lines title 'phi_norm'\n"},
        {"kappa.gp", "kappa_profile.csv",
         "alpha = " + format_real(alpha) +
             "\nset output 'kappa.png'\nset xlabel '(log r_n)^alpha'\nset ylabel 'kappa'\n"
             "plot 'kappa_profile.csv' using (log($2)**alpha):3 with lines title 'kappa', "
             "'' using (log($2)**alpha):(log($2)**alpha) with lines dashtype 2 title 'envelope'\n"},
        {"criterion.gp", "criterion.csv",
         "set output 'criterion.png'\nset xlabel 'K'\nset ylabel 'partial sum'\n"
         "plot 'criterion.csv' using 1:4 with linespoints title 'D_k form', "
         "'' using 1:6 with linespoints title 'weighted form'\n"},
    };
    for (const auto& s : scripts) {
        if (!fs::exists(run_dir / s.csv)) {
            warn(std::string("missing ") + s.csv + "; skipped " + s.file);
            continue;
        }
        write_text(run_dir / s.file, preamble + s.body);
        written.push_back(run_dir / s.file);
    }
    return written;
}

// ---------------------------------------------------------------------------
// Regime comparison

std::vector<ComparisonRow> compare_regimes(const std::vector<ExperimentConfig>& cfgs,
                                           const std::optional<fs::path>& out_dir,
                                           int max_threads)
{
    if (cfgs.size() < 2)
        throw ConfigError("compare: need at least two configs");
    auto strip = [](const ExperimentConfig& c) {
        json j = to_json(c);
        j.erase("name");
        j["excitation"].erase("alpha");
        j["excitation"].erase("design");
        j["analysis"].erase("alpha");
        return j;
    };
    const json base = strip(cfgs.front());
    for (std::size_t i = 1; i < cfgs.size(); ++i) {
        const json diff = json::diff(base, strip(cfgs[i]));
        if (!diff.empty())
            throw ConfigError("compare: config " + std::to_string(i) +
                              " differs in more than alpha (at " +
                              diff.front()["path"].get<std::string>() + ")");
    }

    int threads = max_threads;
    if (threads <= 0) {
        threads = omp_get_max_threads();
        if (const char* env = std::getenv("SG_LAB_THREADS")) {
            const int cap = std::atoi(env);
            if (cap > 0)
                threads = cap;
        }
    }
    const int n = static_cast<int>(cfgs.size());
    threads = std::max(1, std::min(threads, n));

    std::vector<ComparisonRow> rows(n);
    std::vector<std::string> errors(n);
#pragma omp parallel for num_threads(threads) schedule(dynamic, 1)
    for (int i = 0; i < n; ++i) {
        try {
            const RunResult res = run_pipeline(cfgs[i]);
            if (out_dir) {
                std::ostringstream sub;
                sub << i << "_" << cfgs[i].name;
                write_outputs(res, *out_dir / sub.str());
            }
            rows[i] = {cfgs[i].envelope_alpha(),
                       res.final_phi_norm(),
                       res.final_theta_err(),
                       res.criterion_dk.empty() ? 0.0 : res.criterion_dk.back().partial_sum,
                       res.criterion_general.empty() ? 0.0
                                                     : res.criterion_general.back().partial_sum,
                       last_increment(res.criterion_dk),
                       res.phi_norm_monotone};
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    for (int i = 0; i < n; ++i)
        if (!errors[i].empty())
            throw Error("compare: config " + std::to_string(i) + " failed: " + errors[i]);

    if (out_dir) {
        fs::create_directories(*out_dir);
        write_csv(*out_dir / "comparison.csv",
                  [&](std::ostream& os) { write_comparison_csv(os, rows); });
    }
    return rows;
}

void write_comparison_csv(std::ostream& os, const std::vector<ComparisonRow>& rows)
{
    CsvWriter csv(os);
    csv.header({"alpha", "final_phi_norm", "final_theta_err", "criterion_dk", "criterion_general",
                "dk_last_increment", "phi_norm_monotone"});
    for (const auto& r : rows) {
        csv.field(r.alpha).field(r.final_phi_norm).field(r.final_theta_err);
        csv.field(r.criterion_dk).field(r.criterion_general).field(r.dk_last_increment);
        csv.field(r.phi_norm_monotone);
        csv.end_row();
    }
}

} // namespace sglab
