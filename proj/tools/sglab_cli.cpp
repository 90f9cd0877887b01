// Command-line front end: simulate, design, verify-bounds, schedule, compare.
//
// Exit codes: 0 ok, 1 numeric failure (including failed ledger lines), 2 config error.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sglab/bounds.hpp"
#include "sglab/csv.hpp"
#include "sglab/errors.hpp"
#include "sglab/experiment.hpp"
#include "sglab/transition.hpp"

namespace fs = std::filesystem;
using namespace sglab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumeric = 1;
constexpr int kExitConfig = 2;

struct CommonOptions
{
    std::vector<std::string> configs;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    std::optional<long> stride;
};

ExperimentConfig load_with_overrides(const std::string& path, const CommonOptions& opt)
{
    ExperimentConfig cfg = load_config(path);
    if (opt.seed) {
        cfg.seed = *opt.seed;
        cfg.noise.seed = *opt.seed;
    }
    if (opt.stride) {
        if (*opt.stride < 1)
            throw ConfigError("--stride must be >= 1");
        cfg.stride = *opt.stride;
    }
    return cfg;
}

void print_summary(const RunSummary& s)
{
    const auto& d = s.doc;
    std::printf("%-22s %s\n", "name", d["name"].get<std::string>().c_str());
    std::printf("%-22s %s\n", "final_theta_err", d["final_theta_err"].dump().c_str());
    std::printf("%-22s %s\n", "final_phi_norm", d["final_phi_norm"].dump().c_str());
    std::printf("%-22s %s\n", "phi_norm_monotone", d["phi_norm_monotone"].dump().c_str());
    std::printf("%-22s %s\n", "criterion_dk_final", d["criterion"]["dk_final"].dump().c_str());
    std::printf("%-22s %s / %s\n", "ledger pass/fail", d["ledger"]["pass"].dump().c_str(),
                d["ledger"]["fail"].dump().c_str());
    for (const auto& w : d["warnings"])
        std::fprintf(stderr, "warning: %s\n", w.get<std::string>().c_str());
}

int cmd_simulate(const CommonOptions& opt)
{
    const ExperimentConfig cfg = load_with_overrides(opt.configs.at(0), opt);
    const RunSummary s = run_experiment(cfg, opt.out);
    print_summary(s);
    return kExitOk;
}

int cmd_design(const CommonOptions& opt)
{
    ExperimentConfig cfg = load_with_overrides(opt.configs.at(0), opt);
    if (cfg.mode != RunMode::Direct)
        throw ConfigError("/mode: design needs a direct-regressor config");
    RunResult res;
    run_generation(cfg, res);
    const KappaProfile profile =
        measure_kappa_profile(res.phis, cfg.stride, cfg.envelope_alpha());

    fs::create_directories(opt.out);
    {
        std::ofstream os(fs::path(opt.out) / "regressors.csv", std::ios::binary);
        write_regressors_csv(os, res.phis);
    }
    {
        std::ofstream os(fs::path(opt.out) / "kappa_profile.csv", std::ios::binary);
        write_kappa_csv(os, profile);
    }
    const long tail = cfg.horizon / 10;
    nlohmann::json doc{{"alpha", cfg.envelope_alpha()},
                       {"horizon", cfg.horizon},
                       {"min_ratio_tail", profile.min_ratio(tail)},
                       {"max_ratio_tail", profile.max_ratio(tail)},
                       {"fallback_steps", res.audit.fallback_steps},
                       {"last_fallback_n", res.audit.last_fallback_n}};
    std::ofstream(fs::path(opt.out) / "design.json") << doc.dump(2) << "\n";
    std::cout << doc.dump(2) << "\n";
    return kExitOk;
}

int cmd_schedule(const CommonOptions& opt)
{
    const ExperimentConfig cfg = load_with_overrides(opt.configs.at(0), opt);
    RunResult res;
    run_generation(cfg, res);
    const BlockSchedule sched = factorial_schedule(res.rs);
    sched.require(2);
    fs::create_directories(opt.out);
    std::ofstream os(fs::path(opt.out) / "schedule.csv", std::ios::binary);
    write_schedule_csv(os, sched, res.rs);
    bool ok = true;
    for (const auto& c : sched.ratio_certs)
        ok = ok && c.pass;
    std::printf("blocks %d, l_const %s, ratio certificates %s\n", sched.max_k(),
                format_real(sched.l_const).c_str(), ok ? "pass" : "FAIL");
    return ok ? kExitOk : kExitNumeric;
}

/// Randomized transition bound / certificate / integral-estimate suite.
int random_suite(int count, std::uint64_t seed, const fs::path& out)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dim_dist(1, 5);
    std::uniform_int_distribution<int> len_dist(1, 200);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    long bound_fail = 0, cert_fail = 0, integral_fail = 0;
    fs::create_directories(out);
    std::ofstream os(out / "random_suite.csv", std::ios::binary);
    CsvWriter csv(os);
    csv.header({"instance", "dim", "length", "weights", "exact_norm_sq", "bound_value",
                "transition_bound", "certificate", "integral"});

    for (int inst = 0; inst < count; ++inst) {
        const int m = dim_dist(rng);
        const int len = len_dist(rng);
        Matrix raw(m, len + 1);
        for (int j = 0; j <= len; ++j)
            for (int i = 0; i < m; ++i)
                raw(i, j) = gauss(rng) * (unif(rng) < 0.2 ? 5.0 : 1.0);
        raw.col(0).setZero();
        const Vector rs = r_sequence(raw);
        const Matrix phin = normalize_regressors(raw, rs);

        const bool r_weighted = inst % 2 == 1;
        const WeightScheme w =
            r_weighted ? WeightScheme::r_weighted(rs) : WeightScheme::unit(len + 1);
        const long k = std::uniform_int_distribution<long>(0, len - 1)(rng);
        const long n = std::uniform_int_distribution<long>(k + 1, len)(rng);

        const BlockBoundReport rep = theorem_bound(phin, w, k, n);
        Vector x(m);
        for (int i = 0; i < m; ++i)
            x(i) = gauss(rng);
        const Certificate cert = certificate(phin, w, x, k, n);
        const IntegralEstimate ie = integral_estimate_check(raw, rs, std::max<long>(k, 1), n);

        bound_fail += rep.holds ? 0 : 1;
        cert_fail += cert.ok() ? 0 : 1;
        integral_fail += ie.holds ? 0 : 1;
        csv.field(inst).field(m).field(len).field(r_weighted ? "r" : "unit");
        csv.field(rep.exact_norm_sq).field(rep.bound_value);
        csv.field(rep.holds).field(cert.ok()).field(ie.holds);
        csv.end_row();
    }
    std::printf("instances %d: transition bound violations %ld, certificate failures %ld, "
                "integral failures %ld\n",
                count, bound_fail, cert_fail, integral_fail);
    return bound_fail + cert_fail + integral_fail == 0 ? kExitOk : kExitNumeric;
}

int cmd_verify(const CommonOptions& opt, int random_count)
{
    if (random_count > 0)
        return random_suite(random_count, opt.seed.value_or(1), opt.out);
    if (opt.configs.empty())
        throw ConfigError("verify-bounds needs --config or --random N");

    const ExperimentConfig cfg = load_with_overrides(opt.configs.at(0), opt);
    const RunSummary s = run_experiment(cfg, opt.out);
    const long fails = s.doc["ledger"]["fail"].get<long>();
    const long viol = s.doc["transition_bound_violations"].get<long>();
    std::printf("ledger rows pass %ld fail %ld, transition bound violations %ld\n",
                s.doc["ledger"]["pass"].get<long>(), fails, viol);
    return fails + viol == 0 ? kExitOk : kExitNumeric;
}

int cmd_compare(const CommonOptions& opt, int threads)
{
    std::vector<ExperimentConfig> cfgs;
    for (const auto& path : opt.configs)
        cfgs.push_back(load_with_overrides(path, opt));
    const auto rows = compare_regimes(cfgs, fs::path(opt.out), threads);
    write_comparison_csv(std::cout, rows);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"sglab: stochastic gradient identification laboratory"};
    app.require_subcommand(1);

    CommonOptions opt;
    int random_count = 0;
    int threads = 0;
    auto add_common = [&](CLI::App* sub, bool many) {
        if (many)
            sub->add_option("--config", opt.configs, "config JSON (repeat per regime)")
                ->required();
        else
            sub->add_option("--config", opt.configs, "config JSON")->expected(1);
        sub->add_option("--out", opt.out, "output directory");
        sub->add_option("--seed", opt.seed, "override the config seed");
        sub->add_option("--stride", opt.stride, "profiling cadence");
    };

    auto* simulate = app.add_subcommand("simulate", "run the full pipeline for one config");
    add_common(simulate, false);
    simulate->get_option("--config")->required();
    auto* design = app.add_subcommand("design", "generate designed regressors and their kappa profile");
    add_common(design, false);
    design->get_option("--config")->required();
    auto* verify = app.add_subcommand("verify-bounds", "evaluate the bound ledger or a random suite");
    add_common(verify, false);
    verify->add_option("--random", random_count, "randomized instances instead of a config");
    auto* schedule = app.add_subcommand("schedule", "build the factorial block schedule");
    add_common(schedule, false);
    schedule->get_option("--config")->required();
    auto* compare = app.add_subcommand("compare", "run configs differing only in alpha");
    add_common(compare, true);
    compare->add_option("--threads", threads, "worker cap (default SG_LAB_THREADS)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (simulate->parsed())
            return cmd_simulate(opt);
        if (design->parsed())
            return cmd_design(opt);
        if (verify->parsed())
            return cmd_verify(opt, random_count);
        if (schedule->parsed())
            return cmd_schedule(opt);
        if (compare->parsed())
            return cmd_compare(opt, threads);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumeric;
    }
    return kExitOk;
}
