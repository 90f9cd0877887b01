#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sglab/errors.hpp"
#include "sglab/experiment.hpp"

using namespace sglab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json direct_doc(double alpha = 0.5, long horizon = 3000)
{
    return json{{"name", "t"},
                {"mode", "direct"},
                {"seed", 11},
                {"horizon", horizon},
                {"stride", 50},
                {"excitation", {{"dim", 2}, {"alpha", alpha}}},
                {"noise", {{"kind", "bounded-uniform"}, {"c0", 0.01}}}};
}

json armax_doc()
{
    return json{{"mode", "armax"},
                {"seed", 3},
                {"horizon", 2000},
                {"system",
                 {{"d", 1}, {"l", 1}, {"A", {{{-0.5}}}}, {"B", {{{1.0}}}}, {"C", {{{0.3}}}}}},
                {"noise", {{"kind", "gaussian"}, {"c0", 0.01}}}};
}

std::string expect_config_error(const json& doc)
{
    try {
        parse_config(doc);
    } catch (const ConfigError& e) {
        return e.what();
    }
    ADD_FAILURE() << "no ConfigError for " << doc.dump();
    return {};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("sglab_test_" + name);
    fs::remove_all(p);
    return p;
}

} // namespace

TEST(ParseConfig, Defaults)
{
    const auto cfg = parse_config(direct_doc());
    EXPECT_EQ(cfg.mode, RunMode::Direct);
    EXPECT_EQ(cfg.horizon, 3000);
    EXPECT_EQ(cfg.excitation.dim, 2);
    EXPECT_EQ(cfg.regressor_dim(), 2);
    EXPECT_EQ(cfg.spr_gate, SprGate::Warn);
    EXPECT_DOUBLE_EQ(cfg.envelope_alpha(), 0.5);
}

TEST(ParseConfig, UnknownKeysNameTheirPath)
{
    auto doc = direct_doc();
    doc["bogus"] = 1;
    EXPECT_NE(expect_config_error(doc).find("/bogus"), std::string::npos);
    doc = direct_doc();
    doc["excitation"]["gamma"] = 2;
    EXPECT_NE(expect_config_error(doc).find("/excitation/gamma"), std::string::npos);
}

TEST(ParseConfig, BadValues)
{
    auto doc = direct_doc();
    doc["horizon"] = 50;
    EXPECT_NE(expect_config_error(doc).find("/horizon"), std::string::npos);
    doc = direct_doc();
    doc["mode"] = "arx";
    EXPECT_NE(expect_config_error(doc).find("/mode"), std::string::npos);
    doc = direct_doc();
    doc["noise"]["c0"] = 0.0;
    EXPECT_NE(expect_config_error(doc).find("/noise/c0"), std::string::npos);
    doc = direct_doc();
    doc["excitation"]["alpha"] = -1.0;
    expect_config_error(doc);
    doc = direct_doc(0.5);
    doc["excitation"]["design"] = "adversarial";
    EXPECT_NE(expect_config_error(doc).find("/excitation/design"), std::string::npos);
    doc = direct_doc();
    doc["truth"] = {{1.0}, {2.0}, {3.0}};
    EXPECT_NE(expect_config_error(doc).find("/truth"), std::string::npos);
    doc = direct_doc();
    doc["estimator"] = {{"theta0", {{1.0, 2.0}}}};
    EXPECT_NE(expect_config_error(doc).find("/estimator/theta0"), std::string::npos);
    auto a = armax_doc();
    a["truth"] = {{1.0}};
    expect_config_error(a);
}

TEST(LoadConfig, MalformedJsonIsConfigError)
{
    const auto dir = scratch("malformed");
    fs::create_directories(dir);
    std::ofstream(dir / "bad.json") << "{\"mode\": ";
    EXPECT_THROW(load_config(dir / "bad.json"), ConfigError);
    EXPECT_THROW(load_config(dir / "missing.json"), ConfigError);
}

TEST(ToJson, RoundTrip)
{
    for (const json& doc : {direct_doc(), armax_doc()}) {
        const auto cfg = parse_config(doc);
        const json canon = to_json(cfg);
        EXPECT_EQ(to_json(parse_config(canon)), canon);
    }
}

TEST(RunPipeline, DirectRunConvergesAndLedgerHolds)
{
    const auto res = run_pipeline(parse_config(direct_doc(0.0, 20000)));
    EXPECT_LT(res.final_theta_err(), 0.1);
    EXPECT_TRUE(res.phi_norm_monotone);
    EXPECT_TRUE(res.ledger.all_pass());
    for (const auto& b : res.blocks)
        EXPECT_TRUE(b.holds);
    EXPECT_GE(res.schedule.max_k(), 7);
    EXPECT_EQ(res.phi_norm_full.size(), 20001u);
}

TEST(RunPipeline, ArmaxRunTracksSystemParameters)
{
    const auto res = run_pipeline(parse_config(armax_doc()));
    ASSERT_TRUE(res.trace.has_value());
    ASSERT_TRUE(res.spr.has_value());
    EXPECT_LT(res.final_theta_err(), 0.3);
    EXPECT_TRUE(res.ledger.all_pass());
}

TEST(RunExperiment, DeterministicOutputs)
{
    const auto cfg = parse_config(direct_doc());
    const auto a = scratch("det_a"), b = scratch("det_b");
    run_experiment(cfg, a);
    run_experiment(cfg, b);
    for (const char* f : {"estimator.csv", "phi_norm.csv", "kappa_profile.csv", "schedule.csv",
                          "blocks.csv", "criterion.csv", "ledger.csv", "config.json"}) {
        ASSERT_TRUE(fs::exists(a / f)) << f;
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
    const json s = json::parse(slurp(a / "summary.json"));
    EXPECT_EQ(s["name"], "t");
    EXPECT_EQ(s["horizon"], 3000);
    EXPECT_TRUE(s["final_theta_err"].is_number());
}

TEST(RunExperiment, SeedChangesTheRun)
{
    auto doc = direct_doc();
    const auto a = run_pipeline(parse_config(doc));
    doc["seed"] = 12;
    const auto b = run_pipeline(parse_config(doc));
    EXPECT_NE(a.phis, b.phis);
}

TEST(EmitPlots, WritesLocalScripts)
{
    const auto dir = scratch("plots");
    run_experiment(parse_config(direct_doc()), dir);
    std::vector<std::string> warnings;
    const auto files = emit_plots(dir, &warnings);
    EXPECT_EQ(files.size(), 4u);
    EXPECT_TRUE(warnings.empty());
    for (const auto& f : files) {
        const std::string body = slurp(f);
        EXPECT_EQ(body.find("http"), std::string::npos);
        // every quoted file name is a bare name inside the run directory
        for (std::size_t a = body.find('\''); a != std::string::npos;) {
            const std::size_t b = body.find('\'', a + 1);
            ASSERT_NE(b, std::string::npos);
            const std::string quoted = body.substr(a + 1, b - a - 1);
            if (quoted.find('.') != std::string::npos) {
                EXPECT_EQ(quoted.find('/'), std::string::npos) << quoted;
            }
            a = body.find('\'', b + 1);
        }
    }
}

TEST(EmitPlots, EmptyDirectoryWarns)
{
    const auto dir = scratch("plots_empty");
    fs::create_directories(dir);
    std::vector<std::string> warnings;
    EXPECT_TRUE(emit_plots(dir, &warnings).empty());
    EXPECT_EQ(warnings.size(), 4u);
}

TEST(CompareRegimes, Errors)
{
    const auto cfg = parse_config(direct_doc());
    EXPECT_THROW(compare_regimes({cfg}, std::nullopt), ConfigError);
    auto other = direct_doc(0.8);
    other["seed"] = 99;
    EXPECT_THROW(compare_regimes({cfg, parse_config(other)}, std::nullopt), ConfigError);
}

TEST(CompareRegimes, RowsInConfigOrder)
{
    std::vector<ExperimentConfig> cfgs;
    for (double a : {0.8, 0.0, 0.5})
        cfgs.push_back(parse_config(direct_doc(a)));
    const auto serial = compare_regimes(cfgs, std::nullopt, 1);
    const auto parallel = compare_regimes(cfgs, std::nullopt, 3);
    ASSERT_EQ(serial.size(), 3u);
    EXPECT_DOUBLE_EQ(serial[0].alpha, 0.8);
    EXPECT_DOUBLE_EQ(serial[1].alpha, 0.0);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(serial[i].final_phi_norm, parallel[i].final_phi_norm);
        EXPECT_EQ(serial[i].criterion_dk, parallel[i].criterion_dk);
    }
    std::ostringstream os;
    write_comparison_csv(os, serial);
    const std::string csv = os.str();
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(Summary, FiniteFieldsAndLedgerCounts)
{
    const auto res = run_pipeline(parse_config(direct_doc()));
    const json s = summarize(res).doc;
    for (const char* k : {"final_theta_err", "final_phi_norm", "wall_time_s"})
        EXPECT_TRUE(s[k].is_number()) << k;
    const int total = s["ledger"]["pass"].get<int>() + s["ledger"]["fail"].get<int>() +
                      s["ledger"]["not_applicable"].get<int>();
    EXPECT_EQ(total, static_cast<int>(res.ledger.rows.size()));
    EXPECT_EQ(s["ledger"]["fail"], 0);
}
