#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sptest/errors.hpp"
#include "sptest/harness.hpp"
#include "sptest/io.hpp"
#include "sptest/model.hpp"
#include "sptest/tests_general.hpp"
#include "sptest/tests_independent.hpp"

namespace {

using namespace sptest;

DesignConstants load_constants(const std::string& path) {
    if (path.empty()) return DesignConstants::defaults();
    return constants_from_json(read_text_file(path));
}

std::vector<Scenario> load_scenarios(const std::vector<std::string>& paths) {
    std::vector<Scenario> scenarios;
    for (const std::string& path : paths) {
        scenarios.push_back(scenario_from_json(read_text_file(path)));
    }
    return scenarios;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text << "\n";
    } else {
        write_text_file(out_path, text);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparsity tests for high-dimensional linear regression"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    std::uint64_t seed = 0;
    long long trials = 200;
    double alpha = 0.05;
    double delta = 0.05;
    double eta = 3.0;
    std::string constants_path;
    std::string mode = "analytic";
    app.add_option("--seed", seed, "master seed");
    app.add_option("--trials", trials, "Monte Carlo trials");
    app.add_option("--alpha", alpha, "type I error target");
    app.add_option("--delta", delta, "secondary error budget");
    app.add_option("--eta", eta, "covariance class bound");
    app.add_option("--constants", constants_path, "DesignConstants JSON file");
    app.add_option("--mode", mode, "threshold mode: analytic or calibrated")
        ->check(CLI::IsMember({"analytic", "calibrated"}));

    // generate
    auto* generate_cmd = app.add_subcommand("generate", "scenario JSON + seed -> SPTD dataset");
    std::string scenario_path, dataset_path;
    generate_cmd->add_option("--scenario", scenario_path, "scenario JSON")->required();
    generate_cmd->add_option("--out", dataset_path, "output dataset path")->required();

    // run-test
    auto* run_cmd = app.add_subcommand("run-test", "dataset + test name -> TestReport JSON");
    std::string run_data, run_test_name, run_out;
    TestParams run_params;
    double run_sigma = 1.0;
    int run_k0 = 0;
    run_cmd->add_option("--data", run_data, "SPTD dataset")->required();
    run_cmd->add_option("--test", run_test_name, "t|chi|f|i|ag|u|th-mcp|th-ith|general-ag")
        ->required();
    run_cmd->add_option("--k0", run_k0, "null sparsity")->required();
    run_cmd->add_option("--sigma", run_sigma, "noise level (independent tests)");
    run_cmd->add_option("--out", run_out, "output path (default stdout)");

    // calibrate
    auto* cal_cmd = app.add_subcommand("calibrate", "write calibrated DesignConstants JSON");
    std::string cal_test, cal_out;
    std::vector<std::string> cal_nulls;
    int cal_k0 = 0;
    double cal_sigma = 1.0;
    cal_cmd->add_option("--test", cal_test, "test family")->required();
    cal_cmd->add_option("--null", cal_nulls, "null scenario JSON (repeatable)");
    cal_cmd->add_option("--k0", cal_k0, "null sparsity")->required();
    cal_cmd->add_option("--sigma", cal_sigma, "noise level");
    cal_cmd->add_option("--out", cal_out, "output constants path");
    int cal_n = 0, cal_p = 0;
    cal_cmd->add_option("--n", cal_n, "rows for the default null panel");
    cal_cmd->add_option("--p", cal_p, "columns for the default null panel");

    // risk
    auto* risk_cmd = app.add_subcommand("risk", "Monte Carlo type I/II estimate");
    std::string risk_test, risk_out;
    std::vector<std::string> risk_nulls, risk_alts;
    int risk_k0 = 0;
    risk_cmd->add_option("--test", risk_test, "test family")->required();
    risk_cmd->add_option("--null", risk_nulls, "null scenario JSON (repeatable)")->required();
    risk_cmd->add_option("--alt", risk_alts, "alternative scenario JSON (repeatable)")
        ->required();
    risk_cmd->add_option("--k0", risk_k0, "null sparsity")->required();
    risk_cmd->add_option("--out", risk_out, "output path");

    // search
    auto* search_cmd = app.add_subcommand("search", "bisect the separation distance");
    std::string search_test, search_template, search_out;
    double search_gamma = 0.5, search_lo = 0.0, search_hi = 1.0;
    int search_k0 = 0;
    search_cmd->add_option("--test", search_test, "test family")->required();
    search_cmd->add_option("--scenario", search_template, "alternative template JSON")
        ->required();
    search_cmd->add_option("--gamma", search_gamma, "risk level to cross");
    search_cmd->add_option("--rho-lo", search_lo, "lower bracket")->required();
    search_cmd->add_option("--rho-hi", search_hi, "upper bracket")->required();
    search_cmd->add_option("--k0", search_k0, "null sparsity")->required();
    search_cmd->add_option("--out", search_out, "output path");

    // rates
    auto* rates_cmd = app.add_subcommand("rates", "reference separation rates");
    std::string rates_setting = "independent", rates_out;
    long long rates_n = 0, rates_p = 0, rates_k0 = 0, rates_delta = 0;
    rates_cmd->add_option("--setting", rates_setting, "independent|general")
        ->check(CLI::IsMember({"independent", "general"}));
    rates_cmd->add_option("--n", rates_n, "sample size")->required();
    rates_cmd->add_option("--p", rates_p, "dimension")->required();
    rates_cmd->add_option("--k0", rates_k0, "null sparsity")->required();
    rates_cmd->add_option("--delta-sparsity", rates_delta, "alternative extra sparsity")
        ->required();
    rates_cmd->add_option("--out", rates_out, "output path");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "cartesian sweep to CSV");
    std::string sweep_config_path, sweep_out;
    sweep_cmd->add_option("--config", sweep_config_path, "sweep config JSON")->required();
    sweep_cmd->add_option("--out", sweep_out, "CSV output path (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        DesignConstants constants = load_constants(constants_path);
        if (mode == "calibrated") {
            bool any_calibrated = false;
            for (const auto& [name, tag] : constants.provenance) {
                any_calibrated = any_calibrated || tag == "calibrated";
            }
            if (!any_calibrated) {
                throw InvalidConfig(
                    "--mode calibrated needs --constants with calibrated entries "
                    "(run the calibrate subcommand first)");
            }
        }

        if (generate_cmd->parsed()) {
            const Scenario scenario = scenario_from_json(read_text_file(scenario_path));
            write_dataset(generate_sample(scenario, seed), dataset_path);
            return 0;
        }

        if (run_cmd->parsed()) {
            const RegressionSample sample = read_dataset(run_data);
            run_params.k0 = run_k0;
            run_params.sigma = run_sigma;
            run_params.alpha = alpha;
            run_params.delta = delta;
            run_params.eta = eta;
            TestReport report;
            if (run_test_name == "ag") {
                report = test_ag(sample, run_k0, run_sigma, alpha, delta, constants);
            } else if (run_test_name == "general-ag") {
                report = test_general_ag(sample, run_k0, alpha, delta, eta, constants);
            } else if (run_test_name == "t" || run_test_name == "chi" ||
                       run_test_name == "f" || run_test_name == "i") {
                const SplitSample split = split_sample(sample, 3);
                if (run_test_name == "t") {
                    report = test_t(sample, split, run_k0, run_sigma, alpha, delta, constants);
                } else if (run_test_name == "chi") {
                    report = test_chi(sample, split, run_k0, run_sigma, alpha, delta, constants);
                } else if (run_test_name == "f") {
                    report = test_f(sample, split, run_k0, run_sigma, alpha, delta, constants);
                } else {
                    report = test_i(sample, split, run_k0, run_sigma, alpha, delta, constants);
                }
            } else if (run_test_name == "u") {
                const SplitSample split = split_sample(sample, 2);
                report = test_u(sample, split, run_k0, alpha, delta, eta, constants);
            } else if (run_test_name == "th-mcp" || run_test_name == "th-ith") {
                const SplitSample split = split_sample(sample, 2);
                const SupportSet support =
                    run_test_name == "th-mcp"
                        ? select_mcp(split.x_block(sample, 0), split.y_block(sample, 0), eta,
                                     constants)
                        : select_iterative(split.x_block(sample, 0), split.y_block(sample, 0),
                                           eta, delta, constants);
                const double c_star =
                    c_star_default(constants.c_star_a1, constants.c_star_a3, eta, delta);
                report = test_th(split.x_block(sample, 1), split.y_block(sample, 1), support,
                                 run_k0, c_star);
            } else {
                throw InvalidConfig("unknown test '" + run_test_name + "'");
            }
            emit(report_to_json(report), run_out);
            return 0;
        }

        if (cal_cmd->parsed()) {
            TestParams params;
            params.k0 = cal_k0;
            params.sigma = cal_sigma;
            params.alpha = alpha;
            params.delta = delta;
            params.eta = eta;
            std::vector<Scenario> nulls = load_scenarios(cal_nulls);
            if (nulls.empty()) {
                if (cal_n <= 0 || cal_p <= 0) {
                    throw InvalidConfig("calibrate: give --null files or --n/--p");
                }
                nulls = null_panel(cal_n, cal_p, cal_k0, cal_sigma);
            }
            const DesignConstants calibrated =
                calibrate_threshold(cal_test, params, nulls, trials, seed, constants);
            emit(constants_to_json(calibrated), cal_out);
            return 0;
        }

        if (risk_cmd->parsed()) {
            const std::vector<Scenario> nulls = load_scenarios(risk_nulls);
            const std::vector<Scenario> alts = load_scenarios(risk_alts);
            TestParams params;
            params.k0 = risk_k0;
            params.sigma = nulls.empty() ? 1.0 : nulls.front().sigma;
            params.alpha = alpha;
            params.delta = delta;
            params.eta = eta;
            const RiskEstimate estimate =
                estimate_risk(make_test(risk_test, params, constants), nulls, alts, trials, seed);
            emit(risk_to_json(estimate), risk_out);
            return 0;
        }

        if (search_cmd->parsed()) {
            const Scenario scenario_template =
                scenario_from_json(read_text_file(search_template));
            TestParams params;
            params.k0 = search_k0;
            params.sigma = scenario_template.sigma;
            params.alpha = alpha;
            params.delta = delta;
            params.eta = eta;
            const double rho_hat =
                separation_search(search_test, params, constants, scenario_template,
                                  search_gamma, search_lo, search_hi, trials, seed);
            nlohmann::json j;
            j["rho_hat"] = rho_hat;
            j["gamma"] = search_gamma;
            emit(j.dump(2), search_out);
            return 0;
        }

        if (rates_cmd->parsed()) {
            RateQuery query;
            query.setting = rates_setting == "general" ? RateSetting::general
                                                       : RateSetting::independent;
            query.n = rates_n;
            query.p = rates_p;
            query.k0 = rates_k0;
            query.delta = rates_delta;
            const RateResult rate = rate_reference(query);
            nlohmann::json j;
            j["rate"] = rate.rate;
            j["regime"] = rate.regime;
            if (rate.has_alt) j["rate_alt"] = rate.rate_alt;
            emit(j.dump(2), rates_out);
            return 0;
        }

        if (sweep_cmd->parsed()) {
            const nlohmann::json j = nlohmann::json::parse(read_text_file(sweep_config_path));
            SweepConfig config;
            config.n_values = j.at("n").get<std::vector<int>>();
            config.p_values = j.at("p").get<std::vector<int>>();
            config.k0_values = j.at("k0").get<std::vector<int>>();
            config.delta_values = j.at("delta").get<std::vector<int>>();
            config.rho_values = j.at("rho").get<std::vector<double>>();
            config.tests = j.at("tests").get<std::vector<std::string>>();
            config.trials = j.value("trials", trials);
            config.alpha = j.value("alpha", alpha);
            config.delta_param = j.value("delta_param", delta);
            config.eta = j.value("eta", eta);
            config.sigma = j.value("sigma", 1.0);
            config.seed = j.value("seed", seed);
            config.constants = constants;
            if (j.value("setting", std::string("independent")) == "general") {
                config.rate_setting = RateSetting::general;
            }
            const std::string pattern = j.value("pattern", std::string("flat_small"));
            if (pattern == "spikes") config.pattern = SignalPattern::spikes;
            else if (pattern == "decaying") config.pattern = SignalPattern::decaying;
            else config.pattern = SignalPattern::flat_small;

            if (sweep_out.empty()) {
                sweep(config, std::cout);
            } else {
                std::ofstream out(sweep_out);
                if (!out) throw InvalidConfig("cannot open '" + sweep_out + "'");
                sweep(config, out);
            }
            return 0;
        }
    } catch (const InvalidConfig& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
