#include "sptest/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sptest/errors.hpp"

namespace sptest {

using nlohmann::json;

namespace {

std::string cov_kind_name(CovKind kind) {
    switch (kind) {
        case CovKind::identity: return "identity";
        case CovKind::ar1: return "ar1";
        case CovKind::equicorrelation: return "equicorrelation";
        case CovKind::explicit_matrix: return "explicit";
    }
    return "identity";
}

CovKind cov_kind_from(const std::string& name) {
    if (name == "identity") return CovKind::identity;
    if (name == "ar1") return CovKind::ar1;
    if (name == "equicorrelation") return CovKind::equicorrelation;
    if (name == "explicit") return CovKind::explicit_matrix;
    throw InvalidConfig("unknown covariance kind '" + name + "'");
}

std::string pattern_name(SignalPattern pattern) {
    switch (pattern) {
        case SignalPattern::spikes: return "spikes";
        case SignalPattern::flat_small: return "flat_small";
        case SignalPattern::decaying: return "decaying";
        case SignalPattern::explicit_vector: return "explicit";
    }
    return "spikes";
}

SignalPattern pattern_from(const std::string& name) {
    if (name == "spikes") return SignalPattern::spikes;
    if (name == "flat_small") return SignalPattern::flat_small;
    if (name == "decaying") return SignalPattern::decaying;
    if (name == "explicit") return SignalPattern::explicit_vector;
    throw InvalidConfig("unknown signal pattern '" + name + "'");
}

json number_or_string(double v) {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

json report_json(const TestReport& r) {
    json j;
    j["name"] = r.name;
    j["statistic"] = number_or_string(r.statistic);
    j["threshold"] = number_or_string(r.threshold);
    j["reject"] = r.reject;
    j["mode"] = r.threshold_mode;
    if (!r.per_l_statistic.empty()) {
        j["per_l_statistic"] = r.per_l_statistic;
        j["per_l_threshold"] = r.per_l_threshold;
    }
    if (!r.regime.empty()) j["regime"] = r.regime;
    if (r.support_size >= 0) j["support_size"] = r.support_size;
    if (r.degenerate) j["degenerate"] = true;
    json subs = json::array();
    for (const TestReport& sub : r.sub_reports) subs.push_back(report_json(sub));
    j["sub_reports"] = subs;
    return j;
}

}  // namespace

std::string scenario_to_json(const Scenario& s) {
    json j;
    j["n"] = s.n;
    j["p"] = s.p;
    j["sigma"] = s.sigma;
    j["sigma_known"] = s.sigma_known;
    j["covariance"] = {{"kind", cov_kind_name(s.covariance.kind)},
                       {"param", s.covariance.param},
                       {"eta", s.covariance.eta}};
    j["signal"] = {{"k0", s.signal.k0},
                   {"delta", s.signal.delta},
                   {"rho", s.signal.rho},
                   {"pattern", pattern_name(s.signal.pattern)},
                   {"spike_scale", s.signal.spike_scale}};
    if (s.covariance.kind == CovKind::explicit_matrix) {
        json rows = json::array();
        for (int i = 0; i < s.covariance.matrix.rows(); ++i) {
            json row = json::array();
            for (int c = 0; c < s.covariance.matrix.cols(); ++c) {
                row.push_back(s.covariance.matrix(i, c));
            }
            rows.push_back(row);
        }
        j["covariance"]["matrix"] = rows;
    }
    if (s.signal.pattern == SignalPattern::explicit_vector) {
        json v = json::array();
        for (int i = 0; i < s.signal.explicit_theta.size(); ++i) {
            v.push_back(s.signal.explicit_theta[i]);
        }
        j["signal"]["theta"] = v;
    }
    return j.dump(2);
}

Scenario scenario_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("scenario JSON parse error: ") + e.what());
    }
    Scenario s;
    try {
        s.n = j.at("n").get<int>();
        s.p = j.at("p").get<int>();
        s.sigma = j.at("sigma").get<double>();
        s.sigma_known = j.value("sigma_known", true);
        const json& cov = j.at("covariance");
        s.covariance.kind = cov_kind_from(cov.at("kind").get<std::string>());
        s.covariance.param = cov.value("param", 0.0);
        s.covariance.eta = cov.value("eta", 3.0);
        if (s.covariance.kind == CovKind::explicit_matrix) {
            const json& rows = cov.at("matrix");
            const int p = static_cast<int>(rows.size());
            s.covariance.matrix.resize(p, p);
            for (int i = 0; i < p; ++i) {
                for (int c = 0; c < p; ++c) s.covariance.matrix(i, c) = rows[i][c].get<double>();
            }
        }
        const json& sig = j.at("signal");
        s.signal.k0 = sig.at("k0").get<int>();
        s.signal.delta = sig.value("delta", 0);
        s.signal.rho = sig.value("rho", 0.0);
        s.signal.pattern = pattern_from(sig.value("pattern", std::string("spikes")));
        s.signal.spike_scale = sig.value("spike_scale", 10.0);
        if (s.signal.pattern == SignalPattern::explicit_vector) {
            const json& v = sig.at("theta");
            s.signal.explicit_theta.resize(static_cast<int>(v.size()));
            for (int i = 0; i < s.signal.explicit_theta.size(); ++i) {
                s.signal.explicit_theta[i] = v[i].get<double>();
            }
        }
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("scenario JSON missing field: ") + e.what());
    }
    s.validate();
    return s;
}

std::string constants_to_json(const DesignConstants& c) {
    json j;
    j["c_t"] = c.c_t;
    j["c_chi"] = c.c_chi;
    j["c_f"] = c.c_f;
    j["c_i"] = c.c_i;
    j["c_u_eta"] = c.c_u_eta;
    j["c_SL_eta"] = c.c_SL_eta;
    j["c_MCP_eta"] = c.c_MCP_eta;
    j["c_MCP_prime_eta"] = c.c_MCP_prime_eta;
    j["c_star_a1"] = c.c_star_a1;
    j["c_star_a3"] = c.c_star_a3;
    j["c_ith_eta"] = c.c_ith_eta;
    j["condition_A_c"] = c.condition_A_c;
    j["condition_B_c"] = c.condition_B_c;
    j["c_regime_eta"] = c.c_regime_eta;
    j["provenance"] = c.provenance;
    return j.dump(2);
}

DesignConstants constants_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("constants JSON parse error: ") + e.what());
    }
    DesignConstants c = DesignConstants::defaults();
    c.c_t = j.value("c_t", c.c_t);
    c.c_chi = j.value("c_chi", c.c_chi);
    c.c_f = j.value("c_f", c.c_f);
    c.c_i = j.value("c_i", c.c_i);
    c.c_u_eta = j.value("c_u_eta", c.c_u_eta);
    c.c_SL_eta = j.value("c_SL_eta", c.c_SL_eta);
    c.c_MCP_eta = j.value("c_MCP_eta", c.c_MCP_eta);
    c.c_MCP_prime_eta = j.value("c_MCP_prime_eta", c.c_MCP_prime_eta);
    c.c_star_a1 = j.value("c_star_a1", c.c_star_a1);
    c.c_star_a3 = j.value("c_star_a3", c.c_star_a3);
    c.c_ith_eta = j.value("c_ith_eta", c.c_ith_eta);
    c.condition_A_c = j.value("condition_A_c", c.condition_A_c);
    c.condition_B_c = j.value("condition_B_c", c.condition_B_c);
    c.c_regime_eta = j.value("c_regime_eta", c.c_regime_eta);
    if (j.contains("provenance")) {
        c.provenance = j["provenance"].get<std::map<std::string, std::string>>();
    }
    c.validate();
    return c;
}

std::string report_to_json(const TestReport& r) { return report_json(r).dump(2); }

std::string support_to_json(const SupportSet& s) {
    json j;
    j["indices"] = s.indices;
    switch (s.method) {
        case SelectionMethod::mcp: j["method"] = "mcp"; break;
        case SelectionMethod::iterative: j["method"] = "iterative"; break;
        case SelectionMethod::oracle: j["method"] = "oracle"; break;
    }
    j["steps"] = s.step_sizes;
    return j.dump(2);
}

std::string risk_to_json(const RiskEstimate& r) {
    json j;
    j["type1"] = r.type1;
    j["type2"] = r.type2;
    j["risk"] = r.risk;
    j["half_width"] = r.half_width;
    j["trials"] = r.trials;
    j["seed"] = r.seed;
    j["excluded"] = r.excluded;
    return j.dump(2);
}

namespace {

template <typename T>
void write_raw(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    return value;
}

}  // namespace

void write_dataset(const RegressionSample& sample, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidConfig("write_dataset: cannot open '" + path + "'");
    out.write("SPTD", 4);
    write_raw<std::uint32_t>(out, 1);
    const std::uint64_t n = static_cast<std::uint64_t>(sample.x.rows());
    const std::uint64_t p = static_cast<std::uint64_t>(sample.x.cols());
    write_raw(out, n);
    write_raw(out, p);
    for (std::uint64_t i = 0; i < n; ++i) {
        for (std::uint64_t j = 0; j < p; ++j) write_raw<double>(out, sample.x(i, j));
    }
    for (std::uint64_t i = 0; i < n; ++i) write_raw<double>(out, sample.y[i]);
    for (std::uint64_t j = 0; j < p; ++j) write_raw<double>(out, sample.theta_star[j]);
    write_raw<std::uint64_t>(out, sample.seed);
    if (!out) throw InvalidConfig("write_dataset: write failed for '" + path + "'");
}

RegressionSample read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidConfig("read_dataset: cannot open '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "SPTD") {
        throw InvalidConfig("read_dataset: bad magic in '" + path + "'");
    }
    const auto version = read_raw<std::uint32_t>(in);
    if (version != 1) throw InvalidConfig("read_dataset: unsupported version");
    const auto n = read_raw<std::uint64_t>(in);
    const auto p = read_raw<std::uint64_t>(in);
    RegressionSample sample;
    sample.x.resize(static_cast<int>(n), static_cast<int>(p));
    for (std::uint64_t i = 0; i < n; ++i) {
        for (std::uint64_t j = 0; j < p; ++j) sample.x(i, j) = read_raw<double>(in);
    }
    sample.y.resize(static_cast<int>(n));
    for (std::uint64_t i = 0; i < n; ++i) sample.y[i] = read_raw<double>(in);
    sample.theta_star.resize(static_cast<int>(p));
    for (std::uint64_t j = 0; j < p; ++j) sample.theta_star[j] = read_raw<double>(in);
    sample.seed = read_raw<std::uint64_t>(in);
    if (!in) throw InvalidConfig("read_dataset: truncated file '" + path + "'");
    return sample;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw InvalidConfig("cannot open '" + path + "' for writing");
    out << text;
}

}  // namespace sptest
