#include "cestgm/json_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cestgm {

using nlohmann::json;

namespace {

NodeFamily parse_family(const json& j) {
    if (j.is_string()) {
        return NodeFamily(family_kind_from_name(j.get<std::string>()));
    }
    if (j.is_object()) {
        if (!j.contains("kind")) throw ParseError("family object missing \"kind\"");
        const FamilyKind kind = family_kind_from_name(j["kind"].get<std::string>());
        if (kind == FamilyKind::Binomial) {
            if (!j.contains("n_trials")) throw ParseError("binomial family missing \"n_trials\"");
            return NodeFamily(kind, j["n_trials"].get<int>());
        }
        return NodeFamily(kind);
    }
    throw ParseError("family entry must be a string or an object");
}

Mat parse_matrix(const json& j, const std::string& context) {
    if (!j.is_array() || j.empty()) throw ParseError(context + ": matrix must be a nonempty array");
    const std::size_t rows = j.size();
    if (!j[0].is_array()) throw ParseError(context + ": matrix rows must be arrays");
    const std::size_t cols = j[0].size();
    Mat m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].size() != cols) {
            throw ParseError(context + ": ragged matrix");
        }
        for (std::size_t k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
}

}  // namespace

ModelSpec parse_model_spec(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("model spec is not valid JSON: ") + e.what());
    }
    try {
        ModelSpec spec;
        if (!j.contains("p") || !j.contains("families") || !j.contains("theta")) {
            throw ParseError("model spec needs \"p\", \"families\" and \"theta\"");
        }
        spec.p = j["p"].get<int>();
        spec.d = j.value("d", 1);
        for (const auto& f : j["families"]) spec.families.push_back(parse_family(f));
        for (const auto& t : j["theta"]) {
            Vec v(t.size());
            for (std::size_t i = 0; i < t.size(); ++i) v[i] = t[i].get<double>();
            spec.theta.push_back(std::move(v));
        }
        if (j.contains("phi")) {
            for (const auto& e : j["phi"]) {
                if (!e.contains("lag") || !e.contains("a") || !e.contains("b") ||
                    !e.contains("matrix")) {
                    throw ParseError("phi entry needs \"lag\", \"a\", \"b\", \"matrix\"");
                }
                const int lag = e["lag"].get<int>();
                const int a = e["a"].get<int>() - 1;  // files are 1-indexed
                const int b = e["b"].get<int>() - 1;
                std::ostringstream ctx;
                ctx << "phi(lag=" << lag << ", a=" << (a + 1) << ", b=" << (b + 1) << ")";
                Mat m = parse_matrix(e["matrix"], ctx.str());
                const auto key = std::make_tuple(lag, a, b);
                if (spec.phi.count(key)) {
                    throw ValidationError("duplicate phi entry for " + ctx.str());
                }
                spec.phi.emplace(key, std::move(m));
            }
        }
        return spec;
    } catch (const json::exception& e) {
        throw ParseError(std::string("model spec has wrong field types: ") + e.what());
    }
}

ModelSpec load_model_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot read model spec file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_model_spec(ss.str());
}

std::string model_spec_to_json(const ModelSpec& spec) {
    json j;
    j["p"] = spec.p;
    j["d"] = spec.d;
    j["families"] = json::array();
    for (const auto& f : spec.families) {
        if (f.kind() == FamilyKind::Binomial) {
            j["families"].push_back({{"kind", "binomial"}, {"n_trials", f.n_trials()}});
        } else {
            j["families"].push_back(family_kind_name(f.kind()));
        }
    }
    j["theta"] = json::array();
    for (const auto& t : spec.theta) {
        json row = json::array();
        for (int i = 0; i < t.size(); ++i) row.push_back(t[i]);
        j["theta"].push_back(row);
    }
    j["phi"] = json::array();
    for (const auto& [key, m] : spec.phi) {
        json rows = json::array();
        for (int i = 0; i < m.rows(); ++i) {
            json row = json::array();
            for (int k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
            rows.push_back(row);
        }
        j["phi"].push_back({{"lag", std::get<0>(key)},
                            {"a", std::get<1>(key) + 1},
                            {"b", std::get<2>(key) + 1},
                            {"matrix", rows}});
    }
    return j.dump(2);
}

}  // namespace cestgm
