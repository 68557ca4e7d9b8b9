#include "otflow/report.hpp"

#include "otflow/util.hpp"

#include <cmath>
#include <limits>

namespace otflow {

bool DiagnosticsReport::pass() const {
    for (const auto& [label, r] : residuals) {
        auto it = tolerances.find(label);
        if (it == tolerances.end() || !(r <= it->second)) return false;
    }
    return true;
}

nlohmann::json json_number(double x) {
    if (std::isfinite(x)) return x;
    return format_double(x);
}

double json_to_double(const nlohmann::json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw std::invalid_argument("not a number: " + j.dump());
}

nlohmann::json DiagnosticsReport::to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["residuals"] = nlohmann::json::object();
    for (const auto& [k, v] : residuals) j["residuals"][k] = json_number(v);
    j["tolerances"] = nlohmann::json::object();
    for (const auto& [k, v] : tolerances) j["tolerances"][k] = json_number(v);
    j["pass"] = pass();
    j["context"] = context;
    return j;
}

DiagnosticsReport DiagnosticsReport::from_json(const nlohmann::json& j) {
    DiagnosticsReport r;
    r.name = j.at("name").get<std::string>();
    for (const auto& [k, v] : j.at("residuals").items()) r.residuals[k] = json_to_double(v);
    for (const auto& [k, v] : j.at("tolerances").items()) r.tolerances[k] = json_to_double(v);
    if (j.contains("context")) r.context = j.at("context");
    return r;
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

void DiagnosticsReport::write(const std::filesystem::path& path) const {
    write_file_atomic(path, dump_json(to_json()));
}

}  // namespace otflow
