#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <string>

namespace otflow {

/// Named residuals against tolerances. `pass` is derived, never stored.
struct DiagnosticsReport {
    std::string name;
    std::map<std::string, double> residuals;
    std::map<std::string, double> tolerances;
    nlohmann::json context = nlohmann::json::object();

    void add(const std::string& label, double residual, double tolerance) {
        residuals[label] = residual;
        tolerances[label] = tolerance;
    }
    /// Every residual is <= its tolerance (NaN fails; a residual without a tolerance fails).
    bool pass() const;

    nlohmann::json to_json() const;
    static DiagnosticsReport from_json(const nlohmann::json& j);
    void write(const std::filesystem::path& path) const;
};

/// JSON number, or "inf"/"-inf"/"nan" strings for non-finite values.
nlohmann::json json_number(double x);
double json_to_double(const nlohmann::json& j);

/// Serialized form used by every artifact: 2-space indent, trailing newline.
std::string dump_json(const nlohmann::json& j);

}  // namespace otflow
