#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace otflow {

/// Base of every error raised by the library. `module()` names the
/// component that raised it so the CLI can report "module: message".
class Error : public std::runtime_error {
public:
    Error(std::string module, const std::string& what)
        : std::runtime_error(what), module_(std::move(module)) {}
    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

class TriangleViolation : public Error {
public:
    TriangleViolation(std::size_t i, std::size_t j, std::size_t k)
        : Error("mmspace", "triangle inequality violated: d[" + std::to_string(i) + "][" +
                               std::to_string(j) + "] > d[" + std::to_string(i) + "][" +
                               std::to_string(k) + "] + d[" + std::to_string(k) + "][" +
                               std::to_string(j) + "]"),
          i(i), j(j), k(k) {}
    std::size_t i, j, k;
};

class AsymmetricDistance : public Error {
public:
    AsymmetricDistance(std::size_t i, std::size_t j, const std::string& why)
        : Error("mmspace", "invalid distance entry (" + std::to_string(i) + "," +
                               std::to_string(j) + "): " + why),
          i(i), j(j) {}
    std::size_t i, j;
};

class NonNormalizedMeasure : public Error {
public:
    explicit NonNormalizedMeasure(double total)
        : Error("mmspace", "measure sums to " + std::to_string(total) + ", expected 1"),
          total(total) {}
    double total;
};

class ZeroMass : public Error {
public:
    explicit ZeroMass(std::size_t i)
        : Error("mmspace", "measure has no positive mass at point " + std::to_string(i)), i(i) {}
    std::size_t i;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, std::string field, const std::string& why)
        : Error("io", "line " + std::to_string(line) + " (" + field + "): " + why),
          line(line), field(std::move(field)) {}
    std::size_t line;
    std::string field;
};

class NonPositiveTime : public Error {
public:
    explicit NonPositiveTime(double t)
        : Error("hopflax", "time must be positive, got " + std::to_string(t)), t(t) {}
    double t;
};

class DimensionMismatch : public Error {
public:
    DimensionMismatch(const std::string& module, const std::string& what) : Error(module, what) {}
};

class InvalidArgument : public Error {
public:
    InvalidArgument(const std::string& module, const std::string& what) : Error(module, what) {}
};

class NoConvergence : public Error {
public:
    NoConvergence(std::size_t max_iter, double last_error)
        : Error("transport", "entropic solver did not converge in " + std::to_string(max_iter) +
                                 " iterations (marginal error " + std::to_string(last_error) + ")"),
          max_iter(max_iter), last_error(last_error) {}
    std::size_t max_iter;
    double last_error;
};

class SolverFailure : public Error {
public:
    SolverFailure(const std::string& module, const std::string& what) : Error(module, what) {}
};

class AbsoluteContinuityViolation : public Error {
public:
    explicit AbsoluteContinuityViolation(std::size_t i)
        : Error("transport", "mu has mass at point " + std::to_string(i) +
                                 " outside the first marginal of the plan"),
          i(i) {}
    std::size_t i;
};

class NoGeodesicStructure : public Error {
public:
    NoGeodesicStructure() : Error("transport", "space carries no geodesic hint") {}
};

class ProxNoConvergence : public Error {
public:
    ProxNoConvergence(std::size_t step, double residual)
        : Error("calculus", "proximal solver did not converge (step " + std::to_string(step) +
                                ", residual " + std::to_string(residual) + ")"),
          step(step), residual(residual) {}
    std::size_t step;
    double residual;
};

class InnerSolverFailure : public Error {
public:
    InnerSolverFailure(std::size_t step, double residual)
        : Error("flows", "JKO inner solver failed at step " + std::to_string(step) +
                             " (residual " + std::to_string(residual) + ")"),
          step(step), residual(residual) {}
    std::size_t step;
    double residual;
};

class NotBoundedBelow : public Error {
public:
    explicit NotBoundedBelow(double min_density)
        : Error("diagnostics", "density not bounded away from zero (min " +
                                   std::to_string(min_density) + ")"),
          min_density(min_density) {}
    double min_density;
};

class DegeneratePlan : public Error {
public:
    explicit DegeneratePlan(const std::string& why) : Error("diagnostics", why) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("cli", what) {}
};

class UnknownPreset : public Error {
public:
    explicit UnknownPreset(const std::string& kind) : Error("cli", "unknown preset '" + kind + "'") {}
};

}  // namespace otflow
