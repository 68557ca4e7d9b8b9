#include "otflow/presets.hpp"

#include "otflow/error.hpp"

#include <cmath>
#include <numbers>

namespace otflow {

namespace {

double param(const PresetParams& p, const char* key, double fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

double coord(const MetricMeasureSpace& space, std::size_t i) {
    if (!space.coords().empty()) return space.coords()[i][0];
    return double(i) / double(space.n());
}

std::size_t nearest(const MetricMeasureSpace& space, double x) {
    std::size_t best = 0;
    double bd = std::abs(coord(space, 0) - x);
    for (std::size_t i = 1; i < space.n(); ++i) {
        double d = std::abs(coord(space, i) - x);
        if (d < bd) bd = d, best = i;
    }
    return best;
}

}  // namespace

ScalarField preset_field(const std::string& kind, const PresetParams& params, const MetricMeasureSpace& space) {
    const std::size_t n = space.n();
    std::vector<double> v(n, 0.0);
    if (kind == "constant") {
        v.assign(n, param(params, "value", 1.0));
    } else if (kind == "cosine_mode") {
        const double k = param(params, "k", 1.0), off = param(params, "offset", 1.0),
                     amp = param(params, "amplitude", 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            double c = std::cos(2.0 * std::numbers::pi * k * coord(space, i));
            // snap the rounding noise of cos at quarter turns
            if (std::abs(c) < 1e-15) c = 0.0;
            v[i] = off + amp * c;
        }
    } else if (kind == "bump") {
        const double w = param(params, "width", 0.1);
        if (!(w > 0.0)) throw InvalidArgument("cli", "bump width must be positive");
        const std::size_t c = nearest(space, param(params, "center", 0.5));
        for (std::size_t i = 0; i < n; ++i) {
            double d = space.dist(i, c);
            v[i] = std::exp(-d * d / (2.0 * w * w));
        }
    } else if (kind == "ramp") {
        for (std::size_t i = 0; i < n; ++i) v[i] = coord(space, i);
    } else if (kind == "indicator") {
        const double lo = param(params, "lo", 0.0), hi = param(params, "hi", 0.5);
        for (std::size_t i = 0; i < n; ++i) {
            double x = coord(space, i);
            v[i] = (x >= lo && x < hi) ? 1.0 : 0.0;
        }
    } else if (kind == "dirac_like") {
        const double at = param(params, "at", 0.0);
        if (at < 0.0 || at >= double(n) || at != std::floor(at))
            throw InvalidArgument("cli", "dirac_like index out of range");
        v[std::size_t(at)] = 1.0 / space.mass(std::size_t(at));
    } else {
        throw UnknownPreset(kind);
    }
    return ScalarField(space, std::move(v));
}

DensityField preset_density(const std::string& kind, const PresetParams& params, const MetricMeasureSpace& space) {
    std::vector<double> v = preset_field(kind, params, space).values();
    double total = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] < 0.0) throw InvalidArgument("cli", "preset '" + kind + "' is negative somewhere");
        total += v[i] * space.mass(i);
    }
    if (!(total > 0.0)) throw InvalidArgument("cli", "preset '" + kind + "' has zero mass");
    for (auto& x : v) x /= total;
    // the heaviest point absorbs the rounding, so tails stay nonnegative
    std::size_t big = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] * space.mass(i) > v[big] * space.mass(big)) big = i;
    double rest = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (i != big) rest += v[i] * space.mass(i);
    v[big] = (1.0 - rest) / space.mass(big);
    return DensityField(space, std::move(v));
}

}  // namespace otflow
