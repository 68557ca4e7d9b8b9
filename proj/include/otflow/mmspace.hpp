#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace otflow {

using SpaceId = std::uint64_t;

enum class Norm { euclidean, linf };

/// Which generator produced a space. Generated spaces know their point
/// coordinates and build geodesic hints on demand instead of storing them.
struct GridSpec {
    enum class Kind { none, circle, box, path };
    Kind kind = Kind::none;
    std::size_t size = 0;  // n for circle/path, side for box
    Norm norm = Norm::euclidean;
};

/// Finite metric measure space (X, d, m) with full-support probability measure.
/// Cheap to copy: the data is shared and immutable.
class MetricMeasureSpace {
public:
    std::size_t n() const { return data_->measure.size(); }
    double dist(std::size_t i, std::size_t j) const { return data_->dist(i, j); }
    const Eigen::MatrixXd& dist_matrix() const { return data_->dist; }
    const std::vector<double>& measure() const { return data_->measure; }
    double mass(std::size_t i) const { return data_->measure[i]; }
    std::optional<double> mesh() const { return data_->mesh; }
    /// Mesh if present, otherwise the smallest positive distance.
    double mesh_or_min_dist() const;
    double diameter() const { return data_->diameter; }
    SpaceId id() const { return data_->id; }
    const GridSpec& grid() const { return data_->grid; }

    bool has_geodesic_hint() const;
    /// Ordered point list from i to j (endpoints included). Requires a hint.
    std::vector<std::size_t> geodesic_hint(std::size_t i, std::size_t j) const;

    /// Generator coordinates: circle -> {i/n, 0}, path -> {i/(n-1), 0}, box -> {x, y}.
    /// Empty for spaces without a generator.
    const std::vector<std::array<double, 2>>& coords() const { return data_->coords; }

    /// Builds the space; validates as make_space does.
    static MetricMeasureSpace create(Eigen::MatrixXd dist, std::vector<double> measure,
                                     std::optional<double> mesh = std::nullopt,
                                     GridSpec grid = {},
                                     std::map<std::pair<std::size_t, std::size_t>,
                                              std::vector<std::size_t>> hints = {});

private:
    struct Data {
        Eigen::MatrixXd dist;
        std::vector<double> measure;
        std::optional<double> mesh;
        double diameter = 0.0;
        SpaceId id = 0;
        GridSpec grid;
        std::vector<std::array<double, 2>> coords;
        std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> hints;
    };
    std::shared_ptr<const Data> data_;
};

/// Validated space from a distance matrix and measure; no geodesic hint.
/// Throws TriangleViolation, AsymmetricDistance, NonNormalizedMeasure, ZeroMass.
MetricMeasureSpace make_space(const Eigen::MatrixXd& dist, const std::vector<double>& measure);

/// n equispaced points on the unit-circumference circle, arc-length metric.
MetricMeasureSpace gen_circle_grid(std::size_t n, int norm_exponent = 2);

/// side x side points in [0,1]^2 with the euclidean or L-infinity metric.
MetricMeasureSpace gen_box_grid(std::size_t side, Norm norm);

/// n equispaced points on [0,1] (1-D path), used by the 1-D transport oracle.
MetricMeasureSpace gen_path_grid(std::size_t n);

void save_space(const MetricMeasureSpace& space, const std::filesystem::path& path);
MetricMeasureSpace load_space(const std::filesystem::path& path);

/// Max over hinted pairs (i,j) and consecutive hint entries (p,q) of
/// (d(i,p) + d(p,q) + d(q,j)) / d(i,j) - 1. Zero for exact geodesics.
double geodesic_hint_excess(const MetricMeasureSpace& space);

Norm parse_norm(const std::string& s);
std::string to_string(Norm norm);

/// Function on the points of a space.
class ScalarField {
public:
    ScalarField() = default;
    ScalarField(const MetricMeasureSpace& space, std::vector<double> values);
    ScalarField(SpaceId space_id, std::vector<double> values);

    SpaceId space_id() const { return space_id_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::vector<double>& values() const { return values_; }

private:
    SpaceId space_id_ = 0;
    std::vector<double> values_;
};

/// Probability density with respect to the reference measure: f >= 0, sum f m = 1.
class DensityField {
public:
    DensityField() = default;
    /// Validates nonnegativity and normalization (1e-10).
    DensityField(const MetricMeasureSpace& space, std::vector<double> values);

    /// Divides by the total mass; rejects negative entries or zero total.
    static DensityField normalized(const MetricMeasureSpace& space, std::vector<double> values);

    SpaceId space_id() const { return space_id_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::vector<double>& values() const { return values_; }
    ScalarField as_scalar() const { return ScalarField(space_id_, values_); }
    /// Masses f_i m_i.
    std::vector<double> masses(const MetricMeasureSpace& space) const;

private:
    SpaceId space_id_ = 0;
    std::vector<double> values_;
};

/// Throws DimensionMismatch if the field does not live on the space.
void require_same_space(const MetricMeasureSpace& space, SpaceId id, std::size_t size,
                        const char* module);

std::vector<double> load_field_values(const std::filesystem::path& path);
void save_field_values(const std::vector<double>& values, const std::filesystem::path& path);

}  // namespace otflow
