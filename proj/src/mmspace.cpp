#include "otflow/mmspace.hpp"

#include "otflow/error.hpp"
#include "otflow/rng.hpp"
#include "otflow/util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace otflow {

namespace {

constexpr std::size_t kFullTriangleScan = 200;

void validate(const Eigen::MatrixXd& d, const std::vector<double>& m) {
    const std::size_t n = m.size();
    if (static_cast<std::size_t>(d.rows()) != n || static_cast<std::size_t>(d.cols()) != n)
        throw DimensionMismatch("mmspace", "distance matrix is " + std::to_string(d.rows()) + "x" +
                                               std::to_string(d.cols()) + " but measure has " +
                                               std::to_string(n) + " entries");
    if (n == 0) throw DimensionMismatch("mmspace", "empty space");
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double v = d(i, j);
            if (!std::isfinite(v)) throw AsymmetricDistance(i, j, "not finite");
            if (v != d(j, i)) throw AsymmetricDistance(i, j, "d[i][j] != d[j][i]");
            if (i == j && v != 0.0) throw AsymmetricDistance(i, j, "nonzero diagonal");
            if (i != j && !(v > 0.0)) throw AsymmetricDistance(i, j, "distinct points at distance 0");
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!(m[i] > 0.0) || !std::isfinite(m[i])) throw ZeroMass(i);
    double total = std::accumulate(m.begin(), m.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12) throw NonNormalizedMeasure(total);

    const double slack = 1e-12 * d.maxCoeff();
    auto check = [&](std::size_t i, std::size_t j, std::size_t k) {
        if (d(i, j) > d(i, k) + d(k, j) + slack) throw TriangleViolation(i, j, k);
    };
    if (n <= kFullTriangleScan) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                for (std::size_t k = 0; k < n; ++k)
                    if (k != i && k != j) check(i, j, k);
    } else {
        SplitMix64 rng(0x5eed);
        for (std::size_t s = 0; s < kFullTriangleScan * kFullTriangleScan * kFullTriangleScan; ++s) {
            std::size_t i = rng.below(n), j = rng.below(n), k = rng.below(n);
            if (i != j && k != i && k != j) check(i, j, k);
        }
    }
}

std::vector<std::size_t> circle_hint(std::size_t n, std::size_t i, std::size_t j) {
    std::size_t fwd = (j + n - i) % n, bwd = n - fwd;
    std::vector<std::size_t> a, b;
    for (std::size_t s = 0; s <= fwd; ++s) a.push_back((i + s) % n);
    for (std::size_t s = 0; s <= bwd; ++s) b.push_back((i + n - s) % n);
    if (fwd == 0) return {i};
    if (fwd < bwd) return a;
    if (bwd < fwd) return b;
    auto interior_min = [](const std::vector<std::size_t>& p) {
        return *std::min_element(p.begin() + 1, p.end() - 1);
    };
    return interior_min(a) < interior_min(b) ? a : b;
}

// Rounded straight line between two lattice points; .5 rounds down.
std::vector<std::size_t> lattice_line(std::size_t side, std::size_t i, std::size_t j) {
    long x0 = i % side, y0 = i / side, x1 = j % side, y1 = j / side;
    long steps = std::max(std::labs(x1 - x0), std::labs(y1 - y0));
    std::vector<std::size_t> out;
    if (steps == 0) return {i};
    auto snap = [](long a, long b, long k, long L) {
        // round(a + k (b - a) / L) with ties to the lower value, in integers
        long num = a * L + k * (b - a);  // value * L
        long fl = num >= 0 ? num / L : -((-num + L - 1) / L);
        long rem = num - fl * L;
        return 2 * rem > L ? fl + 1 : fl;
    };
    for (long k = 0; k <= steps; ++k) {
        long x = snap(x0, x1, k, steps), y = snap(y0, y1, k, steps);
        out.push_back(static_cast<std::size_t>(y * static_cast<long>(side) + x));
    }
    return out;
}

}  // namespace

double MetricMeasureSpace::mesh_or_min_dist() const {
    if (data_->mesh) return *data_->mesh;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n(); ++i)
        for (std::size_t j = 0; j < n(); ++j)
            if (i != j) best = std::min(best, dist(i, j));
    return std::isfinite(best) ? best : 1.0;
}

bool MetricMeasureSpace::has_geodesic_hint() const {
    return data_->grid.kind != GridSpec::Kind::none || !data_->hints.empty();
}

std::vector<std::size_t> MetricMeasureSpace::geodesic_hint(std::size_t i, std::size_t j) const {
    const auto& g = data_->grid;
    switch (g.kind) {
        case GridSpec::Kind::circle: return circle_hint(g.size, i, j);
        case GridSpec::Kind::box: return lattice_line(g.size, i, j);
        case GridSpec::Kind::path: {
            std::vector<std::size_t> out;
            if (i <= j)
                for (std::size_t k = i; k <= j; ++k) out.push_back(k);
            else
                for (std::size_t k = i + 1; k-- > j;) out.push_back(k);
            return out;
        }
        case GridSpec::Kind::none: break;
    }
    if (i == j) return {i};
    auto it = data_->hints.find({i, j});
    if (it != data_->hints.end()) return it->second;
    auto rev = data_->hints.find({j, i});
    if (rev != data_->hints.end()) return {rev->second.rbegin(), rev->second.rend()};
    if (data_->hints.empty()) throw NoGeodesicStructure();
    return {i, j};
}

MetricMeasureSpace MetricMeasureSpace::create(
    Eigen::MatrixXd dist, std::vector<double> measure, std::optional<double> mesh, GridSpec grid,
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> hints) {
    validate(dist, measure);
    if (mesh && !(*mesh > 0.0)) throw InvalidArgument("mmspace", "mesh must be positive");
    const std::size_t n = measure.size();
    for (const auto& [key, path] : hints) {
        if (key.first >= n || key.second >= n || path.empty() || path.front() != key.first ||
            path.back() != key.second)
            throw InvalidArgument("mmspace", "geodesic hint for (" + std::to_string(key.first) +
                                                 "," + std::to_string(key.second) +
                                                 ") must run from i to j");
        for (auto p : path)
            if (p >= n) throw InvalidArgument("mmspace", "geodesic hint index out of range");
    }
    auto data = std::make_shared<Data>();
    data->diameter = dist.maxCoeff();
    std::uint64_t h = fnv1a(&n, sizeof n);
    h = fnv1a(dist.data(), sizeof(double) * n * n, h);
    h = fnv1a(measure.data(), sizeof(double) * n, h);
    data->id = h;
    data->dist = std::move(dist);
    data->measure = std::move(measure);
    data->mesh = mesh;
    data->grid = grid;
    data->hints = std::move(hints);
    switch (grid.kind) {
        case GridSpec::Kind::circle:
            for (std::size_t i = 0; i < n; ++i) data->coords.push_back({double(i) / double(n), 0.0});
            break;
        case GridSpec::Kind::path:
            for (std::size_t i = 0; i < n; ++i)
                data->coords.push_back({double(i) / double(n - 1), 0.0});
            break;
        case GridSpec::Kind::box:
            for (std::size_t i = 0; i < n; ++i)
                data->coords.push_back({double(i % grid.size) / double(grid.size - 1),
                                        double(i / grid.size) / double(grid.size - 1)});
            break;
        case GridSpec::Kind::none: break;
    }
    MetricMeasureSpace s;
    s.data_ = std::move(data);
    return s;
}

MetricMeasureSpace make_space(const Eigen::MatrixXd& dist, const std::vector<double>& measure) {
    return MetricMeasureSpace::create(dist, measure);
}

MetricMeasureSpace gen_circle_grid(std::size_t n, int norm_exponent) {
    if (n < 3) throw InvalidArgument("mmspace", "circle grid needs n >= 3");
    if (norm_exponent != 2) throw InvalidArgument("mmspace", "circle grid supports norm exponent 2 only");
    Eigen::MatrixXd d(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            std::size_t k = i > j ? i - j : j - i;
            d(i, j) = double(std::min(k, n - k)) / double(n);
        }
    return MetricMeasureSpace::create(std::move(d), std::vector<double>(n, 1.0 / double(n)),
                                      1.0 / double(n), {GridSpec::Kind::circle, n, Norm::euclidean});
}

MetricMeasureSpace gen_box_grid(std::size_t side, Norm norm) {
    if (side < 2) throw InvalidArgument("mmspace", "box grid needs side >= 2");
    const std::size_t n = side * side;
    const double scale = double(side - 1);
    Eigen::MatrixXd d(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double a = std::fabs(double(i % side) - double(j % side));
            double b = std::fabs(double(i / side) - double(j / side));
            d(i, j) = (norm == Norm::linf ? std::max(a, b) : std::sqrt(a * a + b * b)) / scale;
        }
    // 1/n does not sum to exactly 1 for every n; put the residual on the last point
    std::vector<double> m(n, 1.0 / double(n));
    m.back() = 1.0 - std::accumulate(m.begin(), m.end() - 1, 0.0);
    return MetricMeasureSpace::create(std::move(d), std::move(m), 1.0 / scale,
                                      {GridSpec::Kind::box, side, norm});
}

MetricMeasureSpace gen_path_grid(std::size_t n) {
    if (n < 2) throw InvalidArgument("mmspace", "path grid needs n >= 2");
    Eigen::MatrixXd d(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            d(i, j) = double(i > j ? i - j : j - i) / double(n - 1);
    std::vector<double> m(n, 1.0 / double(n));
    m.back() = 1.0 - std::accumulate(m.begin(), m.end() - 1, 0.0);
    return MetricMeasureSpace::create(std::move(d), std::move(m), 1.0 / double(n - 1),
                                      {GridSpec::Kind::path, n, Norm::euclidean});
}

double geodesic_hint_excess(const MetricMeasureSpace& s) {
    if (!s.has_geodesic_hint()) throw NoGeodesicStructure();
    double worst = 0.0;
    for (std::size_t i = 0; i < s.n(); ++i)
        for (std::size_t j = 0; j < s.n(); ++j) {
            if (i == j) continue;
            auto p = s.geodesic_hint(i, j);
            for (std::size_t k = 0; k + 1 < p.size(); ++k) {
                double len = s.dist(i, p[k]) + s.dist(p[k], p[k + 1]) + s.dist(p[k + 1], j);
                worst = std::max(worst, len / s.dist(i, j) - 1.0);
            }
        }
    return worst;
}

Norm parse_norm(const std::string& s) {
    if (s == "euclidean" || s == "l2") return Norm::euclidean;
    if (s == "linf") return Norm::linf;
    throw InvalidArgument("mmspace", "unknown norm '" + s + "'");
}

std::string to_string(Norm norm) { return norm == Norm::linf ? "linf" : "euclidean"; }

// ---------------------------------------------------------------------------
// space file

void save_space(const MetricMeasureSpace& s, const std::filesystem::path& path) {
    std::ostringstream out;
    const std::size_t n = s.n();
    out << "otflow-space 1\n";
    out << "n " << n << "\n";
    out << "mesh " << (s.mesh() ? format_double(*s.mesh()) : std::string("none")) << "\n";
    const auto& g = s.grid();
    if (g.kind == GridSpec::Kind::circle) out << "generator circle " << g.size << "\n";
    if (g.kind == GridSpec::Kind::path) out << "generator path " << g.size << "\n";
    if (g.kind == GridSpec::Kind::box) out << "generator box " << g.size << " " << to_string(g.norm) << "\n";
    out << "dist\n";
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) out << (j ? " " : "") << format_double(s.dist(i, j));
        out << "\n";
    }
    out << "measure\n";
    for (std::size_t i = 0; i < n; ++i) out << format_double(s.mass(i)) << "\n";
    if (g.kind == GridSpec::Kind::none && s.has_geodesic_hint()) {
        out << "geodesic\n";
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                auto p = s.geodesic_hint(i, j);
                out << i << " " << j << " \"";
                for (std::size_t k = 0; k < p.size(); ++k) out << (k ? "," : "") << p[k];
                out << "\"\n";
            }
    }
    write_file_atomic(path, out.str());
}

namespace {

struct LineReader {
    std::vector<std::string> lines;
    std::size_t pos = 0;  // index of next line

    bool next(std::string& line, std::size_t& lineno) {
        while (pos < lines.size()) {
            std::string l = lines[pos++];
            auto hash = l.find('#');
            if (hash != std::string::npos) l.erase(hash);
            auto b = l.find_first_not_of(" \t\r");
            if (b == std::string::npos) continue;
            auto e = l.find_last_not_of(" \t\r");
            line = l.substr(b, e - b + 1);
            lineno = pos;
            return true;
        }
        lineno = lines.size() + 1;
        return false;
    }
};

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

std::size_t parse_index(const std::string& tok, std::size_t lineno, const char* field) {
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
        throw ParseError(lineno, field, "expected a nonnegative integer, got '" + tok + "'");
    return std::stoull(tok);
}

}  // namespace

MetricMeasureSpace load_space(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(0, "file", "cannot open " + path.string());
    LineReader r;
    for (std::string l; std::getline(in, l);) r.lines.push_back(l);

    std::string line;
    std::size_t no = 0;
    if (!r.next(line, no) || split_ws(line) != std::vector<std::string>{"otflow-space", "1"})
        throw ParseError(no, "header", "expected 'otflow-space 1'");
    if (!r.next(line, no)) throw ParseError(no, "n", "missing point count");
    auto toks = split_ws(line);
    if (toks.size() != 2 || toks[0] != "n") throw ParseError(no, "n", "expected 'n <count>'");
    const std::size_t n = parse_index(toks[1], no, "n");
    if (n == 0) throw ParseError(no, "n", "point count must be positive");

    std::optional<double> mesh;
    GridSpec grid;
    bool have_dist = false, have_measure = false;
    Eigen::MatrixXd d(n, n);
    std::vector<double> m(n);
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> hints;

    while (r.next(line, no)) {
        toks = split_ws(line);
        const std::string& key = toks[0];
        if (key == "mesh") {
            if (toks.size() != 2) throw ParseError(no, "mesh", "expected 'mesh <h>|none'");
            if (toks[1] != "none") {
                double h;
                if (!parse_double(toks[1], h) || !(h > 0)) throw ParseError(no, "mesh", "bad mesh value");
                mesh = h;
            }
        } else if (key == "generator") {
            if (toks.size() < 3) throw ParseError(no, "generator", "expected kind and size");
            grid.size = parse_index(toks[2], no, "generator");
            if (toks[1] == "circle") grid.kind = GridSpec::Kind::circle;
            else if (toks[1] == "path") grid.kind = GridSpec::Kind::path;
            else if (toks[1] == "box") {
                grid.kind = GridSpec::Kind::box;
                if (toks.size() != 4) throw ParseError(no, "generator", "box needs a norm");
                try {
                    grid.norm = parse_norm(toks[3]);
                } catch (const Error&) {
                    throw ParseError(no, "generator", "unknown norm '" + toks[3] + "'");
                }
            } else
                throw ParseError(no, "generator", "unknown generator '" + toks[1] + "'");
            std::size_t expect = grid.kind == GridSpec::Kind::box ? grid.size * grid.size : grid.size;
            if (expect != n) throw ParseError(no, "generator", "generator size does not match n");
        } else if (key == "dist") {
            for (std::size_t i = 0; i < n; ++i) {
                if (!r.next(line, no)) throw ParseError(no, "dist", "expected " + std::to_string(n) + " rows");
                auto row = split_ws(line);
                if (row.size() != n)
                    throw ParseError(no, "dist", "row " + std::to_string(i) + " has " +
                                                     std::to_string(row.size()) + " entries, expected " +
                                                     std::to_string(n));
                for (std::size_t j = 0; j < n; ++j)
                    if (!parse_double(row[j], d(i, j)))
                        throw ParseError(no, "dist", "bad number '" + row[j] + "'");
            }
            have_dist = true;
        } else if (key == "measure") {
            for (std::size_t i = 0; i < n; ++i) {
                if (!r.next(line, no)) throw ParseError(no, "measure", "expected " + std::to_string(n) + " values");
                auto vals = split_ws(line);
                if (vals.size() != 1 || !parse_double(vals[0], m[i]))
                    throw ParseError(no, "measure", "expected one number per line");
            }
            have_measure = true;
        } else if (key == "geodesic") {
            while (r.next(line, no)) {
                auto q1 = line.find('"'), q2 = line.rfind('"');
                if (q1 == std::string::npos || q2 == q1) throw ParseError(no, "geodesic", "expected i j \"p1,p2,...\"");
                auto ij = split_ws(line.substr(0, q1));
                if (ij.size() != 2) throw ParseError(no, "geodesic", "expected i j \"p1,p2,...\"");
                std::size_t i = parse_index(ij[0], no, "geodesic"), j = parse_index(ij[1], no, "geodesic");
                std::vector<std::size_t> pts;
                std::stringstream list(line.substr(q1 + 1, q2 - q1 - 1));
                for (std::string tok; std::getline(list, tok, ',');) pts.push_back(parse_index(tok, no, "geodesic"));
                hints[{i, j}] = std::move(pts);
            }
        } else {
            throw ParseError(no, key, "unknown section");
        }
    }
    if (!have_dist) throw ParseError(no, "dist", "missing dist section");
    if (!have_measure) throw ParseError(no, "measure", "missing measure section");
    return MetricMeasureSpace::create(std::move(d), std::move(m), mesh, grid, std::move(hints));
}

// ---------------------------------------------------------------------------
// fields

ScalarField::ScalarField(const MetricMeasureSpace& space, std::vector<double> values)
    : ScalarField(space.id(), std::move(values)) {
    if (values_.size() != space.n())
        throw DimensionMismatch("mmspace", "field has " + std::to_string(values_.size()) +
                                               " values, space has " + std::to_string(space.n()));
}

ScalarField::ScalarField(SpaceId space_id, std::vector<double> values)
    : space_id_(space_id), values_(std::move(values)) {
    for (std::size_t i = 0; i < values_.size(); ++i)
        if (!std::isfinite(values_[i]))
            throw InvalidArgument("mmspace", "field value at " + std::to_string(i) + " is not finite");
}

DensityField::DensityField(const MetricMeasureSpace& space, std::vector<double> values)
    : space_id_(space.id()), values_(std::move(values)) {
    if (values_.size() != space.n())
        throw DimensionMismatch("mmspace", "density has " + std::to_string(values_.size()) +
                                               " values, space has " + std::to_string(space.n()));
    double total = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i]) || values_[i] < 0.0)
            throw InvalidArgument("mmspace", "density value at " + std::to_string(i) + " is negative or not finite");
        total += values_[i] * space.mass(i);
    }
    if (std::abs(total - 1.0) > 1e-10)
        throw InvalidArgument("mmspace", "density integrates to " + format_double(total) + ", expected 1");
}

DensityField DensityField::normalized(const MetricMeasureSpace& space, std::vector<double> values) {
    if (values.size() != space.n()) throw DimensionMismatch("mmspace", "density size mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]) || values[i] < 0.0)
            throw InvalidArgument("mmspace", "density value at " + std::to_string(i) + " is negative or not finite");
        total += values[i] * space.mass(i);
    }
    if (!(total > 0.0)) throw InvalidArgument("mmspace", "density has zero total mass");
    for (auto& v : values) v /= total;
    return DensityField(space, std::move(values));
}

std::vector<double> DensityField::masses(const MetricMeasureSpace& space) const {
    std::vector<double> out(values_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = values_[i] * space.mass(i);
    return out;
}

void require_same_space(const MetricMeasureSpace& space, SpaceId id, std::size_t size, const char* module) {
    if (id != space.id() || size != space.n())
        throw DimensionMismatch(module, "field does not belong to this space");
}

std::vector<double> load_field_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(0, "file", "cannot open " + path.string());
    std::vector<double> out;
    std::size_t no = 0;
    for (std::string line; std::getline(in, line);) {
        ++no;
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#') continue;
        auto e = line.find_last_not_of(" \t\r");
        double v;
        if (!parse_double(line.substr(b, e - b + 1), v)) throw ParseError(no, "value", "bad number '" + line + "'");
        out.push_back(v);
    }
    return out;
}

void save_field_values(const std::vector<double>& values, const std::filesystem::path& path) {
    std::string out;
    for (double v : values) out += format_double(v) + "\n";
    write_file_atomic(path, out);
}

}  // namespace otflow
