#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rasgw/rng.hpp"

namespace rasgw {

/// Raised when an input file cannot be interpreted; the message names the line.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// n points in R^d with uniform mass 1/n. Immutable after construction.
class PointCloud {
public:
    PointCloud(std::vector<double> points, std::size_t n, std::size_t d)
        : points_(std::move(points)), n_(n), d_(d) {
        if (n_ < 2) throw std::domain_error("PointCloud: need at least 2 points");
        if (d_ < 1) throw std::domain_error("PointCloud: dimension must be >= 1");
        if (points_.size() != n_ * d_)
            throw std::invalid_argument("PointCloud: size mismatch");
        for (double v : points_)
            if (!std::isfinite(v))
                throw std::domain_error("PointCloud: non-finite coordinate");
    }

    std::size_t size() const { return n_; }
    std::size_t dim() const { return d_; }
    std::span<const double> row(std::size_t i) const {
        return {points_.data() + i * d_, d_};
    }
    double operator()(std::size_t i, std::size_t c) const { return points_[i * d_ + c]; }
    const std::vector<double>& data() const { return points_; }

private:
    std::vector<double> points_;
    std::size_t n_;
    std::size_t d_;
};

/// Appends zero coordinates so the cloud lives in R^target_d; pairwise
/// distances are untouched.
inline PointCloud pad_uplift(const PointCloud& cloud, std::size_t target_d) {
    if (target_d < cloud.dim())
        throw std::domain_error("pad_uplift: target dimension below cloud dimension");
    if (target_d == cloud.dim()) return cloud;
    std::vector<double> out(cloud.size() * target_d, 0.0);
    for (std::size_t i = 0; i < cloud.size(); ++i)
        for (std::size_t c = 0; c < cloud.dim(); ++c)
            out[i * target_d + c] = cloud(i, c);
    return PointCloud(std::move(out), cloud.size(), target_d);
}

/// Subtracts the column means.
inline PointCloud center(const PointCloud& cloud) {
    const std::size_t n = cloud.size(), d = cloud.dim();
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) mean[c] += cloud(i, c);
    for (double& m : mean) m /= static_cast<double>(n);
    std::vector<double> out(n * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) out[i * d + c] = cloud(i, c) - mean[c];
    return PointCloud(std::move(out), n, d);
}

inline PointCloud apply_translation(const PointCloud& cloud, std::span<const double> t) {
    if (t.size() != cloud.dim())
        throw std::invalid_argument("apply_translation: vector dimension mismatch");
    for (double v : t)
        if (!std::isfinite(v)) throw std::domain_error("apply_translation: non-finite shift");
    std::vector<double> out(cloud.data());
    const std::size_t d = cloud.dim();
    for (std::size_t i = 0; i < cloud.size(); ++i)
        for (std::size_t c = 0; c < d; ++c) out[i * d + c] += t[c];
    return PointCloud(std::move(out), cloud.size(), d);
}

inline PointCloud apply_negation(const PointCloud& cloud) {
    std::vector<double> out(cloud.data());
    for (double& v : out) v = -v;
    return PointCloud(std::move(out), cloud.size(), cloud.dim());
}

/// Euclidean distance between rows i and j.
inline double point_distance(const PointCloud& cloud, std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t c = 0; c < cloud.dim(); ++c) {
        const double diff = cloud(i, c) - cloud(j, c);
        s += diff * diff;
    }
    return std::sqrt(s);
}

/// Dense n*n distance matrix, row-major.
inline std::vector<double> distance_matrix(const PointCloud& cloud) {
    const std::size_t n = cloud.size();
    std::vector<double> out(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dij = point_distance(cloud, i, j);
            out[i * n + j] = dij;
            out[j * n + i] = dij;
        }
    return out;
}

/// Uniform subsample of m rows without replacement (partial Fisher-Yates).
inline PointCloud subsample(const PointCloud& cloud, std::size_t m, RngStream rng) {
    if (m < 2 || m > cloud.size())
        throw std::domain_error("subsample: count out of range");
    std::vector<std::size_t> idx(cloud.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + rng.uniform_index(idx.size() - i);
        std::swap(idx[i], idx[j]);
    }
    std::vector<double> out(m * cloud.dim());
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t c = 0; c < cloud.dim(); ++c)
            out[i * cloud.dim() + c] = cloud(idx[i], c);
    return PointCloud(std::move(out), m, cloud.dim());
}

namespace detail {

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// Reads a point cloud from CSV with header x0,...,x{d-1}.
inline PointCloud load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::size_t d = 0;
    {
        std::stringstream header(line);
        std::string cell;
        while (std::getline(header, cell, ',')) {
            const std::string expected = "x" + std::to_string(d);
            if (cell != expected)
                throw ParseError(path + ": line 1: bad header column '" + cell +
                                 "', expected '" + expected + "'");
            ++d;
        }
    }
    if (d == 0) throw ParseError(path + ": line 1: empty header");

    std::vector<double> values;
    std::size_t n = 0;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t fields = 0;
        const char* p = line.data();
        const char* end = p + line.size();
        for (;;) {
            const char* comma = p;
            while (comma != end && *comma != ',') ++comma;
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(p, comma, v);
            if (ec != std::errc() || ptr != comma || !std::isfinite(v))
                throw ParseError(path + ": line " + std::to_string(lineno) +
                                 ": bad numeric field '" + std::string(p, comma) + "'");
            values.push_back(v);
            ++fields;
            if (comma == end) break;
            p = comma + 1;
        }
        if (fields != d)
            throw ParseError(path + ": line " + std::to_string(lineno) + ": expected " +
                             std::to_string(d) + " fields, got " + std::to_string(fields));
        ++n;
    }
    if (n < 2) throw std::domain_error(path + ": need at least 2 data rows");
    return PointCloud(std::move(values), n, d);
}

/// Writes CSV at 17 significant digits; load_csv(save_csv(x)) is bit-exact.
inline void save_csv(const PointCloud& cloud, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open file for writing: " + path);
    for (std::size_t c = 0; c < cloud.dim(); ++c) {
        if (c) out << ',';
        out << 'x' << c;
    }
    out << '\n';
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (std::size_t c = 0; c < cloud.dim(); ++c) {
            if (c) out << ',';
            out << detail::format_g17(cloud(i, c));
        }
        out << '\n';
    }
    if (!out) throw ParseError("write failed: " + path);
}

}  // namespace rasgw
