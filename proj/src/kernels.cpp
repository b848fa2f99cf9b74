#include "grassdm/kernels.hpp"

#include "grassdm/error.hpp"
#include "grassdm/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <type_traits>

namespace grassdm {

std::string_view to_string(KernelKind kind) {
    return kind == KernelKind::Projection ? "projection" : "binet-cauchy";
}

std::string_view to_string(CompositionRule rule) {
    switch (rule) {
        case CompositionRule::LeftOnly: return "left";
        case CompositionRule::RightOnly: return "right";
        case CompositionRule::Sum: return "sum";
        case CompositionRule::Hadamard: return "hadamard";
    }
    return "unknown";
}

KernelKind parse_kernel_kind(std::string_view name) {
    if (name == "projection") return KernelKind::Projection;
    if (name == "binet-cauchy") return KernelKind::BinetCauchy;
    throw InvalidArgument("unknown kernel '" + std::string(name) + "' (expected projection|binet-cauchy)");
}

CompositionRule parse_composition_rule(std::string_view name) {
    if (name == "left") return CompositionRule::LeftOnly;
    if (name == "right") return CompositionRule::RightOnly;
    if (name == "sum") return CompositionRule::Sum;
    if (name == "hadamard") return CompositionRule::Hadamard;
    throw InvalidArgument("unknown composition '" + std::string(name) +
                          "' (expected left|right|sum|hadamard)");
}

double kernel_value(KernelKind kind, const GrassmannPoint& a, const GrassmannPoint& b) {
    if (a.ambient_dim() != b.ambient_dim() || a.subspace_dim() != b.subspace_dim())
        throw DimensionError("kernel_value: points live on different Grassmannians");
    const Matrix cross = a.basis().transpose() * b.basis();
    if (kind == KernelKind::Projection) return cross.squaredNorm();

    const Vector sigma = Eigen::JacobiSVD<Matrix>(cross).singularValues();
    double prod = 1.0;
    for (double s : sigma) prod *= s * s;
    return prod;
}

double gaussian_kernel(const Matrix& x, const Matrix& y, double epsilon) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw InvalidBandwidth("gaussian_kernel: epsilon must be positive, got " + std::to_string(epsilon));
    if (x.rows() != y.rows() || x.cols() != y.cols())
        throw DimensionError("gaussian_kernel: sample shapes differ");
    return std::exp(-(x - y).squaredNorm() / (4.0 * epsilon));
}

namespace {

template <class Point>
void require_homogeneous(std::span<const Point> points, const char* op) {
    if (points.empty()) throw DimensionError(std::string(op) + ": empty point list");
    for (const auto& pt : points) {
        if constexpr (std::is_same_v<Point, GrassmannPoint>) {
            if (pt.ambient_dim() != points[0].ambient_dim() ||
                pt.subspace_dim() != points[0].subspace_dim())
                throw DimensionError(std::string(op) + ": points have mixed dimensions");
        } else {
            if (pt.rows() != points[0].rows() || pt.cols() != points[0].cols())
                throw DimensionError(std::string(op) + ": samples have mixed shapes");
        }
    }
}

// Fills the upper triangle row by row; row i owns (i, j >= i) and (j, i).
template <class EntryFn>
Matrix pairwise_parallel(Index count, EntryFn&& entry) {
    Matrix out(count, count);
    parallel_for(count, [&](Index i) {
        for (Index j = i; j < count; ++j) out(j, i) = out(i, j) = entry(i, j);
    });
    return out;
}

template <class EntryFn>
Matrix pairwise_serial(Index count, EntryFn&& entry) {
    Matrix out(count, count);
    for (Index i = 0; i < count; ++i)
        for (Index j = i; j < count; ++j) out(j, i) = out(i, j) = entry(i, j);
    return out;
}

}  // namespace

KernelMatrix build_kernel_matrix(std::span<const GrassmannPoint> points, KernelKind kind) {
    require_homogeneous(points, "build_kernel_matrix");
    auto entry = [&](Index i, Index j) { return kernel_value(kind, points[i], points[j]); };
    return {pairwise_parallel(static_cast<Index>(points.size()), entry), std::string(to_string(kind))};
}

KernelMatrix build_kernel_matrix_serial(std::span<const GrassmannPoint> points, KernelKind kind) {
    require_homogeneous(points, "build_kernel_matrix");
    auto entry = [&](Index i, Index j) { return kernel_value(kind, points[i], points[j]); };
    return {pairwise_serial(static_cast<Index>(points.size()), entry), std::string(to_string(kind))};
}

KernelMatrix build_gaussian_kernel_matrix(std::span<const Matrix> data, double epsilon) {
    require_homogeneous(data, "build_gaussian_kernel_matrix");
    auto entry = [&](Index i, Index j) { return gaussian_kernel(data[i], data[j], epsilon); };
    return {pairwise_parallel(static_cast<Index>(data.size()), entry), "gaussian"};
}

KernelMatrix build_gaussian_kernel_matrix_serial(std::span<const Matrix> data, double epsilon) {
    require_homogeneous(data, "build_gaussian_kernel_matrix");
    auto entry = [&](Index i, Index j) { return gaussian_kernel(data[i], data[j], epsilon); };
    return {pairwise_serial(static_cast<Index>(data.size()), entry), "gaussian"};
}

double median_bandwidth(std::span<const Matrix> data) {
    require_homogeneous(data, "median_bandwidth");
    const auto count = static_cast<Index>(data.size());
    if (count < 2) throw InvalidBandwidth("median_bandwidth: need at least two samples");
    std::vector<double> sq;
    sq.reserve(static_cast<std::size_t>(count * (count - 1) / 2));
    for (Index i = 0; i < count; ++i)
        for (Index j = i + 1; j < count; ++j) sq.push_back((data[i] - data[j]).squaredNorm());
    const auto mid = sq.size() / 2;
    std::nth_element(sq.begin(), sq.begin() + static_cast<std::ptrdiff_t>(mid), sq.end());
    double median = sq[mid];
    if (sq.size() % 2 == 0) {
        const double lower = *std::max_element(sq.begin(), sq.begin() + static_cast<std::ptrdiff_t>(mid));
        median = 0.5 * (median + lower);
    }
    if (!(median > 0.0))
        throw InvalidBandwidth("median_bandwidth: all samples coincide; pass epsilon explicitly");
    return median / 4.0;
}

KernelMatrix compose_kernels(const KernelMatrix& left, const KernelMatrix& right, CompositionRule rule) {
    if (left.entries.rows() != right.entries.rows() || left.entries.cols() != right.entries.cols())
        throw ShapeMismatch("compose_kernels: " + std::to_string(left.size()) + " vs " +
                            std::to_string(right.size()));
    switch (rule) {
        case CompositionRule::LeftOnly: return left;
        case CompositionRule::RightOnly: return right;
        case CompositionRule::Sum:
            return {left.entries + right.entries, "sum(" + left.provenance + "," + right.provenance + ")"};
        case CompositionRule::Hadamard:
            return {left.entries.cwiseProduct(right.entries),
                    "hadamard(" + left.provenance + "," + right.provenance + ")"};
    }
    throw InvalidArgument("compose_kernels: unknown rule");
}

double min_eigenvalue(const Matrix& symmetric) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetric, Eigen::EigenvaluesOnly);
    return eig.eigenvalues()(0);
}

double projection_kernel_expectation(Index n, Index p) {
    return static_cast<double>(p * p) / static_cast<double>(n);
}

double binet_cauchy_bound(Index n, Index p) {
    const double nd = static_cast<double>(n);
    if (2 * p < n) return std::pow(static_cast<double>(p) / nd, static_cast<double>(p));
    const double rest = static_cast<double>(n - p);
    return std::pow(rest / nd, rest);
}

namespace {

void validate_mc(Index n, Index p, Index num_samples) {
    if (p < 1 || p >= n)
        throw DimensionError("monte_carlo_offdiag_mean: need 0 < p < n, got n = " + std::to_string(n) +
                             ", p = " + std::to_string(p));
    if (num_samples < 1) throw InvalidArgument("monte_carlo_offdiag_mean: num_samples must be >= 1");
}

KernelStats summarize(KernelKind kind, Index n, Index p, const std::vector<double>& values) {
    KernelStats stats;
    stats.kernel = kind;
    stats.n = n;
    stats.p = p;
    stats.num_samples = static_cast<Index>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    stats.mean_offdiag = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - stats.mean_offdiag) * (v - stats.mean_offdiag);
        stats.variance = ss / static_cast<double>(values.size() - 1);
        stats.std_error = std::sqrt(stats.variance / static_cast<double>(values.size()));
    } else {
        stats.variance = std::numeric_limits<double>::quiet_NaN();
    }
    if (kind == KernelKind::Projection)
        stats.predicted = projection_kernel_expectation(n, p);
    else
        stats.bound = binet_cauchy_bound(n, p);
    return stats;
}

}  // namespace

KernelStats monte_carlo_offdiag_mean(KernelKind kind, Index n, Index p, Index num_samples, Seed seed) {
    validate_mc(n, p, num_samples);
    const GrassmannPoint reference = identity_block(n, p);
    std::vector<double> values(static_cast<std::size_t>(num_samples));
    parallel_for(num_samples, [&](Index i) {
        values[static_cast<std::size_t>(i)] =
            kernel_value(kind, reference, sample_uniform(n, p, seed, static_cast<std::uint64_t>(i)));
    });
    return summarize(kind, n, p, values);
}

KernelStats monte_carlo_offdiag_mean_serial(KernelKind kind, Index n, Index p, Index num_samples,
                                            Seed seed) {
    validate_mc(n, p, num_samples);
    const GrassmannPoint reference = identity_block(n, p);
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(num_samples));
    for (Index i = 0; i < num_samples; ++i)
        values.push_back(kernel_value(kind, reference, sample_uniform(n, p, seed, static_cast<std::uint64_t>(i))));
    return summarize(kind, n, p, values);
}

}  // namespace grassdm
