#pragma once

#include "grassdm/manifold.hpp"
#include "grassdm/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace grassdm {

enum class KernelKind { Projection, BinetCauchy };

/// How the left (column-space) and right (row-space) kernels are combined.
enum class CompositionRule { LeftOnly, RightOnly, Sum, Hadamard };

std::string_view to_string(KernelKind kind);
std::string_view to_string(CompositionRule rule);
/// Accepts "projection" / "binet-cauchy". Throws InvalidArgument otherwise.
KernelKind parse_kernel_kind(std::string_view name);
/// Accepts "left" / "right" / "sum" / "hadamard".
CompositionRule parse_composition_rule(std::string_view name);

/// Symmetric similarity matrix over a point collection.
struct KernelMatrix {
    Matrix entries;
    std::string provenance;  // e.g. "projection", "sum(projection,projection)", "gaussian"

    [[nodiscard]] Index size() const noexcept { return entries.rows(); }
};

/// Projection: ||a^T b||_F^2. Binet-Cauchy: det(a^T b)^2, evaluated as the
/// product of squared singular values of a^T b.
double kernel_value(KernelKind kind, const GrassmannPoint& a, const GrassmannPoint& b);

/// exp(-||x - y||_F^2 / (4 epsilon)).
double gaussian_kernel(const Matrix& x, const Matrix& y, double epsilon);

/// Pairwise kernel over `points`. OpenMP-parallel over rows; every entry is
/// computed independently, so the result is bitwise identical to the serial
/// reference for any thread count.
KernelMatrix build_kernel_matrix(std::span<const GrassmannPoint> points, KernelKind kind);
KernelMatrix build_kernel_matrix_serial(std::span<const GrassmannPoint> points, KernelKind kind);

/// Gaussian kernel matrix over flattened samples.
KernelMatrix build_gaussian_kernel_matrix(std::span<const Matrix> data, double epsilon);
KernelMatrix build_gaussian_kernel_matrix_serial(std::span<const Matrix> data, double epsilon);

/// Median pairwise squared Frobenius distance divided by 4.
double median_bandwidth(std::span<const Matrix> data);

KernelMatrix compose_kernels(const KernelMatrix& left, const KernelMatrix& right, CompositionRule rule);

/// Smallest eigenvalue of a symmetric matrix (PSD diagnostics).
double min_eigenvalue(const Matrix& symmetric);

/// Monte Carlo estimate of the mean off-diagonal kernel entry on G(p,n).
struct KernelStats {
    KernelKind kernel = KernelKind::Projection;
    Index n = 0;
    Index p = 0;
    Index num_samples = 0;
    double mean_offdiag = 0.0;
    double variance = 0.0;            // unbiased sample variance; NaN when num_samples == 1
    std::optional<double> std_error;  // absent when num_samples == 1
    std::optional<double> predicted;  // p^2/n for the projection kernel
    std::optional<double> bound;      // upper bound for the Binet-Cauchy kernel
};

/// Expected off-diagonal projection kernel entry, p^2 / n.
double projection_kernel_expectation(Index n, Index p);
/// Upper bound on the expected off-diagonal Binet-Cauchy entry:
/// (p/n)^p for p < n/2, ((n-p)/n)^(n-p) otherwise.
double binet_cauchy_bound(Index n, Index p);

/// Draws `num_samples` uniform points on G(p,n) and averages the kernel
/// against the identity-block reference. Sample i uses stream (seed, i).
KernelStats monte_carlo_offdiag_mean(KernelKind kind, Index n, Index p, Index num_samples, Seed seed);
KernelStats monte_carlo_offdiag_mean_serial(KernelKind kind, Index n, Index p, Index num_samples,
                                            Seed seed);

}  // namespace grassdm
