#pragma once

#include "grassdm/types.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace grassdm {

/// Orthonormality tolerance enforced on every GrassmannPoint basis.
inline constexpr double kOrthonormalTol = 1e-10;

/// A point on G(p,n), held through an orthonormal n x p representative.
///
/// Two points compare equal as subspaces when all principal angles between
/// them vanish; the stored basis is one member of the equivalence class.
class GrassmannPoint {
public:
    /// Wraps an orthonormal basis. Throws DimensionError if the columns are
    /// not orthonormal within kOrthonormalTol or the shape is empty/wide.
    explicit GrassmannPoint(Matrix basis);

    /// Span of an arbitrary full-column-rank matrix (orthonormalized by QR).
    static GrassmannPoint from_span(const Matrix& columns);

    [[nodiscard]] const Matrix& basis() const noexcept { return basis_; }
    [[nodiscard]] Index ambient_dim() const noexcept { return basis_.rows(); }
    [[nodiscard]] Index subspace_dim() const noexcept { return basis_.cols(); }

private:
    Matrix basis_;
};

/// Thin SVD restricted to the p dominant singular triplets.
struct SvdTriplet {
    GrassmannPoint left;
    Vector singular_values;  // descending, nonnegative
    GrassmannPoint right;
};

/// Principal angles in radians, ascending in [0, pi/2].
struct PrincipalAngleVector {
    Vector angles;

    [[nodiscard]] Index size() const noexcept { return angles.size(); }
    [[nodiscard]] double operator[](Index i) const { return angles(i); }
};

/// Tangent vector at `base`: matrix()^T * base.basis() == 0.
class TangentVector {
public:
    TangentVector(Matrix matrix, GrassmannPoint base);

    [[nodiscard]] const Matrix& matrix() const noexcept { return matrix_; }
    [[nodiscard]] const GrassmannPoint& base() const noexcept { return base_; }

    [[nodiscard]] TangentVector scaled(double factor) const;

private:
    Matrix matrix_;
    GrassmannPoint base_;
};

enum class MetricKind { Asimov, BinetCauchy, ArcLength, Chordal, Procrustes, Projection, Spectral };

inline constexpr MetricKind kAllMetricKinds[] = {
    MetricKind::Asimov,     MetricKind::BinetCauchy, MetricKind::ArcLength, MetricKind::Chordal,
    MetricKind::Procrustes, MetricKind::Projection,  MetricKind::Spectral,
};

std::string_view to_string(MetricKind kind);

/// Pointwise projection of a data matrix onto G(p,n) x G(p,m).
///
/// Singular vectors are sign-normalized so the largest-magnitude entry of
/// every left vector is positive; right vectors flip with their partners.
/// Throws DimensionError if p > min(n,m) and RankDeficient if
/// sigma_p < 1e-12 * sigma_1.
SvdTriplet project_svd(const Matrix& x, Index p);

/// project_svd over a whole dataset. OpenMP-parallel over samples.
std::vector<SvdTriplet> project_all(std::span<const Matrix> data, Index p);
/// Serial reference for project_all.
std::vector<SvdTriplet> project_all_serial(std::span<const Matrix> data, Index p);

/// Principal angles between span(a) and span(b); p = min(dim a, dim b).
///
/// Cosines come from the singular values of a^T b (clamped to [0,1]);
/// angles below pi/4 are taken from the sines, i.e. the singular values of
/// the component of the lower-dimensional basis orthogonal to the other,
/// which keeps near-zero angles accurate to machine precision.
PrincipalAngleVector principal_angles(const GrassmannPoint& a, const GrassmannPoint& b);

/// Table-1 metric evaluated on a given angle vector.
double distance_from_angles(MetricKind kind, const PrincipalAngleVector& theta);

/// Subspace distance of the given kind. Requires equal n and p.
double distance(MetricKind kind, const GrassmannPoint& a, const GrassmannPoint& b);

/// Logarithmic map log_base(target). Throws SingularProjection when the
/// smallest singular value of base^T target is below 1e-10 (cut locus).
TangentVector log_map(const GrassmannPoint& base, const GrassmannPoint& target);

/// Exponential map exp_base(tangent), i.e. the geodesic from base at t = 1.
GrassmannPoint exp_map(const GrassmannPoint& base, const TangentVector& tangent);

/// Point at parameter t in [0,1] on the geodesic from a to b.
GrassmannPoint geodesic(const GrassmannPoint& a, const GrassmannPoint& b, double t);

/// Draw from the invariant measure on G(p,n) by orthonormalizing an n x p
/// standard Gaussian matrix. `index` selects an independent sub-stream.
GrassmannPoint sample_uniform(Index n, Index p, Seed seed, std::uint64_t index = 0);

/// The identity-block point [I_p; 0] on G(p,n).
GrassmannPoint identity_block(Index n, Index p);

}  // namespace grassdm
