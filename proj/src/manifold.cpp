#include "grassdm/manifold.hpp"

#include "grassdm/error.hpp"
#include "grassdm/parallel.hpp"
#include "grassdm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>

namespace grassdm {

namespace {

constexpr double kRankTol = 1e-12;
constexpr double kCutLocusTol = 1e-10;

double orthonormality_defect(const Matrix& basis) {
    const Index p = basis.cols();
    return (basis.transpose() * basis - Matrix::Identity(p, p)).cwiseAbs().maxCoeff();
}

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// Flip column pairs so the largest-magnitude entry of each left column is
// positive. Ties resolve to the lowest row index.
void fix_signs(Matrix& left, Matrix& right) {
    for (Index k = 0; k < left.cols(); ++k) {
        Index arg = 0;
        left.col(k).cwiseAbs().maxCoeff(&arg);
        if (left(arg, k) < 0.0) {
            left.col(k) *= -1.0;
            right.col(k) *= -1.0;
        }
    }
}

// Orthonormal basis of span(columns) via Householder QR; nullopt if the
// columns are numerically rank deficient.
std::optional<Matrix> orthonormalize(const Matrix& columns) {
    const Index n = columns.rows();
    const Index p = columns.cols();
    Eigen::HouseholderQR<Matrix> qr(columns);
    const Vector diag = qr.matrixQR().diagonal().cwiseAbs();
    const double scale = columns.cwiseAbs().maxCoeff();
    if (scale == 0.0 || diag.minCoeff() <= 1e-10 * scale * std::sqrt(static_cast<double>(n)))
        return std::nullopt;
    Matrix q = qr.householderQ() * Matrix::Identity(n, p);
    return q;
}

void require_same_point_shape(const GrassmannPoint& a, const GrassmannPoint& b, const char* op) {
    if (a.ambient_dim() != b.ambient_dim() || a.subspace_dim() != b.subspace_dim())
        throw DimensionError(std::string(op) + ": points live on different Grassmannians (" +
                             shape_str(a.basis()) + " vs " + shape_str(b.basis()) + ")");
}

}  // namespace

GrassmannPoint::GrassmannPoint(Matrix basis) : basis_(std::move(basis)) {
    if (basis_.cols() < 1 || basis_.rows() < basis_.cols())
        throw DimensionError("GrassmannPoint: basis must be n x p with 0 < p <= n, got " +
                             shape_str(basis_));
    if (!basis_.allFinite())
        throw DimensionError("GrassmannPoint: basis contains non-finite entries");
    const double defect = orthonormality_defect(basis_);
    if (defect > kOrthonormalTol)
        throw DimensionError("GrassmannPoint: columns not orthonormal (defect " +
                             std::to_string(defect) + ")");
}

GrassmannPoint GrassmannPoint::from_span(const Matrix& columns) {
    if (columns.cols() < 1 || columns.rows() < columns.cols())
        throw DimensionError("from_span: expected n x p with 0 < p <= n, got " +
                             shape_str(columns));
    auto q = orthonormalize(columns);
    if (!q) throw RankDeficient("from_span: columns are linearly dependent");
    return GrassmannPoint(std::move(*q));
}

TangentVector::TangentVector(Matrix matrix, GrassmannPoint base)
    : matrix_(std::move(matrix)), base_(std::move(base)) {
    if (matrix_.rows() != base_.ambient_dim() || matrix_.cols() != base_.subspace_dim())
        throw DimensionError("TangentVector: matrix " + shape_str(matrix_) +
                             " does not match base " + shape_str(base_.basis()));
    const double leak = (matrix_.transpose() * base_.basis()).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, matrix_.cwiseAbs().maxCoeff());
    if (leak > kOrthonormalTol * scale)
        throw DimensionError("TangentVector: matrix is not horizontal at base (|G^T Psi| = " +
                             std::to_string(leak) + ")");
}

TangentVector TangentVector::scaled(double factor) const {
    return TangentVector(matrix_ * factor, base_);
}

std::string_view to_string(MetricKind kind) {
    switch (kind) {
        case MetricKind::Asimov: return "asimov";
        case MetricKind::BinetCauchy: return "binet-cauchy";
        case MetricKind::ArcLength: return "arc-length";
        case MetricKind::Chordal: return "chordal";
        case MetricKind::Procrustes: return "procrustes";
        case MetricKind::Projection: return "projection";
        case MetricKind::Spectral: return "spectral";
    }
    return "unknown";
}

SvdTriplet project_svd(const Matrix& x, Index p) {
    const Index n = x.rows();
    const Index m = x.cols();
    if (p < 1 || p > std::min(n, m))
        throw DimensionError("project_svd: p = " + std::to_string(p) +
                             " outside [1, min(n,m)] for a " + shape_str(x) + " matrix");
    if (!x.allFinite()) throw DimensionError("project_svd: input contains non-finite entries");

    Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sigma = svd.singularValues();
    const double top = sigma(0);
    if (top <= 0.0 || sigma(p - 1) < kRankTol * top)
        throw RankDeficient("project_svd: sigma_" + std::to_string(p) + " = " +
                            std::to_string(sigma(p - 1)) + " below 1e-12 * sigma_1");

    Matrix left = svd.matrixU().leftCols(p);
    Matrix right = svd.matrixV().leftCols(p);
    fix_signs(left, right);
    return SvdTriplet{GrassmannPoint(std::move(left)), sigma.head(p), GrassmannPoint(std::move(right))};
}

namespace {

std::vector<SvdTriplet> unwrap(std::vector<std::optional<SvdTriplet>>&& slots) {
    std::vector<SvdTriplet> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace

std::vector<SvdTriplet> project_all(std::span<const Matrix> data, Index p) {
    std::vector<std::optional<SvdTriplet>> slots(data.size());
    parallel_for(static_cast<Index>(data.size()),
                 [&](Index i) { slots[static_cast<std::size_t>(i)] = project_svd(data[i], p); });
    return unwrap(std::move(slots));
}

std::vector<SvdTriplet> project_all_serial(std::span<const Matrix> data, Index p) {
    std::vector<SvdTriplet> out;
    out.reserve(data.size());
    for (const auto& x : data) out.push_back(project_svd(x, p));
    return out;
}

PrincipalAngleVector principal_angles(const GrassmannPoint& a, const GrassmannPoint& b) {
    if (a.ambient_dim() != b.ambient_dim())
        throw DimensionError("principal_angles: ambient dimensions differ (" +
                             std::to_string(a.ambient_dim()) + " vs " +
                             std::to_string(b.ambient_dim()) + ")");
    const bool a_is_larger = a.subspace_dim() >= b.subspace_dim();
    const Matrix& big = a_is_larger ? a.basis() : b.basis();
    const Matrix& small = a_is_larger ? b.basis() : a.basis();
    const Index p = small.cols();

    const Matrix cross = big.transpose() * small;
    const Vector cosines = Eigen::JacobiSVD<Matrix>(cross).singularValues();  // descending
    const Matrix residual = small - big * cross;
    const Vector sines = Eigen::JacobiSVD<Matrix>(residual).singularValues();  // descending

    PrincipalAngleVector out{Vector(p)};
    for (Index i = 0; i < p; ++i) {
        const double c = std::clamp(cosines(i), 0.0, 1.0);
        if (c * c >= 0.5) {
            const double s = std::clamp(sines(p - 1 - i), 0.0, 1.0);
            out.angles(i) = std::asin(s);
        } else {
            out.angles(i) = std::acos(c);
        }
    }
    std::sort(out.angles.begin(), out.angles.end());
    return out;
}

double distance_from_angles(MetricKind kind, const PrincipalAngleVector& theta) {
    const Vector& t = theta.angles;
    if (t.size() == 0) return 0.0;
    const double largest = t(t.size() - 1);
    switch (kind) {
        case MetricKind::Asimov: return largest;
        case MetricKind::BinetCauchy: {
            double prod = 1.0;
            for (double v : t) prod *= std::cos(v) * std::cos(v);
            return std::sqrt(std::max(0.0, 1.0 - prod));
        }
        case MetricKind::ArcLength: return t.norm();
        case MetricKind::Chordal: return t.array().sin().matrix().norm();
        case MetricKind::Procrustes: return std::sqrt(2.0) * (t.array() * 0.5).sin().matrix().norm();
        case MetricKind::Projection: return std::sin(largest);
        case MetricKind::Spectral: return 2.0 * std::sin(largest / 2.0);
    }
    return 0.0;
}

double distance(MetricKind kind, const GrassmannPoint& a, const GrassmannPoint& b) {
    require_same_point_shape(a, b, "distance");
    return distance_from_angles(kind, principal_angles(a, b));
}

TangentVector log_map(const GrassmannPoint& base, const GrassmannPoint& target) {
    require_same_point_shape(base, target, "log_map");
    const Matrix& psi0 = base.basis();
    const Matrix& psi1 = target.basis();

    const Matrix cross = psi0.transpose() * psi1;
    Eigen::JacobiSVD<Matrix> cross_svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& sigma = cross_svd.singularValues();
    if (sigma.minCoeff() < kCutLocusTol)
        throw SingularProjection("log_map: target is on the cut locus of base (smallest "
                                 "singular value of base^T target is " +
                                 std::to_string(sigma.minCoeff()) + ")");
    const Matrix cross_inv =
        cross_svd.matrixV() * sigma.cwiseInverse().asDiagonal() * cross_svd.matrixU().transpose();

    const Matrix m = (psi1 - psi0 * cross) * cross_inv;
    Eigen::JacobiSVD<Matrix> m_svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector angles = m_svd.singularValues().array().atan().matrix();
    Matrix gamma = m_svd.matrixU() * angles.asDiagonal() * m_svd.matrixV().transpose();
    gamma -= psi0 * (psi0.transpose() * gamma);
    return TangentVector(std::move(gamma), base);
}

GrassmannPoint exp_map(const GrassmannPoint& base, const TangentVector& tangent) {
    require_same_point_shape(base, tangent.base(), "exp_map");
    const Matrix& psi0 = base.basis();
    Matrix gamma = tangent.matrix();
    if (!tangent.base().basis().isApprox(psi0, 1e-14)) {
        // Re-express a tangent given at another representative of the same point.
        const Matrix rot = tangent.base().basis().transpose() * psi0;
        if ((rot.transpose() * rot - Matrix::Identity(rot.cols(), rot.cols())).cwiseAbs().maxCoeff() >
            1e-8)
            throw DimensionError("exp_map: tangent is anchored at a different subspace");
        gamma = gamma * rot;
    }

    Eigen::JacobiSVD<Matrix> svd(gamma, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const Matrix& v = svd.matrixV();
    Matrix out = (psi0 * v * s.array().cos().matrix().asDiagonal() +
                  svd.matrixU() * s.array().sin().matrix().asDiagonal()) *
                 v.transpose();
    if (orthonormality_defect(out) > 1e-13) {
        auto q = orthonormalize(out);
        if (!q) throw ConvergenceFailure("exp_map: geodesic image lost rank");
        out = std::move(*q);
    }
    return GrassmannPoint(std::move(out));
}

GrassmannPoint geodesic(const GrassmannPoint& a, const GrassmannPoint& b, double t) {
    if (!(t >= 0.0 && t <= 1.0))
        throw InvalidArgument("geodesic: t must lie in [0,1], got " + std::to_string(t));
    return exp_map(a, log_map(a, b).scaled(t));
}

GrassmannPoint sample_uniform(Index n, Index p, Seed seed, std::uint64_t index) {
    if (p < 1 || p > n)
        throw DimensionError("sample_uniform: need 0 < p <= n, got n = " + std::to_string(n) +
                             ", p = " + std::to_string(p));
    auto engine = stream_engine(seed, index);
    for (;;) {
        if (auto q = orthonormalize(gaussian_matrix(n, p, engine))) return GrassmannPoint(std::move(*q));
    }
}

GrassmannPoint identity_block(Index n, Index p) {
    if (p < 1 || p > n) throw DimensionError("identity_block: need 0 < p <= n");
    return GrassmannPoint(Matrix::Identity(n, p));
}

}  // namespace grassdm
