#include "grassdm/diffusion.hpp"

#include "grassdm/error.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace grassdm {

namespace {

constexpr double kMinDegree = 1e-14;
constexpr double kEdgeTol = 1e-14;
constexpr double kGapTol = 1e-12;

void require_square(const Matrix& m, const char* op) {
    if (m.rows() != m.cols() || m.rows() == 0)
        throw ShapeMismatch(std::string(op) + ": expected a nonempty square matrix");
}

Index component_count(const Matrix& weights) {
    const Index count = weights.rows();
    const double threshold = kEdgeTol * weights.cwiseAbs().maxCoeff();
    std::vector<char> seen(static_cast<std::size_t>(count), 0);
    std::vector<Index> stack;
    Index components = 0;
    for (Index root = 0; root < count; ++root) {
        if (seen[static_cast<std::size_t>(root)]) continue;
        ++components;
        seen[static_cast<std::size_t>(root)] = 1;
        stack.push_back(root);
        while (!stack.empty()) {
            const Index u = stack.back();
            stack.pop_back();
            for (Index v = 0; v < count; ++v) {
                if (!seen[static_cast<std::size_t>(v)] && weights(u, v) > threshold) {
                    seen[static_cast<std::size_t>(v)] = 1;
                    stack.push_back(v);
                }
            }
        }
    }
    return components;
}

}  // namespace

DegreeVector degree_vector(const Matrix& kernel) {
    require_square(kernel, "degree_vector");
    DegreeVector deg{kernel.rowwise().sum()};
    for (Index i = 0; i < deg.values.size(); ++i)
        if (!(deg.values(i) > kMinDegree))
            throw DisconnectedGraph("degree_vector: sample " + std::to_string(i) + " has degree " +
                                    std::to_string(deg.values(i)));
    return deg;
}

StationaryDistribution stationary_distribution(const DegreeVector& deg) {
    if (deg.values.size() == 0 || (deg.values.array() <= 0.0).any())
        throw DisconnectedGraph("stationary_distribution: degrees must be positive");
    return {deg.values / deg.values.sum()};
}

Matrix normalize_kernel(const Matrix& kernel, const DegreeVector& deg) {
    require_square(kernel, "normalize_kernel");
    if (deg.values.size() != kernel.rows())
        throw ShapeMismatch("normalize_kernel: degree vector length mismatch");
    if ((deg.values.array() <= 0.0).any())
        throw DisconnectedGraph("normalize_kernel: degrees must be positive");
    const Vector inv_sqrt = deg.values.array().rsqrt();
    return inv_sqrt.asDiagonal() * kernel * inv_sqrt.asDiagonal();
}

TransitionMatrix transition_matrix(const Matrix& kappa, int t) {
    require_square(kappa, "transition_matrix");
    if (t < 1) throw InvalidArgument("transition_matrix: t must be a positive integer");
    if ((kappa.array() < 0.0).any())
        throw InvalidArgument("transition_matrix: kernel has negative entries");

    TransitionMatrix walk;
    walk.t = t;
    walk.kappa = kappa;
    walk.row_degree = degree_vector(kappa);
    if (component_count(kappa) > 1)
        throw DisconnectedGraph("transition_matrix: similarity graph has more than one component");

    const Matrix step = walk.row_degree.values.cwiseInverse().asDiagonal() * kappa;
    walk.entries = step;
    for (int k = 1; k < t; ++k) walk.entries = walk.entries * step;
    return walk;
}

DiffusionEmbedding spectral_embedding(const TransitionMatrix& walk, Index q) {
    const Index count = walk.kappa.rows();
    if (q < 1 || q >= count)
        throw DimensionError("spectral_embedding: need 1 <= q < N, got q = " + std::to_string(q) +
                             ", N = " + std::to_string(count));

    // S = D^-1/2 kappa D^-1/2 shares its spectrum with P = D^-1 kappa.
    const Vector inv_sqrt = walk.row_degree.values.array().rsqrt();
    const Matrix sym = inv_sqrt.asDiagonal() * walk.kappa * inv_sqrt.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    if (eig.info() != Eigen::Success)
        throw ConvergenceFailure("spectral_embedding: symmetric eigensolver did not converge");

    const Vector& ascending = eig.eigenvalues();
    DiffusionEmbedding out;
    out.t = walk.t;
    out.q = q;
    out.eigenvalues.resize(q + 1);
    out.eigenvectors.resize(count, q + 1);
    for (Index k = 0; k <= q; ++k) {
        const Index src = count - 1 - k;
        out.eigenvalues(k) = ascending(src);
        Vector psi = inv_sqrt.cwiseProduct(eig.eigenvectors().col(src));
        Index arg = 0;
        psi.cwiseAbs().maxCoeff(&arg);
        if (psi(arg) < 0.0) psi = -psi;
        out.eigenvectors.col(k) = psi;
    }

    out.coordinates.resize(count, q);
    for (Index k = 1; k <= q; ++k)
        out.coordinates.col(k - 1) = std::pow(out.eigenvalues(k), walk.t) * out.eigenvectors.col(k);

    if (q + 1 < count) {
        const double gap = std::abs(ascending(count - 1 - q) - ascending(count - 2 - q));
        if (gap < kGapTol)
            out.warnings.push_back("SpectralGapWarning: |lambda_q - lambda_{q+1}| = " + std::to_string(gap) +
                                   " makes the truncation at q = " + std::to_string(q) + " ill-defined");
    }
    return out;
}

double diffusion_distance_direct(const TransitionMatrix& walk, const DegreeVector& deg, Index i, Index j) {
    const Index count = walk.entries.rows();
    if (i < 0 || j < 0 || i >= count || j >= count)
        throw IndexError("diffusion_distance: index out of range");
    if (deg.values.size() != count) throw ShapeMismatch("diffusion_distance: degree vector length mismatch");
    const Vector diff = (walk.entries.row(i) - walk.entries.row(j)).transpose();
    return std::sqrt((diff.array().square() / deg.values.array()).sum());
}

double diffusion_distance_direct(const TransitionMatrix& walk, Index i, Index j) {
    return diffusion_distance_direct(walk, walk.row_degree, i, j);
}

double diffusion_distance_spectral(const DiffusionEmbedding& embedding, Index i, Index j) {
    const Index count = embedding.eigenvectors.rows();
    if (i < 0 || j < 0 || i >= count || j >= count)
        throw IndexError("diffusion_distance: index out of range");
    double sum = 0.0;
    for (Index k = 0; k < embedding.eigenvalues.size(); ++k) {
        const double w = std::pow(embedding.eigenvalues(k), 2 * embedding.t);
        const double d = embedding.eigenvectors(i, k) - embedding.eigenvectors(j, k);
        sum += w * d * d;
    }
    return std::sqrt(sum);
}

DiffusionEmbedding diffusion_from_kernel(const KernelMatrix& kernel, Index q, int t) {
    const DegreeVector deg = degree_vector(kernel);
    const TransitionMatrix walk = transition_matrix(normalize_kernel(kernel, deg), t);
    return spectral_embedding(walk, q);
}

KernelMatrix grassmannian_kernel(std::span<const SvdTriplet> projections, KernelKind kind,
                                 CompositionRule rule) {
    if (projections.empty()) throw DimensionError("grassmannian_kernel: empty dataset");
    std::vector<GrassmannPoint> left;
    std::vector<GrassmannPoint> right;
    left.reserve(projections.size());
    right.reserve(projections.size());
    for (const auto& tri : projections) {
        left.push_back(tri.left);
        right.push_back(tri.right);
    }
    if (rule == CompositionRule::LeftOnly) return build_kernel_matrix(left, kind);
    if (rule == CompositionRule::RightOnly) return build_kernel_matrix(right, kind);
    return compose_kernels(build_kernel_matrix(left, kind), build_kernel_matrix(right, kind), rule);
}

DiffusionEmbedding grassmannian_diffusion_maps(std::span<const SvdTriplet> projections,
                                               const GdmParams& params) {
    DiffusionEmbedding out = diffusion_from_kernel(
        grassmannian_kernel(projections, params.kernel, params.composition), params.q, params.t);
    out.kernel = std::string(to_string(params.kernel));
    out.composition = std::string(to_string(params.composition));
    out.p = projections.front().left.subspace_dim();
    return out;
}

DiffusionEmbedding grassmannian_diffusion_maps(std::span<const Matrix> data, const GdmParams& params) {
    if (data.empty()) throw DimensionError("grassmannian_diffusion_maps: empty dataset");
    for (const auto& x : data)
        if (x.rows() != data[0].rows() || x.cols() != data[0].cols())
            throw DimensionError("grassmannian_diffusion_maps: samples have mixed shapes");
    if (params.q < 1 || params.q >= static_cast<Index>(data.size()))
        throw DimensionError("grassmannian_diffusion_maps: need 1 <= q < N");
    const auto projections = project_all(data, params.p);
    return grassmannian_diffusion_maps(std::span<const SvdTriplet>(projections), params);
}

DiffusionEmbedding conventional_diffusion_maps(std::span<const Matrix> data, std::optional<double> epsilon,
                                               Index q, int t) {
    if (data.empty()) throw DimensionError("conventional_diffusion_maps: empty dataset");
    if (q < 1 || q >= static_cast<Index>(data.size()))
        throw DimensionError("conventional_diffusion_maps: need 1 <= q < N");
    const double eps = epsilon ? *epsilon : median_bandwidth(data);
    DiffusionEmbedding out = diffusion_from_kernel(build_gaussian_kernel_matrix(data, eps), q, t);
    out.kernel = "gaussian";
    out.composition = "none";
    out.epsilon = eps;
    return out;
}

double condition_number(const TransitionMatrix& walk) {
    const Vector s = Eigen::BDCSVD<Matrix>(walk.entries).singularValues();
    const double smallest = s(s.size() - 1);
    if (smallest <= 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / smallest;
}

}  // namespace grassdm
