#pragma once

#include "grassdm/kernels.hpp"
#include "grassdm/manifold.hpp"
#include "grassdm/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace grassdm {

/// Row sums of a similarity matrix; all strictly positive.
struct DegreeVector {
    Vector values;
};

struct StationaryDistribution {
    Vector probabilities;
};

/// Row-stochastic random-walk matrix raised to the Markov time `t`.
///
/// The walk is P = diag(row_degree)^-1 * kappa with kappa symmetric; both are
/// kept so the spectrum can be computed from the symmetric conjugate.
struct TransitionMatrix {
    Matrix entries;  // P^t
    int t = 1;
    Matrix kappa;           // symmetric normalized kernel
    DegreeVector row_degree;  // row sums of kappa (stationary weights of P)
};

/// Spectral embedding of a transition matrix.
///
/// `eigenvalues` are those of the one-step walk P, descending with
/// eigenvalues(0) == 1; `eigenvectors` are the matching right eigenvectors,
/// orthonormal in L2(row_degree) and sign-fixed (largest-magnitude entry
/// positive). `coordinates` drop the trivial pair:
/// coordinates(j, k-1) = eigenvalues(k)^t * eigenvectors(j, k).
struct DiffusionEmbedding {
    Vector eigenvalues;
    Matrix eigenvectors;
    Matrix coordinates;
    int t = 1;
    Index q = 0;
    std::vector<std::string> warnings;

    // provenance, filled by the pipelines
    std::string kernel;
    std::string composition;
    Index p = 0;
    std::optional<double> epsilon;

    [[nodiscard]] Index size() const noexcept { return coordinates.rows(); }
};

/// Row sums; throws DisconnectedGraph if any degree is <= 1e-14.
DegreeVector degree_vector(const Matrix& kernel);
inline DegreeVector degree_vector(const KernelMatrix& kernel) { return degree_vector(kernel.entries); }

StationaryDistribution stationary_distribution(const DegreeVector& deg);

/// kappa_ij = k_ij / sqrt(D_ii D_jj).
Matrix normalize_kernel(const Matrix& kernel, const DegreeVector& deg);
inline Matrix normalize_kernel(const KernelMatrix& kernel, const DegreeVector& deg) {
    return normalize_kernel(kernel.entries, deg);
}

/// Row-normalizes kappa and raises it to the power t. Throws
/// DisconnectedGraph if a row sum vanishes or the similarity graph (edges
/// with kappa_ij > 1e-14 * max kappa) has more than one component.
TransitionMatrix transition_matrix(const Matrix& kappa, int t);

/// Top q+1 eigenpairs of the walk (q < N). Appends a SpectralGapWarning to
/// `warnings` when |lambda_q - lambda_{q+1}| < 1e-12.
DiffusionEmbedding spectral_embedding(const TransitionMatrix& walk, Index q);

/// Direct form: sqrt(sum_k (P^t_ik - P^t_jk)^2 / deg_k).
double diffusion_distance_direct(const TransitionMatrix& walk, const DegreeVector& deg, Index i, Index j);
/// Direct form weighted by the walk's own stationary degrees.
double diffusion_distance_direct(const TransitionMatrix& walk, Index i, Index j);
/// Spectral form: sqrt(sum_k lambda_k^(2t) (psi_ik - psi_jk)^2) over the
/// eigenpairs stored in the embedding. Matches the direct form when the
/// embedding holds the full spectrum (q = N - 1).
double diffusion_distance_spectral(const DiffusionEmbedding& embedding, Index i, Index j);

/// Kernel -> degrees -> normalization -> walk -> embedding.
DiffusionEmbedding diffusion_from_kernel(const KernelMatrix& kernel, Index q, int t);

struct GdmParams {
    Index p = 1;
    Index q = 3;
    int t = 1;
    KernelKind kernel = KernelKind::Projection;
    CompositionRule composition = CompositionRule::Sum;
};

/// Composed left/right Grassmannian kernel over precomputed projections.
KernelMatrix grassmannian_kernel(std::span<const SvdTriplet> projections, KernelKind kind,
                                 CompositionRule rule);

/// Grassmannian diffusion maps over raw samples.
DiffusionEmbedding grassmannian_diffusion_maps(std::span<const Matrix> data, const GdmParams& params);
/// Same, reusing per-sample projections (all must share p).
DiffusionEmbedding grassmannian_diffusion_maps(std::span<const SvdTriplet> projections,
                                               const GdmParams& params);

/// Conventional diffusion maps with a Gaussian kernel on flattened samples.
/// When epsilon is absent the median heuristic is used and recorded.
DiffusionEmbedding conventional_diffusion_maps(std::span<const Matrix> data, std::optional<double> epsilon,
                                               Index q, int t);

/// 2-norm condition number of P^t (ratio of extreme singular values).
double condition_number(const TransitionMatrix& walk);

}  // namespace grassdm
