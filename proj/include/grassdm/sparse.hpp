#pragma once

#include "grassdm/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace grassdm {

struct ClassBlock {
    std::string label;
    Index begin = 0;  // first column
    Index end = 0;    // one past the last column
};

/// Class-blocked dictionary with unit-norm columns (q x N).
struct SparseDictionary {
    Matrix matrix;
    std::vector<ClassBlock> class_blocks;
    Vector column_norms;             // norms before normalization
    std::vector<Index> source_index;  // column -> row of the input coordinates
    std::vector<std::string> warnings;

    [[nodiscard]] Index atoms() const noexcept { return matrix.cols(); }
    [[nodiscard]] const std::string& label_of(Index column) const;
};

struct SparseSolution {
    Vector coefficients;
    double residual_norm = 0.0;  // ||A c - target||_2
    int iterations = 0;
    bool converged = false;
    double beta = 0.0;  // penalty actually used
};

struct LassoOptions {
    int max_iter = 10000;
    double tol = 1e-10;  // stop when the KKT violation falls below this
};

/// Groups the rows of `coords` (N x q) by label, sorted lexicographically and
/// stable within a class, and scales each column to unit length.
/// Throws EmptyClass for an empty input or label, ZeroColumn for a coordinate
/// vector with norm below 1e-14.
SparseDictionary build_dictionary(const Matrix& coords, std::span<const std::string> labels);

/// argmin ||A c - target||^2 + beta ||c||_1 by FISTA with adaptive restart,
/// followed by an exact solve on the detected support when it verifies and an
/// active-set (feature-sign) search when it does not.
/// Non-convergence is reported through `converged`, never thrown.
SparseSolution solve_l1_unconstrained(const SparseDictionary& dict, const Vector& target, double beta,
                                      const LassoOptions& options = {},
                                      const std::optional<Vector>& warm_start = std::nullopt);

/// argmin ||c||_1 subject to ||A c - target||^2 <= epsilon, by bisection on
/// log(beta) until the residual lands in [0.99 epsilon, epsilon].
/// Returns c = 0 when ||target||^2 <= epsilon; throws Infeasible when the
/// least-squares residual already exceeds epsilon. If the penalty path never
/// gets inside the bound, the minimum-norm least-squares solution is returned
/// unconverged with beta = 0.
SparseSolution solve_l1_constrained(const SparseDictionary& dict, const Vector& target, double epsilon,
                                    const LassoOptions& options = {});

/// ||A (mask_k o c) - target|| for each class block, in block order.
std::vector<double> residuals_per_class(const SparseDictionary& dict, const Vector& coefficients,
                                        const Vector& target);

/// Largest |a_i^T (A c - target) + beta/2 sign(c_i)| over the support and
/// excess of |a_i^T (A c - target)| over beta/2 off it.
double kkt_violation(const SparseDictionary& dict, const Vector& coefficients, const Vector& target,
                     double beta);

}  // namespace grassdm
