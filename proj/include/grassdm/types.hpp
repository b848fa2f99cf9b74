#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace grassdm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Seed for reproducible random streams.
using Seed = std::uint64_t;

}  // namespace grassdm
