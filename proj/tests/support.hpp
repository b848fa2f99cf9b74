#pragma once

#include "grassdm/manifold.hpp"
#include "grassdm/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

namespace grassdm::testing {

inline Matrix random_matrix(Index rows, Index cols, Seed seed) {
    auto engine = stream_engine(seed, 0xabcdef);
    return gaussian_matrix(rows, cols, engine);
}

inline Matrix random_orthogonal(Index n, Seed seed) {
    Eigen::HouseholderQR<Matrix> qr(random_matrix(n, n, seed));
    return qr.householderQ() * Matrix::Identity(n, n);
}

/// Principal angles through cos only, as an independent reference.
inline Vector reference_angles(const Matrix& a, const Matrix& b) {
    Eigen::JacobiSVD<Matrix> svd(a.transpose() * b);
    Vector s = svd.singularValues();
    Vector out(s.size());
    for (Index i = 0; i < s.size(); ++i) out(i) = std::acos(std::clamp(s(i), -1.0, 1.0));
    std::sort(out.data(), out.data() + out.size());
    return out;
}

/// Largest principal angle between the spans of two bases.
inline double span_gap(const GrassmannPoint& a, const GrassmannPoint& b) {
    const Matrix pa = a.basis() * a.basis().transpose();
    const Matrix pb = b.basis() * b.basis().transpose();
    // the spectral norm of the projector difference is sin of the largest angle
    Eigen::JacobiSVD<Matrix> svd(pa - pb);
    return std::asin(std::min(1.0, svd.singularValues()(0)));
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

/// Flips each column so its largest-magnitude entry is positive.
inline Matrix fix_column_signs(Matrix m) {
    for (Index j = 0; j < m.cols(); ++j) {
        Index arg = 0;
        m.col(j).cwiseAbs().maxCoeff(&arg);
        if (m(arg, j) < 0) m.col(j) *= -1.0;
    }
    return m;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("grassdm_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    [[nodiscard]] const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace grassdm::testing
