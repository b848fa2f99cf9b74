#include "grassdm/datagen.hpp"

#include "grassdm/error.hpp"
#include "grassdm/rng.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace grassdm {

SphereConesDataset gen_sphere_cones(Index count, Seed seed) {
    if (count < 1) throw InvalidArgument("gen_sphere_cones: need at least one sample");
    SphereConesDataset out;
    out.points.resize(count, 3);
    out.magnitudes.resize(count);
    out.theta.resize(count);
    out.phi.resize(count);
    for (Index i = 0; i < count; ++i) {
        auto engine = stream_engine(seed, static_cast<std::uint64_t>(i));
        const double theta = 2.0 * std::numbers::pi * uniform01(engine);
        const double r = 2.0 * uniform01(engine);
        const double c = std::cos(theta);
        const double phi = std::asin(c * c);
        out.theta(i) = theta;
        out.phi(i) = phi;
        out.magnitudes(i) = r;
        out.points(i, 0) = r * std::cos(phi) * std::cos(theta);
        out.points(i, 1) = r * std::cos(phi) * std::sin(theta);
        out.points(i, 2) = r * std::sin(phi);
    }
    return out;
}

std::vector<Matrix> sphere_samples(const SphereConesDataset& data) {
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(data.points.rows()));
    for (Index i = 0; i < data.points.rows(); ++i) out.emplace_back(data.points.row(i).transpose());
    return out;
}

int max_l_shift(Index n, Index p) { return static_cast<int>(n / 2 + 1 - p); }

Matrix random_field_basis(Index n, Index p, int t_shift, int l_shift) {
    if (n < 2 || p < 1 || p > n / 2)
        throw DimensionError("random_field_basis: need 1 <= p <= floor(n/2), got n = " + std::to_string(n) +
                             ", p = " + std::to_string(p));
    Matrix u(n, p);
    const double scale = std::sqrt(2.0 / static_cast<double>(n));
    for (Index j = 0; j < p; ++j) {
        const auto freq = static_cast<std::int64_t>(j + l_shift);
        for (Index i = 0; i < n; ++i) {
            // reduce the phase exactly before the cosine
            const std::int64_t k = ((freq * (static_cast<std::int64_t>(i) - t_shift)) % n + n) % n;
            u(i, j) = scale * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
        }
    }
    return u;
}

Matrix random_field_sample(Index n, const Vector& a, int t_shift, int l_shift) {
    const Matrix u = random_field_basis(n, a.size(), t_shift, l_shift);
    return u * a.asDiagonal() * u.transpose();
}

RandomFieldDataset gen_random_field(Index count, Index n, Index m, Index p, Seed seed,
                                    const RandomFieldOptions& options) {
    if (count < 1) throw InvalidArgument("gen_random_field: need at least one sample");
    if (n != m) throw DimensionError("gen_random_field: fields are square, got n != m");
    if (p < 1 || p > n / 2)
        throw DimensionError("gen_random_field: need 1 <= p <= floor(n/2), got p = " + std::to_string(p));
    const int l_max = max_l_shift(n, p);
    if (options.l_choices) {
        if (options.l_choices->empty()) throw InvalidArgument("gen_random_field: empty L list");
        for (int l : *options.l_choices)
            if (l < 1 || l > l_max)
                throw InvalidArgument("gen_random_field: L = " + std::to_string(l) + " outside [1, " +
                                      std::to_string(l_max) + "]");
    }

    RandomFieldDataset out;
    out.samples.reserve(static_cast<std::size_t>(count));
    out.a_diagonals.resize(count, p);
    for (Index s = 0; s < count; ++s) {
        auto engine = stream_engine(seed, static_cast<std::uint64_t>(s));
        const auto t_shift = static_cast<int>(uniform_int(0, n - 1, engine));
        int l_shift = 0;
        if (options.l_choices) {
            const auto& ls = *options.l_choices;
            l_shift = ls[static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(ls.size()) - 1, engine))];
        } else {
            l_shift = static_cast<int>(uniform_int(1, l_max, engine));
        }
        Vector a(p);
        for (Index j = 0; j < p; ++j) a(j) = 1.0 - uniform01(engine);
        out.t_values.push_back(t_shift);
        out.l_values.push_back(l_shift);
        out.a_diagonals.row(s) = a.transpose();
        out.samples.push_back(random_field_sample(n, a, t_shift, l_shift));
    }
    return out;
}

}  // namespace grassdm
