#include "prorl/kde.hpp"

#include <cmath>

#include "prorl/common.hpp"
#include "prorl/math_util.hpp"

namespace prorl {

double silverman_bandwidth(const Eigen::VectorXd& samples) {
    const auto k = samples.size();
    require(k >= 2, "silverman_bandwidth: need at least two samples");
    const double mean = samples.mean();
    const double sigma = std::sqrt((samples.array() - mean).square().sum() /
                                   static_cast<double>(k - 1));
    const double h = 1.06 * sigma * std::pow(static_cast<double>(k), -0.2);
    const double floor = 1e-9 * std::max(1.0, sigma);
    return std::max(h, floor);
}

Eigen::VectorXd silverman_bandwidths(const Eigen::MatrixXd& samples) {
    Eigen::VectorXd h(samples.cols());
    for (Eigen::Index c = 0; c < samples.cols(); ++c) {
        h[c] = silverman_bandwidth(samples.col(c));
    }
    return h;
}

double kde_density_1d(const Eigen::VectorXd& samples, double h, double x) {
    require(h > 0.0, "kde_density_1d: bandwidth must be positive");
    const double inv_h = 1.0 / h;
    const Eigen::ArrayXd u = (samples.array() - x) * inv_h;
    const double norm = inv_h / (std::sqrt(2.0 * kPi) * static_cast<double>(samples.size()));
    return norm * (-0.5 * u.square()).exp().sum();
}

double kde_density(const Eigen::MatrixXd& samples, const Eigen::VectorXd& h,
                   const Eigen::VectorXd& x) {
    require(samples.cols() == h.size() && samples.cols() == x.size(),
            "kde_density: dimension mismatch");
    require((h.array() > 0.0).all(), "kde_density: bandwidths must be positive");
    const auto k = samples.rows();
    const auto d = samples.cols();
    Eigen::ArrayXd sq = Eigen::ArrayXd::Zero(k);
    for (Eigen::Index c = 0; c < d; ++c) {
        sq += ((samples.col(c).array() - x[c]) / h[c]).square();
    }
    double norm = 1.0 / static_cast<double>(k);
    for (Eigen::Index c = 0; c < d; ++c) norm /= std::sqrt(2.0 * kPi) * h[c];
    return norm * (-0.5 * sq).exp().sum();
}

Eigen::VectorXd kde_self_densities(const Eigen::MatrixXd& samples,
                                   const Eigen::VectorXd& h) {
    require(samples.cols() == h.size(), "kde_self_densities: dimension mismatch");
    require((h.array() > 0.0).all(), "kde_self_densities: bandwidths must be positive");
    const auto k = samples.rows();
    const auto d = samples.cols();

    // Scale each coordinate by 1/h so pairwise squared distances reduce to a
    // single Gram product Z Z^T.
    const Eigen::MatrixXd z =
        samples.array().rowwise() / h.transpose().array();
    const Eigen::VectorXd sq_norms = z.rowwise().squaredNorm();
    Eigen::MatrixXd dist2(k, k);
    dist2.noalias() = -2.0 * (z * z.transpose());
    dist2.colwise() += sq_norms;
    dist2.rowwise() += sq_norms.transpose();

    double norm = 1.0 / static_cast<double>(k);
    for (Eigen::Index c = 0; c < d; ++c) norm /= std::sqrt(2.0 * kPi) * h[c];
    // Cancellation can push diagonal entries slightly negative; the in-place
    // assignment keeps the kernel evaluation on the vectorized path.
    dist2.array() = (-0.5 * dist2.array().max(0.0)).exp();
    return norm * dist2.rowwise().sum();
}

int kde_mode_index(const Eigen::MatrixXd& samples, const Eigen::VectorXd& h) {
    const Eigen::VectorXd density = kde_self_densities(samples, h);
    int best = 0;
    for (int i = 1; i < static_cast<int>(density.size()); ++i) {
        if (density[i] > density[best]) best = i;
    }
    return best;
}

int most_probable_state(const Eigen::MatrixXd& samples) {
    require(samples.rows() >= 1, "most_probable_state: empty realization set");
    if (samples.rows() == 1) return 0;
    return kde_mode_index(samples, silverman_bandwidths(samples));
}

double kde_tail_prob(const Eigen::VectorXd& samples, double h, double tau) {
    require(h > 0.0, "kde_tail_prob: bandwidth must be positive");
    const double inv_h = 1.0 / h;
    double acc = 0.0;
    for (Eigen::Index j = 0; j < samples.size(); ++j) {
        acc += normal_cdf((samples[j] - tau) * inv_h);
    }
    return acc / static_cast<double>(samples.size());
}

} // namespace prorl
