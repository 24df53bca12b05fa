#ifndef PRORL_KDE_HPP
#define PRORL_KDE_HPP

#include <Eigen/Dense>

// Gaussian kernel density estimation. Multivariate densities use a product
// kernel with one Silverman bandwidth per dimension; the most-probable-state
// query is the sample with the highest leave-in density.

namespace prorl {

// 1.06 * sigma-hat * k^(-1/5) with sigma-hat the (n-1)-normalized sample
// standard deviation, floored at 1e-9 * max(1, sigma-hat) so degenerate
// samples keep a positive bandwidth. Requires k >= 2.
double silverman_bandwidth(const Eigen::VectorXd& samples);

// Per-column Silverman bandwidths of a k x d sample matrix.
Eigen::VectorXd silverman_bandwidths(const Eigen::MatrixXd& samples);

// Density of the 1-D estimate at x.
double kde_density_1d(const Eigen::VectorXd& samples, double h, double x);

// Density of the d-dimensional product-kernel estimate at a point.
double kde_density(const Eigen::MatrixXd& samples, const Eigen::VectorXd& h,
                   const Eigen::VectorXd& x);

// Leave-in density of the estimate at each of its own samples, computed with
// one k x k Gram product so the pairwise pass vectorizes.
Eigen::VectorXd kde_self_densities(const Eigen::MatrixXd& samples,
                                   const Eigen::VectorXd& h);

// Index of the sample with the highest leave-in density; ties resolve to the
// lowest index.
int kde_mode_index(const Eigen::MatrixXd& samples, const Eigen::VectorXd& h);

// Most probable realization under Silverman bandwidths; a single sample is
// its own mode.
int most_probable_state(const Eigen::MatrixXd& samples);

// Pr(X >= tau) under the 1-D estimate: mean_j Phi((x_j - tau) / h).
double kde_tail_prob(const Eigen::VectorXd& samples, double h, double tau);

} // namespace prorl

#endif
