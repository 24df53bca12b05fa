#ifndef PRORL_LHS_HPP
#define PRORL_LHS_HPP

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <vector>

#include "prorl/common.hpp"
#include "prorl/rng.hpp"

// Latin hypercube sampling: each dimension is cut into n equiprobable strata
// and every stratum receives exactly one sample, with stratum assignments
// permuted independently per dimension.

namespace prorl {

struct LhsDim {
    enum class Kind { Uniform, Gaussian, Discrete };

    Kind kind = Kind::Uniform;
    std::string name;

    // Uniform
    double lo = 0.0;
    double hi = 1.0;

    // Gaussian (equiprobable strata via the truncated inverse CDF)
    double mean = 0.0;
    double std = 1.0;
    double trunc_lo = -std::numeric_limits<double>::infinity();
    double trunc_hi = std::numeric_limits<double>::infinity();

    // Discrete (equal-probability bucketing over the listed values)
    std::vector<double> values;

    static LhsDim uniform(std::string name, double lo, double hi);
    static LhsDim gaussian(std::string name, double mean, double std,
                           double trunc_lo, double trunc_hi);
    static LhsDim discrete(std::string name, std::vector<double> values);
};

struct LhsPlan {
    int n = 1;
    std::vector<LhsDim> dims;

    void validate() const;
};

// n x d sample matrix. Row i of dimension j lies in stratum perm_j(i).
Eigen::MatrixXd lhs_sample(const LhsPlan& plan, Rng& rng);

// Maps a unit draw to the CartPole direction: u < 0.5 -> -1, else +1.
double discretize_action(double u);

// Value of dimension `dim` at unit position p in (0, 1); exposed so tests can
// recover stratum indices from sampled values.
double lhs_dim_value(const LhsDim& dim, double p);

} // namespace prorl

#endif
