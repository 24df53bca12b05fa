#include "prorl/lhs.hpp"

#include <algorithm>
#include <numeric>

#include "prorl/math_util.hpp"

namespace prorl {

LhsDim LhsDim::uniform(std::string name, double lo, double hi) {
    LhsDim d;
    d.kind = Kind::Uniform;
    d.name = std::move(name);
    d.lo = lo;
    d.hi = hi;
    return d;
}

LhsDim LhsDim::gaussian(std::string name, double mean, double std,
                        double trunc_lo, double trunc_hi) {
    LhsDim d;
    d.kind = Kind::Gaussian;
    d.name = std::move(name);
    d.mean = mean;
    d.std = std;
    d.trunc_lo = trunc_lo;
    d.trunc_hi = trunc_hi;
    return d;
}

LhsDim LhsDim::discrete(std::string name, std::vector<double> values) {
    LhsDim d;
    d.kind = Kind::Discrete;
    d.name = std::move(name);
    d.values = std::move(values);
    return d;
}

void LhsPlan::validate() const {
    require(n >= 1, "LhsPlan: n must be >= 1");
    require(!dims.empty(), "LhsPlan: need at least one dimension");
    for (const auto& d : dims) {
        switch (d.kind) {
        case LhsDim::Kind::Uniform:
            require(d.lo < d.hi, "LhsPlan: uniform lo < hi required: " + d.name);
            break;
        case LhsDim::Kind::Gaussian:
            require(d.std >= 0.0, "LhsPlan: gaussian std must be >= 0: " + d.name);
            require(d.trunc_lo < d.trunc_hi,
                    "LhsPlan: truncation lo < hi required: " + d.name);
            break;
        case LhsDim::Kind::Discrete:
            require(!d.values.empty(), "LhsPlan: discrete values empty: " + d.name);
            break;
        }
    }
}

double lhs_dim_value(const LhsDim& dim, double p) {
    p = clamp(p, 1e-15, 1.0 - 1e-15);
    switch (dim.kind) {
    case LhsDim::Kind::Uniform:
        return dim.lo + p * (dim.hi - dim.lo);
    case LhsDim::Kind::Gaussian: {
        if (dim.std == 0.0) return dim.mean;
        // Equiprobable strata of the truncated distribution.
        const double f_lo = std::isinf(dim.trunc_lo)
                                ? 0.0
                                : normal_cdf((dim.trunc_lo - dim.mean) / dim.std);
        const double f_hi = std::isinf(dim.trunc_hi)
                                ? 1.0
                                : normal_cdf((dim.trunc_hi - dim.mean) / dim.std);
        const double f = f_lo + p * (f_hi - f_lo);
        return dim.mean + dim.std * normal_quantile(clamp(f, 1e-15, 1.0 - 1e-15));
    }
    case LhsDim::Kind::Discrete: {
        const auto m = dim.values.size();
        const auto idx = std::min(static_cast<std::size_t>(p * static_cast<double>(m)),
                                  m - 1);
        return dim.values[idx];
    }
    }
    throw ContractViolation("lhs_dim_value: unreachable");
}

Eigen::MatrixXd lhs_sample(const LhsPlan& plan, Rng& rng) {
    plan.validate();
    const int n = plan.n;
    const int d = static_cast<int>(plan.dims.size());
    Eigen::MatrixXd samples(n, d);

    std::vector<int> perm(n);
    for (int j = 0; j < d; ++j) {
        std::iota(perm.begin(), perm.end(), 0);
        shuffle(perm, rng);
        for (int i = 0; i < n; ++i) {
            const double p = (static_cast<double>(perm[i]) + rng.uniform()) /
                             static_cast<double>(n);
            samples(i, j) = lhs_dim_value(plan.dims[j], p);
        }
    }
    return samples;
}

double discretize_action(double u) {
    require(u >= 0.0 && u < 1.0, "discretize_action: u must be in [0, 1)");
    return u < 0.5 ? -1.0 : 1.0;
}

} // namespace prorl
