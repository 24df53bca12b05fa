#ifndef PRORL_DYNAMISM_HPP
#define PRORL_DYNAMISM_HPP

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <vector>

#include "prorl/common.hpp"
#include "prorl/rng.hpp"

// The dynamism vector phi bundles everything that makes one realized system
// differ from the nominal one: physical parameters (M), ambient conditions
// (E), observation-noise scales (O) and the control-noise scale (C). Each
// entry is an independent Gaussian, optionally truncated.

namespace prorl {

enum class DynamismGroup { Physical, Ambient, Observation, Control };

struct DynamismVar {
    std::string name;
    DynamismGroup group;
    double mean = 0.0;
    double std = 0.0;
    double low = -std::numeric_limits<double>::infinity();
    double high = std::numeric_limits<double>::infinity();
};

// One concrete draw, ordered like the owning spec's variables.
using DynamismSample = Eigen::VectorXd;

struct DynamismSpec {
    std::vector<DynamismVar> vars;

    int size() const { return static_cast<int>(vars.size()); }

    int index_of(const std::string& name) const;
    bool has(const std::string& name) const;

    // Mean vector of the joint distribution (the nominal system).
    DynamismSample mean_sample() const;

    void validate() const;
};

// Independent Gaussian draws, rejection-resampled into the truncation bounds.
DynamismSample sample_dynamism(const DynamismSpec& spec, Rng& rng);

} // namespace prorl

#endif
