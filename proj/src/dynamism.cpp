#include "prorl/dynamism.hpp"

namespace prorl {

int DynamismSpec::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < vars.size(); ++i)
        if (vars[i].name == name) return static_cast<int>(i);
    throw ConfigError("unknown dynamism variable: " + name);
}

bool DynamismSpec::has(const std::string& name) const {
    for (const auto& v : vars)
        if (v.name == name) return true;
    return false;
}

DynamismSample DynamismSpec::mean_sample() const {
    DynamismSample s(size());
    for (int i = 0; i < size(); ++i) s[i] = vars[i].mean;
    return s;
}

void DynamismSpec::validate() const {
    for (const auto& v : vars) {
        require(v.std >= 0.0, "dynamism std must be >= 0: " + v.name);
        require(v.low < v.high, "dynamism truncation low < high required: " + v.name);
        if (v.group == DynamismGroup::Physical)
            require(v.low > 0.0, "physical parameter must be truncated positive: " + v.name);
        require(v.mean >= v.low && v.mean <= v.high,
                "dynamism mean outside truncation bounds: " + v.name);
    }
}

DynamismSample sample_dynamism(const DynamismSpec& spec, Rng& rng) {
    DynamismSample s(spec.size());
    for (int i = 0; i < spec.size(); ++i) {
        const auto& v = spec.vars[i];
        if (v.std == 0.0) {
            s[i] = v.mean;
            continue;
        }
        double x = rng.normal(v.mean, v.std);
        int tries = 0;
        while (x < v.low || x > v.high) {
            x = rng.normal(v.mean, v.std);
            // Bounds several sigma out would starve rejection; clamp instead.
            if (++tries > 1000) {
                x = clamp(x, v.low, v.high);
                break;
            }
        }
        s[i] = x;
    }
    return s;
}

} // namespace prorl
