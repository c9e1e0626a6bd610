#pragma once

#include <vector>

#include "cvqnet/cvqnet.hpp"

namespace test_helpers {

inline double max_abs_diff(const cvqnet::Matrix& a, const cvqnet::Matrix& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

/// Resource-state quadrature forms: squeezed vacua through the N-splitter.
inline std::vector<cvqnet::LinearForm> resource_forms(const cvqnet::NetworkConfig& config) {
    auto forms = cvqnet::initial_forms(config.n_modes, config.squeeze_spec());
    cvqnet::apply_nsplitter_forms(forms, config.n_modes);
    return forms;
}

/// Random configuration with n in [2, max_n] and r values in [0, max_r].
inline cvqnet::NetworkConfig random_config(cvqnet::RngStream& rng, int max_n = 8,
                                           double max_r = 3.0) {
    const int n = 2 + static_cast<int>(rng.next_u64() % (max_n - 1));
    switch (rng.next_u64() % 3) {
        case 0:
            return cvqnet::NetworkConfig::all_equal(n, max_r * rng.uniform());
        case 1:
            return cvqnet::NetworkConfig::one_squeezed(n, max_r * rng.uniform());
        default: {
            std::vector<double> r(n);
            for (double& v : r) v = max_r * rng.uniform();
            return cvqnet::NetworkConfig::custom(r);
        }
    }
}

}  // namespace test_helpers
