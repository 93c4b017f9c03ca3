#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "flowprice/errors.hpp"

namespace flowprice {

// Linear-quadratic trading model parameters.
//   kappa  temporary-impact cost (price*time/shares), > 0
//   phi    urgency weight (price/shares/time)
//   A      terminal inventory penalty (price/shares)
//   sigma  inventory noise volatility (shares/sqrt(time)), >= 0
//   T      horizon (time), > 0
//   E0     initial mean inventory (shares)
struct ModelParams {
    double kappa = 1.0;
    double phi = 0.0;
    double A = 0.0;
    double sigma = 0.0;
    double T = 1.0;
    double E0 = 0.0;

    void validate() const {
        if (!std::isfinite(kappa) || !std::isfinite(phi) || !std::isfinite(A) ||
            !std::isfinite(sigma) || !std::isfinite(T) || !std::isfinite(E0))
            throw InvalidParameterError("ModelParams: non-finite parameter");
        if (!(kappa > 0.0)) throw InvalidParameterError("ModelParams: kappa must be > 0");
        if (!(T > 0.0)) throw InvalidParameterError("ModelParams: T must be > 0");
        if (sigma < 0.0) throw InvalidParameterError("ModelParams: sigma must be >= 0");
    }

    // Soft checks outside the validated default regime.
    std::vector<std::string> warnings() const {
        std::vector<std::string> w;
        if (phi < 0.0) w.push_back("phi < 0 is outside the validated regime");
        if (A < 0.0) w.push_back("A < 0 is outside the validated regime");
        return w;
    }
};

}  // namespace flowprice
