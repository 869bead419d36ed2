#pragma once

// Closed-form short-time results: fidelity decay in the two correlation
// regimes of the dephasing model, and the Zeno survival scaling under N
// repeated projections.

#include <qzsim/qmat.hpp>

#include <cmath>

namespace qzsim {

enum class NoiseRegime { delta_correlated, static_field };

struct NoiseModel {
    double lambda = 1.0;   // coupling strength, 1/time
    double tau_c = 1.0;    // correlation time (delta_correlated only)
    NoiseRegime regime = NoiseRegime::static_field;

    void validate() const {
        if (lambda < 0) throw ValidationError("NoiseModel: lambda must be >= 0");
        if (regime == NoiseRegime::delta_correlated && !(tau_c > 0))
            throw ValidationError("NoiseModel: tau_c must be > 0 for delta_correlated");
    }
};

// Leading-order fidelity: 1 - 2 lambda^2 tau_c t (delta-correlated, linear)
// or 1 - lambda^2 t^2 (static field, quadratic).  The expansion is only
// meaningful while the result stays non-negative.
inline double fidelity_short_time(const NoiseModel& model, double t) {
    model.validate();
    const double f = (model.regime == NoiseRegime::delta_correlated)
                         ? 1.0 - 2.0 * model.lambda * model.lambda * model.tau_c * t
                         : 1.0 - model.lambda * model.lambda * t * t;
    if (f < 0.0)
        throw SimulationError("fidelity_short_time: expansion out of range (result < 0)");
    return f;
}

struct ZenoSurvival {
    double exact;   // (1 - lambda^2 (T/N)^2)^N
    double approx;  // e^{-lambda^2 T^2 / N}
};

// Survival probability after N equally spaced projections over total time T,
// static regime.  Both the exact product and the exponential approximation
// are returned so callers can probe the gap between them.
inline ZenoSurvival zeno_survival(const NoiseModel& model, double total_t, int n) {
    model.validate();
    if (model.regime != NoiseRegime::static_field)
        throw ValidationError("zeno_survival: static regime required");
    if (n < 1) throw ValidationError("zeno_survival: N must be >= 1");
    const double lt = model.lambda * total_t / n;
    const double per_step = 1.0 - lt * lt;
    if (per_step < 0.0)
        throw SimulationError("zeno_survival: lambda T / N too large, F(T/N) < 0");
    ZenoSurvival out;
    out.exact = std::pow(per_step, n);
    out.approx = std::exp(-model.lambda * model.lambda * total_t * total_t / n);
    return out;
}

}  // namespace qzsim
