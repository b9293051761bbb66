#pragma once

namespace metafed {

// Multiplicative-increase / multiplicative-decrease learning-rate control,
// clamped to [eta_min, eta_max].
struct ControllerConfig {
    double kappa_up = 1.05;   // > 1, applied after an improving round
    double kappa_down = 0.7;  // in (0,1), applied otherwise
    double eta_min = 1e-4;
    double eta_max = 1.0;
};

// Loss reduction; positive means the round improved the weighted mean client
// loss. Throws std::invalid_argument on non-finite inputs.
double compute_delta_loss(double loss_before, double loss_after);

// delta_loss > 0 expands eta by kappa_up, otherwise contracts by kappa_down;
// the result never leaves [eta_min, eta_max].
double update_lr(double eta, double delta_loss, const ControllerConfig& cfg);

}  // namespace metafed
