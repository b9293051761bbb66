#include "metafed/controller.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace metafed {

double compute_delta_loss(double loss_before, double loss_after) {
    if (!std::isfinite(loss_before) || !std::isfinite(loss_after)) {
        throw std::invalid_argument("loss values must be finite");
    }
    return loss_before - loss_after;
}

double update_lr(double eta, double delta_loss, const ControllerConfig& cfg) {
    // delta_loss == 0 counts as "no improvement" and contracts.
    if (delta_loss > 0.0) {
        return std::min(eta * cfg.kappa_up, cfg.eta_max);
    }
    return std::max(eta * cfg.kappa_down, cfg.eta_min);
}

}  // namespace metafed
