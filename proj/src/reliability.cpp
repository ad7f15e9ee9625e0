#include "mohan/reliability.hpp"

#include <algorithm>
#include <cmath>

namespace mohan {

int match_indicator(double observed_ms, double predicted_ms, double delta) {
    if (std::isnan(observed_ms) || observed_ms < 0.0)
        throw ValidationError("observed", "must be >= 0");
    if (std::isnan(predicted_ms) || predicted_ms < 0.0)
        throw ValidationError("predicted", "must be >= 0");
    if (std::isnan(delta) || delta < 0.0) throw ValidationError("delta", "must be >= 0");
    if (std::isinf(delta)) return 1;  // infinite tolerance matches everything
    return observed_ms <= (1.0 + delta) * predicted_ms ? 1 : 0;
}

ReliabilityState::ReliabilityState(const SelectorConfig& config, std::size_t servers)
    : update_counts_(servers, 0), beta_(config.beta), delta_(config.delta) {
    const SelectorConfig checked = validate_config(config);
    scores_.reserve(servers);
    for (std::size_t j = 0; j < servers; ++j)
        scores_.push_back(initial_reliability_for(checked, servers, j));
}

void ReliabilityState::update(ServerId server, double observed_ms, double predicted_ms) {
    if (server.value >= scores_.size())
        throw ValidationError("server", "index out of range");
    const int match = match_indicator(observed_ms, predicted_ms, delta_);
    const double next = beta_ * scores_[server.value] + (1.0 - beta_) * match;
    scores_[server.value] = std::clamp(next, 0.0, 1.0);
    ++update_counts_[server.value];
}

ReliabilityState updated(ReliabilityState state, ServerId server, double observed_ms,
                         double predicted_ms) {
    state.update(server, observed_ms, predicted_ms);
    return state;
}

}  // namespace mohan
