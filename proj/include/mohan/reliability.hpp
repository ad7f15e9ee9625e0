#pragma once

#include <cstdint>
#include <vector>

#include "mohan/types.hpp"

namespace mohan {

// 1 when the observation honors the prediction within tolerance:
// observed <= (1 + delta) * predicted. Equality counts as a match.
// An infinite delta always matches.
int match_indicator(double observed_ms, double predicted_ms, double delta);

// Per-server reliability scores driven by the exponential moving average
//   R_j <- beta * R_j + (1 - beta) * match
// applied to the served server only; the other servers keep their last value.
class ReliabilityState {
public:
    ReliabilityState(const SelectorConfig& config, std::size_t servers);

    const std::vector<double>& scores() const noexcept { return scores_; }
    const std::vector<std::uint64_t>& update_counts() const noexcept { return update_counts_; }
    double beta() const noexcept { return beta_; }
    double delta() const noexcept { return delta_; }
    std::size_t server_count() const noexcept { return scores_.size(); }

    // Applies one EMA update to `server` from an observation/prediction pair.
    void update(ServerId server, double observed_ms, double predicted_ms);

private:
    std::vector<double> scores_;
    std::vector<std::uint64_t> update_counts_;
    double beta_;
    double delta_;
};

// Value-semantics variant: returns the updated copy.
ReliabilityState updated(ReliabilityState state, ServerId server, double observed_ms,
                         double predicted_ms);

}  // namespace mohan
