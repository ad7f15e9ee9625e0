#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mohan/reliability.hpp"
#include "mohan/types.hpp"

namespace mohan {

enum class Policy { Mohan, Nearest, RoundRobin, LowestLatency };

// Token used on the command line and in output files.
std::string policy_name(Policy policy);
std::optional<Policy> policy_from_name(const std::string& name);

enum class DecisionReason { FirstDecision, KeptSame, HysteresisHold, Handover, BaselinePolicy };

std::string reason_name(DecisionReason reason);

struct SelectorState {
    std::optional<ServerId> previous;  // absent before the first decision
    std::size_t rr_cursor = 0;         // round-robin position, RoundRobin only
};

struct Decision {
    ServerId selected;
    std::vector<double> scores;     // S_j per server; filled by step()
    std::vector<double> predicted;  // predicted latency per server; filled by step()
    bool handover = false;
    DecisionReason reason = DecisionReason::FirstDecision;
};

// Composite score S_j = alpha * T_j / T_max + (1 - alpha) * (1 - R_j).
// When every prediction is zero the latency term carries no information and
// is defined as zero.
std::vector<double> composite_score(std::span<const double> predicted,
                                    std::span<const double> reliability, double alpha);

// Hysteresis-moderated argmin over composite scores. Ties prefer the
// previous server, then the lowest index; a score gap exactly equal to
// theta triggers the handover.
Decision mohan_select(const SelectorState& state, std::span<const double> scores, double theta);

// The three reference policies. RoundRobin advances state.rr_cursor;
// LowestLatency requires one prediction per server.
Decision baseline_select(Policy policy, SelectorState& state, std::size_t servers,
                         std::span<const double> predicted, ServerId nearest);

// Feedback from the previously served request, used for the reliability
// update at the start of the next step.
struct ObservationFeedback {
    ServerId server;
    double observed_ms = 0.0;
    double predicted_ms = 0.0;
};

// One policy step: applies the pending reliability update (mohan only),
// scores all candidates, selects, and advances the selector state.
// Deterministic: identical inputs yield identical outputs.
Decision step(Policy policy, const SelectorConfig& config, ServerId nearest,
              SelectorState& selector, ReliabilityState& reliability,
              std::span<const double> predictions,
              const std::optional<ObservationFeedback>& feedback);

}  // namespace mohan
