#include "mohan/selector.hpp"

#include <algorithm>
#include <cmath>

namespace mohan {

std::string policy_name(Policy policy) {
    switch (policy) {
        case Policy::Mohan: return "mohan";
        case Policy::Nearest: return "nearest";
        case Policy::RoundRobin: return "roundrobin";
        case Policy::LowestLatency: return "lowestlatency";
    }
    return "unknown";
}

std::optional<Policy> policy_from_name(const std::string& name) {
    if (name == "mohan") return Policy::Mohan;
    if (name == "nearest") return Policy::Nearest;
    if (name == "roundrobin") return Policy::RoundRobin;
    if (name == "lowestlatency") return Policy::LowestLatency;
    return std::nullopt;
}

std::string reason_name(DecisionReason reason) {
    switch (reason) {
        case DecisionReason::FirstDecision: return "FirstDecision";
        case DecisionReason::KeptSame: return "KeptSame";
        case DecisionReason::HysteresisHold: return "HysteresisHold";
        case DecisionReason::Handover: return "Handover";
        case DecisionReason::BaselinePolicy: return "BaselinePolicy";
    }
    return "unknown";
}

std::vector<double> composite_score(std::span<const double> predicted,
                                    std::span<const double> reliability, double alpha) {
    if (predicted.empty()) throw ValidationError("predicted", "must be non-empty");
    if (predicted.size() != reliability.size())
        throw ValidationError("reliability", "length mismatch with predicted");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha", "out of [0,1]");
    double t_max = 0.0;
    for (double t : predicted) {
        if (!(std::isfinite(t) && t >= 0.0))
            throw ValidationError("predicted", "latencies must be finite and >= 0");
        t_max = std::max(t_max, t);
    }
    for (double r : reliability)
        if (!(r >= 0.0 && r <= 1.0)) throw ValidationError("reliability", "scores out of [0,1]");

    std::vector<double> scores(predicted.size());
    for (std::size_t j = 0; j < predicted.size(); ++j) {
        const double latency_term = t_max > 0.0 ? predicted[j] / t_max : 0.0;
        scores[j] = alpha * latency_term + (1.0 - alpha) * (1.0 - reliability[j]);
    }
    return scores;
}

Decision mohan_select(const SelectorState& state, std::span<const double> scores, double theta) {
    if (scores.empty()) throw ValidationError("scores", "must be non-empty");
    if (state.previous && state.previous->value >= scores.size())
        throw ValidationError("previous", "out of range for the scores vector");

    std::size_t best = 0;
    for (std::size_t j = 1; j < scores.size(); ++j)
        if (scores[j] < scores[best]) best = j;
    // a previous server tying for the minimum wins the tie
    if (state.previous && scores[state.previous->value] == scores[best])
        best = state.previous->value;

    Decision d;
    d.scores.assign(scores.begin(), scores.end());
    if (!state.previous) {
        d.selected = ServerId(best);
        d.reason = DecisionReason::FirstDecision;
        return d;
    }
    const ServerId prev = *state.previous;
    if (best == prev.value) {
        d.selected = prev;
        d.reason = DecisionReason::KeptSame;
        return d;
    }
    const double gap = scores[prev.value] - scores[best];
    if (gap < theta) {
        d.selected = prev;
        d.reason = DecisionReason::HysteresisHold;
        return d;
    }
    d.selected = ServerId(best);
    d.reason = DecisionReason::Handover;
    d.handover = true;
    return d;
}

Decision baseline_select(Policy policy, SelectorState& state, std::size_t servers,
                         std::span<const double> predicted, ServerId nearest) {
    if (servers == 0) throw ValidationError("servers", "must be >= 1");
    Decision d;
    d.reason = DecisionReason::BaselinePolicy;
    switch (policy) {
        case Policy::Nearest:
            if (nearest.value >= servers) throw ValidationError("nearest", "out of range");
            d.selected = nearest;
            break;
        case Policy::RoundRobin:
            d.selected = ServerId(state.rr_cursor % servers);
            state.rr_cursor = (state.rr_cursor + 1) % servers;
            break;
        case Policy::LowestLatency: {
            if (predicted.empty())
                throw ValidationError("predicted", "lowestlatency requires predictions");
            if (predicted.size() != servers)
                throw ValidationError("predicted", "length mismatch with server count");
            std::size_t best = 0;
            for (std::size_t j = 1; j < predicted.size(); ++j)
                if (predicted[j] < predicted[best]) best = j;
            d.selected = ServerId(best);
            break;
        }
        case Policy::Mohan:
            throw ValidationError("policy", "mohan is not a baseline policy");
    }
    d.predicted.assign(predicted.begin(), predicted.end());
    d.handover = state.previous.has_value() && d.selected != *state.previous;
    return d;
}

Decision step(Policy policy, const SelectorConfig& config, ServerId nearest,
              SelectorState& selector, ReliabilityState& reliability,
              std::span<const double> predictions,
              const std::optional<ObservationFeedback>& feedback) {
    if (policy == Policy::Mohan && feedback)
        reliability.update(feedback->server, feedback->observed_ms, feedback->predicted_ms);

    const bool needs_predictions = policy == Policy::Mohan || policy == Policy::LowestLatency;
    if (needs_predictions && predictions.empty())
        throw ValidationError("predictions",
                              "missing model for prediction-based policy " + policy_name(policy));
    if (!predictions.empty() && predictions.size() != reliability.server_count())
        throw ValidationError("predictions", "one prediction per server required");

    std::vector<double> scores;
    if (!predictions.empty())
        scores = composite_score(predictions, reliability.scores(), config.alpha);

    Decision d;
    if (policy == Policy::Mohan) {
        d = mohan_select(selector, scores, config.theta_handover);
    } else {
        d = baseline_select(policy, selector, reliability.server_count(), predictions, nearest);
        d.scores = scores;
    }
    d.predicted.assign(predictions.begin(), predictions.end());
    selector.previous = d.selected;
    return d;
}

}  // namespace mohan
