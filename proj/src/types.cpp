#include "mohan/types.hpp"

#include <cmath>

namespace mohan {

namespace {

bool in_unit_interval(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

// delta and theta admit +inf; NaN and negatives are out.
bool non_negative(double v) { return !std::isnan(v) && v >= 0.0; }

}  // namespace

FeatureVector::FeatureVector(double payload_bytes, double utilization, double arrival_rate)
    : payload_bytes_(payload_bytes), utilization_(utilization), arrival_rate_(arrival_rate) {
    if (!(std::isfinite(payload_bytes) && payload_bytes >= 0.0))
        throw ValidationError("payload_bytes", "must be >= 0");
    if (!in_unit_interval(utilization))
        throw ValidationError("utilization", "must be a fraction in [0,1]");
    if (!(std::isfinite(arrival_rate) && arrival_rate >= 0.0))
        throw ValidationError("arrival_rate", "must be >= 0");
}

PathDescriptor::PathDescriptor(ServerId server, std::vector<FeatureVector> hops)
    : server_(server), hops_(std::move(hops)) {
    if (hops_.empty()) throw ValidationError("hops", "must be non-empty");
}

SelectorConfig validate_config(const SelectorConfig& raw) {
    if (!in_unit_interval(raw.alpha)) throw ValidationError("alpha", "out of [0,1]");
    if (!in_unit_interval(raw.beta)) throw ValidationError("beta", "out of [0,1]");
    if (!non_negative(raw.delta)) throw ValidationError("delta", "must be >= 0");
    if (!non_negative(raw.theta_handover)) throw ValidationError("theta_handover", "must be >= 0");
    for (double r : raw.initial_reliability)
        if (!in_unit_interval(r)) throw ValidationError("initial_reliability", "out of [0,1]");
    return raw;
}

double initial_reliability_for(const SelectorConfig& config, std::size_t servers, std::size_t j) {
    const auto& init = config.initial_reliability;
    if (init.empty()) return 1.0;
    if (init.size() == 1) return init[0];
    if (init.size() != servers)
        throw ValidationError("initial_reliability",
                              "must be empty, a single shared value, or one value per server");
    if (j >= servers) throw ValidationError("initial_reliability", "server index out of range");
    return init[j];
}

TraceRecord::TraceRecord(double timestamp_s, double frame_bytes, std::vector<PathDescriptor> paths,
                         std::optional<ServerId> served_by, std::optional<double> observed_ms)
    : timestamp_s_(timestamp_s),
      frame_bytes_(frame_bytes),
      paths_(std::move(paths)),
      served_by_(served_by),
      observed_ms_(observed_ms) {
    if (!(std::isfinite(timestamp_s) && timestamp_s >= 0.0))
        throw ValidationError("timestamp", "must be >= 0");
    if (!(std::isfinite(frame_bytes) && frame_bytes >= 0.0))
        throw ValidationError("frame_size", "must be >= 0");
    if (paths_.empty()) throw ValidationError("paths", "must be non-empty");
    for (std::size_t j = 0; j < paths_.size(); ++j)
        if (paths_[j].server().value != j)
            throw ValidationError("paths", "must cover every server exactly once, in index order");
    if (served_by_.has_value() != observed_ms_.has_value())
        throw ValidationError("observed_latency", "present iff served_by present");
    if (served_by_ && served_by_->value >= paths_.size())
        throw ValidationError("served_by", "out of range");
    if (observed_ms_ && !(std::isfinite(*observed_ms_) && *observed_ms_ > 0.0))
        throw ValidationError("observed_latency", "must be > 0 when present");
}

}  // namespace mohan
