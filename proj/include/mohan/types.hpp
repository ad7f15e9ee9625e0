#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "mohan/error.hpp"

namespace mohan {

// Index of a candidate edge server within the fixed server set of a run.
struct ServerId {
    std::size_t value = 0;

    constexpr ServerId() = default;
    constexpr explicit ServerId(std::size_t v) : value(v) {}

    friend constexpr bool operator==(ServerId, ServerId) = default;
    friend constexpr auto operator<=>(ServerId, ServerId) = default;
};

// Per-hop monitored parameters: payload size, link utilization, packet
// arrival rate. Utilization is a fraction in [0,1], never a percentage.
class FeatureVector {
public:
    static constexpr std::size_t kFeatures = 3;

    FeatureVector(double payload_bytes, double utilization, double arrival_rate);

    double payload_bytes() const noexcept { return payload_bytes_; }
    double utilization() const noexcept { return utilization_; }
    double arrival_rate() const noexcept { return arrival_rate_; }

    // Feature by position: 0 = payload bytes, 1 = utilization, 2 = arrival rate.
    double operator[](std::size_t i) const noexcept {
        return i == 0 ? payload_bytes_ : i == 1 ? utilization_ : arrival_rate_;
    }

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

private:
    double payload_bytes_;
    double utilization_;
    double arrival_rate_;
};

// Monitored state of the route to one server: one FeatureVector per hop.
class PathDescriptor {
public:
    PathDescriptor(ServerId server, std::vector<FeatureVector> hops);

    ServerId server() const noexcept { return server_; }
    const std::vector<FeatureVector>& hops() const noexcept { return hops_; }

    friend bool operator==(const PathDescriptor&, const PathDescriptor&) = default;

private:
    ServerId server_;
    std::vector<FeatureVector> hops_;
};

// Selection knobs. alpha weighs predicted latency against unreliability,
// theta_handover is the hysteresis threshold, beta the reliability memory
// factor and delta the prediction tolerance. initial_reliability may be
// empty (every server starts at 1.0), hold a single shared value, or hold
// one value per server.
struct SelectorConfig {
    double alpha = 0.5;
    double beta = 0.9;
    double delta = 0.2;
    double theta_handover = 0.05;
    std::vector<double> initial_reliability;
};

// Checks every field against its admissible interval; throws ValidationError
// naming the first violated field. delta and theta_handover admit +inf.
SelectorConfig validate_config(const SelectorConfig& raw);

// Initial reliability for server j under `config` with `servers` candidates.
double initial_reliability_for(const SelectorConfig& config, std::size_t servers, std::size_t j);

// One timestamped request: the frame, the monitored path to every candidate
// server, and (when the request was actually served) which server handled it
// and the observed end-to-end latency.
class TraceRecord {
public:
    TraceRecord(double timestamp_s, double frame_bytes, std::vector<PathDescriptor> paths,
                std::optional<ServerId> served_by = std::nullopt,
                std::optional<double> observed_ms = std::nullopt);

    double timestamp_s() const noexcept { return timestamp_s_; }
    double frame_bytes() const noexcept { return frame_bytes_; }
    const std::vector<PathDescriptor>& paths() const noexcept { return paths_; }
    std::optional<ServerId> served_by() const noexcept { return served_by_; }
    std::optional<double> observed_ms() const noexcept { return observed_ms_; }

    std::size_t server_count() const noexcept { return paths_.size(); }

    friend bool operator==(const TraceRecord&, const TraceRecord&) = default;

private:
    double timestamp_s_;
    double frame_bytes_;
    std::vector<PathDescriptor> paths_;
    std::optional<ServerId> served_by_;
    std::optional<double> observed_ms_;
};

}  // namespace mohan
