#pragma once

#include <chrono>

namespace sgml {

/// Wall-clock accumulators for the phases a run report breaks out.
struct PhaseTimers {
    double eigen_ms = 0.0;
    double lp_ms = 0.0;
    double gradient_ms = 0.0;
    double total_ms = 0.0;
};

class ScopedTimer {
public:
    explicit ScopedTimer(double& sink)
        : sink_(sink), start_(std::chrono::steady_clock::now()) {}
    ~ScopedTimer() {
        const auto end = std::chrono::steady_clock::now();
        sink_ += std::chrono::duration<double, std::milli>(end - start_).count();
    }
    ScopedTimer(const ScopedTimer&) = delete;
    ScopedTimer& operator=(const ScopedTimer&) = delete;

private:
    double& sink_;
    std::chrono::steady_clock::time_point start_;
};

} // namespace sgml
