#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "axon/errors.hpp"

namespace axon {

/**
 * Ring buffer realizing the transport representation of the input delay:
 * it stores U on [t - D_e, t] at spacing dt, so sampling the oldest entry
 * yields U(t - D_e) exactly when D_e/dt is integral.
 *
 * Pre-history (t < 0) defaults to zero: the plant ran at steady input before
 * the controller started.
 */
class DelayLine {
public:
    DelayLine(double D_e, double dt, double prehistory = 0.0)
        : D_e_(D_e), dt_(dt) {
        if (dt <= 0.0) throw DomainError("DelayLine: dt must be positive");
        const double ratio = D_e / dt;
        steps_ = long(std::llround(ratio));
        if (std::abs(ratio - double(steps_)) > 1e-9 * std::max(1.0, ratio)) {
            throw DomainError("DelayLine: dt must divide D_e (delay-line alignment)");
        }
        buf_.assign(std::size_t(steps_) + 1, prehistory);
    }

    /// U(t - D_e): the oldest stored value.
    double sample() const { return buf_[head_]; }

    /// U(t - D_e + dt); equals sample() for a zero-length line.
    double sample_next() const {
        if (steps_ == 0) return buf_[head_];
        return buf_[(head_ + 1) % buf_.size()];
    }

    /// Appends U(t), dropping U(t - D_e - dt). Call exactly once per step.
    void push(double u_now) {
        if (steps_ == 0) {
            buf_[0] = u_now;
            return;
        }
        buf_[head_] = u_now;
        head_ = (head_ + 1) % buf_.size();
        ++pushes_;
    }

    /// History snapshot oldest -> newest: U(t - D_e), ..., U(t).
    std::vector<double> history() const {
        std::vector<double> h(buf_.size());
        for (std::size_t i = 0; i < buf_.size(); ++i) {
            h[i] = buf_[(head_ + i) % buf_.size()];
        }
        return h;
    }

    long steps() const { return steps_; }
    double dt() const { return dt_; }
    double delay() const { return D_e_; }
    long pushes() const { return pushes_; }

private:
    double D_e_;
    double dt_;
    long steps_ = 0;
    std::size_t head_ = 0;
    long pushes_ = 0;
    std::vector<double> buf_;
};

}  // namespace axon
