#pragma once

#include "csplat/cloud.hpp"
#include "csplat/image.hpp"
#include "csplat/optim.hpp"
#include "csplat/spectral.hpp"
#include "csplat/splat.hpp"

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace csplat {

/// Controls for the alternating fit / spectral re-estimation loop.
template <typename Scalar>
struct RecurrenceConfig {
    int k = 9;                      // retained lowest frequencies
    Scalar threshold = Scalar(2e-4);  // convergence bound on the mean-L1 caustic change
    int steps_per_iteration = 1000;
    int max_iterations = 60;
    int warmup_steps = 5000;        // plain fit before the first spectral estimate

    void validate() const {
        if (k < 1) throw std::invalid_argument("RecurrenceConfig: k must be >= 1");
        if (!(threshold > Scalar(0)))
            throw std::invalid_argument("RecurrenceConfig: threshold must be positive");
        if (steps_per_iteration < 1)
            throw std::invalid_argument("RecurrenceConfig: steps_per_iteration must be >= 1");
        if (max_iterations < 1)
            throw std::invalid_argument("RecurrenceConfig: max_iterations must be >= 1");
        if (warmup_steps < 0)
            throw std::invalid_argument("RecurrenceConfig: warmup_steps must be >= 0");
    }
};

template <typename Scalar>
struct RecurrenceState {
    std::vector<Image<Scalar>> caustics;  // converged per-frame estimates
    int iteration = 0;
    std::vector<Scalar> change_history;   // per-iteration mean-L1 caustic change
    bool converged = false;
};

template <typename Scalar>
struct IterationRecord {
    int iteration;
    Scalar delta;      // mean-L1 change of the caustic estimate
    Scalar mean_loss;  // mean loss of the preceding optimization segment
};

template <typename Scalar>
struct RecurrentResult {
    GaussianCloud<Scalar> cloud;
    std::vector<Image<Scalar>> renders;
    RecurrenceState<Scalar> state;
};

/// Alternate between caustic-compensated fitting and spectral caustic
/// re-estimation until the estimate stops changing.
///
/// The estimate is refreshed every iteration and the convergence test
/// compares consecutive iterations (a comparison against the initial zeros
/// would never terminate the loop).
template <typename Scalar>
RecurrentResult<Scalar> trainRecurrent(
    const std::vector<Frame<Scalar>>& frames, const GaussianCloud<Scalar>& init_cloud,
    const RecurrenceConfig<Scalar>& rc, const OptimizerConfig<Scalar>& opt,
    const LossConfig<Scalar>& loss, std::uint64_t seed = 0,
    std::type_identity_t<std::function<void(const IterationRecord<Scalar>&)>> sink = {}) {
    rc.validate();
    if (frames.empty()) throw std::invalid_argument("trainRecurrent: no frames");
    const int w = frames.front().image.width, h = frames.front().image.height;
    for (const auto& f : frames)
        if (f.image.width != w || f.image.height != h)
            throw std::invalid_argument("trainRecurrent: frames must share one resolution");

    const FrequencyMask mask = buildMask(w, h, rc.k);

    Trainer<Scalar> trainer(init_cloud, frames, opt, loss, seed);
    trainer.setCaustics({});
    std::vector<Scalar> last_trace;
    if (rc.warmup_steps > 0) last_trace = trainer.run(rc.warmup_steps);

    RecurrentResult<Scalar> out;
    out.state.caustics.assign(frames.size(), Image<Scalar>::zeros(w, h));

    auto renderAll = [&](const GaussianCloud<Scalar>& cloud) {
        std::vector<Image<Scalar>> renders;
        renders.reserve(frames.size());
        for (const auto& f : frames) renders.push_back(render(cloud, f.camera, w, h));
        return renders;
    };

    auto segmentLoss = [&](const GaussianCloud<Scalar>& cloud,
                           const std::vector<Image<Scalar>>& renders) -> Scalar {
        if (!last_trace.empty()) {
            Scalar s = 0;
            for (Scalar v : last_trace) s += v;
            return s / Scalar(last_trace.size());
        }
        (void)cloud;
        Scalar s = 0;
        for (std::size_t f = 0; f < frames.size(); ++f)
            s += dist(frames[f].image - out.state.caustics[f], renders[f], loss);
        return s / Scalar(frames.size());
    };

    for (int it = 1; it <= rc.max_iterations; ++it) {
        const GaussianCloud<Scalar> cloud_now = trainer.cloud();
        out.renders = renderAll(cloud_now);

        std::vector<Image<Scalar>> estimate;
        estimate.reserve(frames.size());
        Scalar delta = 0;
        for (std::size_t f = 0; f < frames.size(); ++f) {
            const Image<Scalar> residual = frames[f].image - out.renders[f];
            estimate.push_back(lowpassReconstruct(residual, mask));
            delta += (estimate.back() - out.state.caustics[f]).meanAbs();
        }
        delta /= Scalar(frames.size());

        out.state.iteration = it;
        out.state.change_history.push_back(delta);
        const Scalar seg_loss = segmentLoss(cloud_now, out.renders);
        out.state.caustics = std::move(estimate);
        if (sink) sink({it, delta, seg_loss});

        if (delta < rc.threshold) {
            out.state.converged = true;
            out.cloud = cloud_now;
            return out;
        }
        trainer.setCaustics(out.state.caustics);
        last_trace = trainer.run(rc.steps_per_iteration);
    }

    // Iteration cap reached: flag, do not fail. Renders reflect the final fit.
    out.state.converged = false;
    out.cloud = trainer.cloud();
    out.renders = renderAll(out.cloud);
    return out;
}

}  // namespace csplat
