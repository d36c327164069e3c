#include "fmce/phase_segmentation.hpp"

#include <cmath>

#include "fmce/errors.hpp"

namespace fmce {

std::vector<double> log_transform(const SmoothedSeries& series) {
    std::vector<double> out(series.values.size());
    for (size_t i = 0; i < series.values.size(); ++i) {
        if (!(series.values[i] > 0.0)) {
            throw std::domain_error("log transform: smoothed loss at epoch " +
                                    std::to_string(i + 1) + " is " +
                                    std::to_string(series.values[i]) + " (must be > 0)");
        }
        out[i] = std::log(series.values[i]);
    }
    return out;
}

PhasePlan plan_phases(const LossSeries& raw, const SmoothedSeries& smoothed,
                      const CqiSeries& cqi, const PhaseConfig& cfg) {
    if (cfg.k < 2) throw std::invalid_argument("phase count K must be >= 2");
    if (raw.values.size() != smoothed.values.size()) {
        throw std::invalid_argument("raw and smoothed series lengths differ");
    }
    if (!cqi.converged_epoch) {
        throw NotConvergedError("run '" + raw.run_id +
                                "' has not converged: CQI never reached the threshold");
    }

    PhasePlan plan;
    plan.convergence_epoch = *cqi.converged_epoch;
    plan.log_series = log_transform(smoothed);

    // baseline: earliest epoch of the raw-loss maximum
    plan.baseline_epoch = 1;
    for (size_t i = 1; i < raw.values.size(); ++i) {
        if (raw.values[i] > raw.values[static_cast<size_t>(plan.baseline_epoch) - 1]) {
            plan.baseline_epoch = static_cast<int>(i) + 1;
        }
    }
    if (plan.baseline_epoch >= plan.convergence_epoch) {
        throw InfeasibleSegmentationError(
            "baseline epoch " + std::to_string(plan.baseline_epoch) +
                " is not before the convergence epoch " +
                std::to_string(plan.convergence_epoch),
            0);
    }

    const auto& log_s = plan.log_series;
    const double base = log_s[static_cast<size_t>(plan.baseline_epoch) - 1];
    plan.total_drop = std::abs(log_s[static_cast<size_t>(plan.convergence_epoch) - 1] - base);
    if (plan.total_drop == 0.0) {
        throw DegenerateCurveError("degenerate curve: zero log-loss drop between epochs " +
                                   std::to_string(plan.baseline_epoch) + " and " +
                                   std::to_string(plan.convergence_epoch));
    }
    plan.per_phase_drop = plan.total_drop / cfg.k;

    // E_k = first epoch past the previous marker whose cumulative drop
    // meets k shares; searching past the previous marker is what keeps the
    // markers strictly increasing when one epoch crosses several thresholds.
    plan.markers.reserve(static_cast<size_t>(cfg.k));
    int prev = plan.baseline_epoch;
    for (int k = 1; k < cfg.k; ++k) {
        int found = 0;
        for (int m = prev + 1; m < plan.convergence_epoch; ++m) {
            if (std::abs(log_s[static_cast<size_t>(m) - 1] - base) >= k * plan.per_phase_drop) {
                found = m;
                break;
            }
        }
        if (found == 0) {
            throw InfeasibleSegmentationError(
                "infeasible segmentation: phase " + std::to_string(k) +
                    " has no epoch before the convergence epoch " +
                    std::to_string(plan.convergence_epoch),
                k);
        }
        plan.markers.push_back(found);
        prev = found;
    }
    plan.markers.push_back(plan.convergence_epoch);
    return plan;
}

std::optional<int> assign_fmcs(const PhasePlan& plan, int epoch) {
    for (size_t i = 0; i < plan.markers.size(); ++i) {
        if (plan.markers[i] == epoch) return static_cast<int>(i) + 1;
    }
    return std::nullopt;
}

nlohmann::json phase_plan_report(const PhasePlan& plan, const std::string& run_id,
                                 const SmoothingConfig& smoothing, const CqiConfig& cqi_cfg,
                                 const PhaseConfig& phase_cfg) {
    return nlohmann::json{
        {"run_id", run_id},
        {"alpha", smoothing.alpha},
        {"mode", to_string(smoothing.mode)},
        {"window", cqi_cfg.window},
        {"mu", cqi_cfg.threshold},
        {"k", phase_cfg.k},
        {"baseline_epoch", plan.baseline_epoch},
        {"convergence_epoch", plan.convergence_epoch},
        {"markers", plan.markers},
        {"total_drop", plan.total_drop},
        {"per_phase_drop", plan.per_phase_drop},
    };
}

PhasePlan phase_plan_from_report(const nlohmann::json& report) {
    PhasePlan plan;
    plan.baseline_epoch = report.at("baseline_epoch").get<int>();
    plan.convergence_epoch = report.at("convergence_epoch").get<int>();
    plan.markers = report.at("markers").get<std::vector<int>>();
    plan.total_drop = report.at("total_drop").get<double>();
    plan.per_phase_drop = report.at("per_phase_drop").get<double>();
    return plan;
}

}  // namespace fmce
