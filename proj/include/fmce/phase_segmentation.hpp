#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fmce/loss_analysis.hpp"

namespace fmce {

struct PhaseConfig {
    int k = 10;  // number of convergence phases, >= 2
};

// Segmentation of a converged run into K phases on the log-loss axis.
// markers[k-1] is the epoch whose cumulative log-loss drop from the
// baseline first meets k equal shares of the total drop; the last marker
// is pinned to the convergence epoch.
struct PhasePlan {
    int baseline_epoch = 0;     // E_0: epoch of the raw-loss maximum
    int convergence_epoch = 0;  // E_K: from the CQI threshold crossing
    std::vector<int> markers;   // E_1..E_K, strictly increasing
    double total_drop = 0.0;    // G
    double per_phase_drop = 0.0;  // G / K
    std::vector<double> log_series;  // ln of the smoothed losses
};

// Elementwise natural log; any non-positive value aborts naming the epoch.
std::vector<double> log_transform(const SmoothedSeries& series);

// Builds the phase plan. The baseline is found on the raw series, the
// drop is measured on the log of the smoothed series. Throws
// NotConvergedError / DegenerateCurveError / InfeasibleSegmentationError.
PhasePlan plan_phases(const LossSeries& raw, const SmoothedSeries& smoothed,
                      const CqiSeries& cqi, const PhaseConfig& cfg);

// Score k for marker epochs, empty otherwise.
std::optional<int> assign_fmcs(const PhasePlan& plan, int epoch);

// The analyze report: run/config echo plus the plan fields.
nlohmann::json phase_plan_report(const PhasePlan& plan, const std::string& run_id,
                                 const SmoothingConfig& smoothing, const CqiConfig& cqi_cfg,
                                 const PhaseConfig& phase_cfg);

PhasePlan phase_plan_from_report(const nlohmann::json& report);

}  // namespace fmce
