#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "thermo/synth.hpp"

namespace thermo {

using LossFn = std::function<double(const std::vector<double>&)>;

/// Central differences (f(p+h) - f(p-h)) / 2h per coordinate. Throws if the
/// loss is non-finite at any probe point.
std::vector<double> fd_gradient(const LossFn& fn, const std::vector<double>& params,
                                const std::vector<double>& step_sizes);

struct OptimConfig {
    int max_iters = 300;
    double grad_tol = 1e-7;
    // Armijo backtracking.
    double shrink = 0.5;
    double sufficient_decrease = 1e-4;
    int max_backtracks = 30;
    double init_step = 1.0;
    double max_step = 0.01;  // per-coordinate cap on one line-search step
    double fd_step = 1e-5;
    bool optimize_depth = true;
    int depth_grid = 8;  // control grid is depth_grid x depth_grid, log-depth
};

struct OptimStep {
    std::vector<double> params;
    double loss = 0;
};

struct OptimTrace {
    std::vector<OptimStep> steps;  // accepted iterates, including the start
    bool diverged = false;
    std::string message;
    double final_rot_error_deg = 0;
    double final_trans_error_pct = 0;  // percent of scene depth
    double final_depth_absrel = 0;
};

/// Gradient descent with backtracking line search; accepted steps never
/// increase the loss. Stops on gradient norm < grad_tol, a failed line
/// search, or max_iters.
OptimTrace minimize(const LossFn& fn, std::vector<double> init,
                    const std::vector<double>& fd_steps, const OptimConfig& cfg);

/// Bilinear upsampling of a grid of log-depth control values to a dense map.
DepthMap depth_from_control_grid(const std::vector<double>& log_depth, int grid, int width,
                                 int height);

/// Direct photometric objective over one rendered pair: pose (axis-angle +
/// translation scaled by scene depth) and, optionally, two log-depth control
/// grids. The shared TCTR/LDE mapping is fixed at construction, so parameter
/// probes only re-run warping and loss kernels.
class ScenePhotometricProblem {
public:
    ScenePhotometricProblem(const RenderedScene& scene, const SceneSpec& spec,
                            const EnhanceConfig& enhance, const LossWeights& weights,
                            const OptimConfig& cfg);

    std::size_t dim() const;
    double loss(const std::vector<double>& params) const;
    LossFn loss_fn() const;

    /// Parameters for a given pose, depth grids at the ground-truth plane.
    std::vector<double> params_for_pose(const RigidTransform& pose) const;
    std::vector<double> ground_truth_params() const;

    RigidTransform pose_of(const std::vector<double>& params) const;
    std::pair<DepthMap, DepthMap> depths_of(const std::vector<double>& params) const;

    const SceneSpec& spec() const { return spec_; }
    const RenderedScene& scene() const { return scene_; }

private:
    RenderedScene scene_;
    SceneSpec spec_;
    LossWeights weights_;
    OptimConfig cfg_;
    std::vector<EnhancedFrame> enhanced_;  // [target, source]
};

struct RecoveryResult {
    OptimTrace trace;
    double init_rot_error_deg = 0;
    double init_trans_error_pct = 0;
    RigidTransform final_pose;
};

/// Direct photometric recovery of the relative pose (and optionally both
/// depth maps) on a rendered scene, starting from a perturbed pose. The
/// perturbation direction is drawn from `perturb_seed`; depth control grids
/// start at the ground-truth plane depth.
RecoveryResult recover_pose_depth(const RenderedScene& scene, const SceneSpec& spec,
                                  const EnhanceConfig& enhance, const LossWeights& weights,
                                  double perturb_rot_deg, double perturb_trans_frac,
                                  std::uint64_t perturb_seed, const OptimConfig& cfg);

struct AblationRow {
    std::string scene;
    std::uint64_t seed = 0;
    MappingMode mode = MappingMode::MinMax;
    DominationReport domination;
    double init_rot_error_deg = 0;
    double final_rot_error_deg = 0;
    double final_trans_error_pct = 0;
    double final_depth_absrel = 0;
    double final_loss = 0;
    int iters = 0;
};

struct AblationConfig {
    EnhanceConfig enhance;
    LossWeights weights;
    OptimConfig optim;
    double perturb_rot_deg = 2.0;
    double perturb_trans_frac = 0.02;
};

/// One row per (scene, seed, mode) with mode in {minmax, tctr, tctr+lde}.
std::vector<AblationRow> ablate(const std::vector<std::pair<std::string, SceneSpec>>& scenes,
                                const std::vector<std::uint64_t>& seeds,
                                const AblationConfig& cfg);

std::string ablation_csv(const std::vector<AblationRow>& rows);

/// Angular distance between rotations, degrees.
double rotation_error_deg(const Mat3& a, const Mat3& b);

}  // namespace thermo
