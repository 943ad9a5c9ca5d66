#include "thermo/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace thermo {

namespace {

double guarded_eval(const LossFn& fn, const std::vector<double>& p) {
    const double v = fn(p);
    if (!std::isfinite(v)) throw Error("loss is non-finite at probe point");
    return v;
}

double norm2(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

Vec3 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Vec3 v{n(rng), n(rng), n(rng)};
    const double len = v.norm();
    return len > 1e-12 ? v * (1.0 / len) : Vec3{1, 0, 0};
}

}  // namespace

std::vector<double> fd_gradient(const LossFn& fn, const std::vector<double>& params,
                                const std::vector<double>& step_sizes) {
    if (step_sizes.size() != params.size())
        throw Error("fd_gradient: step_sizes size mismatch");
    std::vector<double> grad(params.size());
    std::vector<double> p = params;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double h = step_sizes[i];
        p[i] = params[i] + h;
        const double fp = guarded_eval(fn, p);
        p[i] = params[i] - h;
        const double fm = guarded_eval(fn, p);
        p[i] = params[i];
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

OptimTrace minimize(const LossFn& fn, std::vector<double> init,
                    const std::vector<double>& fd_steps, const OptimConfig& cfg) {
    OptimTrace trace;
    double f = fn(init);
    if (!std::isfinite(f)) {
        trace.diverged = true;
        trace.message = "loss non-finite at the initial point";
        return trace;
    }
    trace.steps.push_back({init, f});

    std::vector<double> params = std::move(init);
    const std::size_t n = params.size();

    // L-BFGS history (two-loop recursion) over FD gradients.
    std::vector<std::vector<double>> s_hist, y_hist;
    std::vector<double> rho_hist;
    const int memory = 10;

    // Differencing scale grows when the line search stalls: a wider stencil
    // averages over sub-pixel kinks and recovers a usable descent direction.
    double fd_scale = 1.0;
    const double fd_scale_max = 16.0;
    std::vector<double> steps = fd_steps;
    auto scaled_steps = [&]() {
        for (std::size_t i = 0; i < n; ++i) steps[i] = fd_steps[i] * fd_scale;
        return steps;
    };

    std::vector<double> grad;
    try {
        grad = fd_gradient(fn, params, scaled_steps());
    } catch (const Error& e) {
        trace.diverged = true;
        trace.message = e.what();
        return trace;
    }

    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        const double gnorm = norm2(grad);
        if (gnorm < cfg.grad_tol) {
            trace.message = "gradient norm below tolerance";
            return trace;
        }

        // Two-loop recursion for the quasi-Newton direction.
        std::vector<double> dir = grad;
        std::vector<double> alpha_i(s_hist.size());
        for (int k = static_cast<int>(s_hist.size()) - 1; k >= 0; --k) {
            double sd = 0;
            for (std::size_t i = 0; i < n; ++i) sd += s_hist[k][i] * dir[i];
            alpha_i[k] = rho_hist[k] * sd;
            for (std::size_t i = 0; i < n; ++i) dir[i] -= alpha_i[k] * y_hist[k][i];
        }
        if (!s_hist.empty()) {
            double sy = 0, yy = 0;
            const auto& s = s_hist.back();
            const auto& y = y_hist.back();
            for (std::size_t i = 0; i < n; ++i) {
                sy += s[i] * y[i];
                yy += y[i] * y[i];
            }
            const double h0 = sy / yy;
            for (auto& d : dir) d *= h0;
        } else {
            for (auto& d : dir) d *= cfg.init_step;
        }
        for (int k = 0; k < static_cast<int>(s_hist.size()); ++k) {
            double yd = 0;
            for (std::size_t i = 0; i < n; ++i) yd += y_hist[k][i] * dir[i];
            const double beta = rho_hist[k] * yd;
            for (std::size_t i = 0; i < n; ++i) dir[i] += (alpha_i[k] - beta) * s_hist[k][i];
        }

        double dg = 0;  // directional derivative along -dir
        for (std::size_t i = 0; i < n; ++i) dg += dir[i] * grad[i];
        if (!(dg > 0)) {  // not a descent direction: fall back to steepest descent
            dir = grad;
            for (auto& d : dir) d *= cfg.init_step;
            dg = cfg.init_step * gnorm * gnorm;
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
        }

        // Cap the trial step so the line search stays local: a huge first
        // probe can land on a distant, spuriously low plateau and be accepted.
        double dmax = 0;
        for (double d : dir) dmax = std::max(dmax, std::abs(d));
        if (dmax > cfg.max_step) {
            const double scale = cfg.max_step / dmax;
            for (auto& d : dir) d *= scale;
            dg *= scale;
        }

        // Backtracking Armijo line search along -dir.
        bool accepted = false;
        double a = 1.0, f_trial = f;
        std::vector<double> trial(n);
        for (int bt = 0; bt < cfg.max_backtracks; ++bt, a *= cfg.shrink) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = params[i] - a * dir[i];
            const double ft = fn(trial);
            if (std::isfinite(ft) && ft <= f - cfg.sufficient_decrease * a * dg) {
                accepted = true;
                f_trial = ft;
                break;
            }
        }
        if (!accepted) {
            if (!s_hist.empty()) {
                // Curvature memory may be stale on this kinked landscape:
                // drop it and retry from plain gradient descent.
                s_hist.clear();
                y_hist.clear();
                rho_hist.clear();
                continue;
            }
            if (fd_scale < fd_scale_max) {
                fd_scale *= 2.0;
                try {
                    grad = fd_gradient(fn, params, scaled_steps());
                } catch (const Error& e) {
                    trace.diverged = true;
                    trace.message = e.what();
                    return trace;
                }
                continue;
            }
            trace.message = "line search failed to decrease the loss";
            return trace;
        }
        fd_scale = 1.0;

        std::vector<double> new_grad;
        try {
            new_grad = fd_gradient(fn, trial, scaled_steps());
        } catch (const Error& e) {
            trace.diverged = true;
            trace.message = e.what();
            return trace;
        }

        std::vector<double> s(n), y(n);
        double sy = 0;
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = trial[i] - params[i];
            y[i] = new_grad[i] - grad[i];
            sy += s[i] * y[i];
        }
        if (sy > 1e-14) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > memory) {
                s_hist.erase(s_hist.begin());
                y_hist.erase(y_hist.begin());
                rho_hist.erase(rho_hist.begin());
            }
        }

        params = trial;
        f = f_trial;
        grad = std::move(new_grad);
        trace.steps.push_back({params, f});
    }
    trace.message = "reached max iterations";
    return trace;
}

DepthMap depth_from_control_grid(const std::vector<double>& log_depth, int grid, int width,
                                 int height) {
    if (grid < 2 || log_depth.size() != static_cast<std::size_t>(grid) * grid)
        throw Error("depth_from_control_grid: bad control grid");
    DepthMap out(width, height);
    for (int y = 0; y < height; ++y) {
        const double gy = (height > 1) ? static_cast<double>(y) * (grid - 1) / (height - 1) : 0.0;
        const int j0 = std::min(static_cast<int>(gy), grid - 2);
        const double fy = gy - j0;
        for (int x = 0; x < width; ++x) {
            const double gx = (width > 1) ? static_cast<double>(x) * (grid - 1) / (width - 1) : 0.0;
            const int i0 = std::min(static_cast<int>(gx), grid - 2);
            const double fx = gx - i0;
            const double v00 = log_depth[static_cast<std::size_t>(j0) * grid + i0];
            const double v01 = log_depth[static_cast<std::size_t>(j0) * grid + i0 + 1];
            const double v10 = log_depth[static_cast<std::size_t>(j0 + 1) * grid + i0];
            const double v11 = log_depth[static_cast<std::size_t>(j0 + 1) * grid + i0 + 1];
            out.at(x, y) = std::exp((1 - fy) * ((1 - fx) * v00 + fx * v01) +
                                    fy * ((1 - fx) * v10 + fx * v11));
        }
    }
    return out;
}

double rotation_error_deg(const Mat3& a, const Mat3& b) {
    const Mat3 rel = a * b.transposed();
    const double c = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(c) * 180.0 / std::numbers::pi;
}

ScenePhotometricProblem::ScenePhotometricProblem(const RenderedScene& scene, const SceneSpec& spec,
                                                 const EnhanceConfig& enhance,
                                                 const LossWeights& weights, const OptimConfig& cfg)
    : scene_(scene), spec_(spec), weights_(weights), cfg_(cfg) {
    weights_.validate();
    const RawFrame group[2] = {scene_.frame_t, scene_.frame_s};
    enhanced_ = enhance_snippet(group, enhance);
}

std::size_t ScenePhotometricProblem::dim() const {
    const std::size_t n_depth =
        cfg_.optimize_depth ? static_cast<std::size_t>(cfg_.depth_grid) * cfg_.depth_grid : 0;
    return 6 + 2 * n_depth;
}

RigidTransform ScenePhotometricProblem::pose_of(const std::vector<double>& p) const {
    const double s = spec_.plane_depth;
    return RigidTransform::from_axis_angle({p[0], p[1], p[2]}, {p[3] * s, p[4] * s, p[5] * s});
}

std::pair<DepthMap, DepthMap> ScenePhotometricProblem::depths_of(
    const std::vector<double>& p) const {
    if (!cfg_.optimize_depth) return {scene_.gt_depth_t, scene_.gt_depth_s};
    const int grid = cfg_.depth_grid;
    const std::size_t n = static_cast<std::size_t>(grid) * grid;
    std::vector<double> gt_grid(p.begin() + 6, p.begin() + 6 + n);
    std::vector<double> gs_grid(p.begin() + 6 + n, p.end());
    // Pin the monocular scale gauge: joint rescaling of depth and translation
    // leaves every loss term unchanged, so anchor each grid's mean log-depth
    // to the scene scale and let the grids carry shape only.
    const double anchor = std::log(spec_.plane_depth);
    for (auto* g : {&gt_grid, &gs_grid}) {
        double mean = 0;
        for (double v : *g) mean += v;
        mean /= static_cast<double>(n);
        for (double& v : *g) v += anchor - mean;
    }
    const int w = enhanced_[0].width, h = enhanced_[0].height;
    return {depth_from_control_grid(gt_grid, grid, w, h),
            depth_from_control_grid(gs_grid, grid, w, h)};
}

std::vector<double> ScenePhotometricProblem::params_for_pose(const RigidTransform& pose) const {
    std::vector<double> p(dim(), std::log(spec_.plane_depth));
    const Vec3 aa = axis_angle_from_rotation(pose.rotation);
    p[0] = aa.x;
    p[1] = aa.y;
    p[2] = aa.z;
    p[3] = pose.translation.x / spec_.plane_depth;
    p[4] = pose.translation.y / spec_.plane_depth;
    p[5] = pose.translation.z / spec_.plane_depth;
    return p;
}

std::vector<double> ScenePhotometricProblem::ground_truth_params() const {
    return params_for_pose(scene_.gt_pose);
}

double ScenePhotometricProblem::loss(const std::vector<double>& p) const {
    if (p.size() != dim()) throw Error("ScenePhotometricProblem: wrong parameter count");
    try {
        const RigidTransform pose = pose_of(p);
        const auto [d_t, d_s] = depths_of(p);
        const CameraIntrinsics& K = spec_.intrinsics;
        const PairDiagnostics fwd =
            pair_loss(enhanced_[0], enhanced_[1], d_t, d_s, pose, K, weights_.gamma);
        const PairDiagnostics bwd =
            pair_loss(enhanced_[1], enhanced_[0], d_s, d_t, pose.inverse(), K, weights_.gamma);
        const double l_rec = 0.5 * (fwd.l_rec + bwd.l_rec);
        const double l_gc = 0.5 * (fwd.l_gc + bwd.l_gc);
        const double l_sm =
            0.5 * (smoothness_loss(d_t, enhanced_[0]) + smoothness_loss(d_s, enhanced_[1]));
        return l_rec + weights_.lambda_gc * l_gc + weights_.lambda_sm * l_sm;
    } catch (const Error&) {
        return std::numeric_limits<double>::infinity();
    }
}

LossFn ScenePhotometricProblem::loss_fn() const {
    return [this](const std::vector<double>& p) { return loss(p); };
}

RecoveryResult recover_pose_depth(const RenderedScene& scene, const SceneSpec& spec,
                                  const EnhanceConfig& enhance, const LossWeights& weights,
                                  double perturb_rot_deg, double perturb_trans_frac,
                                  std::uint64_t perturb_seed, const OptimConfig& cfg) {
    const ScenePhotometricProblem problem(scene, spec, enhance, weights, cfg);

    // Perturb the true pose: rotation about a random axis, translation along a
    // random direction scaled by the scene depth.
    std::mt19937_64 rng(perturb_seed);
    const Vec3 rot_axis = random_unit(rng);
    const Vec3 trans_dir = random_unit(rng);
    const double rot_rad = perturb_rot_deg * std::numbers::pi / 180.0;
    const RigidTransform gt = scene.gt_pose;
    const RigidTransform init_pose{
        rotation_from_axis_angle(rot_axis * rot_rad) * gt.rotation,
        gt.translation + trans_dir * (perturb_trans_frac * spec.plane_depth)};

    RecoveryResult result;
    result.init_rot_error_deg = rotation_error_deg(init_pose.rotation, gt.rotation);
    result.init_trans_error_pct =
        (init_pose.translation - gt.translation).norm() / spec.plane_depth * 100.0;

    const std::vector<double> init = problem.params_for_pose(init_pose);
    const std::vector<double> fd_steps(init.size(), cfg.fd_step);
    result.trace = minimize(problem.loss_fn(), init, fd_steps, cfg);

    const std::vector<double>& final_params = result.trace.steps.back().params;
    result.final_pose = problem.pose_of(final_params);
    result.trace.final_rot_error_deg = rotation_error_deg(result.final_pose.rotation, gt.rotation);
    result.trace.final_trans_error_pct =
        (result.final_pose.translation - gt.translation).norm() / spec.plane_depth * 100.0;

    const auto [d_t, d_s] = problem.depths_of(final_params);
    double absrel = 0;
    for (std::size_t k = 0; k < d_t.size(); ++k)
        absrel += std::abs(d_t.data[k] - scene.gt_depth_t.data[k]) / scene.gt_depth_t.data[k];
    result.trace.final_depth_absrel = absrel / static_cast<double>(d_t.size());
    return result;
}

std::vector<AblationRow> ablate(const std::vector<std::pair<std::string, SceneSpec>>& scenes,
                                const std::vector<std::uint64_t>& seeds,
                                const AblationConfig& cfg) {
    if (scenes.empty()) throw Error("ablate: no scene specs");
    const MappingMode modes[3] = {MappingMode::MinMax, MappingMode::Tctr, MappingMode::TctrLde};
    std::vector<AblationRow> rows;
    for (const auto& [name, spec] : scenes) {
        for (std::uint64_t seed : seeds) {
            const RenderedScene scene = render_scene(spec, seed);
            for (MappingMode mode : modes) {
                EnhanceConfig eh = cfg.enhance;
                eh.mode = mode;
                AblationRow row;
                row.scene = name;
                row.seed = seed;
                row.mode = mode;
                row.domination = domination_report(scene, mode, eh);
                const RecoveryResult rec =
                    recover_pose_depth(scene, spec, eh, cfg.weights, cfg.perturb_rot_deg,
                                       cfg.perturb_trans_frac, seed, cfg.optim);
                row.init_rot_error_deg = rec.init_rot_error_deg;
                row.final_rot_error_deg = rec.trace.final_rot_error_deg;
                row.final_trans_error_pct = rec.trace.final_trans_error_pct;
                row.final_depth_absrel = rec.trace.final_depth_absrel;
                row.final_loss = rec.trace.steps.back().loss;
                row.iters = static_cast<int>(rec.trace.steps.size()) - 1;
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::ostringstream out;
    out << "scene,seed,mode,hot_loss_share,background_contrast,init_rot_err_deg,"
           "final_rot_err_deg,final_trans_err_pct,final_depth_absrel,final_loss,iters\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.12g", v);
        return std::string(buf);
    };
    for (const auto& r : rows) {
        out << r.scene << ',' << r.seed << ',' << mapping_mode_name(r.mode) << ','
            << num(r.domination.hot_loss_share) << ',' << num(r.domination.background_contrast)
            << ',' << num(r.init_rot_error_deg) << ',' << num(r.final_rot_error_deg) << ','
            << num(r.final_trans_error_pct) << ',' << num(r.final_depth_absrel) << ','
            << num(r.final_loss) << ',' << r.iters << '\n';
    }
    return out.str();
}

}  // namespace thermo
