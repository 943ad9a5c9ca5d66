// thermo: one binary exposing the pipeline. Every subcommand is a thin
// adapter over the library; flags > config file > built-in defaults.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "thermo/config.hpp"
#include "thermo/frame_io.hpp"
#include "thermo/loss.hpp"
#include "thermo/optimize.hpp"
#include "thermo/synth.hpp"
#include "thermo/tctr.hpp"

namespace fs = std::filesystem;
using namespace thermo;

namespace {

struct RunConfig {
    int bins = 30;
    double clip = 2.0;
    std::string tiles = "8x8";
    double gamma = 0.85;
    double lambda_gc = 0.5;
    double lambda_sm = 0.1;
    int group_size = 3;
    std::string mode = "tctr+lde";
    std::string config_path;

    EnhanceConfig enhance() const {
        EnhanceConfig e;
        e.mode = parse_mapping_mode(mode);
        e.n_bin = bins;
        e.clahe.clip_limit = clip;
        const auto x = tiles.find('x');
        if (x == std::string::npos) throw Error("bad --tiles value (expected RxC): " + tiles);
        try {
            e.clahe.tile_rows = std::stoi(tiles.substr(0, x));
            e.clahe.tile_cols = std::stoi(tiles.substr(x + 1));
        } catch (const std::exception&) {
            throw Error("bad --tiles value (expected RxC): " + tiles);
        }
        return e;
    }

    LossWeights weights() const { return {gamma, lambda_gc, lambda_sm}; }
};

// Shared flags; each default is the published setting.
void add_run_flags(CLI::App* cmd, RunConfig& rc) {
    cmd->add_option("--bins", rc.bins, "Histogram bin count N_bin")->capture_default_str();
    cmd->add_option("--clip", rc.clip, "Local-contrast clip limit")->capture_default_str();
    cmd->add_option("--tiles", rc.tiles, "Local-contrast tile grid, RxC")->capture_default_str();
    cmd->add_option("--gamma", rc.gamma, "SSIM/L1 mixing weight")->capture_default_str();
    cmd->add_option("--lambda-gc", rc.lambda_gc, "Geometric consistency weight")
        ->capture_default_str();
    cmd->add_option("--lambda-sm", rc.lambda_sm, "Smoothness weight")->capture_default_str();
    cmd->add_option("--group-size", rc.group_size, "Frames per mapping group")
        ->capture_default_str();
    cmd->add_option("--mode", rc.mode, "Mapping mode: minmax|tctr|tctr+lde")
        ->capture_default_str();
    cmd->add_option("--config", rc.config_path, "key=value config file (flags win)");
}

// Config file fills in whatever the command line left at its default.
void apply_config_file(CLI::App* cmd, RunConfig& rc) {
    if (rc.config_path.empty()) return;
    const KvConfig cfg = KvConfig::from_file(rc.config_path);
    auto unset = [&](const std::string& flag) { return cmd->count(flag) == 0; };
    if (unset("--bins")) rc.bins = cfg.get_int("bins", rc.bins);
    if (unset("--clip")) rc.clip = cfg.get_double("clip", rc.clip);
    if (unset("--tiles")) rc.tiles = cfg.get_string("tiles", rc.tiles);
    if (unset("--gamma")) rc.gamma = cfg.get_double("gamma", rc.gamma);
    if (unset("--lambda-gc")) rc.lambda_gc = cfg.get_double("lambda_gc", rc.lambda_gc);
    if (unset("--lambda-sm")) rc.lambda_sm = cfg.get_double("lambda_sm", rc.lambda_sm);
    if (unset("--group-size")) rc.group_size = cfg.get_int("group_size", rc.group_size);
    if (unset("--mode")) rc.mode = cfg.get_string("mode", rc.mode);
}

int thread_cap() {
    unsigned n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("THERMOSEED_THREADS")) {
        try {
            const int cap = std::stoi(env);
            if (cap >= 1 && static_cast<unsigned>(cap) < n) n = static_cast<unsigned>(cap);
        } catch (const std::exception&) {
            throw Error(std::string("bad THERMOSEED_THREADS value: ") + env);
        }
    }
    return static_cast<int>(n);
}

// Frame-level fan-out with deterministic per-index work (each index owns its
// own output file, so ordering never matters).
void parallel_frames(int count, const std::function<void(int)>& work) {
    const int threads = std::min(thread_cap(), std::max(count, 1));
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) work(i);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex mu;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            for (int i = t; i < count; i += threads) {
                try {
                    work(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::vector<std::span<const RawFrame>> split_groups(const std::vector<RawFrame>& frames,
                                                    int group_size) {
    if (group_size < 1) throw Error("--group-size must be >= 1");
    std::vector<std::span<const RawFrame>> groups;
    for (std::size_t start = 0; start < frames.size(); start += group_size) {
        const std::size_t len = std::min<std::size_t>(group_size, frames.size() - start);
        groups.emplace_back(frames.data() + start, len);
    }
    return groups;
}

std::string indexed_name(const std::string& stem, std::size_t i, const std::string& ext) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%03zu%s", stem.c_str(), i, ext.c_str());
    return buf;
}

std::string pose_text(const RigidTransform& pose) {
    const Vec3 aa = axis_angle_from_rotation(pose.rotation);
    std::ostringstream out;
    out.precision(17);
    out << "tx=" << pose.translation.x << "\nty=" << pose.translation.y
        << "\ntz=" << pose.translation.z << "\nrx=" << aa.x << "\nry=" << aa.y
        << "\nrz=" << aa.z << "\n";
    return out.str();
}

std::string intrinsics_text(const CameraIntrinsics& K) {
    std::ostringstream out;
    out.precision(17);
    out << "fx=" << K.fx << "\nfy=" << K.fy << "\ncx=" << K.cx << "\ncy=" << K.cy << "\n";
    return out.str();
}

void require_same_shape(const std::vector<RawFrame>& frames,
                        const std::vector<std::string>& names) {
    for (std::size_t i = 1; i < frames.size(); ++i)
        if (frames[i].width != frames[0].width || frames[i].height != frames[0].height)
            throw Error("frame size mismatch: " + names[i] + " is " +
                        std::to_string(frames[i].width) + "x" + std::to_string(frames[i].height) +
                        " but " + names[0] + " is " + std::to_string(frames[0].width) + "x" +
                        std::to_string(frames[0].height));
}

void print_ablation_table(const std::vector<AblationRow>& rows) {
    std::printf("%-10s %6s %-9s %14s %12s %12s %12s %12s\n", "scene", "seed", "mode",
                "hot_share", "bg_contrast", "rot_err_deg", "trans_err_%", "depth_absrel");
    for (const auto& r : rows)
        std::printf("%-10s %6llu %-9s %14.4f %12.5f %12.4f %12.4f %12.5f\n", r.scene.c_str(),
                    static_cast<unsigned long long>(r.seed), mapping_mode_name(r.mode).c_str(),
                    r.domination.hot_loss_share, r.domination.background_contrast,
                    r.final_rot_error_deg, r.final_trans_error_pct, r.final_depth_absrel);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"thermoseed: temporal-consistent thermal mapping and photometric loss tools"};
    app.require_subcommand(1);

    RunConfig rc;

    // ---- histogram ------------------------------------------------------
    std::string in_dir, out_dir;
    auto* c_hist = app.add_subcommand("histogram", "Group histogram/profile CSVs for a frame dir");
    add_run_flags(c_hist, rc);
    c_hist->add_option("in", in_dir, "Input directory of 16-bit PGM frames")->required();
    c_hist->add_option("out", out_dir, "Output directory")->required();

    // ---- remap ----------------------------------------------------------
    auto* c_remap = app.add_subcommand("remap", "Group-consistent rearrangement of raw frames");
    add_run_flags(c_remap, rc);
    c_remap->add_option("in", in_dir)->required();
    c_remap->add_option("out", out_dir)->required();

    // ---- enhance --------------------------------------------------------
    std::string out_format = "pgm16";
    auto* c_enh = app.add_subcommand("enhance", "Full mapping + local detail enhancement");
    add_run_flags(c_enh, rc);
    c_enh->add_option("in", in_dir)->required();
    c_enh->add_option("out", out_dir)->required();
    c_enh->add_option("--format", out_format, "pgm16|png8|png16")->capture_default_str();

    // ---- diff -----------------------------------------------------------
    std::vector<std::string> diff_inputs;
    std::string diff_out;
    auto* c_diff = app.add_subcommand("diff", "Difference heatmap of two frames after mapping");
    add_run_flags(c_diff, rc);
    c_diff->add_option("frames", diff_inputs, "Two 16-bit PGM frames")->expected(2);
    c_diff->add_option("--out", diff_out, "Output heatmap PNG")->required();

    // ---- loss -----------------------------------------------------------
    std::vector<std::string> loss_frames, loss_depths, loss_poses;
    std::string loss_intrinsics, loss_maps_dir;
    auto* c_loss = app.add_subcommand("loss", "Full loss stack on a 3-frame snippet");
    add_run_flags(c_loss, rc);
    c_loss->add_option("frames", loss_frames, "Three consecutive 16-bit PGM frames")->expected(3);
    c_loss->add_option("--depths", loss_depths, "Three depth PGMs (millimeters)")
        ->expected(3)
        ->required();
    c_loss->add_option("--poses", loss_poses, "Two pose cfgs: 0->1 and 1->2")
        ->expected(2)
        ->required();
    c_loss->add_option("--intrinsics", loss_intrinsics, "Camera cfg (fx fy cx cy)")->required();
    c_loss->add_option("--export-maps", loss_maps_dir, "Directory for per-pixel map exports");

    // ---- render ---------------------------------------------------------
    std::string spec_path;
    std::uint64_t seed = 1;
    auto* c_render = app.add_subcommand("render", "Synthesize a two-view scene with ground truth");
    c_render->add_option("--spec", spec_path, "Scene spec cfg")->required();
    c_render->add_option("--seed", seed, "Scene RNG seed")->capture_default_str();
    c_render->add_option("--out", out_dir, "Output directory")->required();

    // ---- optimize -------------------------------------------------------
    double perturb_rot = 2.0, perturb_trans = 0.02;
    std::uint64_t perturb_seed = 1;
    int max_iters = 120, depth_grid = 4;
    double fd_step = 1e-3;
    bool no_depth = false;
    std::string trace_path;
    auto* c_opt = app.add_subcommand("optimize", "Recover pose/depth by direct photometric descent");
    add_run_flags(c_opt, rc);
    c_opt->add_option("--spec", spec_path, "Scene spec cfg")->required();
    c_opt->add_option("--seed", seed, "Scene RNG seed")->capture_default_str();
    c_opt->add_option("--perturb-rot", perturb_rot, "Initial rotation error, degrees")
        ->capture_default_str();
    c_opt->add_option("--perturb-trans", perturb_trans, "Initial translation error, fraction of depth")
        ->capture_default_str();
    c_opt->add_option("--perturb-seed", perturb_seed, "Perturbation direction seed")
        ->capture_default_str();
    c_opt->add_option("--max-iters", max_iters, "Iteration cap")->capture_default_str();
    c_opt->add_option("--fd-step", fd_step, "Finite-difference step")->capture_default_str();
    c_opt->add_option("--depth-grid", depth_grid, "Depth control grid size")->capture_default_str();
    c_opt->add_flag("--no-depth", no_depth, "Optimize pose only");
    c_opt->add_option("--trace", trace_path, "Write per-iteration loss CSV");

    // ---- ablate ---------------------------------------------------------
    std::vector<std::string> ablate_specs;
    int n_seeds = 5;
    std::string report_path;
    auto* c_abl = app.add_subcommand("ablate", "minmax / tctr / tctr+lde comparison over seeds");
    add_run_flags(c_abl, rc);
    c_abl->add_option("--spec", ablate_specs, "Scene spec cfg (repeatable)")->required();
    c_abl->add_option("--seeds", n_seeds, "Number of seeds (1..N)")->capture_default_str();
    c_abl->add_option("--out", report_path, "Report CSV path");
    c_abl->add_option("--perturb-rot", perturb_rot, "Initial rotation error, degrees")
        ->default_val(1.0);
    c_abl->add_option("--perturb-trans", perturb_trans, "Initial translation error, fraction")
        ->default_val(0.01);
    c_abl->add_option("--max-iters", max_iters, "Iteration cap per run")->default_val(100);
    c_abl->add_option("--fd-step", fd_step, "Finite-difference step")->capture_default_str();
    c_abl->add_option("--depth-grid", depth_grid, "Depth control grid size")->capture_default_str();

    try {
        app.parse(argc, argv);
        CLI::App* active = app.get_subcommands().front();
        apply_config_file(active, rc);

        if (active == c_hist || active == c_remap) {
            const FrameSequence seq = load_sequence(in_dir);
            fs::create_directories(out_dir);
            const auto groups = split_groups(seq.frames, rc.group_size);
            for (std::size_t g = 0; g < groups.size(); ++g) {
                const MappingProfile prof = build_profile(build_histogram(groups[g], rc.bins));
                const std::string csv = active == c_hist ? "histogram" : "profile";
                export_histogram_csv(prof, (fs::path(out_dir) / indexed_name(csv, g, ".csv")).string());
                if (active == c_remap) {
                    const int base = static_cast<int>(g) * rc.group_size;
                    parallel_frames(static_cast<int>(groups[g].size()), [&](int i) {
                        const EnhancedFrame eh = remap(groups[g][i], prof);
                        export_frame(eh,
                                     (fs::path(out_dir) / indexed_name("frame", base + i, ".pgm")).string(),
                                     ExportFormat::Pgm16);
                    });
                }
            }
            std::printf("%zu frames, %zu groups -> %s\n", seq.frames.size(), groups.size(),
                        out_dir.c_str());
            return 0;
        }

        if (active == c_enh) {
            const ExportFormat fmt = parse_export_format(out_format);
            const FrameSequence seq = load_sequence(in_dir);
            fs::create_directories(out_dir);
            const auto groups = split_groups(seq.frames, rc.group_size);
            const EnhanceConfig cfg = rc.enhance();
            for (std::size_t g = 0; g < groups.size(); ++g) {
                const std::vector<EnhancedFrame> eh = enhance_snippet(groups[g], cfg);
                const int base = static_cast<int>(g) * rc.group_size;
                parallel_frames(static_cast<int>(eh.size()), [&](int i) {
                    export_frame(eh[i],
                                 (fs::path(out_dir) /
                                  indexed_name("frame", base + i, format_extension(fmt))).string(),
                                 fmt);
                });
            }
            std::printf("%zu frames enhanced (%s) -> %s\n", seq.frames.size(), rc.mode.c_str(),
                        out_dir.c_str());
            return 0;
        }

        if (active == c_diff) {
            std::vector<RawFrame> frames{load_raw_frame(diff_inputs[0]),
                                         load_raw_frame(diff_inputs[1])};
            require_same_shape(frames, diff_inputs);
            const std::vector<EnhancedFrame> eh = enhance_snippet(frames, rc.enhance());
            const Image<double> d = abs_diff_map(eh[0], eh[1]);
            double mean = 0, peak = 0;
            for (double v : d.data) {
                mean += v;
                peak = std::max(peak, v);
            }
            mean /= static_cast<double>(d.size());
            export_heatmap(d, diff_out);
            std::printf("mode %s: mean abs diff %.6f, max %.6f -> %s\n", rc.mode.c_str(), mean,
                        peak, diff_out.c_str());
            return 0;
        }

        if (active == c_loss) {
            std::vector<RawFrame> frames;
            for (const auto& p : loss_frames) frames.push_back(load_raw_frame(p));
            require_same_shape(frames, loss_frames);
            std::vector<DepthMap> depths;
            for (const auto& p : loss_depths) depths.push_back(load_depth_pgm(p));
            const std::array<RigidTransform, 2> poses{load_pose(loss_poses[0]),
                                                      load_pose(loss_poses[1])};
            const CameraIntrinsics K = load_intrinsics(loss_intrinsics);
            const LossBreakdown out =
                total_loss(frames, depths, poses, K, rc.weights(), rc.enhance());
            std::printf("L_rec   %.9f\nL_gc    %.9f\nL_sm    %.9f\nL_total %.9f\n", out.l_rec,
                        out.l_gc, out.l_sm, out.l_total);
            for (const auto& pair : out.pairs)
                std::printf("pair %d->%d: l_rec %.9f l_gc %.9f valid %zu\n", pair.target_index,
                            pair.source_index, pair.l_rec, pair.l_gc, pair.v_p.count());
            if (!loss_maps_dir.empty()) {
                fs::create_directories(loss_maps_dir);
                const fs::path dir(loss_maps_dir);
                export_heatmap(out.l_pe_map, (dir / "l_pe.png").string());
                export_heatmap(out.g_diff_map, (dir / "g_diff.png").string());
                export_heatmap(out.m_gp, (dir / "m_gp.png").string());
                Image<double> sp(out.m_sp.width, out.m_sp.height);
                for (std::size_t k = 0; k < sp.size(); ++k) sp.data[k] = out.m_sp.data[k];
                export_heatmap(sp, (dir / "m_sp.png").string());
            }
            return 0;
        }

        if (active == c_render) {
            const SceneSpec spec = SceneSpec::from_file(spec_path);
            const RenderedScene scene = render_scene(spec, seed);
            fs::create_directories(out_dir);
            const fs::path dir(out_dir);
            export_frame(scene.frame_t, (dir / "frame_t.pgm").string(), ExportFormat::Pgm16);
            export_frame(scene.frame_s, (dir / "frame_s.pgm").string(), ExportFormat::Pgm16);
            export_depth_pgm(scene.gt_depth_t, (dir / "depth_t.pgm").string());
            export_depth_pgm(scene.gt_depth_s, (dir / "depth_s.pgm").string());
            write_text_atomic((dir / "pose.cfg").string(), pose_text(scene.gt_pose));
            write_text_atomic((dir / "intrinsics.cfg").string(),
                              intrinsics_text(spec.intrinsics));
            std::printf("rendered %dx%d scene (seed %llu) -> %s\n", spec.width, spec.height,
                        static_cast<unsigned long long>(seed), out_dir.c_str());
            return 0;
        }

        if (active == c_opt) {
            const SceneSpec spec = SceneSpec::from_file(spec_path);
            const RenderedScene scene = render_scene(spec, seed);
            OptimConfig cfg;
            cfg.max_iters = max_iters;
            cfg.fd_step = fd_step;
            cfg.depth_grid = depth_grid;
            cfg.optimize_depth = !no_depth;
            const RecoveryResult r = recover_pose_depth(scene, spec, rc.enhance(), rc.weights(),
                                                        perturb_rot, perturb_trans, perturb_seed,
                                                        cfg);
            std::printf("init:  rot %.4f deg, trans %.4f%%\n", r.init_rot_error_deg,
                        r.init_trans_error_pct);
            std::printf("final: rot %.4f deg, trans %.4f%%, depth absrel %.5f, loss %.6g, %zu iters%s\n",
                        r.trace.final_rot_error_deg, r.trace.final_trans_error_pct,
                        r.trace.final_depth_absrel, r.trace.steps.back().loss,
                        r.trace.steps.size() - 1, r.trace.diverged ? " (diverged)" : "");
            if (!trace_path.empty()) {
                std::ostringstream csv;
                csv << "iter,loss\n";
                csv.precision(17);
                for (std::size_t i = 0; i < r.trace.steps.size(); ++i)
                    csv << i << "," << r.trace.steps[i].loss << "\n";
                write_text_atomic(trace_path, csv.str());
            }
            return r.trace.diverged ? 1 : 0;
        }

        if (active == c_abl) {
            std::vector<std::pair<std::string, SceneSpec>> scenes;
            for (const auto& p : ablate_specs)
                scenes.emplace_back(fs::path(p).stem().string(), SceneSpec::from_file(p));
            if (n_seeds < 1) throw Error("--seeds must be >= 1");
            std::vector<std::uint64_t> seeds;
            for (int i = 1; i <= n_seeds; ++i) seeds.push_back(static_cast<std::uint64_t>(i));
            AblationConfig cfg;
            cfg.enhance = rc.enhance();
            cfg.weights = rc.weights();
            cfg.optim.max_iters = max_iters;
            cfg.optim.fd_step = fd_step;
            cfg.optim.depth_grid = depth_grid;
            cfg.perturb_rot_deg = perturb_rot;
            cfg.perturb_trans_frac = perturb_trans;
            const std::vector<AblationRow> rows = ablate(scenes, seeds, cfg);
            print_ablation_table(rows);
            if (!report_path.empty()) {
                write_text_atomic(report_path, ablation_csv(rows));
                std::printf("report -> %s\n", report_path.c_str());
            }
            return 0;
        }

        throw Error("unhandled subcommand");
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
