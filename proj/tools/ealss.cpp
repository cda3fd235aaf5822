// Copyright 2026 The ealss Contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ealss/config.hpp"
#include "ealss/eadf.hpp"
#include "ealss/geometry.hpp"
#include "ealss/gradcheck.hpp"
#include "ealss/io.hpp"
#include "ealss/splat.hpp"
#include "ealss/supervision.hpp"
#include "ealss/toy_head.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace
{

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

ealss::config::RunConfig load_config(const std::string & path)
{
  return path.empty() ? ealss::config::RunConfig{} : ealss::config::load(path);
}

void emit(const json & j) { std::cout << j.dump() << '\n'; }

struct ProjectArgs
{
  std::string points, calib, config, out;
};

int cmd_project(const ProjectArgs & a)
{
  const auto cfg = load_config(a.config);
  const auto cloud = ealss::io::read_point_cloud(a.points);
  const auto calibs = ealss::io::read_calibs(a.calib);
  if (calibs.size() != cfg.shape.n_views) {
    throw ealss::ConfigError(
      "calibration lists " + std::to_string(calibs.size()) + " views, config.shape.n_views is " +
      std::to_string(cfg.shape.n_views));
  }
  const auto stack =
    ealss::geometry::project_multiview(cloud, calibs, cfg.image_shape(), cfg.depth_range());
  ealss::io::write_tensor(a.out, stack);
  std::size_t nonzero = 0;
  for (double d : stack.values()) {
    nonzero += d != 0.0;
  }
  emit({{"out", a.out}, {"shape", stack.shape()}, {"nonzero", nonzero}, {"points", cloud.size()}});
  return kOk;
}

struct EadfArgs
{
  std::string depth, config, out_dense, out_edges, out_fused, export_pgm;
};

int cmd_eadf(const EadfArgs & a)
{
  const auto cfg = load_config(a.config);
  const auto depth = ealss::io::read_tensor(a.depth);
  ealss::require_rank(depth, 3, "depth tensor");
  for (double d : depth.values()) {
    if (!std::isfinite(d) || d < 0.0) {
      throw ealss::InputError("depth tensor values must be finite and >= 0");
    }
  }
  const auto out = ealss::eadf::eadf_pipeline(depth, cfg.eadf);
  ealss::io::write_tensor(a.out_dense, out.dense);
  ealss::io::write_tensor(a.out_edges, out.edges);
  ealss::io::write_tensor(a.out_fused, out.fused);
  json summary{{"k", cfg.eadf.k}, {"shape", depth.shape()}, {"fused_shape", out.fused.shape()}};
  if (!a.export_pgm.empty()) {
    fs::create_directories(a.export_pgm);
    const auto dense = ealss::io::export_pgm(
      out.dense, fs::path(a.export_pgm) / "dense", ealss::io::PgmKind::kDepth, cfg.binning.d_max);
    const auto edges =
      ealss::io::export_pgm(out.edges, fs::path(a.export_pgm) / "edges", ealss::io::PgmKind::kEdge);
    summary["pgm_files"] = dense.size() + edges.size();
  }
  emit(summary);
  return kOk;
}

struct LossArgs
{
  std::string pred, gt_sparse, gt_dense, weights, config, grad;
};

int cmd_loss(const LossArgs & a)
{
  if (a.gt_sparse.empty() == a.gt_dense.empty()) {
    std::cerr << "loss: give exactly one of --gt-sparse or --gt-dense\n";
    return kUsage;
  }
  if (!a.gt_dense.empty() && a.weights.empty()) {
    std::cerr << "loss: --gt-dense requires --weights\n";
    return kUsage;
  }
  if (!a.gt_sparse.empty() && !a.weights.empty()) {
    std::cerr << "loss: --weights only applies with --gt-dense\n";
    return kUsage;
  }
  const auto cfg = load_config(a.config);
  const auto pred = ealss::io::read_tensor(a.pred);
  using ealss::supervision::GradTarget;
  const auto target = a.grad.empty() ? GradTarget::kNone : GradTarget::kLogits;
  const auto report =
    a.gt_dense.empty()
      ? ealss::supervision::fgd_loss(
          pred, ealss::io::read_tensor(a.gt_sparse), cfg.binning, cfg.focal, target)
      : ealss::supervision::eadf_loss(
          pred, ealss::io::read_tensor(a.gt_dense), ealss::io::read_tensor(a.weights), cfg.binning,
          cfg.focal, target);
  json j{{"loss", report.value}, {"n_active", report.n_active}, {"grad_file", nullptr}};
  if (report.grad) {
    ealss::io::write_tensor(a.grad, *report.grad);
    j["grad_file"] = a.grad;
  }
  emit(j);
  return kOk;
}

struct GradcheckArgs
{
  std::string config;
  std::optional<std::uint64_t> seed;
  std::size_t size{8};
  bool corrupt{false};
};

int cmd_gradcheck(const GradcheckArgs & a)
{
  const auto cfg = load_config(a.config);
  if (a.size < 2) {
    throw ealss::ConfigError("--size must be >= 2");
  }
  const auto s = ealss::gradcheck::run(
    a.seed.value_or(cfg.seed), a.size, cfg.binning.d_min, cfg.binning.d_max, cfg.focal, a.corrupt);
  emit(
    {{"max_rel_err", s.max_rel_err()},
     {"pass", s.pass()},
     {"fgd", s.fgd},
     {"eadf", s.eadf},
     {"head", s.head},
     {"tolerance", ealss::gradcheck::kTolerance}});
  return s.pass() ? kOk : kCheckFailed;
}

struct TrainArgs
{
  std::string config, trace;
  std::optional<std::size_t> iters;
  std::optional<double> lr;
};

int cmd_train_toy(const TrainArgs & a)
{
  auto cfg = load_config(a.config);
  if (a.iters) {
    cfg.train.iters = *a.iters;
  }
  if (a.lr) {
    cfg.train.lr = *a.lr;
  }
  const auto scene = ealss::toy::make_synthetic_scene(cfg.seed, cfg.scene, cfg.binning);
  const auto result = ealss::toy::train_toy(scene, cfg.eadf, cfg.binning, cfg.focal, cfg.train);
  if (!a.trace.empty()) {
    std::ofstream out(a.trace, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw ealss::InputError("cannot write trace " + a.trace);
    }
    for (std::size_t i = 0; i < result.trace.size(); ++i) {
      const auto & r = result.trace[i];
      json line{{"iter", r.iter}, {"fgd", r.fgd}, {"eadf", r.eadf}, {"total", r.total}};
      if (i + 1 == result.trace.size()) {
        line["accuracy"] = result.accuracy;
      }
      out << line.dump() << '\n';
    }
  }
  const double first = result.trace.front().total;
  const double last = result.trace.back().total;
  emit(
    {{"iters", cfg.train.iters},
     {"initial_total", first},
     {"final_total", last},
     {"ratio", first > 0.0 ? last / first : 0.0},
     {"accuracy", result.accuracy},
     {"edge_accuracy", result.edge_accuracy}});
  return kOk;
}

struct SplatArgs
{
  std::string pred, ctx, calib, config, out;
  bool bench{false};
};

int cmd_splat(const SplatArgs & a)
{
  const auto cfg = load_config(a.config);
  const auto pred = ealss::io::read_tensor(a.pred);
  const auto ctx = ealss::io::read_tensor(a.ctx);
  const auto calibs = ealss::io::read_calibs(a.calib);
  ealss::supervision::validate_distribution(pred);
  const auto t0 = std::chrono::steady_clock::now();
  const auto grid = ealss::splat::splat(pred, ctx, calibs, cfg.binning, cfg.grid);
  const double seconds =
    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ealss::io::write_tensor(a.out, grid.data);
  const json sidecar{
    {"x_min", cfg.grid.x_min},
    {"x_max", cfg.grid.x_max},
    {"y_min", cfg.grid.y_min},
    {"y_max", cfg.grid.y_max},
    {"z_min", cfg.grid.z_min},
    {"z_max", cfg.grid.z_max},
    {"resolution", cfg.grid.resolution},
    {"channels", grid.channels},
    {"dropped_mass", grid.dropped_mass}};
  std::ofstream(a.out + ".json", std::ios::trunc) << sidecar.dump(2) << '\n';
  json j{{"op", "splat"}, {"cells", grid.spec.nx() * grid.spec.ny()}, {"dropped_mass", grid.dropped_mass}};
  if (a.bench) {
    j["seconds"] = seconds;
  }
  emit(j);
  return kOk;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Edge-aware depth supervision and lift-splat toolkit"};
  app.require_subcommand(1);

  ProjectArgs project;
  auto * p = app.add_subcommand("project", "Project a point cloud into per-view sparse depth maps");
  p->add_option("--points", project.points, "Point cloud (.csv/.txt text or .bin float32)")->required();
  p->add_option("--calib", project.calib, "Calibration JSON")->required();
  p->add_option("--config", project.config, "Run config JSON");
  p->add_option("--out", project.out, "Output EALSS1 depth stack")->required();

  EadfArgs eadf;
  auto * e = app.add_subcommand("eadf", "Densify, edge map and fuse a depth stack");
  e->add_option("--depth", eadf.depth, "Input EALSS1 depth stack")->required();
  e->add_option("--config", eadf.config, "Run config JSON");
  e->add_option("--out-dense", eadf.out_dense, "Dense depth output")->required();
  e->add_option("--out-edges", eadf.out_edges, "Edge map output")->required();
  e->add_option("--out-fused", eadf.out_fused, "Fused [D : G'] output")->required();
  e->add_option("--export-pgm", eadf.export_pgm, "Directory for 16-bit PGM previews");

  LossArgs loss;
  auto * l = app.add_subcommand("loss", "Evaluate the sparse or edge-weighted depth loss");
  l->add_option("--pred", loss.pred, "Predicted distribution (views, bins, rows, cols)")->required();
  l->add_option("--gt-sparse", loss.gt_sparse, "Sparse ground truth (fine-grained loss)");
  l->add_option("--gt-dense", loss.gt_dense, "Dense ground truth (edge-aware loss)");
  l->add_option("--weights", loss.weights, "Edge map weights for --gt-dense");
  l->add_option("--config", loss.config, "Run config JSON");
  l->add_option("--grad", loss.grad, "Write the logit gradient here");

  GradcheckArgs gc;
  auto * g = app.add_subcommand("gradcheck", "Finite-difference check of every analytical gradient");
  g->add_option("--config", gc.config, "Run config JSON");
  g->add_option("--seed", gc.seed, "Instance seed (defaults to config seed)");
  g->add_option("--size", gc.size, "Grid side length")->capture_default_str();
  g->add_flag("--corrupt-grad", gc.corrupt, "Test hook: perturb the analytical gradient")
    ->group("");

  TrainArgs train;
  auto * t = app.add_subcommand("train-toy", "Train the toy depth head on a synthetic scene");
  t->add_option("--config", train.config, "Run config JSON");
  t->add_option("--iters", train.iters, "Gradient-descent iterations");
  t->add_option("--lr", train.lr, "Learning rate");
  t->add_option("--trace", train.trace, "JSON-lines training trace");

  SplatArgs sp;
  auto * s = app.add_subcommand("splat", "Lift and splat depth distributions into a BEV grid");
  s->add_option("--pred", sp.pred, "Predicted distribution (views, bins, rows, cols)")->required();
  s->add_option("--ctx", sp.ctx, "Context features (views, channels, rows, cols)")->required();
  s->add_option("--calib", sp.calib, "Calibration JSON")->required();
  s->add_option("--config", sp.config, "Run config JSON");
  s->add_option("--out", sp.out, "Output EALSS1 grid (a .json sidecar is written next to it)")
    ->required();
  s->add_flag("--bench", sp.bench, "Report wall time");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp & err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp & err) {
    return app.exit(err);
  } catch (const CLI::ParseError & err) {
    app.exit(err);
    return kUsage;
  }

  try {
    if (*p) return cmd_project(project);
    if (*e) return cmd_eadf(eadf);
    if (*l) return cmd_loss(loss);
    if (*g) return cmd_gradcheck(gc);
    if (*t) return cmd_train_toy(train);
    if (*s) return cmd_splat(sp);
  } catch (const ealss::DivergenceError & err) {
    std::cerr << "error: " << err.what() << '\n';
    return kCheckFailed;
  } catch (const std::exception & err) {
    std::cerr << "error: " << err.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
