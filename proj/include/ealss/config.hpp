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

#ifndef EALSS__CONFIG_HPP_
#define EALSS__CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>

#include "ealss/eadf.hpp"
#include "ealss/errors.hpp"
#include "ealss/geometry.hpp"
#include "ealss/io.hpp"
#include "ealss/splat.hpp"
#include "ealss/supervision.hpp"
#include "ealss/toy_head.hpp"
#include "json.hpp"

// Run configuration. Every key is optional and falls back to the defaults below
// (k = 7, gamma = 2.0, alpha = 0.25, 40 bins over [1, 60) m, 6 views of 256 x 704);
// unknown keys and wrongly typed values are rejected with the offending path.

namespace ealss::config
{

struct ShapeConfig
{
  std::size_t n_views{6};
  std::size_t height{256};
  std::size_t width{704};
};

struct RunConfig
{
  eadf::EadfConfig eadf;
  supervision::DepthBinning binning;
  supervision::FocalParams focal;
  ShapeConfig shape;
  splat::BevGridSpec grid;
  std::uint64_t seed{0};
  toy::SceneConfig scene;
  toy::TrainOptions train;

  geometry::DepthRange depth_range() const { return {binning.d_min, binning.d_max}; }
  geometry::ImageShape image_shape() const { return {shape.height, shape.width}; }
};

namespace detail
{

using nlohmann::json;

inline void check_keys(const json & obj, const std::string & path, std::initializer_list<std::string_view> keys)
{
  if (!obj.is_object()) {
    throw ConfigError(path + " must be an object");
  }
  for (const auto & [key, _] : obj.items()) {
    bool known = false;
    for (auto k : keys) {
      known = known || key == k;
    }
    if (!known) {
      throw ConfigError("unknown config key " + path + "." + key);
    }
  }
}

inline void read(const json & obj, const std::string & path, const char * key, double & out)
{
  if (!obj.contains(key)) {
    return;
  }
  if (!obj[key].is_number()) {
    throw ConfigError(path + "." + key + " must be a number");
  }
  out = obj[key].get<double>();
}

inline void read(const json & obj, const std::string & path, const char * key, std::size_t & out)
{
  if (!obj.contains(key)) {
    return;
  }
  if (!obj[key].is_number_unsigned()) {
    throw ConfigError(path + "." + key + " must be a non-negative integer");
  }
  out = obj[key].get<std::size_t>();
}

inline void read(const json & obj, const std::string & path, const char * key, bool & out)
{
  if (!obj.contains(key)) {
    return;
  }
  if (!obj[key].is_boolean()) {
    throw ConfigError(path + "." + key + " must be true or false");
  }
  out = obj[key].get<bool>();
}

template <typename Fn>
void rethrow_with(const std::string & path, Fn && fn)
{
  try {
    fn();
  } catch (const ConfigError & e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace detail

/// Checks every component invariant; throws ConfigError naming the section.
inline void validate(const RunConfig & cfg)
{
  detail::rethrow_with("config.binning", [&] {
    supervision::validate(cfg.binning);
    geometry::validate(cfg.depth_range());
  });
  detail::rethrow_with("config.focal", [&] { supervision::validate(cfg.focal); });
  detail::rethrow_with("config.grid", [&] { splat::validate(cfg.grid); });
  detail::rethrow_with("config.toy", [&] { toy::validate(cfg.scene); });
  if (cfg.shape.n_views < 1 || cfg.shape.height < 1 || cfg.shape.width < 1) {
    throw ConfigError("config.shape: n_views, height and width must be >= 1");
  }
  detail::rethrow_with("config.k", [&] {
    eadf::validate(cfg.eadf, cfg.shape.height, cfg.shape.width);
  });
  if (cfg.train.downscale < 1) {
    throw ConfigError("config.toy.downscale must be >= 1");
  }
  if (cfg.scene.height % cfg.train.downscale || cfg.scene.width % cfg.train.downscale) {
    throw ConfigError("config.toy.downscale must divide the toy height and width");
  }
  if (!(cfg.train.lr >= 0.0) || !std::isfinite(cfg.train.lr)) {
    throw ConfigError("config.toy.lr must be finite and >= 0");
  }
}

inline RunConfig from_json(const nlohmann::json & doc)
{
  using detail::read;
  RunConfig cfg;
  detail::check_keys(doc, "config", {"k", "binning", "focal", "shape", "grid", "seed", "toy"});
  read(doc, "config", "k", cfg.eadf.k);
  std::size_t seed = cfg.seed;
  read(doc, "config", "seed", seed);
  cfg.seed = seed;
  if (doc.contains("binning")) {
    const auto & b = doc["binning"];
    detail::check_keys(b, "config.binning", {"d_min", "d_max", "n_bins"});
    read(b, "config.binning", "d_min", cfg.binning.d_min);
    read(b, "config.binning", "d_max", cfg.binning.d_max);
    read(b, "config.binning", "n_bins", cfg.binning.n_bins);
  }
  if (doc.contains("focal")) {
    const auto & f = doc["focal"];
    detail::check_keys(f, "config.focal", {"alpha", "gamma"});
    read(f, "config.focal", "alpha", cfg.focal.alpha);
    read(f, "config.focal", "gamma", cfg.focal.gamma);
  }
  if (doc.contains("shape")) {
    const auto & s = doc["shape"];
    detail::check_keys(s, "config.shape", {"n_views", "height", "width"});
    read(s, "config.shape", "n_views", cfg.shape.n_views);
    read(s, "config.shape", "height", cfg.shape.height);
    read(s, "config.shape", "width", cfg.shape.width);
  }
  if (doc.contains("grid")) {
    const auto & g = doc["grid"];
    detail::check_keys(
      g, "config.grid", {"x_min", "x_max", "y_min", "y_max", "z_min", "z_max", "resolution"});
    read(g, "config.grid", "x_min", cfg.grid.x_min);
    read(g, "config.grid", "x_max", cfg.grid.x_max);
    read(g, "config.grid", "y_min", cfg.grid.y_min);
    read(g, "config.grid", "y_max", cfg.grid.y_max);
    read(g, "config.grid", "z_min", cfg.grid.z_min);
    read(g, "config.grid", "z_max", cfg.grid.z_max);
    read(g, "config.grid", "resolution", cfg.grid.resolution);
  }
  if (doc.contains("toy")) {
    const auto & t = doc["toy"];
    detail::check_keys(
      t, "config.toy",
      {"views", "height", "width", "n_boxes", "sparsity", "noise", "blur", "align", "downscale",
       "lr", "iters", "use_eadf"});
    read(t, "config.toy", "views", cfg.scene.views);
    read(t, "config.toy", "height", cfg.scene.height);
    read(t, "config.toy", "width", cfg.scene.width);
    read(t, "config.toy", "n_boxes", cfg.scene.n_boxes);
    read(t, "config.toy", "sparsity", cfg.scene.sparsity);
    read(t, "config.toy", "noise", cfg.scene.noise);
    read(t, "config.toy", "blur", cfg.scene.blur);
    read(t, "config.toy", "align", cfg.scene.align);
    read(t, "config.toy", "downscale", cfg.train.downscale);
    read(t, "config.toy", "lr", cfg.train.lr);
    read(t, "config.toy", "iters", cfg.train.iters);
    read(t, "config.toy", "use_eadf", cfg.train.use_eadf);
  }
  validate(cfg);
  return cfg;
}

inline RunConfig parse(std::string_view text)
{
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error & e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(doc);
}

inline RunConfig load(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config " + path.string());
  }
  const std::string text(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>{});
  return parse(text);
}

inline nlohmann::json to_json(const RunConfig & c)
{
  return {
    {"k", c.eadf.k},
    {"binning", {{"d_min", c.binning.d_min}, {"d_max", c.binning.d_max}, {"n_bins", c.binning.n_bins}}},
    {"focal", {{"alpha", c.focal.alpha}, {"gamma", c.focal.gamma}}},
    {"shape", {{"n_views", c.shape.n_views}, {"height", c.shape.height}, {"width", c.shape.width}}},
    {"grid",
     {{"x_min", c.grid.x_min},
      {"x_max", c.grid.x_max},
      {"y_min", c.grid.y_min},
      {"y_max", c.grid.y_max},
      {"z_min", c.grid.z_min},
      {"z_max", c.grid.z_max},
      {"resolution", c.grid.resolution}}},
    {"seed", c.seed},
    {"toy",
     {{"views", c.scene.views},
      {"height", c.scene.height},
      {"width", c.scene.width},
      {"n_boxes", c.scene.n_boxes},
      {"sparsity", c.scene.sparsity},
      {"noise", c.scene.noise},
      {"blur", c.scene.blur},
      {"align", c.scene.align},
      {"downscale", c.train.downscale},
      {"lr", c.train.lr},
      {"iters", c.train.iters},
      {"use_eadf", c.train.use_eadf}}}};
}

}  // namespace ealss::config

#endif  // EALSS__CONFIG_HPP_
