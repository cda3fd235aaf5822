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

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <filesystem>
#include <string>

#include "ealss/io.hpp"
#include "ealss/random.hpp"

namespace
{

using namespace ealss;
namespace fs = std::filesystem;

fs::path temp_dir(const std::string & name)
{
  auto dir = fs::temp_directory_path() / ("ealss_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Tensor<double> random_tensor(Rng & rng)
{
  Shape shape(1 + rng.below(4));
  for (auto & d : shape) {
    d = rng.below(5);
  }
  Tensor<double> t(shape);
  for (double & x : t.values()) {
    x = rng.normal() * std::pow(10.0, rng.uniform(-20, 20));
  }
  return t;
}

TEST(TensorFormat, RoundTripF64IsExact)
{
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto t = random_tensor(rng);
    EXPECT_EQ(io::decode_tensor(io::encode_tensor(t)), t);
  }
}

TEST(TensorFormat, RoundTripF32RoundsToFloat)
{
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const auto t = random_tensor(rng);
    const auto back = io::decode_tensor(io::encode_tensor(t, io::DType::kF32));
    ASSERT_EQ(back.shape(), t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) {
      EXPECT_EQ(back[i], static_cast<double>(static_cast<float>(t[i])));
    }
  }
}

TEST(TensorFormat, HeaderLayout)
{
  Tensor<double> t({2, 1}, std::vector<double>{1.0, -2.0});
  const auto bytes = io::encode_tensor(t);
  const std::string header = "EALSS1\ndims: 2 1\ndtype: f64\n";
  ASSERT_EQ(bytes.substr(0, header.size()), header);
  ASSERT_EQ(bytes.size(), header.size() + 16);
  // little-endian 1.0
  EXPECT_EQ(static_cast<unsigned char>(bytes[header.size() + 7]), 0x3F);
  EXPECT_EQ(static_cast<unsigned char>(bytes[header.size() + 6]), 0xF0);
  EXPECT_EQ(bytes[header.size()], 0);
}

TEST(TensorFormat, MalformedInputsAreRejected)
{
  const auto good = io::encode_tensor(Tensor<double>({2, 2}, 1.0));
  EXPECT_THROW(io::decode_tensor("EALSS2\ndims: 1\ndtype: f64\n"), InputError);
  EXPECT_THROW(io::decode_tensor("EALSS1\nshape: 1\ndtype: f64\n12345678"), InputError);
  EXPECT_THROW(io::decode_tensor("EALSS1\ndims: x\ndtype: f64\n12345678"), InputError);
  EXPECT_THROW(io::decode_tensor("EALSS1\ndims:\ndtype: f64\n"), InputError);
  EXPECT_THROW(io::decode_tensor("EALSS1\ndims: 1\ndtype: i32\n1234"), InputError);
  EXPECT_THROW(io::decode_tensor("EALSS1\ndims: 1"), InputError);
  EXPECT_THROW(io::decode_tensor(good.substr(0, good.size() - 1)), InputError);
  EXPECT_THROW(io::decode_tensor(good + "x"), InputError);
  EXPECT_NO_THROW(io::decode_tensor(good));
}

TEST(TensorFormat, FileRoundTripAndMissingFile)
{
  const auto dir = temp_dir("tensor");
  Rng rng(13);
  const auto t = random_tensor(rng);
  io::write_tensor(dir / "t.bin", t);
  EXPECT_EQ(io::read_tensor(dir / "t.bin"), t);
  EXPECT_THROW(io::read_tensor(dir / "missing.bin"), InputError);
}

TEST(Pgm, HeaderAndBigEndianSamples)
{
  const std::vector<double> plane{0.0, 30.0, 60.0, 90.0, -1.0, 15.0};
  const auto bytes = io::encode_pgm(plane, 2, 3, 1.0 / 60.0);
  const std::string header = "P5\n3 2\n65535\n";
  ASSERT_EQ(bytes.substr(0, header.size()), header);
  ASSERT_EQ(bytes.size(), header.size() + 12);
  const auto sample = [&](std::size_t i) {
    const auto hi = static_cast<unsigned char>(bytes[header.size() + 2 * i]);
    const auto lo = static_cast<unsigned char>(bytes[header.size() + 2 * i + 1]);
    return hi * 256 + lo;
  };
  EXPECT_EQ(sample(0), 0);
  EXPECT_EQ(sample(1), 32768);  // round(0.5 * 65535)
  EXPECT_EQ(sample(2), 65535);
  EXPECT_EQ(sample(3), 65535);  // clamped
  EXPECT_EQ(sample(4), 0);
  EXPECT_EQ(sample(5), 16384);
}

TEST(Pgm, OneFilePerView)
{
  const auto dir = temp_dir("pgm");
  const DepthStack stack({6, 4, 5}, 0.5);
  const auto files = io::export_pgm(stack, dir / "edges", io::PgmKind::kEdge);
  ASSERT_EQ(files.size(), 6u);
  for (std::size_t v = 0; v < 6; ++v) {
    EXPECT_EQ(files[v], dir / ("edges_v" + std::to_string(v) + ".pgm"));
    EXPECT_TRUE(fs::exists(files[v]));
  }
  EXPECT_THROW(io::export_pgm(stack, dir / "d", io::PgmKind::kDepth, 0.0), ConfigError);
}

TEST(PointText, ParsesCommentsBlankLinesAndIntensity)
{
  const auto cloud = io::parse_point_text("# header\n1, 2, 3\n\n  4.5,-5,6e1,0.25\r\n");
  ASSERT_EQ(cloud.size(), 2u);
  EXPECT_EQ(cloud.points[1].x, 4.5);
  EXPECT_EQ(cloud.points[1].y, -5.0);
  EXPECT_EQ(cloud.points[1].z, 60.0);
  ASSERT_EQ(cloud.intensity.size(), 2u);
  EXPECT_EQ(cloud.intensity[1], 0.25f);

  const auto plain = io::parse_point_text("1,2,3\n");
  EXPECT_TRUE(plain.intensity.empty());
  EXPECT_EQ(io::parse_point_text("").size(), 0u);
}

TEST(PointText, RejectsMalformedLines)
{
  EXPECT_THROW(io::parse_point_text("1,2\n"), InputError);
  EXPECT_THROW(io::parse_point_text("1,2,3,4,5\n"), InputError);
  EXPECT_THROW(io::parse_point_text("1,x,3\n"), InputError);
  EXPECT_THROW(io::parse_point_text("1,,3\n"), InputError);
  EXPECT_THROW(io::parse_point_text("1,2,nan\n"), InputError);
}

TEST(PointBinary, RoundTripAndSizeCheck)
{
  const auto dir = temp_dir("points");
  geometry::PointCloud cloud;
  cloud.points = {{1.5, -2.0, 3.25}, {0.0, 0.0, 40.0}};
  cloud.intensity = {0.5f, 1.0f};
  io::write_point_cloud_binary(dir / "c.bin", cloud);
  EXPECT_EQ(fs::file_size(dir / "c.bin"), 32u);
  const auto back = io::read_point_cloud(dir / "c.bin");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.points[0].y, -2.0);
  EXPECT_EQ(back.intensity[1], 1.0f);
  EXPECT_THROW(io::parse_point_binary(std::string(15, '\0')), InputError);
}

TEST(Calibration, RoundTrip)
{
  std::vector<geometry::CameraCalib> calibs{
    geometry::make_pinhole(0, 500, 510, 352, 128), geometry::make_pinhole(1, 400, 400, 10, 20)};
  calibs[1].ego_from_camera[0][3] = 1.5;
  const auto back = io::parse_calibs(io::calibs_to_json(calibs).dump());
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].view_id, calibs[i].view_id);
    EXPECT_EQ(back[i].intrinsics, calibs[i].intrinsics);
    EXPECT_EQ(back[i].ego_from_camera, calibs[i].ego_from_camera);
  }
}

TEST(Calibration, StrictParsing)
{
  const std::string k = R"([[1,0,0],[0,1,0],[0,0,1]])";
  const std::string e = R"([[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]])";
  const auto cam = [&](const std::string & extra) {
    return R"([{"view_id":0,"intrinsics":)" + k + R"(,"ego_from_camera":)" + e + extra + "}]";
  };
  EXPECT_NO_THROW(io::parse_calibs(cam("")));
  EXPECT_THROW(io::parse_calibs(cam(R"(,"distortion":[0])")), InputError);
  EXPECT_THROW(io::parse_calibs("{not json"), InputError);
  EXPECT_THROW(io::parse_calibs(R"({"view_id":0})"), InputError);
  EXPECT_THROW(io::parse_calibs(R"([{"view_id":"a","intrinsics":)" + k + R"(,"ego_from_camera":)" + e + "}]"),
               InputError);
  EXPECT_THROW(io::parse_calibs(R"([{"view_id":0,"intrinsics":[[1,0],[0,1]],"ego_from_camera":)" + e + "}]"),
               InputError);
  EXPECT_THROW(io::parse_calibs(R"([{"view_id":0,"intrinsics":)" + k + "}]"), InputError);
}

}  // namespace
