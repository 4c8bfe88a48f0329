#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "lpffd/image.hpp"
#include "lpffd/shapes.hpp"
#include "oracles.hpp"

using namespace lpffd;

namespace {

LatticeGrid image_grid(const Image& img, std::vector<int> dims) {
  return LatticeGrid(std::move(dims), Box{Eigen::Vector2d(0, 0), Eigen::Vector2d(img.width / 10.0, img.height / 10.0)});
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("lpffd_test_" + name)).string();
}

}  // namespace

TEST(WarpImage, RestGridReproducesCoveredPixels) {
  const Image img = shapes::flag_image();
  const LatticeGrid grid = image_grid(img, {10, 10});
  const WarpResult r = warp_image(grid, img, 80);
  size_t covered = 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      if (!r.coverage[static_cast<size_t>(y) * img.width + x]) continue;
      ++covered;
      for (int c = 0; c < 3; ++c) ASSERT_EQ(r.image.at(x, y, c), img.at(x, y, c)) << x << ',' << y;
    }
  EXPECT_EQ(covered, static_cast<size_t>(img.width) * img.height);
}

TEST(WarpImage, NodesMatchDirectEvaluation) {
  std::mt19937 rng(9);
  std::normal_distribution<double> g;
  const Image img = shapes::flag_image();
  LatticeGrid grid = image_grid(img, {6, 7});
  Points P = grid.rest();
  for (int i = 0; i < P.rows(); ++i) P.row(i) += 0.3 * Eigen::RowVector2d(g(rng), g(rng));
  grid.set_current(P);
  const int tess = 24;
  const Points nodes = warp_nodes(grid, tess);
  const Points params = tessellation_params(tess);
  ASSERT_EQ(nodes.rows(), (tess + 1) * (tess + 1));
  for (int k = 0; k < nodes.rows(); ++k)
    ASSERT_LT((nodes.row(k) - oracle::ffd_point({6, 7}, P, params.row(k))).cwiseAbs().maxCoeff(), 1e-12) << k;
}

TEST(WarpImage, TranslationShiftsContent) {
  const Image img = shapes::flag_image();
  LatticeGrid grid = image_grid(img, {5, 5});
  // exactly 8 pixels to the right
  grid.set_current(grid.rest().rowwise() + Eigen::RowVector2d(0.8, 0.0));
  const WarpResult r = warp_image(grid, img, 40);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const bool covered = r.coverage[static_cast<size_t>(y) * img.width + x];
      EXPECT_EQ(covered, x >= 8) << x << ',' << y;
      if (covered)
        for (int c = 0; c < 3; ++c) ASSERT_NEAR(r.image.at(x, y, c), img.at(x - 8, y, c), 1) << x << ',' << y;
    }
}

TEST(WarpImage, RejectsCoarseTessellationAndEmptyImage) {
  const Image img = shapes::flag_image();
  const LatticeGrid grid = image_grid(img, {10, 10});
  EXPECT_THROW(warp_image(grid, img, 9), Error);
  EXPECT_THROW(warp_image(grid, Image{}, 20), Error);
  const LatticeGrid grid3({3, 3, 3}, Box{Eigen::Vector3d::Zero(), Eigen::Vector3d::Ones()});
  EXPECT_THROW(warp_nodes(grid3, 4), Error);
}

TEST(Ppm, RoundTripIsExact) {
  const Image img = shapes::flag_image(33, 17);
  const std::string path = temp_path("roundtrip.ppm");
  write_ppm(img, path);
  const Image back = read_ppm(path);
  EXPECT_EQ(back.width, 33);
  EXPECT_EQ(back.height, 17);
  EXPECT_EQ(back.data, img.data);
  std::filesystem::remove(path);
}

TEST(Ppm, HeaderCommentsAreSkipped) {
  const std::string path = temp_path("comment.ppm");
  {
    std::ofstream out(path, std::ios::binary);
    out << "P6\n# made by hand\n2 1\n255\n";
    const unsigned char px[6] = {1, 2, 3, 250, 251, 252};
    out.write(reinterpret_cast<const char*>(px), 6);
  }
  const Image img = read_ppm(path);
  EXPECT_EQ(img.at(1, 0, 2), 252);
  std::filesystem::remove(path);
}

TEST(Ppm, ErrorsAreTyped) {
  try {
    read_ppm(temp_path("missing.ppm"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotFound);
  }
  const std::string path = temp_path("ascii.ppm");
  {
    std::ofstream out(path);
    out << "P3\n1 1\n255\n0 0 0\n";
  }
  try {
    read_ppm(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidInput);
  }
  std::filesystem::remove(path);
}
