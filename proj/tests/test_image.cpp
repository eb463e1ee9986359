#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstring>
#include <fstream>

#include "doctest.h"
#include "test_util.hpp"
#include "wwe/image.hpp"
#include "wwe/refimpl.hpp"

using wwe::Image;

namespace {

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

std::string p6_header(int w, int h) {
  return "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
}

}  // namespace

TEST_CASE("ppm load maps bytes to [0,1]") {
  const std::string path = testutil::temp_path("load.ppm");
  SUBCASE("all 255 -> 1.0") {
    write_bytes(path, p6_header(2, 2) + std::string(12, static_cast<char>(255)));
    Image img = wwe::load_image(path);
    CHECK(img.channels == 3);
    for (double v : img.data) CHECK(v == 1.0);
  }
  SUBCASE("all 0 -> 0.0") {
    write_bytes(path, p6_header(2, 2) + std::string(12, '\0'));
    for (double v : wwe::load_image(path).data) CHECK(v == 0.0);
  }
  SUBCASE("byte 128 -> 128/255") {
    write_bytes(path, p6_header(2, 2) + std::string(12, static_cast<char>(128)));
    for (double v : wwe::load_image(path).data)
      CHECK(v == doctest::Approx(128.0 / 255.0).epsilon(1e-12));
  }
}

TEST_CASE("ppm save quantization") {
  const std::string path = testutil::temp_path("save.ppm");
  Image img(2, 2, 3);
  SUBCASE("0.5 rounds to byte 128") {
    for (double& v : img.data) v = 0.5;
    wwe::save_image(img, path);
    std::string raw = read_bytes(path);
    CHECK(static_cast<unsigned char>(raw[raw.size() - 1]) == 128);
  }
  SUBCASE("out-of-range samples clamp") {
    for (double& v : img.data) v = 1.7;
    img.data[0] = -0.25;
    wwe::save_image(img, path);
    std::string raw = read_bytes(path);
    CHECK(static_cast<unsigned char>(raw[raw.size() - 12]) == 0);
    CHECK(static_cast<unsigned char>(raw[raw.size() - 1]) == 255);
  }
  SUBCASE("grayscale rejected") {
    Image gray(2, 2, 1, 0.5);
    CHECK_THROWS(wwe::save_image(gray, path));
  }
}

TEST_CASE("ppm round trip within one quantization step") {
  const std::string path = testutil::temp_path("rt.ppm");
  Image img = testutil::random_image(9, 7, 3, 11);
  wwe::save_image(img, path);
  Image back = wwe::load_image(path);
  CHECK(testutil::max_abs_diff(img, back) <= 0.5 / 255.0 + 1e-12);
}

TEST_CASE("pfm round trip is bitwise") {
  for (int c : {1, 3}) {
    const std::string path = testutil::temp_path("rt.pfm");
    Image img = testutil::random_image(6, 5, c, 29 + c);
    wwe::save_image(img, path);
    Image back = wwe::load_image(path);
    REQUIRE(back.same_shape(img));
    CHECK(std::memcmp(back.data.data(), img.data.data(),
                      img.size() * sizeof(double)) == 0);
    // saving again reproduces the file byte for byte
    const std::string path2 = testutil::temp_path("rt2.pfm");
    wwe::save_image(back, path2);
    CHECK(read_bytes(path) == read_bytes(path2));
  }
}

TEST_CASE("pfm rows are stored bottom-up") {
  const std::string path = testutil::temp_path("orient.pfm");
  // file rows: bottom (10, 20) then top (30, 40)
  std::string bytes = "Pf\n2 2\n-1.0\n";
  const float rows[4] = {10.f, 20.f, 30.f, 40.f};
  bytes.append(reinterpret_cast<const char*>(rows), 16);
  write_bytes(path, bytes);
  Image img = wwe::load_image(path);
  CHECK(img.at(0, 0, 0) == 30.0);
  CHECK(img.at(0, 1, 0) == 40.0);
  CHECK(img.at(1, 0, 0) == 10.0);
  CHECK(img.at(1, 1, 0) == 20.0);
  // header written back unchanged
  wwe::save_image(img, path);
  CHECK(read_bytes(path) == bytes);
}

TEST_CASE("malformed inputs are rejected") {
  const std::string path = testutil::temp_path("bad.ppm");
  CHECK_THROWS(wwe::load_image(testutil::temp_path("missing.ppm")));
  write_bytes(path, "P7\n2 2\n255\n" + std::string(12, '\0'));
  CHECK_THROWS(wwe::load_image(path));
  write_bytes(path, "P6\n2 2\n65535\n" + std::string(24, '\0'));
  CHECK_THROWS(wwe::load_image(path));
  write_bytes(path, p6_header(2, 2) + std::string(5, '\0'));  // truncated
  CHECK_THROWS(wwe::load_image(path));
  write_bytes(path, p6_header(1, 1) + std::string(3, '\0'));  // too small
  CHECK_THROWS(wwe::load_image(path));
  write_bytes(path, "P6\n-3 2\n255\n" + std::string(12, '\0'));
  CHECK_THROWS(wwe::load_image(path));
}

TEST_CASE("resize: constants and identity are exact") {
  Image img(4, 6, 3, 0.3);
  Image big = wwe::resize_bilinear(img, 9, 13);
  for (double v : big.data) CHECK(v == 0.3);
  Image same = wwe::resize_bilinear(img, 4, 6);
  CHECK(std::memcmp(same.data.data(), img.data.data(),
                    img.size() * sizeof(double)) == 0);
}

TEST_CASE("resize 2x2 -> 4x4 matches the per-pixel oracle") {
  Image img(2, 2, 3);
  for (int c = 0; c < 3; ++c) {
    img.at(0, 0, c) = 0.0;
    img.at(0, 1, c) = 1.0;
    img.at(1, 0, c) = 0.0;
    img.at(1, 1, c) = 1.0;
  }
  Image out = wwe::resize_bilinear(img, 4, 4);
  const double expect[4] = {0.0, 0.25, 0.75, 1.0};
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      CHECK(out.at(y, x, 0) == doctest::Approx(expect[x]).epsilon(1e-12));

  Image rnd = testutil::random_image(2, 2, 3, 5);
  Image fast = wwe::resize_bilinear(rnd, 4, 4);
  Image ref(4, 4, 3);
  wwe::refimpl::bilinear_resize(rnd.data.data(), 2, 2, 3, ref.data.data(), 4, 4);
  CHECK(testutil::max_abs_diff(fast, ref) == 0.0);
}

TEST_CASE("resize never overshoots the input bounds") {
  Image img = testutil::random_image(13, 9, 3, 77);
  auto mm = [](const Image& m) {
    double lo = 1e300, hi = -1e300;
    for (double v : m.data) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return std::pair{lo, hi};
  };
  auto [ilo, ihi] = mm(img);
  for (auto [nh, nw] : {std::pair{30, 21}, std::pair{7, 5}, std::pair{13, 17}}) {
    auto [olo, ohi] = mm(wwe::resize_bilinear(img, nh, nw));
    CHECK(olo >= ilo - 1e-6);
    CHECK(ohi <= ihi + 1e-6);
  }
  CHECK_THROWS(wwe::resize_bilinear(img, 1, 5));
}

TEST_CASE("operations are pure") {
  Image img = testutil::random_image(8, 8, 3, 123);
  Image a = wwe::resize_bilinear(img, 5, 9);
  Image b = wwe::resize_bilinear(img, 5, 9);
  CHECK(std::memcmp(a.data.data(), b.data.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("pad and crop") {
  Image img = testutil::random_image(5, 6, 3, 9);
  Image padded = wwe::pad_to_multiple(img, 4);
  CHECK(padded.height == 8);
  CHECK(padded.width == 8);
  CHECK(padded.at(7, 7, 1) == img.at(4, 5, 1));  // replicated corner
  Image back = wwe::crop(padded, 5, 6);
  CHECK(testutil::max_abs_diff(back, img) == 0.0);
}
