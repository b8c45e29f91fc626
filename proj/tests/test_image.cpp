#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <vector>

#include "test_util.hpp"
#include "wseg/image.hpp"
#include "wseg/image_io.hpp"

using namespace wseg;

namespace {

// Reference implementation written independently of the library.
double bilinear_at(const Plane& src, int out_h, int out_w, int y, int x) {
  const auto sample = [](double s, int n, int& i0, int& i1, double& f) {
    s = std::clamp(s, 0.0, n - 1.0);
    i0 = static_cast<int>(std::floor(s));
    i1 = std::min(i0 + 1, n - 1);
    f = s - i0;
  };
  int y0, y1, x0, x1;
  double fy, fx;
  sample((y + 0.5) * src.rows() / out_h - 0.5, static_cast<int>(src.rows()), y0, y1, fy);
  sample((x + 0.5) * src.cols() / out_w - 0.5, static_cast<int>(src.cols()), x0, x1, fx);
  return (1 - fy) * ((1 - fx) * src(y0, x0) + fx * src(y0, x1)) + fy * ((1 - fx) * src(y1, x0) + fx * src(y1, x1));
}

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream f(p, std::ios::binary);
  f << bytes;
}

}  // namespace

TEST_SUITE("image") {
  TEST_CASE("grayscale uses Rec.601 weights") {
    Image img(1, 3, 3);
    const float px[3][3] = {{1, 1, 1}, {1, 0, 0}, {0.2f, 0.4f, 0.6f}};
    for (int x = 0; x < 3; ++x)
      for (int c = 0; c < 3; ++c) img.at(0, x, c) = px[x][c];
    const Image g = to_grayscale(img);
    REQUIRE(g.channels() == 1);
    CHECK(g.at(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(g.at(0, 1) == doctest::Approx(0.299).epsilon(1e-6));
    CHECK(g.at(0, 2) == doctest::Approx(0.363).epsilon(1e-5));
    const Image again = to_grayscale(g);
    CHECK((again.data() == g.data()).all());
  }

  TEST_CASE("bilinear resize") {
    Plane c = Plane::Constant(3, 5, 0.42f);
    const Plane big = resize_bilinear<float>(c, 7, 2);
    CHECK(big.rows() == 7);
    CHECK(big.cols() == 2);
    CHECK((big - 0.42f).abs().maxCoeff() < 1e-6f);

    std::mt19937_64 rng(3);
    const Plane r = testutil::random_plane(6, 4, rng);
    CHECK((resize_bilinear<float>(r, 6, 4) - r).abs().maxCoeff() < 1e-6f);

    Plane chk(2, 2);
    chk << 0, 1, 1, 0;
    const Plane up = resize_bilinear<float>(chk, 4, 4);
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) CHECK(up(y, x) == doctest::Approx(bilinear_at(chk, 4, 4, y, x)).epsilon(1e-6));
    CHECK(up(0, 0) == doctest::Approx(0.0));
    CHECK(up(1, 1) == doctest::Approx(0.375));

    const Plane down = resize_bilinear<float>(r, 3, 3);
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 3; ++x) CHECK(down(y, x) == doctest::Approx(bilinear_at(r, 3, 3, y, x)).epsilon(1e-6));

    CHECK_THROWS_AS(resize_bilinear<float>(r, 0, 3), ArgumentError);
    CHECK_THROWS_AS(resize_bilinear(Image(2, 2, 3), 2, 0), ArgumentError);
  }

  TEST_CASE("gaussian blur") {
    CHECK_THROWS_AS(gaussian_kernel(0.0), ArgumentError);
    CHECK_THROWS_AS(gaussian_blur(Image(4, 4, 1), -1.0), ArgumentError);
    const auto k = gaussian_kernel(1.5);
    CHECK(k.size() == 11);
    double s = 0.0;
    for (double v : k) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));

    CHECK(reflect101(-1, 5) == 1);
    CHECK(reflect101(-2, 5) == 2);
    CHECK(reflect101(5, 5) == 3);
    CHECK(reflect101(6, 5) == 2);

    const Image flat(8, 9, 3, 0.7f);
    for (double sigma : {0.5, 1.0, 3.0}) {
      const Image b = gaussian_blur(flat, sigma);
      CHECK((b.data() - 0.7f).abs().maxCoeff() < 1e-6f);
    }

    Plane impulse = Plane::Zero(9, 9);
    impulse(4, 4) = 1.0f;
    const Plane bi = gaussian_blur<float>(impulse, 1.0);
    CHECK(std::abs(bi(4, 4) - testutil::dense_blur(impulse, 1.0)(4, 4)) < 1e-6);
    const auto k1 = gaussian_kernel(1.0);
    CHECK(bi(4, 4) == doctest::Approx(k1[3] * k1[3]).epsilon(1e-5));

    std::mt19937_64 rng(11);
    for (double sigma : {0.8, 1.0, 2.0}) {
      const Plane r = testutil::random_plane(16, 16, rng);
      CHECK((gaussian_blur<float>(r, sigma) - testutil::dense_blur(r, sigma)).abs().maxCoeff() < 1e-6f);
    }
  }

  TEST_CASE("gaussian noise") {
    const Image gray(8, 8, 3, 0.3f);
    CHECK((add_gaussian_noise(gray, 0.0, 5).data() == gray.data()).all());
    const Image a = add_gaussian_noise(gray, 0.1, 5);
    const Image b = add_gaussian_noise(gray, 0.1, 5);
    const Image c = add_gaussian_noise(gray, 0.1, 6);
    CHECK((a.data() == b.data()).all());
    CHECK(!(a.data() == c.data()).all());
    CHECK(a.data().minCoeff() >= 0.0f);
    CHECK(a.data().maxCoeff() <= 1.0f);

    const Image mid(1000, 1000, 1, 0.5f);
    const Image n = add_gaussian_noise(mid, 0.1, 1234);
    const double mean = (n.data().cast<double>() - 0.5).mean();
    CHECK(std::abs(mean) < 1e-3);
  }

  TEST_CASE("down_up_sample") {
    const Image flat(16, 16, 3, 0.25f);
    CHECK((down_up_sample(flat, 4).data() - 0.25f).abs().maxCoeff() < 1e-6f);
    std::mt19937_64 rng(2);
    const Image r = testutil::random_image(12, 20, 3, rng);
    const Image d = down_up_sample(r, 4);
    CHECK(d.height() == 12);
    CHECK(d.width() == 20);
    CHECK(d.channels() == 3);

    const Image sq = testutil::random_image(8, 8, 1, rng);
    const Image u = down_up_sample(sq, 8);
    const Image oracle = resize_bilinear(resize_bilinear(sq, 1, 1), 8, 8);
    CHECK((u.data() - oracle.data()).abs().maxCoeff() < 1e-6f);
    CHECK(u.data().maxCoeff() - u.data().minCoeff() < 1e-6f);

    CHECK_THROWS_AS(down_up_sample(sq, 1), ArgumentError);
    CHECK_THROWS_AS(down_up_sample(sq, 16), ArgumentError);
  }

  TEST_CASE("pgm and png reading") {
    const auto dir = testutil::scratch("image_io");
    write_bytes(dir / "a.pgm", std::string("P5\n2 2\n255\n") + std::string("\x00\xff\x80\x40", 4));
    const Image g = load_image(dir / "a.pgm");
    REQUIRE(g.channels() == 1);
    CHECK(g.at(0, 0) == 0.0f);
    CHECK(g.at(0, 1) == 1.0f);
    CHECK(g.at(1, 0) == doctest::Approx(0.50196).epsilon(1e-5));
    CHECK(g.at(1, 1) == doctest::Approx(0.25098).epsilon(1e-5));

    std::mt19937_64 rng(9);
    const Image rgb = testutil::random_image(64, 64, 3, rng);
    save_image(rgb, dir / "rgb.png");
    const Image back = load_image(dir / "rgb.png");
    CHECK(back.height() == 64);
    CHECK(back.width() == 64);
    CHECK(back.channels() == 3);
    CHECK((back.data() - rgb.data()).abs().maxCoeff() <= 0.5f / 255.0f + 1e-6f);

    std::ifstream in(dir / "rgb.png", std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    write_bytes(dir / "cut.png", bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(load_image(dir / "cut.png"), FormatError);
    write_bytes(dir / "junk.png", "definitely not an image");
    CHECK_THROWS_AS(load_image(dir / "junk.png"), FormatError);
    write_bytes(dir / "deep.pgm", std::string("P5\n1 1\n65535\n") + std::string("\x01\x02", 2));
    CHECK_THROWS_AS(load_image(dir / "deep.pgm"), FormatError);
    CHECK_THROWS_AS(load_image(dir / "missing.png"), IoError);
  }

  TEST_CASE("png writing") {
    const auto dir = testutil::scratch("image_save");
    BinaryMask m(1, 2);
    m(0, 0) = 1;
    save_image(m, dir / "m.png");
    const Image mb = load_image(dir / "m.png");
    CHECK(mb.at(0, 0) * 255.0f == 255.0f);
    CHECK(mb.at(0, 1) == 0.0f);
    CHECK(load_mask(dir / "m.png") == m);

    save_image(TextureMap(1, 1, 0.5f), dir / "t.png");
    CHECK(std::lround(load_image(dir / "t.png").at(0, 0) * 255.0f) == 128);

    Image gray(1, 2, 1);
    gray.at(0, 0) = 120.0f / 255.0f;
    gray.at(0, 1) = 130.0f / 255.0f;
    save_image(gray, dir / "g.png");
    const BinaryMask gm = load_mask(dir / "g.png");
    CHECK(gm(0, 0) == 0);
    CHECK(gm(0, 1) == 1);

    CHECK_THROWS_AS(save_image(m, dir / "no_such_dir" / "m.png"), IoError);
  }

  TEST_CASE("image validation") {
    Image img(2, 2, 3, 0.5f);
    CHECK_NOTHROW(img.validate());
    img.at(1, 1, 2) = 1.5f;
    CHECK_THROWS_AS(img.validate(), FormatError);
    CHECK_THROWS(Image(2, 2, 2));
  }
}
