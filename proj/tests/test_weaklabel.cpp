#include <doctest.h>

#include <random>

#include "test_util.hpp"
#include "wseg/weaklabel.hpp"

using namespace wseg;

TEST_SUITE("weaklabel") {
  TEST_CASE("config validation") {
    TextureConfig c;
    CHECK_NOTHROW(c.validate());
    c.sigma = 0.0;
    CHECK_THROWS_AS(c.validate(), ArgumentError);
    c = {};
    c.scale = -1.0;
    CHECK_THROWS_AS(c.validate(), ArgumentError);
    c = {};
    c.binarize_threshold = 1.0;
    CHECK_THROWS_AS(c.validate(), ArgumentError);
    c.binarize_threshold = 0.3;
    const TextureConfig back = TextureConfig::from_json(c.to_json());
    CHECK(back.sigma == c.sigma);
    CHECK(back.scale == c.scale);
    CHECK(back.binarize_threshold == c.binarize_threshold);
  }

  TEST_CASE("constant image has no texture") {
    for (float v : {0.0f, 0.3f, 1.0f}) {
      const TextureMap t = extract_texture(Image(12, 10, 3, v));
      CHECK(t.data.abs().maxCoeff() <= 1e-6f);
    }
  }

  TEST_CASE("step edge matches the dense oracle") {
    Plane step = Plane::Zero(16, 16);
    step.rightCols(8) = 1.0f;
    TextureConfig cfg;
    cfg.sigma = 1.0;
    const TextureMap t = extract_texture(Image::from_plane(step), cfg);
    const Plane blurred = testutil::dense_blur(step, 1.0);
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) {
        const double expect = std::clamp(std::abs(step(y, x) - blurred(y, x)) / cfg.scale, 0.0, 1.0);
        CHECK(t.data(y, x) == doctest::Approx(expect).epsilon(1e-5));
        if (std::abs(x + 0.5 - 8.0) >= 3.0) CHECK(t.data(y, x) < 1e-4f);
      }
      CHECK(t.data(y, 7) > 0.5f);
      CHECK(t.data(y, 8) > 0.5f);
    }
  }

  TEST_CASE("texture stays in [0, 1]") {
    std::mt19937_64 rng(4);
    const TextureMap t = extract_texture(testutil::random_image(20, 24, 3, rng), {1.5, 0.05, std::nullopt});
    CHECK(t.data.minCoeff() >= 0.0f);
    CHECK(t.data.maxCoeff() <= 1.0f);
    CHECK(t.data.maxCoeff() == 1.0f);
  }

  TEST_CASE("face masking") {
    const TextureMap t(4, 4, 0.5f);
    CHECK((apply_face_mask(t, BinaryMask(4, 4, 1)).data == t.data).all());
    CHECK(apply_face_mask(t, BinaryMask(4, 4, 0)).data.abs().maxCoeff() == 0.0f);
    BinaryMask chk(4, 4);
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) chk(y, x) = (x + y) % 2;
    const TextureMap m = apply_face_mask(t, chk);
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) CHECK(m.data(y, x) == (chk(y, x) ? 0.5f : 0.0f));
    CHECK_THROWS_AS(apply_face_mask(t, BinaryMask(4, 5)), ArgumentError);
  }

  TEST_CASE("ellipse fallback") {
    const Image img(100, 100, 3);
    const BinaryMask m = fallback_face_mask(img);
    long expected = 0;
    for (int y = 0; y < 100; ++y) {
      for (int x = 0; x < 100; ++x) {
        const double dx = x + 0.5 - 50.0;
        const double dy = y + 0.5 - 50.0;
        const bool inside = dx * dx / (42.0 * 42.0) + dy * dy / (46.0 * 46.0) <= 1.0;
        expected += inside;
        CHECK(m(y, x) == (inside ? 1 : 0));
      }
    }
    CHECK(m.count() == expected);
    CHECK(fallback_face_mask(img) == m);
    CHECK(fallback_face_mask(100, 100) == m);
  }

  TEST_CASE("binarize") {
    CHECK(binarize_texture(TextureMap(3, 3), 0.5).count() == 0);
    TextureMap t(1, 2);
    t.data << 0.4f, 0.6f;
    const BinaryMask b = binarize_texture(t, 0.5);
    CHECK(b(0, 0) == 0);
    CHECK(b(0, 1) == 1);
    const TextureMap as_map(b.data.cast<float>());
    CHECK(binarize_texture(as_map, 0.5) == b);
    CHECK_THROWS_AS(binarize_texture(t, 0.0), ArgumentError);
    CHECK_THROWS_AS(binarize_texture(t, 1.5), ArgumentError);
  }

  TEST_CASE("weak label is zero off the face") {
    std::mt19937_64 rng(8);
    const Image img = testutil::random_image(32, 32, 3, rng);
    const TextureMap fallback = make_weak_label(img, nullptr);
    const BinaryMask face = fallback_face_mask(img);
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x)
        if (!face(y, x)) CHECK(fallback.data(y, x) == 0.0f);
    BinaryMask left(32, 32);
    left.data.leftCols(16) = 1;
    const TextureMap l = make_weak_label(img, &left);
    CHECK(l.data.rightCols(16).abs().maxCoeff() == 0.0f);
    CHECK((l.data.leftCols(16) == extract_texture(img).data.leftCols(16)).all());
  }
}
