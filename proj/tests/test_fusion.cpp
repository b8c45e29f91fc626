#include <doctest.h>

#include <random>

#include "test_util.hpp"
#include "wseg/fusion.hpp"
#include "wseg/image_io.hpp"

using namespace wseg;

TEST_SUITE("fusion") {
  TEST_CASE("vote thresholds") {
    AnnotationSet s{"x", {BinaryMask(1, 2), BinaryMask(1, 2), BinaryMask(1, 2)}};
    s.masks[0](0, 0) = s.masks[1](0, 0) = 1;
    s.masks[0](0, 1) = 1;
    const BinaryMask v = majority_vote(s, 2);
    CHECK(v(0, 0) == 1);
    CHECK(v(0, 1) == 0);
    for (int k = 1; k <= 3; ++k) {
      AnnotationSet z{"z", {BinaryMask(3, 3), BinaryMask(3, 3), BinaryMask(3, 3)}};
      CHECK(majority_vote(z, k).count() == 0);
    }
    CHECK_THROWS_AS(majority_vote(s, 0), ArgumentError);
    CHECK_THROWS_AS(majority_vote(s, 4), ArgumentError);
    s.masks[2] = BinaryMask(2, 2);
    CHECK_THROWS_AS(majority_vote(s, 2), ArgumentError);
  }

  TEST_CASE("two of three matches the truth table") {
    // Every 3-bit vote pattern appears at least once per row.
    std::mt19937_64 rng(21);
    AnnotationSet s{"t", {}};
    for (int a = 0; a < 3; ++a) s.masks.push_back(testutil::random_mask(24, 24, 0.5, rng));
    for (int x = 0; x < 8; ++x)
      for (int a = 0; a < 3; ++a) s.masks[a](0, x) = (x >> a) & 1;
    const bool table[8] = {false, false, false, true, false, true, true, true};
    const BinaryMask v = majority_vote(s, 2);
    for (int y = 0; y < 24; ++y)
      for (int x = 0; x < 24; ++x) {
        const int pattern = s.masks[0](y, x) | (s.masks[1](y, x) << 1) | (s.masks[2](y, x) << 2);
        CHECK(v(y, x) == (table[pattern] ? 1 : 0));
      }
    BinaryMask any(24, 24);
    BinaryMask all(24, 24);
    for (int y = 0; y < 24; ++y)
      for (int x = 0; x < 24; ++x) {
        any(y, x) = s.masks[0](y, x) | s.masks[1](y, x) | s.masks[2](y, x);
        all(y, x) = s.masks[0](y, x) & s.masks[1](y, x) & s.masks[2](y, x);
      }
    CHECK(majority_vote(s, 1) == any);
    CHECK(majority_vote(s, 3) == all);
    AnnotationSet one{"o", {s.masks[0]}};
    CHECK(majority_vote(one, 1) == s.masks[0]);
  }

  TEST_CASE("pairwise agreement") {
    BinaryMask a(4, 4);
    BinaryMask b(4, 4);
    a.data.block(0, 0, 1, 4) = 1;
    b.data.block(0, 2, 1, 2) = 1;
    b.data.block(1, 0, 1, 2) = 1;
    AgreementReport r = pairwise_agreement({"p", {a, b}});
    CHECK(r.pairwise_jsi(0, 1) == doctest::Approx(2.0 / 6.0));
    CHECK(r.pairwise_jsi(1, 0) == r.pairwise_jsi(0, 1));
    CHECK(r.pairwise_jsi(0, 0) == 1.0);
    CHECK(r.mean_offdiag == doctest::Approx(2.0 / 6.0));

    r = pairwise_agreement({"same", {a, a, a}});
    CHECK((r.pairwise_jsi.array() == 1.0).all());
    BinaryMask c(4, 4);
    c.data.block(3, 0, 1, 4) = 1;
    r = pairwise_agreement({"disjoint", {a, c}});
    CHECK(r.pairwise_jsi(0, 1) == 0.0);
    CHECK_THROWS_AS(pairwise_agreement({"bad", {a, BinaryMask(3, 4)}}), ArgumentError);
    CHECK(r.to_json()["pairwise_jsi"].size() == 2);
  }

  TEST_CASE("loading annotation files") {
    const auto dir = testutil::scratch("fusion_load");
    std::mt19937_64 rng(5);
    std::vector<BinaryMask> masks;
    for (int i = 1; i <= 3; ++i) {
      masks.push_back(testutil::random_mask(8, 6, 0.3, rng));
      save_image(masks.back(), annotator_mask_path(dir, "img7", i));
    }
    CHECK(annotator_mask_path(dir, "img7", 2).filename() == "img7.a2.png");
    CHECK(fused_mask_path(dir, "img7").filename() == "img7.gt.png");
    const AnnotationSet s = load_annotation_set(dir, "img7");
    REQUIRE(s.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(s.masks[i] == masks[i]);

    save_image(masks[0], annotator_mask_path(dir, "solo", 1));
    CHECK(load_annotation_set(dir, "solo").size() == 1);
    CHECK_THROWS_AS(load_annotation_set(dir, "nobody"), NotFoundError);

    save_image(BinaryMask(8, 6), annotator_mask_path(dir, "mixed", 1));
    save_image(BinaryMask(5, 6), annotator_mask_path(dir, "mixed", 2));
    try {
      load_annotation_set(dir, "mixed");
      FAIL("expected a format error");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("mixed.a2.png") != std::string::npos);
    }
  }
}
