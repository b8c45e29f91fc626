#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>

#include "test_util.hpp"
#include "wseg/image_io.hpp"
#include "wseg/metrics.hpp"
#include "wseg/nn/checkpoint.hpp"
#include "wseg/nn/loss.hpp"
#include "wseg/pipeline/ablation.hpp"
#include "wseg/pipeline/dataset_ops.hpp"
#include "wseg/pipeline/evaluate.hpp"
#include "wseg/pipeline/splits.hpp"
#include "wseg/pipeline/synth.hpp"
#include "wseg/pipeline/train.hpp"

using namespace wseg;
using namespace wseg::pipeline;

namespace {

std::vector<std::string> make_ids(int n) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back("id" + std::to_string(i));
  return ids;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// Brute-force pixel counter, kept apart from overlap_counts.
std::pair<long, long> count_pixels(const BinaryMask& a, const BinaryMask& b) {
  long i = 0;
  long u = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      i += a(y, x) && b(y, x);
      u += a(y, x) || b(y, x);
    }
  return {i, u};
}

DatasetManifest fused_dataset(const std::string& name, int count, std::uint64_t seed) {
  SynthConfig c;
  c.count = count;
  c.seed = seed;
  DatasetManifest m = synth_dataset(c, testutil::scratch(name));
  fuse_manifest(m, 2);
  return m;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("jsi") {
    BinaryMask a(4, 4);
    BinaryMask b(4, 4);
    CHECK(jsi(a, b) == 1.0);
    a.data.block(0, 0, 2, 2) = 1;
    CHECK(jsi(a, a) == 1.0);
    b.data.block(2, 2, 2, 2) = 1;
    CHECK(jsi(a, b) == 0.0);
    b = BinaryMask(4, 4);
    b.data.block(0, 1, 2, 2) = 1;
    CHECK(jsi(a, b) == doctest::Approx(2.0 / 6.0));
    CHECK_THROWS_AS(jsi(a, BinaryMask(4, 3)), ArgumentError);

    std::mt19937_64 rng(77);
    for (int t = 0; t < 200; ++t) {
      const BinaryMask p = testutil::random_mask(16, 16, 0.3, rng);
      const BinaryMask q = testutil::random_mask(16, 16, 0.3, rng);
      const auto [i, u] = count_pixels(p, q);
      CHECK(jsi(p, q) == static_cast<double>(i) / static_cast<double>(u));
      CHECK(jsi(p, q) == jsi(q, p));
      CHECK(jsi(p, q) >= static_cast<double>(i) / static_cast<double>(p.count() + q.count()));
    }
  }

  TEST_CASE("splits") {
    const Splits s = split_ids(make_ids(500), {}, 3);
    CHECK(s.train.size() == 400);
    CHECK(s.val.size() == 50);
    CHECK(s.test.size() == 50);
    std::set<std::string> all(s.train.begin(), s.train.end());
    all.insert(s.val.begin(), s.val.end());
    all.insert(s.test.begin(), s.test.end());
    CHECK(all.size() == 500);

    const Splits t = split_ids(make_ids(10), {}, 3);
    CHECK(t.train.size() == 8);
    CHECK(t.val.size() == 1);
    CHECK(t.test.size() == 1);
    const Splits s2 = split_ids(make_ids(500), {}, 3);
    const Splits s3 = split_ids(make_ids(500), {}, 4);
    CHECK(s.train == s2.train);
    CHECK(s.test == s2.test);
    CHECK(s.train != s3.train);

    const Splits odd = split_ids(make_ids(124), {}, 0);
    CHECK(odd.train.size() == 100);
    CHECK(odd.val.size() == 12);

    CHECK_THROWS_AS(split_ids({}, {}, 0), ArgumentError);
    CHECK_THROWS_AS(split_ids(make_ids(10), {0.5, 0.1, 0.1}, 0), ArgumentError);

    const auto dir = testutil::scratch("splits");
    s.save(dir / "s.json");
    const Splits back = Splits::load(dir / "s.json");
    CHECK(back.train == s.train);
    CHECK(back.val == s.val);
    CHECK(back.seed == 3);
  }

  TEST_CASE("fraction subsets") {
    const auto train = split_ids(make_ids(500), {}, 1).train;
    CHECK(subset_fraction(train, 0.05, 9).size() == 20);
    CHECK(subset_fraction(train, 0.25, 9).size() == 100);
    const auto full = subset_fraction(train, 1.0, 9);
    CHECK(std::set<std::string>(full.begin(), full.end()) == std::set<std::string>(train.begin(), train.end()));
    std::vector<std::set<std::string>> sets;
    for (double f : {0.05, 0.25, 0.5, 1.0}) {
      const auto ids = subset_fraction(train, f, 9);
      sets.emplace_back(ids.begin(), ids.end());
    }
    for (std::size_t i = 0; i + 1 < sets.size(); ++i) {
      CHECK(std::includes(sets[i + 1].begin(), sets[i + 1].end(), sets[i].begin(), sets[i].end()));
    }
    CHECK(subset_fraction(train, 0.05, 9) == subset_fraction(train, 0.05, 9));
    CHECK_THROWS_AS(subset_fraction(make_ids(5), 0.05, 0), ArgumentError);
    CHECK_THROWS_AS(subset_fraction(train, 0.0, 0), ArgumentError);
    CHECK_THROWS_AS(subset_fraction(train, 1.5, 0), ArgumentError);
  }

  TEST_CASE("synthetic data") {
    SynthConfig c;
    c.count = 4;
    c.seed = 7;
    const auto d1 = testutil::scratch("synth_a");
    const auto d2 = testutil::scratch("synth_b");
    const DatasetManifest m1 = synth_dataset(c, d1);
    synth_dataset(c, d2);
    CHECK(m1.samples.size() == 4);
    for (const auto& e : std::filesystem::recursive_directory_iterator(d1)) {
      if (!e.is_regular_file()) continue;
      const auto rel = std::filesystem::relative(e.path(), d1);
      INFO(rel.string());
      CHECK(slurp(e.path()) == slurp(d2 / rel));
    }
    CHECK_NOTHROW(m1.validate());
    CHECK(m1.samples[0].annotator_mask_paths.size() == 3);

    SynthConfig quiet = c;
    quiet.annotator_noise = {0.0, 0, 0};
    for (int i = 0; i < 4; ++i) {
      const SynthSample s = synth_sample(quiet, i);
      for (const auto& a : s.annotators) CHECK(a == s.truth);
      const long strokes = static_cast<long>(s.strokes.size());
      CHECK(strokes >= 2);
      CHECK(strokes <= 6);
      for (int y = 0; y < s.truth.height(); ++y)
        for (int x = 0; x < s.truth.width(); ++x)
          if (s.truth(y, x)) CHECK(s.face(y, x) == 1);
    }

    // Measured once at seed 0 (0.346) and pinned with a 0.1 tolerance.
    SynthConfig dflt;
    dflt.seed = 0;
    double sum = 0.0;
    int pairs = 0;
    for (int i = 0; i < 20; ++i) {
      const SynthSample s = synth_sample(dflt, i);
      for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b, ++pairs) sum += jsi(s.annotators[a], s.annotators[b]);
    }
    const double mean = sum / pairs;
    CHECK(mean >= 0.3);
    CHECK(mean <= 0.9);
    CHECK(mean == doctest::Approx(0.346).epsilon(0.1 / 0.346));

    SynthConfig bad = c;
    bad.size = 48;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad.size = 16;
    CHECK_THROWS_AS(synth_dataset(bad, d1), ArgumentError);
  }

  TEST_CASE("morphology helpers") {
    BinaryMask m(5, 5);
    m(2, 2) = 1;
    CHECK(dilate(m, 1).count() == 5);
    CHECK(erode(dilate(m, 1), 1) == m);
    CHECK(translate(m, 1, 0)(2, 3) == 1);
    CHECK(translate(m, 0, -2)(0, 2) == 1);
  }

  TEST_CASE("manifest round trip") {
    const DatasetManifest m = fused_dataset("manifest", 5, 3);
    const auto dir = m.root;
    m.save(dir / "copy.json");
    const DatasetManifest back = DatasetManifest::load(dir / "copy.json");
    CHECK(back.to_json() == m.to_json());
    CHECK(back.ids() == m.ids());
    CHECK(back.find("img0002").fused_gt_path.has_value());
    CHECK(slurp(dir / "copy.json").find(dir.string()) == std::string::npos);
    CHECK_THROWS_AS(back.find("nope"), NotFoundError);

    DatasetManifest dup = back;
    dup.samples.push_back(dup.samples[0]);
    CHECK_THROWS_AS(dup.validate(), ArgumentError);
    DatasetManifest gone = back;
    gone.samples[1].image_path = "images/missing.png";
    CHECK_THROWS_AS(gone.validate(), NotFoundError);
    std::ofstream(dir / "broken.json") << "{\"samples\": 3";
    CHECK_THROWS_AS(DatasetManifest::load(dir / "broken.json"), FormatError);

    const AnnotationSet ann = load_annotations(m, m.samples[0]);
    CHECK(load_fused_gt(m, m.samples[0]) == majority_vote(ann, 2));
  }

  TEST_CASE("pretext inputs") {
    SynthConfig c;
    const Image clean = synth_sample(c, 0).image;
    CHECK((pretext_input(clean, PretrainTarget::reconstruction, 1).data() == clean.data()).all());
    CHECK((pretext_input(clean, PretrainTarget::texture, 1).data() == clean.data()).all());
    CHECK((pretext_input(clean, PretrainTarget::deblur, 1).data() == gaussian_blur(clean, kDeblurSigma).data()).all());
    CHECK((pretext_input(clean, PretrainTarget::denoise, 5).data() ==
           add_gaussian_noise(clean, kDenoiseSigma, 5).data())
              .all());
    CHECK((pretext_input(clean, PretrainTarget::super_resolution, 1).data() ==
           down_up_sample(clean, kSuperResolutionFactor).data())
              .all());
    CHECK(pretext_noise_seed(1, "a") == pretext_noise_seed(1, "a"));
    CHECK(pretext_noise_seed(1, "a") != pretext_noise_seed(1, "b"));
    for (auto t : {PretrainTarget::texture, PretrainTarget::reconstruction, PretrainTarget::deblur,
                   PretrainTarget::denoise, PretrainTarget::super_resolution}) {
      CHECK(pretrain_target_from_string(to_string(t)) == t);
    }
    CHECK_THROWS_AS(pretrain_target_from_string("jigsaw"), ArgumentError);
  }

  TEST_CASE("reconstruction loss before training") {
    SynthConfig c;
    const Image img = synth_sample(c, 1).image;
    auto model = build_unet<float>(UNetConfig::pretrain(8, 2, 3));
    const nn::Tensor4<float> in = image_to_tensor(pretext_input(img, PretrainTarget::reconstruction, 0));
    const Plane gray = to_grayscale(img).plane(0);
    nn::Tensor4<float> target(nn::Shape4{1, 1, static_cast<int>(gray.rows()), static_cast<int>(gray.cols())});
    target.data() = Eigen::Map<const nn::Vector<float>>(gray.data(), gray.size());
    const auto& logits = model.forward(in);
    double oracle = 0.0;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
      const double s = 1.0 / (1.0 + std::exp(-static_cast<double>(logits.data()[i])));
      oracle += (s - gray.data()[i]) * (s - gray.data()[i]);
    }
    oracle /= static_cast<double>(logits.size());
    CHECK(nn::loss_mse(logits, target).value == doctest::Approx(oracle).epsilon(1e-5));
  }

  TEST_CASE("pretraining overfits one image") {
    SynthConfig c;
    c.count = 1;
    c.seed = 5;
    const DatasetManifest m = synth_dataset(c, testutil::scratch("overfit_one"));
    Splits sp;
    sp.train = m.ids();
    TrainConfig tc;
    tc.epochs = 200;
    tc.batch_size = 1;
    const TrainResult r = pretrain(build_unet<float>(UNetConfig::pretrain()), m, sp, tc);
    CHECK(r.curve.size() == 200);
    CHECK(r.curve.back().train_loss < 0.01);
    nn::ModelGraph<float> model = r.model;
    const Image img = load_sample_image(m, m.samples[0]);
    const TextureMap pred = predict_texture(model, img);
    const TextureMap weak = weak_label_for(m, m.samples[0], img, tc.texture);
    CHECK((pred.data - weak.data).abs().mean() < 0.05f);
    CHECK_THROWS_AS(pretrain(build_unet<float>(UNetConfig::pretrain()), m, Splits{}, tc), ArgumentError);
  }

  TEST_CASE("training is reproducible") {
    const DatasetManifest m = fused_dataset("repro", 6, 4);
    const Splits sp = split_dataset(m, {0.5, 0.25, 0.25}, 4);
    TrainConfig tc;
    tc.epochs = 2;
    tc.seed = 11;
    auto run = [&] {
      const TrainResult p = pretrain(build_unet<float>(UNetConfig::pretrain(8, 2, 11)), m, sp, tc);
      const TrainResult f = finetune(&p.model, UNetConfig::finetune(8, 2), m, sp, tc);
      return std::make_pair(nn::serialize_checkpoint(p.model, p.meta), nn::serialize_checkpoint(f.model, f.meta));
    };
    const auto a = run();
    const auto b = run();
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
    CHECK(nn::deserialize_checkpoint(a.second).model.stage == nn::Stage::finetune);
  }

  TEST_CASE("finetune inputs") {
    SynthConfig c;
    c.count = 10;
    const DatasetManifest raw = synth_dataset(c, testutil::scratch("no_gt"));
    const Splits sp = split_dataset(raw, {}, 0);
    TrainConfig tc;
    tc.epochs = 1;
    try {
      finetune(nullptr, UNetConfig::finetune(4, 1), raw, sp, tc);
      FAIL("expected missing ground truth");
    } catch (const NotFoundError& e) {
      CHECK(std::string(e.what()).find(sp.train.front()) != std::string::npos);
    }

    DatasetManifest m = raw;
    fuse_manifest(m, 2);
    std::filesystem::remove(m.resolve(*m.find(sp.val.front()).fused_gt_path));
    try {
      finetune(nullptr, UNetConfig::finetune(4, 1), m, sp, tc);
      FAIL("expected missing ground truth");
    } catch (const NotFoundError& e) {
      CHECK(std::string(e.what()).find(sp.val.front() + ".gt.png") != std::string::npos);
    }

    fuse_manifest(m, 2);
    tc.fraction = 0.5;
    const TrainResult r = finetune(nullptr, UNetConfig::finetune(4, 1), m, sp, tc);
    CHECK(r.train_ids.size() == 4);
    CHECK(r.model.input_channels() == 4);
    CHECK(r.model.output_channels() == 2);
    CHECK(r.meta.extra["run"] == "finetune:scratch");
  }

  TEST_CASE("evaluation") {
    const DatasetManifest m = fused_dataset("eval", 4, 6);
    const auto ids = m.ids();
    auto model = build_unet<float>(UNetConfig::finetune(4, 1, 2));
    model.param("head.weight").value.setZero();
    model.param("head.bias").value << 10.0f, -10.0f;
    const auto out = testutil::scratch("eval_out");
    const MetricsReport r = evaluate(model, m, ids, {}, out);
    for (const auto& s : r.per_image) CHECK(s.jsi == 0.0);
    CHECK(r.mean_jsi == 0.0);
    CHECK(std::filesystem::exists(out / "metrics.json"));
    CHECK(std::filesystem::exists(out / "overlays" / (ids[0] + ".overlay.png")));
    CHECK(std::filesystem::exists(out / "predictions" / (ids[0] + ".pred.png")));
    const std::string csv = slurp(out / "metrics.csv");
    CHECK(csv.rfind("image_id,jsi\n", 0) == 0);
    CHECK(csv.find("\nmean,0.000000\npooled,0.000000\n") != std::string::npos);

    std::vector<BinaryMask> gts;
    for (const auto& id : ids) gts.push_back(load_fused_gt(m, m.find(id)));
    const MetricsReport perfect = score_masks(ids, gts, gts);
    CHECK(perfect.mean_jsi == 1.0);
    CHECK(perfect.pooled_jsi == 1.0);

    std::mt19937_64 rng(3);
    std::vector<BinaryMask> preds;
    for (int i = 0; i < 4; ++i) preds.push_back(testutil::random_mask(64, 64, 0.05, rng));
    const MetricsReport rep = score_masks(ids, preds, gts);
    long si = 0;
    long su = 0;
    double mean = 0.0;
    for (int i = 0; i < 4; ++i) {
      const auto [a, b] = count_pixels(preds[i], gts[i]);
      si += a;
      su += b;
      mean += static_cast<double>(a) / static_cast<double>(b) / 4.0;
    }
    CHECK(rep.pooled_jsi == static_cast<double>(si) / static_cast<double>(su));
    CHECK(rep.mean_jsi == doctest::Approx(mean).epsilon(1e-12));
    CHECK_FALSE(rep.empty_convention_used);
    const MetricsReport empty = score_masks({"e"}, {BinaryMask(2, 2)}, {BinaryMask(2, 2)});
    CHECK(empty.empty_convention_used);
    CHECK(empty.mean_jsi == 1.0);

    auto pre = build_unet<float>(UNetConfig::pretrain(4, 1));
    CHECK_THROWS_AS(evaluate(pre, m, ids, {}), UsageError);
  }

  TEST_CASE("ablation table") {
    AblationTable t;
    t.rows = {{"ours", 1.0, 0, 0.5, 0.4, 100}, {"ours", 1.0, 1, 0.7, 0.6, 100}, {"ours", 0.05, 0, 0.2, 0.1, 100}};
    const AblationTable back = AblationTable::from_csv(t.to_csv());
    REQUIRE(back.rows.size() == 3);
    CHECK(back.rows[2].fraction == 0.05);
    CHECK(back.rows[1].mean_jsi == 0.7);
    CHECK(t.to_csv().rfind("method,fraction,seed,mean_jsi,pooled_jsi,n_params\n", 0) == 0);
    const auto sm = t.summary();
    REQUIRE(sm.size() == 2);
    CHECK(sm[0].n == 2);
    CHECK(sm[0].mean == doctest::Approx(0.6));
    CHECK(sm[0].sd == doctest::Approx(std::sqrt(0.02)));
    CHECK(sm[1].sd == 0.0);
    CHECK(t.render_text().find("ours") != std::string::npos);
    CHECK_THROWS_AS(AblationTable::from_csv("a,b\n"), FormatError);
    CHECK_THROWS_AS(AblationTable::from_csv("method,fraction,seed,mean_jsi,pooled_jsi,n_params\nx,y\n"), FormatError);

    CHECK(all_methods() ==
          std::vector<std::string>{"no_pretraining", "ours", "reconstruction", "deblur", "denoise", "super_resolution"});
    CHECK(method_fractions("ours", {1.0, 0.5}).size() == 2);
    CHECK(method_fractions("deblur", {1.0, 0.5}) == std::vector<double>{1.0});
    CHECK_THROWS_AS(method_target("no_pretraining"), ArgumentError);
  }

  TEST_CASE("small ablation grid") {
    const DatasetManifest m = fused_dataset("ablate", 20, 8);
    const Splits sp = split_dataset(m, {}, 8);
    AblationConfig cfg;
    cfg.base_width = 4;
    cfg.depth = 1;
    cfg.seeds = {0};
    cfg.pretrain.epochs = 1;
    cfg.finetune.epochs = 1;
    cfg.jobs = 2;
    const auto out = testutil::scratch("ablate_out");
    const AblationTable t = run_ablation(m, sp, cfg, out);
    CHECK(t.rows.size() == 12);
    std::set<std::pair<std::string, double>> cells;
    for (const auto& r : t.rows) {
      cells.insert({r.method, r.fraction});
      CHECK(r.mean_jsi >= 0.0);
      CHECK(r.mean_jsi <= 1.0);
      CHECK(r.n_params == t.n_params_finetune);
    }
    for (const char* meth : {"no_pretraining", "ours"})
      for (double f : {1.0, 0.5, 0.25, 0.05}) CHECK(cells.count({meth, f}) == 1);
    CHECK(t.n_params_finetune - t.n_params_pretrain == t.surgery_delta);
    CHECK(std::filesystem::exists(out / "ablation.csv"));
    CHECK(std::filesystem::exists(out / "ours" / "seed0" / "pretrain.ckpt"));
    CHECK(AblationTable::from_csv(slurp(out / "ablation.csv")).rows.size() == 12);

    cfg.jobs = 1;
    const AblationTable serial = run_ablation(m, sp, cfg);
    CHECK(serial.to_csv() == t.to_csv());
  }
}
