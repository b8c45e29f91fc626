#include "wseg/pipeline/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "wseg/fusion.hpp"
#include "wseg/image_io.hpp"
#include "wseg/rng.hpp"
#include "wseg/weaklabel.hpp"

namespace wseg::pipeline {

void SynthConfig::validate() const {
  if (size < 32 || (size & (size - 1)) != 0) {
    throw ArgumentError("synth size must be a power of two >= 32, got " + std::to_string(size));
  }
  if (count < 1) throw ArgumentError("synth count must be >= 1");
  if (n_annotators < 1) throw ArgumentError("synth needs at least one annotator");
  if (min_wrinkles < 0 || max_wrinkles < min_wrinkles) throw ArgumentError("invalid wrinkle count range");
  const auto& n = annotator_noise;
  if (n.drop_prob < 0.0 || n.drop_prob > 1.0 || n.jitter < 0 || n.morph_radius < 0) {
    throw ArgumentError("invalid annotator noise parameters");
  }
}

nlohmann::json SynthConfig::to_json() const {
  return {{"count", count},
          {"size", size},
          {"n_annotators", n_annotators},
          {"seed", seed},
          {"wrinkle_count_range", {min_wrinkles, max_wrinkles}},
          {"annotator_noise",
           {{"drop_prob", annotator_noise.drop_prob},
            {"jitter", annotator_noise.jitter},
            {"morph_radius", annotator_noise.morph_radius}}}};
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
  SynthConfig c;
  c.count = j.value("count", c.count);
  c.size = j.value("size", c.size);
  c.n_annotators = j.value("n_annotators", c.n_annotators);
  c.seed = j.value("seed", c.seed);
  if (j.contains("wrinkle_count_range")) {
    c.min_wrinkles = j["wrinkle_count_range"].at(0).get<int>();
    c.max_wrinkles = j["wrinkle_count_range"].at(1).get<int>();
  }
  if (j.contains("annotator_noise")) {
    const auto& n = j["annotator_noise"];
    c.annotator_noise.drop_prob = n.value("drop_prob", c.annotator_noise.drop_prob);
    c.annotator_noise.jitter = n.value("jitter", c.annotator_noise.jitter);
    c.annotator_noise.morph_radius = n.value("morph_radius", c.annotator_noise.morph_radius);
  }
  c.validate();
  return c;
}

std::string sample_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "img%04d", index);
  return buf;
}

BinaryMask translate(const BinaryMask& m, int dx, int dy) {
  BinaryMask out(m.height(), m.width());
  for (int y = 0; y < m.height(); ++y) {
    const int sy = y - dy;
    if (sy < 0 || sy >= m.height()) continue;
    for (int x = 0; x < m.width(); ++x) {
      const int sx = x - dx;
      if (sx >= 0 && sx < m.width()) out(y, x) = m(sy, sx);
    }
  }
  return out;
}

namespace {

// Disk structuring element; radius 1 is the 4-neighbour cross.
template <bool kDilate>
BinaryMask morph(const BinaryMask& m, int radius) {
  if (radius <= 0) return m;
  BinaryMask out(m.height(), m.width());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      bool hit = !kDilate;
      for (int dy = -radius; dy <= radius && hit != kDilate; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          if (dx * dx + dy * dy > radius * radius) continue;
          const int yy = y + dy;
          const int xx = x + dx;
          const bool v = yy >= 0 && yy < m.height() && xx >= 0 && xx < m.width() && m(yy, xx);
          if (kDilate && v) {
            hit = true;
            break;
          }
          if (!kDilate && !v) {
            hit = false;
            break;
          }
        }
      }
      out(y, x) = hit ? 1 : 0;
    }
  }
  return out;
}

void stamp(BinaryMask& m, double cx, double cy, double radius) {
  const int x0 = static_cast<int>(std::floor(cx - radius - 1));
  const int y0 = static_cast<int>(std::floor(cy - radius - 1));
  for (int y = std::max(0, y0); y <= std::min(m.height() - 1, y0 + static_cast<int>(2 * radius) + 2); ++y) {
    for (int x = std::max(0, x0); x <= std::min(m.width() - 1, x0 + static_cast<int>(2 * radius) + 2); ++x) {
      const double dx = x + 0.5 - cx;
      const double dy = y + 0.5 - cy;
      const bool inside_pixel = std::floor(cx) == x && std::floor(cy) == y;
      if (inside_pixel || dx * dx + dy * dy <= radius * radius) m(y, x) = 1;
    }
  }
}

}  // namespace

BinaryMask dilate(const BinaryMask& m, int radius) { return morph<true>(m, radius); }
BinaryMask erode(const BinaryMask& m, int radius) { return morph<false>(m, radius); }

SynthSample synth_sample(const SynthConfig& cfg, int index) {
  cfg.validate();
  const int S = cfg.size;
  const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(index));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * U(rng); };

  SynthSample s;
  s.face = fallback_face_mask(S, S);

  // Background: cool, darker tones with a vertical gradient.
  const double bg[3] = {uni(0.05, 0.3), uni(0.1, 0.35), uni(0.25, 0.55)};
  const double bg_grad = uni(-0.1, 0.1);
  // Skin: warm tone, shaded darker towards the rim with a lateral light falloff.
  const double bright = uni(0.75, 1.0);
  const double skin[3] = {0.88 * bright, uni(0.62, 0.72) * bright, uni(0.50, 0.60) * bright};
  const double light = uni(-0.08, 0.08);

  std::normal_distribution<double> N(0.0, 1.0);
  Plane white(S, S);
  for (Eigen::Index i = 0; i < white.size(); ++i) white.data()[i] = static_cast<float>(N(rng));
  Plane grain = gaussian_blur<float>(white, 1.0);
  const float grain_sd = std::sqrt((grain - grain.mean()).square().mean());
  grain = (grain - grain.mean()) / std::max(grain_sd, 1e-6f);
  const double grain_amp = uni(0.02, 0.04);

  std::vector<Plane> rgb(3, Plane(S, S));
  for (int y = 0; y < S; ++y) {
    const double ey = (y + 0.5 - 0.5 * S) / (0.46 * S);
    for (int x = 0; x < S; ++x) {
      const double ex = (x + 0.5 - 0.5 * S) / (0.42 * S);
      for (int c = 0; c < 3; ++c) {
        double v;
        if (s.face(y, x)) {
          v = skin[c] * (1.0 - 0.25 * (ex * ex + ey * ey)) + light * ex + grain_amp * grain(y, x);
        } else {
          v = bg[c] + bg_grad * (y / static_cast<double>(S) - 0.5) + 0.5 * grain_amp * grain(y, x);
        }
        rgb[static_cast<std::size_t>(c)](y, x) = static_cast<float>(v);
      }
    }
  }

  // Wrinkles: quadratic Bezier strokes darkening the skin.
  s.truth = BinaryMask(S, S);
  const int n_strokes = std::uniform_int_distribution<int>(cfg.min_wrinkles, cfg.max_wrinkles)(rng);
  for (int k = 0; k < n_strokes; ++k) {
    double p0x;
    double p0y;
    do {
      p0x = uni(-0.7, 0.7);
      p0y = uni(-0.7, 0.7);
    } while (p0x * p0x + p0y * p0y > 0.49);
    p0x = 0.5 * S + p0x * 0.42 * S;
    p0y = 0.5 * S + p0y * 0.46 * S;
    const double angle = uni(0.0, std::numbers::pi);
    const double len = uni(0.2, 0.45) * S;
    const double p2x = p0x + len * std::cos(angle);
    const double p2y = p0y + len * std::sin(angle);
    const double bend = uni(-0.15, 0.15) * len;
    const double p1x = 0.5 * (p0x + p2x) - bend * std::sin(angle);
    const double p1y = 0.5 * (p0y + p2y) + bend * std::cos(angle);
    const int width = std::uniform_int_distribution<int>(1, 3)(rng);
    const double depth = uni(0.25, 0.45);

    BinaryMask stroke(S, S);
    // A pixel belongs to the stroke when its centre is within width/2 + 0.3 of the curve,
    // so width-1 diagonals stay 4-connected.
    const int steps = static_cast<int>(std::ceil(len * 4.0)) + 1;
    for (int i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      const double a = (1 - t) * (1 - t);
      const double b = 2 * (1 - t) * t;
      const double c = t * t;
      stamp(stroke, a * p0x + b * p1x + c * p2x, a * p0y + b * p1y + c * p2y, 0.5 * width + 0.3);
    }
    stroke.data = stroke.data * s.face.data;
    for (int y = 0; y < S; ++y)
      for (int x = 0; x < S; ++x)
        if (stroke(y, x))
          for (auto& p : rgb) p(y, x) *= static_cast<float>(1.0 - depth);
    s.truth.data = s.truth.data.max(stroke.data);
    s.strokes.push_back(std::move(stroke));
  }

  for (auto& p : rgb) p = p.cwiseMax(0.0f).cwiseMin(1.0f);
  s.image = Image::from_planes(rgb);

  for (int a = 0; a < cfg.n_annotators; ++a) {
    s.annotators.push_back(simulate_annotator(s, cfg.annotator_noise, derive_seed(seed, 1000 + static_cast<std::uint64_t>(a))));
  }
  return s;
}

BinaryMask simulate_annotator(const SynthSample& sample, const AnnotatorNoise& noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution drop(noise.drop_prob);
  BinaryMask m(sample.truth.height(), sample.truth.width());
  for (const auto& stroke : sample.strokes) {
    if (!drop(rng)) m.data = m.data.max(stroke.data);
  }
  // Shift along one axis only, so the displacement is at most `jitter` pixels.
  std::uniform_int_distribution<int> shift(-noise.jitter, noise.jitter);
  const int d = shift(rng);
  m = std::bernoulli_distribution(0.5)(rng) ? translate(m, d, 0) : translate(m, 0, d);
  if (noise.morph_radius > 0) {
    const int op = std::uniform_int_distribution<int>(0, 2)(rng);
    const int r = std::uniform_int_distribution<int>(1, noise.morph_radius)(rng);
    if (op == 1) m = dilate(m, r);
    if (op == 2) m = erode(m, r);
  }
  return m;
}

DatasetManifest synth_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  for (const char* sub : {"images", "faces", "truth", "annotations"}) std::filesystem::create_directories(out_dir / sub);
  DatasetManifest manifest;
  manifest.root = out_dir;
  manifest.seed = cfg.seed;
  for (int i = 0; i < cfg.count; ++i) {
    const SynthSample s = synth_sample(cfg, i);
    Sample rec;
    rec.image_id = sample_id(i);
    rec.image_path = "images/" + rec.image_id + ".png";
    rec.face_mask_path = "faces/" + rec.image_id + ".face.png";
    rec.true_mask_path = "truth/" + rec.image_id + ".true.png";
    save_image(s.image, out_dir / rec.image_path);
    save_image(s.face, out_dir / *rec.face_mask_path);
    save_image(s.truth, out_dir / *rec.true_mask_path);
    for (int a = 0; a < cfg.n_annotators; ++a) {
      const auto path = annotator_mask_path(out_dir / "annotations", rec.image_id, a + 1);
      save_image(s.annotators[static_cast<std::size_t>(a)], path);
      rec.annotator_mask_paths.push_back("annotations/" + path.filename().string());
    }
    manifest.samples.push_back(std::move(rec));
  }
  manifest.save(out_dir / "manifest.json");
  return manifest;
}

}  // namespace wseg::pipeline
