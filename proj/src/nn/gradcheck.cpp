#include "wseg/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "wseg/nn/layers.hpp"
#include "wseg/nn/loss.hpp"
#include "wseg/unet.hpp"

namespace wseg::nn {

nlohmann::json GradcheckResult::to_json() const {
  return {{"name", name},       {"seeds", seeds},   {"checked", checked},
          {"skipped", skipped}, {"passed", passed}, {"max_rel_error", max_rel_error}};
}

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

namespace {

using T = Tensor4<double>;
using Rng = std::mt19937_64;

T random_tensor(Shape4 s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  T t(s);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = u(rng);
  return t;
}

int rand_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

double project(const T& y, const T& r) { return y.data().dot(r.data()); }

class Checker {
 public:
  Checker(std::string name, const GradcheckOptions& o) : opts_(o) { result_.name = std::move(name); }

  // Probes coordinate `value` with central differences of `f` and compares
  // against `analytic`. `pattern` (optional) must stay constant across probes.
  void probe(double& value, double analytic, const std::function<double()>& f,
             const std::function<std::uint64_t()>& pattern = {}) {
    const double saved = value;
    const std::uint64_t base = pattern ? pattern() : 0;
    value = saved + opts_.eps;
    const double fp = f();
    const bool flip_plus = pattern && pattern() != base;
    value = saved - opts_.eps;
    const double fm = f();
    const bool flip_minus = pattern && pattern() != base;
    value = saved;
    if (flip_plus || flip_minus) {
      ++result_.skipped;
      return;
    }
    const double numeric = (fp - fm) / (2.0 * opts_.eps);
    result_.max_rel_error = std::max(result_.max_rel_error, relative_error(analytic, numeric, opts_.floor));
    ++result_.checked;
  }

  GradcheckResult finish(int seeds) {
    result_.seeds = seeds;
    // At most one probe in ten may land on a kink.
    result_.passed = result_.checked > 0 && result_.max_rel_error < opts_.tolerance &&
                     result_.skipped * 10 <= result_.checked + result_.skipped;
    return result_;
  }

 private:
  const GradcheckOptions& opts_;
  GradcheckResult result_;
};

void check_conv(int kernel, Checker& ck, Rng& rng) {
  const int n = rand_int(rng, 1, 2);
  const int cin = rand_int(rng, 1, 4);
  const int cout = rand_int(rng, 1, 4);
  const int h = rand_int(rng, 1, 16);
  const int w = rand_int(rng, 1, 16);
  const int pad = (kernel - 1) / 2;
  T x = random_tensor({n, cin, h, w}, rng);
  RowMatrix<double> W = RowMatrix<double>::NullaryExpr(cout, cin * kernel * kernel, [&] {
    return std::uniform_real_distribution<double>(-1, 1)(rng);
  });
  Vector<double> b = Vector<double>::NullaryExpr(cout, [&] { return std::uniform_real_distribution<double>(-1, 1)(rng); });
  const T r = random_tensor({n, cout, h, w}, rng);
  auto f = [&] { return project(conv2d_forward<double>(x, W, b, kernel, pad), r); };
  T dx;
  RowMatrix<double> dW = RowMatrix<double>::Zero(W.rows(), W.cols());
  Vector<double> db = Vector<double>::Zero(b.size());
  conv2d_backward<double>(x, W, r, kernel, pad, &dx, dW, db);
  for (Eigen::Index i = 0; i < x.size(); ++i) ck.probe(x.data()[i], dx.data()[i], f);
  for (Eigen::Index i = 0; i < W.size(); ++i) ck.probe(W.data()[i], dW.data()[i], f);
  for (Eigen::Index i = 0; i < b.size(); ++i) ck.probe(b[i], db[i], f);
}

void check_relu(Checker& ck, Rng& rng) {
  const Shape4 s{rand_int(rng, 1, 2), rand_int(rng, 1, 4), rand_int(rng, 1, 16), rand_int(rng, 1, 16)};
  T x = random_tensor(s, rng, 0.05, 1.0);
  std::bernoulli_distribution sign(0.5);
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (sign(rng)) x.data()[i] = -x.data()[i];
  const T r = random_tensor(s, rng);
  const T dx = relu_backward(relu_forward(x), r);
  auto f = [&] { return project(relu_forward(x), r); };
  for (Eigen::Index i = 0; i < x.size(); ++i) ck.probe(x.data()[i], dx.data()[i], f);
}

void check_maxpool(Checker& ck, Rng& rng) {
  const Shape4 s{rand_int(rng, 1, 2), rand_int(rng, 1, 4), 2 * rand_int(rng, 1, 8), 2 * rand_int(rng, 1, 8)};
  T x = random_tensor(s, rng);
  std::vector<Eigen::Index> argmax;
  const T y = maxpool2_forward(x, argmax);
  const T r = random_tensor(y.shape(), rng);
  const T dx = maxpool2_backward(r, argmax, s);
  std::vector<Eigen::Index> probe_argmax;
  auto f = [&] { return project(maxpool2_forward(x, probe_argmax), r); };
  auto pattern = [&] {
    std::vector<Eigen::Index> a;
    maxpool2_forward(x, a);
    std::uint64_t h = 1469598103934665603ULL;
    for (Eigen::Index v : a) h = (h ^ static_cast<std::uint64_t>(v)) * 1099511628211ULL;
    return h;
  };
  for (Eigen::Index i = 0; i < x.size(); ++i) ck.probe(x.data()[i], dx.data()[i], f, pattern);
}

void check_upsample(Checker& ck, Rng& rng) {
  const Shape4 s{rand_int(rng, 1, 2), rand_int(rng, 1, 4), rand_int(rng, 1, 8), rand_int(rng, 1, 8)};
  T x = random_tensor(s, rng);
  const T r = random_tensor({s.n, s.c, 2 * s.h, 2 * s.w}, rng);
  const T dx = upsample2_backward(r);
  auto f = [&] { return project(upsample2_forward(x), r); };
  for (Eigen::Index i = 0; i < x.size(); ++i) ck.probe(x.data()[i], dx.data()[i], f);
}

void check_concat(Checker& ck, Rng& rng) {
  const int n = rand_int(rng, 1, 2);
  const int h = rand_int(rng, 1, 16);
  const int w = rand_int(rng, 1, 16);
  T a = random_tensor({n, rand_int(rng, 1, 4), h, w}, rng);
  T b = random_tensor({n, rand_int(rng, 1, 4), h, w}, rng);
  const T r = random_tensor({n, a.channels() + b.channels(), h, w}, rng);
  T da;
  T db;
  split_channels(r, a.channels(), da, db);
  auto f = [&] { return project(concat_channels(a, b), r); };
  for (Eigen::Index i = 0; i < a.size(); ++i) ck.probe(a.data()[i], da.data()[i], f);
  for (Eigen::Index i = 0; i < b.size(); ++i) ck.probe(b.data()[i], db.data()[i], f);
}

void check_mse(Checker& ck, Rng& rng) {
  const Shape4 s{rand_int(rng, 1, 2), rand_int(rng, 1, 4), rand_int(rng, 1, 16), rand_int(rng, 1, 16)};
  T pred = random_tensor(s, rng, -3.0, 3.0);
  const T target = random_tensor(s, rng, 0.0, 1.0);
  const auto res = loss_mse(pred, target);
  auto f = [&] { return loss_mse(pred, target).value; };
  for (Eigen::Index i = 0; i < pred.size(); ++i) ck.probe(pred.data()[i], res.grad.data()[i], f);
}

LabelBatch random_labels(int n, int h, int w, Rng& rng) {
  LabelBatch lb{n, h, w, std::vector<std::uint8_t>(static_cast<std::size_t>(n) * h * w)};
  std::bernoulli_distribution coin(0.3);
  for (auto& l : lb.labels) l = coin(rng) ? 1 : 0;
  return lb;
}

void check_ce(Checker& ck, Rng& rng) {
  const Shape4 s{rand_int(rng, 1, 2), 2, rand_int(rng, 1, 16), rand_int(rng, 1, 16)};
  T pred = random_tensor(s, rng, -5.0, 5.0);
  const LabelBatch labels = random_labels(s.n, s.h, s.w, rng);
  const double pos_weight = std::uniform_real_distribution<double>(1.0, 5.0)(rng);
  const auto res = loss_softmax_ce(pred, labels, pos_weight);
  auto f = [&] { return loss_softmax_ce(pred, labels, pos_weight).value; };
  for (Eigen::Index i = 0; i < pred.size(); ++i) ck.probe(pred.data()[i], res.grad.data()[i], f);
}

void check_unet(bool finetune, const GradcheckOptions& opts, Checker& ck, Rng& rng, std::uint64_t seed) {
  UNetConfig cfg = finetune ? UNetConfig::finetune(opts.unet_base_width, opts.unet_depth, seed)
                            : UNetConfig::pretrain(opts.unet_base_width, opts.unet_depth, seed);
  ModelGraph<double> model = build_unet<double>(cfg);
  // Small random biases so that no activation sits exactly on a relu kink.
  for (auto& p : model.params()) {
    if (p.shape.size() == 1) {
      for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value[i] = std::uniform_real_distribution<double>(-0.1, 0.1)(rng);
    }
  }
  const int side = model.spatial_divisor() * std::max(1, 16 / model.spatial_divisor());
  const Shape4 s{2, cfg.in_channels, side, side};
  T x = random_tensor(s, rng, 0.0, 1.0);
  const T target = random_tensor({2, 1, side, side}, rng, 0.0, 1.0);
  const LabelBatch labels = random_labels(2, side, side, rng);
  auto loss = [&](const T& y) {
    return finetune ? loss_softmax_ce(y, labels, 2.0) : loss_mse(y, target);
  };
  model.zero_grad();
  const auto res = loss(model.forward(x));
  const T dx = model.backward(res.grad, true);
  auto f = [&] { return loss(model.forward(x)).value; };
  auto pattern = [&] { return model.activation_pattern(); };
  for (auto& p : model.params()) {
    for (int k = 0; k < opts.samples_per_tensor; ++k) {
      const auto i = static_cast<Eigen::Index>(rand_int(rng, 0, static_cast<int>(p.size()) - 1));
      ck.probe(p.value[i], p.grad[i], f, pattern);
    }
  }
  for (int k = 0; k < 4 * opts.samples_per_tensor; ++k) {
    const auto i = static_cast<Eigen::Index>(rand_int(rng, 0, static_cast<int>(x.size()) - 1));
    ck.probe(x.data()[i], dx.data()[i], f, pattern);
  }
}

}  // namespace

std::vector<GradcheckResult> run_gradcheck_suite(const GradcheckOptions& opts) {
  using Case = std::function<void(Checker&, Rng&, std::uint64_t)>;
  const std::vector<std::pair<std::string, Case>> cases = {
      {"conv3x3", [](Checker& c, Rng& r, std::uint64_t) { check_conv(3, c, r); }},
      {"conv1x1", [](Checker& c, Rng& r, std::uint64_t) { check_conv(1, c, r); }},
      {"relu", [](Checker& c, Rng& r, std::uint64_t) { check_relu(c, r); }},
      {"maxpool2", [](Checker& c, Rng& r, std::uint64_t) { check_maxpool(c, r); }},
      {"upsample2_nearest", [](Checker& c, Rng& r, std::uint64_t) { check_upsample(c, r); }},
      {"concat_skip", [](Checker& c, Rng& r, std::uint64_t) { check_concat(c, r); }},
      {"loss_mse", [](Checker& c, Rng& r, std::uint64_t) { check_mse(c, r); }},
      {"loss_softmax_ce", [](Checker& c, Rng& r, std::uint64_t) { check_ce(c, r); }},
      {"unet_pretrain_3to1", [&opts](Checker& c, Rng& r, std::uint64_t s) { check_unet(false, opts, c, r, s); }},
      {"unet_finetune_4to2", [&opts](Checker& c, Rng& r, std::uint64_t s) { check_unet(true, opts, c, r, s); }},
  };
  std::vector<GradcheckResult> results;
  for (std::size_t ci = 0; ci < cases.size(); ++ci) {
    Checker ck(cases[ci].first, opts);
    for (int seed = 0; seed < opts.seeds; ++seed) {
      Rng rng(0x9E3779B97F4A7C15ULL * (seed + 1) + ci);
      cases[ci].second(ck, rng, static_cast<std::uint64_t>(seed));
    }
    results.push_back(ck.finish(opts.seeds));
  }
  return results;
}

}  // namespace wseg::nn
