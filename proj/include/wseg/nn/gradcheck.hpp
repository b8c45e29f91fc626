#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace wseg::nn {

struct GradcheckOptions {
  int seeds = 10;
  double eps = 1e-5;        // central-difference step
  double tolerance = 1e-4;  // max relative error
  // Denominator floor of the relative error: entries where both gradients are
  // below this magnitude are compared absolutely.
  double floor = 1e-6;
  int samples_per_tensor = 4;  // coordinates probed per parameter tensor in whole-network checks
  int unet_base_width = 16;
  int unet_depth = 3;
};

struct GradcheckResult {
  std::string name;
  int seeds = 0;
  long checked = 0;
  // Coordinates whose +-eps probes flip a relu state or pooling winner; the
  // function is not differentiable across those and finite differences are void.
  long skipped = 0;
  double max_rel_error = 0.0;
  bool passed = false;

  nlohmann::json to_json() const;
};

double relative_error(double analytic, double numeric, double floor);

// Central finite-difference checks, in double precision, of every differentiable
// op (conv3x3, conv1x1, relu, maxpool2, upsample2, concat, sigmoid-MSE, softmax CE)
// and of both U-Net stages end to end.
std::vector<GradcheckResult> run_gradcheck_suite(const GradcheckOptions& opts = {});

}  // namespace wseg::nn
