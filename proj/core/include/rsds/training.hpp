#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rsds/netfield.hpp"
#include "rsds/rsds.hpp"

namespace rsds {

struct Sample {
  Vec x;
  Vec xdot;
};

struct LossGrad {
  double loss = 0.0;
  ParamGradient grad;
};

// Mean over the batch of ||xdot_pred - xdot||^2, differentiated exactly
// through the discretized flow, the pullback and the latent attractor.
LossGrad loss_and_gradients(const RsdsModel& model, std::span<const Sample> batch,
                            bool theta = true, bool gamma = true, int threads = 0);

double loss_value(const RsdsModel& model, std::span<const Sample> batch, int threads = 0);

struct TrainOptions {
  int epochs = 2000;
  double lr = 1e-3;
  int decay_epoch = 1000;
  double decay_factor = 0.1;
  int batch_size = 0;  // 0: full batch
  bool train_theta = true;
  bool train_gamma = true;
  std::uint64_t seed = 0;
  int threads = 0;
  std::function<void(int epoch, double loss)> on_epoch;
};

struct TrainResult {
  std::vector<double> loss_history;
  bool aborted = false;
  std::string message;
};

// Adam on the mean velocity loss. On a non-finite loss or a numerical error
// the model is restored to the last good parameters and aborted is set.
TrainResult train(RsdsModel& model, const std::vector<Sample>& samples, const TrainOptions& opt);

}  // namespace rsds
