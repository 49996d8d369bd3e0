#pragma once

// Multi-head quantile MLP: inputs -> ReLU hidden layer -> one linear output
// per quantile level. Trained by minibatch SGD on the summed pinball loss of
// all heads, in standardized input and target units.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vqr/features.hpp"

namespace vqr {

struct MlpParams {
  std::size_t hidden = 32;
  std::size_t epochs = 500;
  double learning_rate = 0.005;
  std::size_t batch = 64;
  std::uint64_t seed = 1;
};

struct MlpModel {
  std::vector<double> levels;
  std::size_t inputs = 0;
  std::size_t hidden = 0;
  std::vector<double> input_mean;
  std::vector<double> input_scale;
  double target_mean = 0.0;
  double target_scale = 1.0;
  std::vector<double> w1;  // hidden x inputs, row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // levels x hidden, row-major
  std::vector<double> b2;  // levels

  std::size_t outputs() const noexcept { return levels.size(); }
  std::size_t parameter_count() const noexcept { return w1.size() + b1.size() + w2.size() + b2.size(); }

  // Flattened as w1, b1, w2, b2.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> p);

  // One value per level, original target units. Throws on input-size mismatch.
  std::vector<double> predict(std::span<const double> x) const;
  std::vector<double> predict(const FeatureRow& row) const;

  // Summed-over-heads mean pinball loss of the batch in standardized target
  // units; rows are raw (unstandardized) inputs, one vector per sample. When
  // `grad` is non-null it receives d loss / d parameters in parameters() order.
  double batch_loss(std::span<const std::vector<double>> rows, std::span<const double> y,
                    std::vector<double>* grad) const;
};

// Zero-initialized network with the given shape and identity standardization.
MlpModel make_mlp(std::size_t inputs, std::size_t hidden, std::vector<double> levels);

struct MlpTrace {
  std::vector<double> epoch_loss;
};

// `x` holds the raw {age, bt} columns. Throws FitError when the training loss
// becomes non-finite.
MlpModel fit_mlp_qr(const Design& x, std::span<const double> y, std::span<const double> levels,
                    const MlpParams& params = {}, MlpTrace* trace = nullptr);

}  // namespace vqr
