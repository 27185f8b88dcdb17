#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "panelcast/lag_features.hpp"
#include "panelcast/matrix.hpp"

namespace panelcast {

enum class Activation { identity, tanh };

struct DenseLayer {
    Matrix W;  // out x in
    Vector b;  // out
    Activation activation = Activation::identity;
};

/// Feed-forward network; hidden layers use tanh, the scalar output is linear.
struct MlpModel {
    std::vector<DenseLayer> layers;

    /// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
    static MlpModel create(std::size_t inputs, const std::vector<std::size_t>& hidden, std::uint64_t seed);

    [[nodiscard]] std::size_t input_dim() const;
    [[nodiscard]] std::vector<std::span<double>> parameter_blocks();
    [[nodiscard]] std::vector<std::span<const double>> parameter_blocks() const;
    void validate() const;
};

/// Activations kept by mlp_forward for the backward pass.
struct MlpCache {
    std::vector<Vector> activations;  // activations[0] = x, then each layer's output
    std::uint64_t fingerprint = 0;    // parameters the cache was computed with
};

/// Same shapes as the model's layers.
struct MlpGradients {
    std::vector<Matrix> dW;
    std::vector<Vector> db;
};

std::pair<double, MlpCache> mlp_forward(const MlpModel& model, std::span<const double> x);

/// Gradients of (prediction - target)^2. Throws if the cache was produced
/// with different parameters.
MlpGradients mlp_backward(const MlpModel& model, const MlpCache& cache, double target);

Vector predict_mlp(const MlpModel& model, const Matrix& X);

/// LSTM cell with a linear readout of the final hidden state.
struct LstmParams {
    std::size_t input = 0;
    std::size_t hidden = 0;
    Matrix Wf, Wi, Wc, Wo;  // hidden x input
    Matrix Uf, Ui, Uc, Uo;  // hidden x hidden
    Vector bf, bi, bc, bo;  // hidden
    Vector readout_w;       // hidden
    double readout_b = 0.0;

    static LstmParams zeros(std::size_t input, std::size_t hidden);
    static LstmParams create(std::size_t input, std::size_t hidden, std::uint64_t seed);

    [[nodiscard]] std::vector<std::span<double>> parameter_blocks();
    [[nodiscard]] std::vector<std::span<const double>> parameter_blocks() const;
    void validate() const;
};

struct LstmState {
    Vector h;
    Vector C;

    static LstmState zeros(std::size_t hidden) { return {Vector(hidden, 0.0), Vector(hidden, 0.0)}; }
};

LstmState lstm_step(const LstmParams& p, const LstmState& s, std::span<const double> x);

using Sequence = std::vector<Vector>;

struct LstmStepCache {
    Vector x, h_prev, C_prev, f, i, g, o, C, tanh_C;
};

struct LstmCache {
    std::vector<LstmStepCache> steps;
    Vector h_final;  // readout input (after any dropout mask)
    Vector mask;     // dropout mask on h_final; empty when unused
    std::uint64_t fingerprint = 0;
};

std::pair<double, LstmCache> lstm_forward_seq(const LstmParams& p, const Sequence& xs);

/// Gradients of (prediction - target)^2 by backpropagation through time,
/// laid out as an LstmParams.
LstmParams lstm_backward(const LstmParams& p, const LstmCache& cache, double target);

Vector predict_lstm(const LstmParams& p, const std::vector<Sequence>& xs);

/// Splits each design row into a sequence of per-year vectors, oldest year
/// first: the predictors for that year plus the lagged target (0 for the
/// target year itself).
std::vector<Sequence> to_sequences(const SupervisedMatrix& m);

struct TrainOptions {
    std::size_t epochs = 500;
    double rate = 0.01;
    double dropout = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainReport {
    std::vector<double> loss;  // clean (dropout-free) training MSE, loss[0] before any step
    std::size_t rejected_steps = 0;
    double final_rate = 0.0;
};

/// Full-batch gradient descent on mean squared error with inverted dropout
/// on hidden activations. A step that increases the clean training loss is
/// undone and the rate halved.
MlpModel train_gd(MlpModel model, const Matrix& X, std::span<const double> y, const TrainOptions& opts,
                  TrainReport* report = nullptr);
LstmParams train_gd(LstmParams model, const std::vector<Sequence>& xs, std::span<const double> y,
                    const TrainOptions& opts, TrainReport* report = nullptr);

}  // namespace panelcast
