#pragma once

#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "mstem/autodiff.hpp"
#include "mstem/mgcl.hpp"
#include "mstem/tenn.hpp"

namespace mstem {

struct MstemConfig {
  Index tau = 24;   // lookback hours
  Index alpha = 6;  // horizon hours
  std::vector<Index> scales = {1, 5};
  Index hidden = 16;       // graph hidden size
  Index graph_out = 4;     // graph output width g
  Index lstm_hidden = 16;  // d_h
  Scalar dropout = 0.1;
  Scalar theta = 0.0;  // output clamp threshold, kW
  Index eta = 0;       // residual history length; 0 means alpha

  Index effective_eta() const { return eta == 0 ? alpha : eta; }
  void validate() const;
};

// Elementwise max(P - theta, 0); P must already be in original kW units.
Matrix output_control(const Matrix& p, Scalar theta);

// Interface shared by MSTEM and the comparison forecasters. All models map a
// standardized tau x N window to a standardized alpha x N block; inverse
// standardization and the output clamp happen in the evaluation path.
class ForecastModel {
 public:
  virtual ~ForecastModel() = default;

  virtual std::string tag() const = 0;
  virtual Index tau() const = 0;
  virtual Index alpha() const = 0;
  virtual Index stations() const = 0;
  virtual bool trainable() const { return true; }

  virtual std::vector<ad::Parameter*> parameters() { return {}; }
  virtual std::vector<std::pair<std::string, ad::BatchNormState*>> norm_states() { return {}; }

  // Builds the forward pass for a stacked batch of B windows ((B*tau) x N
  // rows) and returns stacked predictions ((B*alpha) x N).
  virtual ad::Var forward(ad::Tape& tape, ad::Var x_stacked, bool train, std::mt19937_64& gen);

  // Single-window eval-mode inference.
  virtual Matrix predict(const Matrix& window);

  // Flat numeric view of the model hyperparameters for checkpointing.
  virtual std::map<std::string, Scalar> config_map() const = 0;
};

Index parameter_count(ForecastModel& model);

class MstemModel : public ForecastModel {
 public:
  // Glorot-uniform weights, zero biases (LSTM forget bias 1), BN gamma 1 /
  // beta 0; bitwise reproducible per seed.
  MstemModel(MstemConfig config, Index n_stations, std::uint64_t seed);

  std::string tag() const override { return "mstem"; }
  Index tau() const override { return config_.tau; }
  Index alpha() const override { return config_.alpha; }
  Index stations() const override { return n_; }

  std::vector<ad::Parameter*> parameters() override;
  std::vector<std::pair<std::string, ad::BatchNormState*>> norm_states() override;
  ad::Var forward(ad::Tape& tape, ad::Var x_stacked, bool train, std::mt19937_64& gen) override;
  std::map<std::string, Scalar> config_map() const override;

  const MstemConfig& config() const { return config_; }
  std::vector<ScaleBlockParams>& scale_blocks() { return blocks_; }
  LstmParams& lstm() { return lstm_; }
  ResidualParams& residual() { return residual_; }
  ad::Parameter& out_graph_map() { return w_out1_; }
  ad::Parameter& out_lstm_map() { return w_out2_; }

  static MstemConfig config_from_map(const std::map<std::string, Scalar>& map);

 private:
  MstemConfig config_;
  Index n_ = 0;
  GraphSpec graph_;
  std::vector<ScaleBlockParams> blocks_;
  LstmParams lstm_;
  ResidualParams residual_;
  ad::Parameter w_out1_;  // g x alpha, applied per node then block-transposed
  ad::Parameter w_out2_;  // d_h x (alpha*N), reshaped row-major to alpha x N
};

// Glorot-uniform fill, the draw order pinned column-by-column.
Matrix glorot_uniform(Index rows, Index cols, std::mt19937_64& gen);

}  // namespace mstem
