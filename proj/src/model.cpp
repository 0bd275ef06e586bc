#include "mstem/model.hpp"

#include <algorithm>
#include <cmath>

namespace mstem {

void MstemConfig::validate() const {
  if (tau < 1 || alpha < 1) throw ParameterError("config: tau and alpha must be positive");
  if (scales.empty()) throw ParameterError("config: scale set must be nonempty");
  for (Index s : scales) {
    if (s < 1 || s > tau) {
      throw ParameterError("config: scale " + std::to_string(s) + " outside [1, tau=" +
                           std::to_string(tau) + "]");
    }
  }
  if (hidden < 1 || graph_out < 1 || lstm_hidden < 1) {
    throw ParameterError("config: layer sizes must be positive");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw ParameterError("config: dropout must be in [0,1)");
  if (theta < 0.0) throw ParameterError("config: theta must be nonnegative");
  if (eta < 0 || eta > tau) throw ParameterError("config: eta must be in [0, tau]");
}

Matrix output_control(const Matrix& p, Scalar theta) {
  if (theta < 0.0) throw ParameterError("output_control: theta must be nonnegative");
  return (p.array() - theta).max(0.0).matrix();
}

ad::Var ForecastModel::forward(ad::Tape&, ad::Var, bool, std::mt19937_64&) {
  throw ContractError(tag() + " is a training-free model with no forward graph");
}

Matrix ForecastModel::predict(const Matrix& window) {
  if (window.rows() != tau() || window.cols() != stations()) {
    throw DimensionError("predict: window is " + shape_str(window) + ", model expects " +
                         shape_str(tau(), stations()));
  }
  ad::Tape tape;
  ad::Var x = tape.constant(window);
  std::mt19937_64 gen(0);  // eval mode draws nothing
  ad::Var out = forward(tape, x, /*train=*/false, gen);
  return out.value();
}

Index parameter_count(ForecastModel& model) {
  Index count = 0;
  for (const ad::Parameter* p : model.parameters()) count += p->value.size();
  return count;
}

Matrix glorot_uniform(Index rows, Index cols, std::mt19937_64& gen) {
  const Scalar limit = std::sqrt(6.0 / static_cast<Scalar>(rows + cols));
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = uniform_symmetric(gen, limit);
  }
  return m;
}

MstemModel::MstemModel(MstemConfig config, Index n_stations, std::uint64_t seed)
    : config_(std::move(config)), n_(n_stations) {
  config_.validate();
  if (n_ < 1) throw ParameterError("MstemModel: station count must be positive");
  graph_ = build_graph(n_);

  std::vector<Index> scales = config_.scales;
  std::sort(scales.begin(), scales.end());
  std::mt19937_64 gen(mix_seed(seed, 0x1417));

  for (Index s : scales) {
    const Index len = static_cast<Index>(scale_indices(config_.tau, s).size());
    ScaleBlockParams block;
    block.scale = s;
    const std::string prefix = "scale" + std::to_string(s) + ".";
    block.w1 = ad::Parameter(prefix + "w1", glorot_uniform(len, config_.hidden, gen));
    block.w2 = ad::Parameter(prefix + "w2", glorot_uniform(config_.hidden, config_.graph_out, gen));
    block.bn_gamma = ad::Parameter(prefix + "bn_gamma", Matrix::Ones(1, config_.hidden));
    block.bn_beta = ad::Parameter(prefix + "bn_beta", Matrix::Zero(1, config_.hidden));
    block.fuse =
        ad::Parameter(prefix + "fuse", glorot_uniform(config_.graph_out, config_.graph_out, gen));
    block.bn_state = ad::BatchNormState(config_.hidden);
    blocks_.push_back(std::move(block));
  }

  const Index gate_rows = config_.lstm_hidden + n_;
  const Index d_h = config_.lstm_hidden;
  lstm_.w_forget = ad::Parameter("lstm.w_forget", glorot_uniform(gate_rows, d_h, gen));
  lstm_.w_input = ad::Parameter("lstm.w_input", glorot_uniform(gate_rows, d_h, gen));
  lstm_.w_cell = ad::Parameter("lstm.w_cell", glorot_uniform(gate_rows, d_h, gen));
  lstm_.w_output = ad::Parameter("lstm.w_output", glorot_uniform(gate_rows, d_h, gen));
  lstm_.b_forget = ad::Parameter("lstm.b_forget", Matrix::Ones(1, d_h));
  lstm_.b_input = ad::Parameter("lstm.b_input", Matrix::Zero(1, d_h));
  lstm_.b_cell = ad::Parameter("lstm.b_cell", Matrix::Zero(1, d_h));
  lstm_.b_output = ad::Parameter("lstm.b_output", Matrix::Zero(1, d_h));

  residual_.w_lo =
      ad::Parameter("residual.w_lo", glorot_uniform(config_.tau, config_.alpha, gen));
  residual_.eta = config_.effective_eta();

  w_out1_ = ad::Parameter("out.graph_map",
                          glorot_uniform(config_.graph_out, config_.alpha, gen));
  w_out2_ = ad::Parameter("out.lstm_map",
                          glorot_uniform(d_h, config_.alpha * n_, gen));
}

std::vector<ad::Parameter*> MstemModel::parameters() {
  std::vector<ad::Parameter*> params;
  for (ScaleBlockParams& b : blocks_) {
    params.push_back(&b.w1);
    params.push_back(&b.w2);
    params.push_back(&b.bn_gamma);
    params.push_back(&b.bn_beta);
    params.push_back(&b.fuse);
  }
  for (ad::Parameter* p : {&lstm_.w_forget, &lstm_.w_input, &lstm_.w_cell, &lstm_.w_output,
                           &lstm_.b_forget, &lstm_.b_input, &lstm_.b_cell, &lstm_.b_output}) {
    params.push_back(p);
  }
  params.push_back(&residual_.w_lo);
  params.push_back(&w_out1_);
  params.push_back(&w_out2_);
  return params;
}

std::vector<std::pair<std::string, ad::BatchNormState*>> MstemModel::norm_states() {
  std::vector<std::pair<std::string, ad::BatchNormState*>> states;
  for (ScaleBlockParams& b : blocks_) {
    states.emplace_back("scale" + std::to_string(b.scale) + ".bn", &b.bn_state);
  }
  return states;
}

ad::Var MstemModel::forward(ad::Tape& tape, ad::Var x_stacked, bool train, std::mt19937_64& gen) {
  if (x_stacked.cols() != n_ || x_stacked.rows() % config_.tau != 0) {
    throw DimensionError("mstem forward: input stack is " + shape_str(x_stacked.value()) +
                         ", expected B*" + std::to_string(config_.tau) + " x " +
                         std::to_string(n_));
  }
  const Index tau = config_.tau;
  const Index alpha = config_.alpha;
  const Index batch = x_stacked.rows() / tau;

  // MGCL branch.
  std::vector<ad::Var> scale_outputs;
  std::vector<ScaleBlockParams*> scale_params;
  for (ScaleBlockParams& block : blocks_) {
    const std::vector<Index> idx = scale_indices(tau, block.scale);
    std::vector<Index> batched;
    batched.reserve(static_cast<std::size_t>(batch) * idx.size());
    for (Index b = 0; b < batch; ++b) {
      for (Index i : idx) batched.push_back(b * tau + i);
    }
    ad::Var xs = ad::select_rows(x_stacked, batched);  // (B*len) x N, time-major
    ad::Var xs_nodes = ad::transpose_blocks(xs, static_cast<Index>(idx.size()));
    scale_outputs.push_back(
        graph_conv_block(tape, xs_nodes, graph_, block, train, config_.dropout, gen));
    scale_params.push_back(&block);
  }
  ad::Var g_out = multiscale_fuse(tape, scale_outputs, scale_params);  // (B*N) x g

  ad::Var graph_branch =
      ad::transpose_blocks(ad::matmul(g_out, tape.leaf(w_out1_)), n_);  // (B*alpha') fix below

  // TENN branch.
  ad::Var h_final = lstm_forward(tape, x_stacked, tau, lstm_);  // B x d_h
  ad::Var lstm_branch =
      ad::rows_to_blocks(ad::matmul(h_final, tape.leaf(w_out2_)), alpha, n_);  // (B*alpha) x N

  ad::Var residual_branch = residual_fusion(tape, x_stacked, tau, alpha, residual_);

  return ad::add(ad::add(graph_branch, lstm_branch), residual_branch);
}

std::map<std::string, Scalar> MstemModel::config_map() const {
  std::map<std::string, Scalar> map;
  map["tau"] = static_cast<Scalar>(config_.tau);
  map["alpha"] = static_cast<Scalar>(config_.alpha);
  map["hidden"] = static_cast<Scalar>(config_.hidden);
  map["graph_out"] = static_cast<Scalar>(config_.graph_out);
  map["lstm_hidden"] = static_cast<Scalar>(config_.lstm_hidden);
  map["dropout"] = config_.dropout;
  map["eta"] = static_cast<Scalar>(config_.eta);
  map["n_scales"] = static_cast<Scalar>(config_.scales.size());
  for (std::size_t i = 0; i < config_.scales.size(); ++i) {
    map["scale" + std::to_string(i)] = static_cast<Scalar>(config_.scales[i]);
  }
  return map;
}

MstemConfig MstemModel::config_from_map(const std::map<std::string, Scalar>& map) {
  const auto get = [&](const std::string& key) {
    const auto it = map.find(key);
    if (it == map.end()) throw DataError("checkpoint config missing key '" + key + "'");
    return it->second;
  };
  MstemConfig cfg;
  cfg.tau = static_cast<Index>(get("tau"));
  cfg.alpha = static_cast<Index>(get("alpha"));
  cfg.hidden = static_cast<Index>(get("hidden"));
  cfg.graph_out = static_cast<Index>(get("graph_out"));
  cfg.lstm_hidden = static_cast<Index>(get("lstm_hidden"));
  cfg.dropout = get("dropout");
  cfg.eta = static_cast<Index>(get("eta"));
  cfg.scales.clear();
  const Index n_scales = static_cast<Index>(get("n_scales"));
  for (Index i = 0; i < n_scales; ++i) {
    cfg.scales.push_back(static_cast<Index>(get("scale" + std::to_string(i))));
  }
  return cfg;
}

}  // namespace mstem
