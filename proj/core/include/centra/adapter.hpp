#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "centra/store.hpp"

namespace centra {

// Residual bottleneck adapter:
//   y = x + alpha * (W_up * Drop(GELU(W_down * LN(x) + b_down)) + b_up)
// LN uses eps = 1e-5, GELU is the exact erf form, dropout is inverted
// (mask / (1 - p)) and active only in training mode.
struct AdapterConfig {
  size_t dimension = 256;      // d; 0 = take it from the store in train_adapter
  size_t bottleneck = 512;     // r
  double alpha = 0.01;
  double dropout = 0.05;
  bool use_bias = true;
  size_t hidden_mult = 4;      // carried from the published defaults; unused by
                               // the single-bottleneck architecture

  // loss
  double gamma_std = 0.05;
  double lambda_inv = 100.0;
  double lambda_var = 25.0;
  double lambda_cov = 1.0;
  double lambda_id = 100.0;

  // optimization
  double lr = 3e-4;
  double weight_decay = 1e-4;  // decoupled; projection weights only
  double grad_clip_norm = 1.0; // global-norm clip, 0 disables
  size_t steps = 20000;
  size_t batch_size = 512;     // tables per step, sampled without replacement
  size_t max_views = 0;        // per-table view cap; 0 = all views
  size_t log_every = 200;
  size_t ckpt_every = 200;
  uint64_t seed = 0;
  std::string checkpoint_dir;  // empty = keep checkpoints in memory only

  void validate() const;
};

struct AdapterParams {
  Eigen::VectorXd ln_gain, ln_bias;  // d
  Eigen::MatrixXd w_down;            // r x d
  Eigen::VectorXd b_down;            // r
  Eigen::MatrixXd w_up;              // d x r
  Eigen::VectorXd b_up;              // d

  long dim() const { return ln_gain.size(); }
  long bottleneck() const { return b_down.size(); }
};

// Identity at initialization: LN gain 1 / bias 0, W_down entries uniform in
// +-sqrt(1/d) drawn row-major from SplitMix64(seed) (entry = (2u-1)*bound
// with u = next_unit()), biases 0, and W_up all zero so the residual branch
// vanishes exactly.
AdapterParams init_adapter(const AdapterConfig& cfg);

// One adapted vector, evaluation mode (no dropout).
Eigen::VectorXd adapter_forward(const AdapterParams& p, double alpha, const Eigen::VectorXd& x);

// Batch forward with row-per-view matrices, keeping what backward needs.
// In training mode row i's dropout mask comes from SplitMix64(dropout_seeds[i]):
// r draws of next_unit(), keep when draw >= dropout rate.
struct BatchCache {
  Eigen::MatrixXd x;         // n x d inputs
  Eigen::MatrixXd xhat;      // LN-normalized inputs
  Eigen::VectorXd inv_sigma; // per-row 1/sqrt(var + 1e-5)
  Eigen::MatrixXd ln_out;    // n x d
  Eigen::MatrixXd pre;       // n x r pre-activation
  Eigen::MatrixXd mask;      // n x r 0/1 keep mask (training only)
  Eigen::MatrixXd dropped;   // n x r branch input to W_up
  Eigen::MatrixXd a;         // n x d raw adapted outputs
  Eigen::VectorXd a_norm;    // row norms of a
  Eigen::MatrixXd z;         // n x d L2-normalized adapted outputs
  bool train_mode = false;
};

BatchCache adapter_forward_batch(const AdapterParams& p, const AdapterConfig& cfg,
                                 const Eigen::MatrixXd& x, bool train,
                                 const std::vector<uint64_t>& dropout_seeds);

// Composite objective on normalized adapted views z (rows) against the
// normalized frozen originals e_hat, grouped by table id:
//   inv: mean over tables of mean_{views} ||z_i - sg(c_t)||^2, c_t the
//        within-batch centroid of the table's rows (constant to the gradient)
//   var: (1/d) sum_j hinge(gamma - sqrt(Var_j(z) + 1e-4))^2, biased variance
//   cov: (1/(d(d-1))) sum_{p!=q} Cov(z)_{pq}^2, Cov = Zc^T Zc / (n-1)
//   id:  mean(1 - cos(z_i, e_hat_i))
//   total = lambda_inv*inv + lambda_var*var + lambda_cov*cov + lambda_id*id
// Fewer than two rows forces var and cov to 0 and sets var_cov_skipped.
struct LossBreakdown {
  double total = 0.0;
  double inv = 0.0, var = 0.0, cov = 0.0, id = 0.0;
  double mean_cos = 0.0;       // diagnostic: mean cos(z_i, e_hat_i)
  bool var_cov_skipped = false;
};

// Within-batch per-table centroids of the rows of z.
std::map<std::string, Eigen::VectorXd> batch_centroids(const Eigen::MatrixXd& z,
                                                       const std::vector<std::string>& table_ids);

// When `frozen_centroids` is given, those are used for the invariance term
// instead of centroids recomputed from z — that is exactly the stop-gradient
// semantics a finite-difference check has to replicate. `dl_dz` (same shape
// as z) receives the full weighted gradient when non-null.
LossBreakdown vicreg_loss(const Eigen::MatrixXd& z, const Eigen::MatrixXd& e_hat,
                          const std::vector<std::string>& table_ids, const AdapterConfig& cfg,
                          Eigen::MatrixXd* dl_dz = nullptr,
                          const std::map<std::string, Eigen::VectorXd>* frozen_centroids = nullptr);

struct AdapterGradients {
  Eigen::VectorXd ln_gain, ln_bias;
  Eigen::MatrixXd w_down;
  Eigen::VectorXd b_down;
  Eigen::MatrixXd w_up;
  Eigen::VectorXd b_up;
};

// Backpropagates dl_dz through the normalization and the adapter branch.
// Requires a training-mode cache (StaleCache otherwise). Input gradients are
// not produced: the stored embeddings are frozen.
AdapterGradients adapter_backward(const AdapterParams& p, const AdapterConfig& cfg,
                                  const BatchCache& cache, const Eigen::MatrixXd& dl_dz);

// AdamW with bias-corrected moments (beta1 0.9, beta2 0.999, eps 1e-8),
// decoupled weight decay applied to w_down/w_up only, and global-norm
// gradient clipping across all parameter gradients before the update.
struct OptimizerState {
  AdapterGradients m, v;
  uint64_t step = 0;
};

OptimizerState init_optimizer(const AdapterParams& p);
void adamw_step(AdapterParams& p, const AdapterGradients& g, OptimizerState& opt,
                const AdapterConfig& cfg);

struct TrainLogRow {
  size_t step = 0;
  LossBreakdown loss;
};

struct TrainResult {
  AdapterParams params;
  std::vector<TrainLogRow> log;
};

// Trains on every non-centroid entry of the store, grouped by table; only
// tables with >= 2 views participate (NoMultiViewTables otherwise). Each
// step, drawn from one SplitMix64(cfg.seed) stream in this order:
//   1. the step's dropout seed base ds (one next_u64),
//   2. cfg.batch_size distinct table indices by partial Fisher-Yates
//      (j = i + next_below(n - i); all tables when batch_size >= n).
// Per-view dropout seeds are then next_u64 draws from SplitMix64(ds) in view
// order. Logs every log_every steps and at the final step; writes a rolling
// checkpoint (adapter.ckpt, no optimizer state) into checkpoint_dir every
// ckpt_every steps when the directory is set. Deterministic in cfg.seed.
TrainResult train_adapter(const EmbeddingStore& store, const AdapterConfig& cfg);

// CSV columns: step,total,inv,var,cov,id,mean_cos.
void write_train_log_csv(const std::vector<TrainLogRow>& log, const std::filesystem::path& path);

// Checkpoint file:
//   "ADP1" | u32 d | u32 r | f32 alpha | f32 dropout |
//   f32 arrays: ln_gain[d], ln_bias[d], w_down row-major[r*d], b_down[r],
//               w_up row-major[d*r], b_up[d] |
//   u8 has_optimizer | (first moments in the same order, then second
//   moments, then u64 step, when present)
// Little-endian; doubles truncated to f32, so a round trip preserves values
// at 32-bit precision.
void save_checkpoint(const AdapterParams& p, double alpha, double dropout,
                     const OptimizerState* opt, const std::filesystem::path& path);

struct LoadedCheckpoint {
  AdapterParams params;
  double alpha = 0.0;
  double dropout = 0.0;
  std::optional<OptimizerState> optimizer;
};

// expected_dim, when nonzero, guards against applying a checkpoint to a
// store of a different dimension (ShapeMismatch).
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, size_t expected_dim = 0);

// Evaluation-mode forward over every entry; output metadata records the
// checkpoint identity by appending ";adapter=<label>" to the params text.
EmbeddingStore adapt_store(const AdapterParams& p, double alpha, const EmbeddingStore& store,
                           const std::string& label);

}  // namespace centra
