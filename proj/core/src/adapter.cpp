#include "centra/adapter.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "centra/error.hpp"
#include "centra/prng.hpp"
#include "centra/serialize.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint files are little-endian; big-endian hosts are not supported");

namespace centra {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kVarEps = 1e-4;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

double gelu(double u) { return 0.5 * u * (1.0 + std::erf(u * kInvSqrt2)); }

// d/du [0.5 u (1 + erf(u/sqrt(2)))] = Phi(u) + u phi(u)
double gelu_grad(double u) {
  double phi_cdf = 0.5 * (1.0 + std::erf(u * kInvSqrt2));
  double phi_pdf = kInvSqrt2Pi * std::exp(-0.5 * u * u);
  return phi_cdf + u * phi_pdf;
}

}  // namespace

void AdapterConfig::validate() const {
  auto bad = [](const std::string& what) { raise(ErrorCode::ConfigError, what); };
  if (bottleneck == 0) bad("bottleneck must be >= 1");
  if (!(alpha == alpha) || std::isinf(alpha)) bad("alpha must be finite");
  if (!(dropout >= 0.0 && dropout < 1.0)) bad("dropout must be in [0, 1)");
  if (!(gamma_std >= 0.0)) bad("gamma_std must be >= 0");
  if (!(lambda_inv >= 0.0 && lambda_var >= 0.0 && lambda_cov >= 0.0 && lambda_id >= 0.0))
    bad("loss weights must be >= 0");
  if (!(lr > 0.0)) bad("lr must be > 0");
  if (!(weight_decay >= 0.0)) bad("weight_decay must be >= 0");
  if (!(grad_clip_norm >= 0.0)) bad("grad_clip_norm must be >= 0 (0 disables)");
  if (batch_size == 0) bad("batch_size must be >= 1");
  if (log_every == 0) bad("log_every must be >= 1");
  if (ckpt_every == 0) bad("ckpt_every must be >= 1");
}

AdapterParams init_adapter(const AdapterConfig& cfg) {
  cfg.validate();
  if (cfg.dimension == 0) raise(ErrorCode::ConfigError, "init_adapter needs a concrete dimension");
  long d = static_cast<long>(cfg.dimension);
  long r = static_cast<long>(cfg.bottleneck);

  AdapterParams p;
  p.ln_gain = Eigen::VectorXd::Ones(d);
  p.ln_bias = Eigen::VectorXd::Zero(d);
  p.w_down.resize(r, d);
  const double bound = std::sqrt(1.0 / static_cast<double>(d));
  SplitMix64 rng(cfg.seed);
  for (long i = 0; i < r; ++i)
    for (long j = 0; j < d; ++j) p.w_down(i, j) = (2.0 * rng.next_unit() - 1.0) * bound;
  p.b_down = Eigen::VectorXd::Zero(r);
  p.w_up = Eigen::MatrixXd::Zero(d, r);
  p.b_up = Eigen::VectorXd::Zero(d);
  return p;
}

BatchCache adapter_forward_batch(const AdapterParams& p, const AdapterConfig& cfg,
                                 const Eigen::MatrixXd& x, bool train,
                                 const std::vector<uint64_t>& dropout_seeds) {
  const long n = x.rows();
  const long d = p.dim();
  const long r = p.bottleneck();
  if (x.cols() != d)
    raise(ErrorCode::DimensionMismatch,
          fmt::format("input has {} columns, adapter expects {}", x.cols(), d));
  if (!x.allFinite()) raise(ErrorCode::NonFiniteInput, "adapter input has NaN/Inf");
  if (train && dropout_seeds.size() != static_cast<size_t>(n))
    raise(ErrorCode::LengthMismatch, "one dropout seed per row is required in training mode");

  BatchCache c;
  c.train_mode = train;
  c.x = x;

  // LayerNorm per row.
  c.xhat.resize(n, d);
  c.inv_sigma.resize(n);
  for (long i = 0; i < n; ++i) {
    double mean = x.row(i).mean();
    double var = (x.row(i).array() - mean).square().sum() / static_cast<double>(d);
    double inv_sigma = 1.0 / std::sqrt(var + kLnEps);
    c.inv_sigma[i] = inv_sigma;
    c.xhat.row(i) = (x.row(i).array() - mean) * inv_sigma;
  }
  c.ln_out = ((c.xhat.array().rowwise() * p.ln_gain.transpose().array()).rowwise() +
              p.ln_bias.transpose().array())
                 .matrix();

  c.pre.noalias() = c.ln_out * p.w_down.transpose();
  if (cfg.use_bias) c.pre.rowwise() += p.b_down.transpose();

  Eigen::MatrixXd act = c.pre.unaryExpr([](double u) { return gelu(u); });

  if (train) {
    c.mask.resize(n, r);
    for (long i = 0; i < n; ++i) {
      SplitMix64 rng(dropout_seeds[static_cast<size_t>(i)]);
      for (long k = 0; k < r; ++k) c.mask(i, k) = rng.next_unit() >= cfg.dropout ? 1.0 : 0.0;
    }
    c.dropped = act.cwiseProduct(c.mask) / (1.0 - cfg.dropout);
  } else {
    c.dropped = std::move(act);
  }

  Eigen::MatrixXd up;
  up.noalias() = c.dropped * p.w_up.transpose();
  if (cfg.use_bias) up.rowwise() += p.b_up.transpose();
  c.a = x + cfg.alpha * up;
  if (!c.a.allFinite()) raise(ErrorCode::NonFiniteValue, "adapter output has NaN/Inf");

  c.a_norm.resize(n);
  c.z.resize(n, d);
  for (long i = 0; i < n; ++i) {
    double norm = c.a.row(i).norm();
    if (norm == 0.0) raise(ErrorCode::ZeroVector, "adapted vector collapsed to zero");
    c.a_norm[i] = norm;
    c.z.row(i) = c.a.row(i) / norm;
  }
  return c;
}

Eigen::VectorXd adapter_forward(const AdapterParams& p, double alpha, const Eigen::VectorXd& x) {
  AdapterConfig cfg;
  cfg.dimension = static_cast<size_t>(p.dim());
  cfg.bottleneck = static_cast<size_t>(p.bottleneck());
  cfg.alpha = alpha;
  cfg.dropout = 0.0;
  BatchCache c = adapter_forward_batch(p, cfg, x.transpose(), false, {});
  return c.a.row(0).transpose();
}

std::map<std::string, Eigen::VectorXd> batch_centroids(const Eigen::MatrixXd& z,
                                                       const std::vector<std::string>& table_ids) {
  if (table_ids.size() != static_cast<size_t>(z.rows()))
    raise(ErrorCode::LengthMismatch, "one table id per row is required");
  std::map<std::string, Eigen::VectorXd> sums;
  std::map<std::string, double> counts;
  for (long i = 0; i < z.rows(); ++i) {
    auto [it, fresh] = sums.try_emplace(table_ids[static_cast<size_t>(i)],
                                        Eigen::VectorXd::Zero(z.cols()));
    it->second += z.row(i).transpose();
    counts[it->first] += 1.0;
  }
  for (auto& [id, sum] : sums) sum /= counts[id];
  return sums;
}

LossBreakdown vicreg_loss(const Eigen::MatrixXd& z, const Eigen::MatrixXd& e_hat,
                          const std::vector<std::string>& table_ids, const AdapterConfig& cfg,
                          Eigen::MatrixXd* dl_dz,
                          const std::map<std::string, Eigen::VectorXd>* frozen_centroids) {
  const long n = z.rows();
  const long d = z.cols();
  if (n == 0) raise(ErrorCode::EmptyViewSet, "loss over an empty batch");
  if (e_hat.rows() != n || e_hat.cols() != d)
    raise(ErrorCode::ShapeMismatch, "z and e_hat must have identical shape");
  if (table_ids.size() != static_cast<size_t>(n))
    raise(ErrorCode::LengthMismatch, "one table id per row is required");
  if (!z.allFinite() || !e_hat.allFinite())
    raise(ErrorCode::NonFiniteInput, "loss inputs have NaN/Inf");

  LossBreakdown out;
  if (dl_dz) *dl_dz = Eigen::MatrixXd::Zero(n, d);

  // --- invariance: mean over tables of mean ||z_i - sg(c_t)||^2 ----------
  std::map<std::string, std::vector<long>> groups;
  for (long i = 0; i < n; ++i) groups[table_ids[static_cast<size_t>(i)]].push_back(i);
  std::map<std::string, Eigen::VectorXd> local;
  const std::map<std::string, Eigen::VectorXd>* cts = frozen_centroids;
  if (!cts) {
    local = batch_centroids(z, table_ids);
    cts = &local;
  }
  const double n_tables = static_cast<double>(groups.size());
  for (const auto& [id, rows] : groups) {
    auto ct_it = cts->find(id);
    if (ct_it == cts->end())
      raise(ErrorCode::MissingCentroid, fmt::format("no frozen centroid for table '{}'", id));
    const Eigen::VectorXd& ct = ct_it->second;
    const double n_t = static_cast<double>(rows.size());
    for (long i : rows) {
      Eigen::VectorXd diff = z.row(i).transpose() - ct;
      out.inv += diff.squaredNorm() / (n_t * n_tables);
      if (dl_dz) dl_dz->row(i) += (2.0 * cfg.lambda_inv / (n_t * n_tables)) * diff.transpose();
    }
  }

  // --- variance hinge + covariance off-diagonals ------------------------
  if (n < 2) {
    out.var_cov_skipped = true;
  } else {
    Eigen::RowVectorXd mu = z.colwise().mean();
    Eigen::MatrixXd zc = z.rowwise() - mu;

    Eigen::ArrayXd var =
        zc.array().square().colwise().sum().transpose() / static_cast<double>(n);
    Eigen::ArrayXd sd = (var + kVarEps).sqrt();
    Eigen::ArrayXd hinge = (cfg.gamma_std - sd).max(0.0);
    out.var = (hinge * hinge).sum() / static_cast<double>(d);
    if (dl_dz) {
      for (long j = 0; j < d; ++j) {
        if (hinge[j] <= 0.0) continue;
        double coef = -2.0 * cfg.lambda_var * hinge[j] /
                      (static_cast<double>(d) * static_cast<double>(n) * sd[j]);
        dl_dz->col(j) += coef * zc.col(j);
      }
    }

    if (d >= 2) {
      Eigen::MatrixXd cov = (zc.transpose() * zc) / static_cast<double>(n - 1);
      double off = cov.squaredNorm() - cov.diagonal().squaredNorm();
      const double pairs = static_cast<double>(d) * static_cast<double>(d - 1);
      out.cov = off / pairs;
      if (dl_dz) {
        Eigen::MatrixXd g = (2.0 * cfg.lambda_cov / pairs) * cov;
        g.diagonal().setZero();
        Eigen::MatrixXd dzc = (2.0 / static_cast<double>(n - 1)) * (zc * g);
        dzc.rowwise() -= dzc.colwise().mean();
        *dl_dz += dzc;
      }
    }
  }

  // --- identity anchor: mean (1 - cos(z_i, e_hat_i)) --------------------
  double cos_sum = 0.0;
  for (long i = 0; i < n; ++i) {
    double az = z.row(i).norm();
    double ae = e_hat.row(i).norm();
    if (az == 0.0 || ae == 0.0)
      raise(ErrorCode::ZeroVector, "cosine against a zero vector is undefined");
    double dot = z.row(i).dot(e_hat.row(i));
    double cosine = dot / (az * ae);
    cos_sum += cosine;
    if (dl_dz) {
      Eigen::RowVectorXd dcos =
          e_hat.row(i) / (az * ae) - (dot / (az * az * az * ae)) * z.row(i);
      dl_dz->row(i) -= (cfg.lambda_id / static_cast<double>(n)) * dcos;
    }
  }
  out.mean_cos = cos_sum / static_cast<double>(n);
  out.id = 1.0 - out.mean_cos;

  out.total = cfg.lambda_inv * out.inv + cfg.lambda_var * out.var + cfg.lambda_cov * out.cov +
              cfg.lambda_id * out.id;
  return out;
}

AdapterGradients adapter_backward(const AdapterParams& p, const AdapterConfig& cfg,
                                  const BatchCache& cache, const Eigen::MatrixXd& dl_dz) {
  if (!cache.train_mode)
    raise(ErrorCode::StaleCache, "backward needs a training-mode forward cache");
  const long n = cache.z.rows();
  const long d = p.dim();
  if (dl_dz.rows() != n || dl_dz.cols() != d)
    raise(ErrorCode::ShapeMismatch, "dl_dz shape does not match the cached batch");

  // Through z = a / ||a||:  da = (g - (g.z) z) / ||a||
  Eigen::MatrixXd da(n, d);
  for (long i = 0; i < n; ++i) {
    double gz = dl_dz.row(i).dot(cache.z.row(i));
    da.row(i) = (dl_dz.row(i) - gz * cache.z.row(i)) / cache.a_norm[i];
  }

  AdapterGradients g;
  Eigen::MatrixXd dup = cfg.alpha * da;

  g.b_up = cfg.use_bias ? Eigen::VectorXd(dup.colwise().sum().transpose())
                        : Eigen::VectorXd(Eigen::VectorXd::Zero(d));
  g.w_up.noalias() = dup.transpose() * cache.dropped;

  Eigen::MatrixXd ddrop;
  ddrop.noalias() = dup * p.w_up;
  Eigen::MatrixXd dact = ddrop.cwiseProduct(cache.mask) / (1.0 - cfg.dropout);
  Eigen::MatrixXd dpre =
      dact.cwiseProduct(cache.pre.unaryExpr([](double u) { return gelu_grad(u); }));

  g.b_down = cfg.use_bias ? Eigen::VectorXd(dpre.colwise().sum().transpose())
                          : Eigen::VectorXd(Eigen::VectorXd::Zero(p.bottleneck()));
  g.w_down.noalias() = dpre.transpose() * cache.ln_out;

  Eigen::MatrixXd dln;
  dln.noalias() = dpre * p.w_down;
  g.ln_gain = dln.cwiseProduct(cache.xhat).colwise().sum().transpose();
  g.ln_bias = dln.colwise().sum().transpose();
  return g;
}

OptimizerState init_optimizer(const AdapterParams& p) {
  OptimizerState opt;
  auto zero_like = [](AdapterGradients& g, const AdapterParams& ref) {
    g.ln_gain = Eigen::VectorXd::Zero(ref.ln_gain.size());
    g.ln_bias = Eigen::VectorXd::Zero(ref.ln_bias.size());
    g.w_down = Eigen::MatrixXd::Zero(ref.w_down.rows(), ref.w_down.cols());
    g.b_down = Eigen::VectorXd::Zero(ref.b_down.size());
    g.w_up = Eigen::MatrixXd::Zero(ref.w_up.rows(), ref.w_up.cols());
    g.b_up = Eigen::VectorXd::Zero(ref.b_up.size());
  };
  zero_like(opt.m, p);
  zero_like(opt.v, p);
  return opt;
}

void adamw_step(AdapterParams& p, const AdapterGradients& g, OptimizerState& opt,
                const AdapterConfig& cfg) {
  auto finite = [](const auto& m) { return m.allFinite(); };
  if (!finite(g.ln_gain) || !finite(g.ln_bias) || !finite(g.w_down) || !finite(g.b_down) ||
      !finite(g.w_up) || !finite(g.b_up))
    raise(ErrorCode::NonFiniteGradient, "gradient has NaN/Inf");

  double sq = g.ln_gain.squaredNorm() + g.ln_bias.squaredNorm() + g.w_down.squaredNorm() +
              g.b_down.squaredNorm() + g.w_up.squaredNorm() + g.b_up.squaredNorm();
  double norm = std::sqrt(sq);
  double scale = (cfg.grad_clip_norm > 0.0 && norm > cfg.grad_clip_norm)
                     ? cfg.grad_clip_norm / norm
                     : 1.0;

  opt.step += 1;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(opt.step));

  auto update = [&](auto& param, const auto& grad, auto& m, auto& v, bool decay) {
    auto gs = (grad.array() * scale).eval();
    m.array() = kAdamBeta1 * m.array() + (1.0 - kAdamBeta1) * gs;
    v.array() = kAdamBeta2 * v.array() + (1.0 - kAdamBeta2) * gs.square();
    param.array() -= cfg.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + kAdamEps);
    if (decay && cfg.weight_decay > 0.0) param.array() -= cfg.lr * cfg.weight_decay * param.array();
  };
  update(p.ln_gain, g.ln_gain, opt.m.ln_gain, opt.v.ln_gain, false);
  update(p.ln_bias, g.ln_bias, opt.m.ln_bias, opt.v.ln_bias, false);
  update(p.w_down, g.w_down, opt.m.w_down, opt.v.w_down, true);
  update(p.b_down, g.b_down, opt.m.b_down, opt.v.b_down, false);
  update(p.w_up, g.w_up, opt.m.w_up, opt.v.w_up, true);
  update(p.b_up, g.b_up, opt.m.b_up, opt.v.b_up, false);
}

namespace {

struct TableViews {
  std::string id;
  Eigen::MatrixXd x;      // n_t x d frozen views
  Eigen::MatrixXd e_hat;  // row-normalized copies
};

std::vector<TableViews> collect_training_tables(const EmbeddingStore& store, size_t max_views) {
  std::map<std::string, std::vector<const Eigen::VectorXd*>> by_table;
  for (const auto& [key, vec] : store.entries()) {
    if (is_centroid_variant(key.format)) continue;
    auto& views = by_table[key.table];
    if (max_views == 0 || views.size() < max_views) views.push_back(&vec);
  }
  std::vector<TableViews> out;
  for (auto& [id, views] : by_table) {
    if (views.size() < 2) continue;
    TableViews tv;
    tv.id = id;
    tv.x.resize(static_cast<long>(views.size()), static_cast<long>(store.dimension()));
    for (size_t i = 0; i < views.size(); ++i) tv.x.row(static_cast<long>(i)) = views[i]->transpose();
    tv.e_hat = tv.x;
    for (long i = 0; i < tv.e_hat.rows(); ++i) tv.e_hat.row(i).normalize();
    out.push_back(std::move(tv));
  }
  return out;
}

}  // namespace

TrainResult train_adapter(const EmbeddingStore& store, const AdapterConfig& cfg) {
  cfg.validate();
  if (!store.sealed()) raise(ErrorCode::StaleCache, "training needs a sealed store");
  if (cfg.steps == 0) raise(ErrorCode::ConfigError, "steps must be >= 1");
  if (cfg.dimension != 0 && cfg.dimension != store.dimension())
    raise(ErrorCode::DimensionMismatch,
          fmt::format("config dimension {} != store dimension {}", cfg.dimension,
                      store.dimension()));

  AdapterConfig c = cfg;
  c.dimension = store.dimension();

  std::vector<TableViews> tables = collect_training_tables(store, c.max_views);
  if (tables.empty())
    raise(ErrorCode::NoMultiViewTables, "no table has two or more views to align");

  AdapterParams params = init_adapter(c);
  OptimizerState opt = init_optimizer(params);
  TrainResult result;

  const size_t n_tables = tables.size();
  std::vector<size_t> batch_idx;
  SplitMix64 master(c.seed);

  for (size_t step = 1; step <= c.steps; ++step) {
    uint64_t ds = master.next_u64();

    batch_idx.clear();
    if (c.batch_size >= n_tables) {
      for (size_t i = 0; i < n_tables; ++i) batch_idx.push_back(i);
    } else {
      std::vector<size_t> pool(n_tables);
      std::iota(pool.begin(), pool.end(), 0);
      for (size_t i = 0; i < c.batch_size; ++i) {
        size_t j = i + static_cast<size_t>(master.next_below(n_tables - i));
        std::swap(pool[i], pool[j]);
        batch_idx.push_back(pool[i]);
      }
    }

    long rows = 0;
    for (size_t t : batch_idx) rows += tables[t].x.rows();
    Eigen::MatrixXd x(rows, static_cast<long>(c.dimension));
    Eigen::MatrixXd e_hat(rows, static_cast<long>(c.dimension));
    std::vector<std::string> ids;
    ids.reserve(static_cast<size_t>(rows));
    long at = 0;
    for (size_t t : batch_idx) {
      const TableViews& tv = tables[t];
      x.middleRows(at, tv.x.rows()) = tv.x;
      e_hat.middleRows(at, tv.x.rows()) = tv.e_hat;
      for (long i = 0; i < tv.x.rows(); ++i) ids.push_back(tv.id);
      at += tv.x.rows();
    }

    SplitMix64 seed_rng(ds);
    std::vector<uint64_t> dropout_seeds(static_cast<size_t>(rows));
    for (auto& s : dropout_seeds) s = seed_rng.next_u64();

    BatchCache cache = adapter_forward_batch(params, c, x, true, dropout_seeds);
    Eigen::MatrixXd dl_dz;
    LossBreakdown loss = vicreg_loss(cache.z, e_hat, ids, c, &dl_dz);
    AdapterGradients grads = adapter_backward(params, c, cache, dl_dz);
    adamw_step(params, grads, opt, c);

    if (step % c.log_every == 0 || step == c.steps) result.log.push_back({step, loss});
    if (!c.checkpoint_dir.empty() && (step % c.ckpt_every == 0 || step == c.steps)) {
      std::filesystem::create_directories(c.checkpoint_dir);
      save_checkpoint(params, c.alpha, c.dropout, nullptr,
                      std::filesystem::path(c.checkpoint_dir) / "adapter.ckpt");
    }
  }
  result.params = std::move(params);
  return result;
}

void write_train_log_csv(const std::vector<TrainLogRow>& log, const std::filesystem::path& path) {
  auto out = fmt::output_file(path.string());
  out.print("step,total,inv,var,cov,id,mean_cos\n");
  for (const auto& row : log)
    out.print("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", row.step, row.loss.total,
              row.loss.inv, row.loss.var, row.loss.cov, row.loss.id, row.loss.mean_cos);
}

namespace {

constexpr char kCkptMagic[4] = {'A', 'D', 'P', '1'};

template <typename T>
void write_raw(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in, const char* what) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) raise(ErrorCode::TruncatedFile, fmt::format("unexpected end of file reading {}", what));
  return value;
}

// Row-major f32 serialization of a (possibly column-major) Eigen object.
void write_array(std::ostream& out, const Eigen::Ref<const Eigen::MatrixXd>& m) {
  for (long i = 0; i < m.rows(); ++i)
    for (long j = 0; j < m.cols(); ++j) write_raw<float>(out, static_cast<float>(m(i, j)));
}

void read_array(std::istream& in, Eigen::Ref<Eigen::MatrixXd> m, const char* what) {
  for (long i = 0; i < m.rows(); ++i)
    for (long j = 0; j < m.cols(); ++j) m(i, j) = static_cast<double>(read_raw<float>(in, what));
}

void write_param_arrays(std::ostream& out, const AdapterParams& p) {
  write_array(out, p.ln_gain);
  write_array(out, p.ln_bias);
  write_array(out, p.w_down);
  write_array(out, p.b_down);
  write_array(out, p.w_up);
  write_array(out, p.b_up);
}

void write_grad_arrays(std::ostream& out, const AdapterGradients& g) {
  write_array(out, g.ln_gain);
  write_array(out, g.ln_bias);
  write_array(out, g.w_down);
  write_array(out, g.b_down);
  write_array(out, g.w_up);
  write_array(out, g.b_up);
}

AdapterParams sized_params(long d, long r) {
  AdapterParams p;
  p.ln_gain.resize(d);
  p.ln_bias.resize(d);
  p.w_down.resize(r, d);
  p.b_down.resize(r);
  p.w_up.resize(d, r);
  p.b_up.resize(d);
  return p;
}

void read_param_arrays(std::istream& in, AdapterParams& p) {
  read_array(in, p.ln_gain, "ln_gain");
  read_array(in, p.ln_bias, "ln_bias");
  read_array(in, p.w_down, "w_down");
  read_array(in, p.b_down, "b_down");
  read_array(in, p.w_up, "w_up");
  read_array(in, p.b_up, "b_up");
}

}  // namespace

void save_checkpoint(const AdapterParams& p, double alpha, double dropout,
                     const OptimizerState* opt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::MalformedFile, "cannot open for writing: " + path.string());
  out.write(kCkptMagic, 4);
  write_raw<uint32_t>(out, static_cast<uint32_t>(p.dim()));
  write_raw<uint32_t>(out, static_cast<uint32_t>(p.bottleneck()));
  write_raw<float>(out, static_cast<float>(alpha));
  write_raw<float>(out, static_cast<float>(dropout));
  write_param_arrays(out, p);
  write_raw<uint8_t>(out, opt ? 1 : 0);
  if (opt) {
    write_grad_arrays(out, opt->m);
    write_grad_arrays(out, opt->v);
    write_raw<uint64_t>(out, opt->step);
  }
  if (!out) raise(ErrorCode::MalformedFile, "write failed: " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, size_t expected_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::MalformedFile, "cannot open: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCkptMagic, 4) != 0)
    raise(ErrorCode::BadMagic, "not an ADP1 checkpoint file: " + path.string());

  auto d = read_raw<uint32_t>(in, "dimension");
  auto r = read_raw<uint32_t>(in, "bottleneck");
  if (d == 0 || r == 0)
    raise(ErrorCode::ShapeMismatch, "checkpoint declares a zero-sized adapter");
  if (expected_dim != 0 && expected_dim != d)
    raise(ErrorCode::ShapeMismatch,
          fmt::format("checkpoint dimension {} does not match expected {}", d, expected_dim));

  LoadedCheckpoint ckpt;
  ckpt.alpha = static_cast<double>(read_raw<float>(in, "alpha"));
  ckpt.dropout = static_cast<double>(read_raw<float>(in, "dropout"));
  ckpt.params = sized_params(d, r);
  read_param_arrays(in, ckpt.params);

  auto has_opt = read_raw<uint8_t>(in, "optimizer flag");
  if (has_opt == 1) {
    OptimizerState opt = init_optimizer(ckpt.params);
    AdapterParams m = sized_params(d, r), v = sized_params(d, r);
    read_param_arrays(in, m);
    read_param_arrays(in, v);
    opt.m = {m.ln_gain, m.ln_bias, m.w_down, m.b_down, m.w_up, m.b_up};
    opt.v = {v.ln_gain, v.ln_bias, v.w_down, v.b_down, v.w_up, v.b_up};
    opt.step = read_raw<uint64_t>(in, "optimizer step");
    ckpt.optimizer = std::move(opt);
  } else if (has_opt != 0) {
    raise(ErrorCode::MalformedFile, "optimizer flag must be 0 or 1");
  }
  if (in.peek() != std::char_traits<char>::eof())
    raise(ErrorCode::MalformedFile, "trailing bytes after checkpoint payload");
  return ckpt;
}

EmbeddingStore adapt_store(const AdapterParams& p, double alpha, const EmbeddingStore& store,
                           const std::string& label) {
  if (!store.sealed()) raise(ErrorCode::StaleCache, "adapt_store needs a sealed store");
  if (static_cast<size_t>(p.dim()) != store.dimension())
    raise(ErrorCode::ShapeMismatch,
          fmt::format("adapter dimension {} does not match store dimension {}", p.dim(),
                      store.dimension()));

  StoreMetadata meta = store.metadata();
  meta.params += ";adapter=" + label;
  EmbeddingStore out(store.dimension(), std::move(meta));

  const long n = static_cast<long>(store.size());
  if (n > 0) {
    AdapterConfig cfg;
    cfg.dimension = store.dimension();
    cfg.bottleneck = static_cast<size_t>(p.bottleneck());
    cfg.alpha = alpha;
    cfg.dropout = 0.0;
    Eigen::MatrixXd x(n, static_cast<long>(store.dimension()));
    std::vector<const StoreKey*> keys;
    keys.reserve(static_cast<size_t>(n));
    long i = 0;
    for (const auto& [key, vec] : store.entries()) {
      x.row(i++) = vec.transpose();
      keys.push_back(&key);
    }
    BatchCache cache = adapter_forward_batch(p, cfg, x, false, {});
    for (long row = 0; row < n; ++row)
      out.insert(*keys[static_cast<size_t>(row)], cache.a.row(row).transpose());
  }
  out.seal();
  return out;
}

}  // namespace centra
