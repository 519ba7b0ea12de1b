// src/tiny_trainer.cc

// Copyright 2026  The dasa-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "dasa/tiny_trainer.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dasa {

TinyEmbedder::TinyEmbedder(std::vector<DenseLayer> layers)
    : layers_(std::move(layers)) {
  if (layers_.empty()) ThrowValidation("TinyEmbedder: no layers");
  for (size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer &layer = layers_[l];
    if (layer.bias.size() != layer.weight.rows())
      ThrowValidation("TinyEmbedder: bias/weight mismatch in layer " +
                      std::to_string(l));
    if (l > 0 && layer.weight.cols() != layers_[l - 1].weight.rows())
      ThrowValidation("TinyEmbedder: layer " + std::to_string(l) +
                      " does not chain with the previous layer");
  }
}

TinyEmbedder TinyEmbedder::Random(const std::vector<int> &dims, Rng &rng) {
  if (dims.size() < 2) ThrowValidation("TinyEmbedder: need >= 2 dims");
  for (int d : dims)
    if (d <= 0) ThrowValidation("TinyEmbedder: dims must be positive");
  std::vector<DenseLayer> layers;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    DenseLayer layer;
    layer.weight.resize(dims[l + 1], dims[l]);
    const double std_dev = std::sqrt(2.0 / dims[l]);
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i)
      layer.weight.data()[i] = std_dev * rng.Normal();
    layer.bias = Vector::Zero(dims[l + 1]);
    layers.push_back(std::move(layer));
  }
  return TinyEmbedder(std::move(layers));
}

int TinyEmbedder::input_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.front().weight.cols());
}

int TinyEmbedder::output_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.back().weight.rows());
}

Vector TinyEmbedder::Forward(const Vector &x, Cache *cache) const {
  if (x.size() != input_dim())
    ThrowValidation("TinyEmbedder::Forward: input dim " +
                    std::to_string(x.size()) + " != " +
                    std::to_string(input_dim()));
  if (!x.allFinite()) ThrowValidation("TinyEmbedder::Forward: non-finite input");
  if (cache) {
    cache->inputs.clear();
    cache->valid = false;
  }
  Vector h = x;
  for (size_t l = 0; l < layers_.size(); ++l) {
    if (cache) cache->inputs.push_back(h);
    Vector z = layers_[l].weight * h + layers_[l].bias;
    if (l + 1 < layers_.size()) z = z.cwiseMax(0.0);
    h = std::move(z);
  }
  const double norm = h.norm();
  Vector out;
  bool degenerate = norm == 0.0;
  if (degenerate) {
    out = Vector::Zero(h.size());
    out[0] = 1.0;
  } else {
    out = h / norm;
  }
  if (cache) {
    cache->pre_norm = h;
    cache->norm = norm;
    cache->degenerate = degenerate;
    cache->valid = true;
  }
  return out;
}

std::vector<DenseLayer> TinyEmbedder::Backward(
    const Cache &cache, const Vector &grad_embedding) const {
  if (!cache.valid || cache.inputs.size() != layers_.size())
    ThrowValidation("TinyEmbedder::Backward: missing forward cache");
  if (grad_embedding.size() != output_dim())
    ThrowValidation("TinyEmbedder::Backward: gradient dim mismatch");
  std::vector<DenseLayer> grads(layers_.size());
  for (size_t l = 0; l < layers_.size(); ++l) {
    grads[l].weight = Matrix::Zero(layers_[l].weight.rows(),
                                   layers_[l].weight.cols());
    grads[l].bias = Vector::Zero(layers_[l].bias.size());
  }
  if (cache.degenerate) return grads;

  // d(v / |v|) = (I - f f^T) / |v|.
  const Vector f = cache.pre_norm / cache.norm;
  Vector g = (grad_embedding - f * f.dot(grad_embedding)) / cache.norm;
  for (size_t l = layers_.size(); l-- > 0;) {
    const Vector &in = cache.inputs[l];
    grads[l].weight.noalias() = g * in.transpose();
    grads[l].bias = g;
    if (l == 0) break;
    Vector up = layers_[l].weight.transpose() * g;
    // `in` is the ReLU output of layer l - 1.
    for (Eigen::Index a = 0; a < up.size(); ++a)
      if (!(in[a] > 0.0)) up[a] = 0.0;
    g = std::move(up);
  }
  return grads;
}

namespace {

void WriteRow(std::ostream &os, const char *tag, const double *v, Eigen::Index n) {
  os << tag;
  for (Eigen::Index i = 0; i < n; ++i) os << ',' << FormatDouble(v[i]);
  os << '\n';
}

struct LineReader {
  std::istream &is;
  int line_no = 0;

  std::vector<std::string> Next(const char *what) {
    std::string line;
    while (std::getline(is, line)) {
      ++line_no;
      if (!Trim(line).empty()) return SplitFields(Trim(line));
    }
    ThrowIo(std::string("model file ended while reading ") + what);
  }
  [[noreturn]] void Fail(const std::string &what) const {
    ThrowIo("model file line " + std::to_string(line_no) + ": " + what);
  }
  void ReadValues(const char *tag, double *out, Eigen::Index n) {
    auto f = Next(tag);
    if (f.size() != static_cast<size_t>(n) + 1 || f[0] != tag)
      Fail(std::string("expected '") + tag + "' row of " + std::to_string(n) +
           " values");
    for (Eigen::Index i = 0; i < n; ++i)
      if (!ParseDouble(f[1 + i], &out[i])) Fail("bad number");
  }
};

}  // namespace

void TinyEmbedder::Write(std::ostream &os) const {
  os << "embedder," << layers_.size() << '\n';
  for (size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer &layer = layers_[l];
    os << "layer," << l << ',' << layer.weight.rows() << ','
       << layer.weight.cols() << '\n';
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      WriteRow(os, "w", layer.weight.row(r).data(), layer.weight.cols());
    WriteRow(os, "b", layer.bias.data(), layer.bias.size());
  }
}

TinyEmbedder TinyEmbedder::Read(std::istream &is) {
  LineReader in{is};
  auto head = in.Next("embedder header");
  int64_t count = 0;
  if (head.size() != 2 || head[0] != "embedder" || !ParseInt(head[1], &count) ||
      count < 1)
    in.Fail("expected 'embedder,L'");
  std::vector<DenseLayer> layers;
  for (int64_t l = 0; l < count; ++l) {
    auto f = in.Next("layer header");
    int64_t idx = 0, rows = 0, cols = 0;
    if (f.size() != 4 || f[0] != "layer" || !ParseInt(f[1], &idx) ||
        idx != l || !ParseInt(f[2], &rows) || !ParseInt(f[3], &cols) ||
        rows < 1 || cols < 1)
      in.Fail("expected 'layer," + std::to_string(l) + ",out,in'");
    DenseLayer layer;
    layer.weight.resize(rows, cols);
    layer.bias.resize(rows);
    for (int64_t r = 0; r < rows; ++r)
      in.ReadValues("w", layer.weight.row(r).data(), cols);
    in.ReadValues("b", layer.bias.data(), rows);
    layers.push_back(std::move(layer));
  }
  return TinyEmbedder(std::move(layers));
}

double LearningRate(int64_t t, int64_t total_iters, double lr_init,
                    double lr_final) {
  if (total_iters < 1) ThrowValidation("LearningRate: total_iters must be >= 1");
  if (t <= 0) return lr_init;
  if (t >= total_iters) return lr_final;
  const double frac = static_cast<double>(t) / static_cast<double>(total_iters);
  return lr_init * std::pow(lr_final / lr_init, frac);
}

void OptimizerConfig::Validate() const {
  if (!(lr_init > 0.0) || !(lr_final > 0.0))
    ThrowValidation("optim.lr_init and optim.lr_final must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0))
    ThrowValidation("optim.momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0))
    ThrowValidation("optim.weight_decay must be >= 0");
}

namespace {

template <typename T>
void SgdStepImpl(const OptimizerConfig &config, double lr, const T &grad,
                 T *param, T *velocity) {
  T g = grad + config.weight_decay * *param;
  *velocity = config.momentum * *velocity - lr * g;
  if (config.nesterov) {
    *param += config.momentum * *velocity - lr * g;
  } else {
    *param += *velocity;
  }
}

}  // namespace

void SgdStep(const OptimizerConfig &config, double lr, const Matrix &grad,
             Matrix *param, Matrix *velocity) {
  SgdStepImpl(config, lr, grad, param, velocity);
}

void SgdStep(const OptimizerConfig &config, double lr, const Vector &grad,
             Vector *param, Vector *velocity) {
  SgdStepImpl(config, lr, grad, param, velocity);
}

void TrainConfig::Validate() const {
  if (loss.schedule.total_iters < 0)
    ThrowValidation("sched.total_iters must be >= 1 (or 0 for automatic)");
  LossConfig resolved = loss;
  if (resolved.schedule.total_iters == 0) resolved.schedule.total_iters = 1;
  resolved.Validate();
  optim.Validate();
  if (epochs < 1) ThrowValidation("optim.epochs must be >= 1");
  if (batch_size < 1) ThrowValidation("optim.batch_size must be >= 1");
  if (embed_dim < 2) ThrowValidation("model.embed_dim must be >= 2");
  for (int h : hidden)
    if (h < 1) ThrowValidation("model.hidden entries must be >= 1");
  if (!(scale > 0.0)) ThrowValidation("loss.scale must be > 0");
  if (!(margin >= 0.0)) ThrowValidation("loss.margin must be >= 0");
  if (max_nontarget_per_target < 1)
    ThrowValidation("eval.max_nontarget_per_target must be >= 1");
  dcf.Validate();
}

int64_t TrainConfig::TotalIters(int train_size) const {
  const int64_t batches = (train_size + batch_size - 1) / batch_size;
  return static_cast<int64_t>(epochs) * batches;
}

EvalResult Evaluate(const TinyEmbedder &model, const Dataset &data,
                    const TrainConfig &config) {
  EvalResult r;
  for (int i : data.Indices(Split::kEval)) {
    r.embeddings.push_back(model.Forward(data.inputs.row(i).transpose()));
    r.labels.push_back(data.labels[i]);
  }
  r.trials = BuildTrials(r.labels, config.max_nontarget_per_target,
                         config.trial_seed);
  r.scores = ScoreTrials(r.trials, r.embeddings);
  r.eer = ComputeEer(r.scores).eer;
  r.min_dcf = ComputeMinDcf(r.scores, config.dcf);
  return r;
}

TrainRun Train(const TrainConfig &config, const Dataset &data,
               const SampleLogger &logger) {
  config.Validate();
  data.Validate();
  const std::vector<int> train_idx = data.Indices(Split::kTrain);
  const int c = data.num_classes;
  const int dim = config.embed_dim;

  TrainRun run;
  run.config = config;
  const int64_t total =
      config.loss.schedule.total_iters > 0
          ? config.loss.schedule.total_iters
          : config.TotalIters(static_cast<int>(train_idx.size()));
  run.config.loss.schedule.total_iters = total;
  const LossConfig &loss_cfg = run.config.loss;
  loss_cfg.Validate();

  std::vector<int> dims = {data.input_dim()};
  dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
  dims.push_back(dim);
  Rng init_rng(config.seed, 100);
  run.model = TinyEmbedder::Random(dims, init_rng);
  run.head.weights.resize(c, dim);
  for (Eigen::Index i = 0; i < run.head.weights.size(); ++i)
    run.head.weights.data()[i] = init_rng.Normal() / std::sqrt(dim);
  run.head.biases = Vector::Zero(c);
  run.head.scale = config.scale;
  run.head.margin = config.margin;
  run.bank = CovarianceBank(c, dim, config.cov_mode);

  auto &layers = run.model.mutable_layers();
  std::vector<DenseLayer> velocity(layers.size());
  for (size_t l = 0; l < layers.size(); ++l) {
    velocity[l].weight = Matrix::Zero(layers[l].weight.rows(),
                                      layers[l].weight.cols());
    velocity[l].bias = Vector::Zero(layers[l].bias.size());
  }
  Matrix head_velocity = Matrix::Zero(c, dim);
  Vector bias_velocity = Vector::Zero(c);

  std::vector<int> order = train_idx;
  int64_t t = 0;
  TinyEmbedder::Cache cache;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle(config.seed, 1000 + static_cast<uint64_t>(epoch));
    for (size_t i = order.size(); i-- > 1;)
      std::swap(order[i], order[shuffle.Below(i + 1)]);

    double sum_loss = 0.0, sum_cos = 0.0, sum_coef = 0.0, sum_lambda = 0.0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(config.batch_size)) {
      const size_t end =
          std::min(order.size(), start + static_cast<size_t>(config.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(end - start);

      std::vector<DenseLayer> grads(layers.size());
      for (size_t l = 0; l < layers.size(); ++l) {
        grads[l].weight = Matrix::Zero(layers[l].weight.rows(),
                                       layers[l].weight.cols());
        grads[l].bias = Vector::Zero(layers[l].bias.size());
      }
      Matrix head_grad = Matrix::Zero(c, dim);
      Vector bias_grad = Vector::Zero(c);
      std::vector<Vector> batch_embeddings;

      for (size_t k = start; k < end; ++k) {
        const int row = order[k];
        const int label = data.labels[row];
        Vector f = run.model.Forward(data.inputs.row(row).transpose(), &cache);
        if (cache.degenerate) ++run.degenerate_outputs;
        if (!f.allFinite())
          ThrowNumerical("training diverged at iteration " + std::to_string(t) +
                         " (non-finite embedding)");
        LossOutput out = EvaluateLoss(loss_cfg, f, run.head, run.bank, label, t);
        if (!std::isfinite(out.value) || !out.grad_embedding.allFinite() ||
            !out.grad_weights.allFinite())
          ThrowNumerical("training diverged at iteration " + std::to_string(t) +
                         " (non-finite loss)");
        auto g = run.model.Backward(cache, out.grad_embedding);
        for (size_t l = 0; l < layers.size(); ++l) {
          grads[l].weight += inv_batch * g[l].weight;
          grads[l].bias += inv_batch * g[l].bias;
        }
        head_grad += inv_batch * out.grad_weights;
        if (out.grad_biases.size() > 0) bias_grad += inv_batch * out.grad_biases;

        sum_loss += out.value;
        sum_cos += out.terms.cos_y;
        sum_coef += out.terms.coef;
        sum_lambda += out.terms.lambda;
        if (logger)
          logger({t, row, out.terms.cos_y, out.terms.coef, out.terms.lambda,
                  out.value});
        batch_embeddings.push_back(std::move(f));
      }

      const double lr = LearningRate(t, total, config.optim.lr_init,
                                     config.optim.lr_final);
      for (size_t l = 0; l < layers.size(); ++l) {
        SgdStep(config.optim, lr, grads[l].weight, &layers[l].weight,
                &velocity[l].weight);
        SgdStep(config.optim, lr, grads[l].bias, &layers[l].bias,
                &velocity[l].bias);
      }
      SgdStep(config.optim, lr, head_grad, &run.head.weights, &head_velocity);
      if (loss_cfg.variant == LossVariant::kSoftmax ||
          loss_cfg.variant == LossVariant::kIsda)
        SgdStep(config.optim, lr, bias_grad, &run.head.biases, &bias_velocity);
      bool finite = run.head.weights.allFinite() && run.head.biases.allFinite();
      for (const DenseLayer &layer : layers)
        finite = finite && layer.weight.allFinite() && layer.bias.allFinite();
      if (!finite)
        ThrowNumerical("training diverged at iteration " + std::to_string(t) +
                       " (non-finite parameters)");

      const bool collect =
          !config.cov_from_deferred ||
          static_cast<double>(t) >=
              loss_cfg.schedule.deferred_fraction * static_cast<double>(total);
      if (collect)
        for (size_t k = start; k < end; ++k)
          run.bank.Update(batch_embeddings[k - start], data.labels[order[k]]);
      ++t;
    }

    const double n = static_cast<double>(order.size());
    EvalResult eval = Evaluate(run.model, data, config);
    EpochMetrics m;
    m.epoch = epoch;
    m.loss = sum_loss / n;
    m.mean_cos_y = sum_cos / n;
    m.mean_coef = sum_coef / n;
    m.lambda = sum_lambda / n;
    m.eer = eval.eer;
    m.min_dcf = eval.min_dcf;
    run.metrics.push_back(m);
    if (epoch + 1 == config.epochs) run.final_eval = std::move(eval);
  }
  return run;
}

double CompositionGradientCheck(const TinyEmbedder &model,
                                const ClassifierHead &head, const Vector &x,
                                const LossFunction &loss, double epsilon) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-4))
    ThrowValidation("gradient check epsilon must lie in [1e-7, 1e-4]");
  TinyEmbedder::Cache cache;
  const Vector f = model.Forward(x, &cache);
  const LossOutput out = loss(f, head);
  const auto grads = model.Backward(cache, out.grad_embedding);

  auto rel = [](double a, double n) {
    return std::abs(a - n) / std::max(1e-8, std::abs(a) + std::abs(n));
  };
  auto value = [&](const TinyEmbedder &m, const ClassifierHead &h) {
    return loss(m.Forward(x), h).value;
  };

  double worst = 0.0;
  TinyEmbedder probe = model;
  auto &layers = probe.mutable_layers();
  auto sweep = [&](double *param, const double *grad, Eigen::Index n,
                   const TinyEmbedder &m, const ClassifierHead &h) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double keep = param[i];
      double numeric = CentralDifference(
          [&](double d) {
            param[i] = keep + d;
            double v = value(m, h);
            param[i] = keep;
            return v;
          },
          epsilon);
      worst = std::max(worst, rel(grad[i], numeric));
    }
  };
  for (size_t l = 0; l < layers.size(); ++l) {
    sweep(layers[l].weight.data(), grads[l].weight.data(),
          layers[l].weight.size(), probe, head);
    sweep(layers[l].bias.data(), grads[l].bias.data(), layers[l].bias.size(),
          probe, head);
  }

  ClassifierHead hp = head;
  sweep(hp.weights.data(), out.grad_weights.data(), hp.weights.size(), model,
        hp);
  return worst;
}

void WriteMetrics(const std::vector<EpochMetrics> &metrics,
                  const std::string &path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) ThrowIo("cannot open '" + path + "' for writing");
  os << "epoch,loss,mean_cos_y,mean_coef,lambda,eer,min_dcf\n";
  for (const EpochMetrics &m : metrics)
    os << m.epoch << ',' << FormatDouble(m.loss) << ','
       << FormatDouble(m.mean_cos_y) << ',' << FormatDouble(m.mean_coef) << ','
       << FormatDouble(m.lambda) << ',' << FormatDouble(m.eer) << ','
       << FormatDouble(m.min_dcf) << '\n';
  if (!os) ThrowIo("write failed for '" + path + "'");
}

void WriteModel(const TinyEmbedder &model, const ClassifierHead &head,
                const std::string &path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) ThrowIo("cannot open '" + path + "' for writing");
  model.Write(os);
  os << "head," << head.num_classes() << ',' << head.dim() << ','
     << FormatDouble(head.scale) << ',' << FormatDouble(head.margin) << '\n';
  for (Eigen::Index r = 0; r < head.weights.rows(); ++r)
    WriteRow(os, "w", head.weights.row(r).data(), head.weights.cols());
  WriteRow(os, "b", head.biases.data(), head.biases.size());
  if (!os) ThrowIo("write failed for '" + path + "'");
}

void ReadModel(const std::string &path, TinyEmbedder *model,
               ClassifierHead *head) {
  std::ifstream is(path, std::ios::binary);
  if (!is) ThrowIo("cannot open model '" + path + "'");
  *model = TinyEmbedder::Read(is);
  LineReader in{is};
  auto f = in.Next("head header");
  int64_t c = 0, dim = 0;
  if (f.size() != 5 || f[0] != "head" || !ParseInt(f[1], &c) ||
      !ParseInt(f[2], &dim) || c < 1 || dim < 1 ||
      !ParseDouble(f[3], &head->scale) || !ParseDouble(f[4], &head->margin))
    in.Fail("expected 'head,C,F,scale,margin'");
  head->weights.resize(c, dim);
  head->biases.resize(c);
  for (int64_t r = 0; r < c; ++r)
    in.ReadValues("w", head->weights.row(r).data(), dim);
  in.ReadValues("b", head->biases.data(), c);
}

}  // namespace dasa
