#include "btm/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace btm {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using WMap = Eigen::Map<const RowMat>;
using WMapMut = Eigen::Map<RowMat>;

struct LayerOffsets {
  std::size_t w;  // weight block start
  std::size_t b;  // bias block start
  int in, out;
};

std::vector<LayerOffsets> layout(const MlpSpec& spec) {
  std::vector<LayerOffsets> offs(spec.layer_count());
  std::size_t pos = 0;
  for (int l = 0; l < spec.layer_count(); ++l) {
    const int in = spec.layer_widths[l];
    const int out = spec.layer_widths[l + 1];
    offs[l] = {pos, pos + static_cast<std::size_t>(in) * out, in, out};
    pos = offs[l].b + out;
  }
  return offs;
}

void check_dims(const MlpSpec& spec, const ParamVector& params, const Mat& inputs) {
  spec.validate();
  if (static_cast<std::size_t>(params.size()) != spec.param_count())
    throw std::invalid_argument("parameter vector length does not match spec");
  if (inputs.cols() != spec.input_dim())
    throw std::invalid_argument("input width does not match spec input dim");
}

Mat sample_dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate,
                        std::mt19937_64& rng) {
  const double keep = 1.0 - rate;
  std::bernoulli_distribution bern(keep);
  Mat mask(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      mask(i, j) = bern(rng) ? 1.0 / keep : 0.0;
  return mask;
}

struct ForwardCache {
  std::vector<Mat> acts;    // acts[0] = inputs, acts[l+1] post-activation
  std::vector<Mat> preact;  // preact[l] = Z_l
  std::vector<Mat> masks;   // dropout masks per hidden layer (may be empty)
  Vec logits;
  Vec probs;
};

ForwardCache run_forward(const MlpSpec& spec, const ParamVector& params, const Mat& inputs,
                         std::mt19937_64* dropout_rng) {
  const auto offs = layout(spec);
  const int L = spec.layer_count();
  ForwardCache c;
  c.acts.resize(L + 1);
  c.preact.resize(L);
  c.masks.resize(L > 0 ? L - 1 : 0);
  c.acts[0] = inputs;
  for (int l = 0; l < L; ++l) {
    WMap W(params.data() + offs[l].w, offs[l].out, offs[l].in);
    Eigen::Map<const Vec> b(params.data() + offs[l].b, offs[l].out);
    c.preact[l] = (c.acts[l] * W.transpose()).rowwise() + b.transpose();
    if (l < L - 1) {
      Mat a = c.preact[l].cwiseMax(0.0);
      if (dropout_rng && spec.dropout_rate > 0.0) {
        c.masks[l] = sample_dropout_mask(a.rows(), a.cols(), spec.dropout_rate, *dropout_rng);
        a = a.cwiseProduct(c.masks[l]);
      }
      c.acts[l + 1] = std::move(a);
    } else {
      c.acts[l + 1] = c.preact[l];
    }
  }
  c.logits = c.acts[L].col(0);
  c.probs = c.logits.unaryExpr([](double z) { return 1.0 / (1.0 + std::exp(-z)); });
  return c;
}

}  // namespace

std::size_t MlpSpec::param_count() const {
  std::size_t n = 0;
  for (int l = 0; l + 1 < static_cast<int>(layer_widths.size()); ++l)
    n += static_cast<std::size_t>(layer_widths[l]) * layer_widths[l + 1] + layer_widths[l + 1];
  return n;
}

void MlpSpec::validate() const {
  if (layer_widths.size() < 2)
    throw std::invalid_argument("layer_widths needs at least input and output widths");
  for (int w : layer_widths)
    if (w <= 0) throw std::invalid_argument("layer widths must be positive");
  if (layer_widths.back() != 1)
    throw std::invalid_argument("final layer width must be 1 (sigmoid binary output)");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw std::invalid_argument("dropout_rate must be in [0,1)");
}

ParamVector init_params(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto offs = layout(spec);
  ParamVector p = ParamVector::Zero(static_cast<Eigen::Index>(spec.param_count()));
  std::mt19937_64 rng(seed);
  for (const auto& o : offs) {
    const double bound = std::sqrt(6.0 / o.in);  // Kaiming-uniform, ReLU gain
    std::uniform_real_distribution<double> uni(-bound, bound);
    WMapMut W(p.data() + o.w, o.out, o.in);
    for (int i = 0; i < o.out; ++i)
      for (int j = 0; j < o.in; ++j) W(i, j) = uni(rng);
    // biases stay zero
  }
  return p;
}

Vec forward(const MlpSpec& spec, const ParamVector& params, const Mat& inputs) {
  check_dims(spec, params, inputs);
  return run_forward(spec, params, inputs, nullptr).probs;
}

Vec forward_logits(const MlpSpec& spec, const ParamVector& params, const Mat& inputs) {
  check_dims(spec, params, inputs);
  return run_forward(spec, params, inputs, nullptr).logits;
}

double bce_loss(const Vec& probs, const Vec& labels) {
  if (probs.size() != labels.size())
    throw std::invalid_argument("probs/labels length mismatch");
  if (probs.size() == 0) throw std::invalid_argument("empty batch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], kProbClamp, 1.0 - kProbClamp);
    acc -= labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
  }
  return acc / static_cast<double>(probs.size());
}

double loss_value(const MlpSpec& spec, const ParamVector& params, const Batch& batch) {
  return bce_loss(forward(spec, params, batch.inputs), batch.labels);
}

ParamVector grad_params(const MlpSpec& spec, const ParamVector& params, const Batch& batch,
                        std::mt19937_64* dropout_rng) {
  check_dims(spec, params, batch.inputs);
  if (batch.inputs.rows() != batch.labels.size())
    throw std::invalid_argument("batch inputs/labels row mismatch");
  const auto offs = layout(spec);
  const int L = spec.layer_count();
  const auto n = static_cast<double>(batch.inputs.rows());

  ForwardCache c = run_forward(spec, params, batch.inputs, dropout_rng);
  ParamVector g = ParamVector::Zero(params.size());

  // delta = dL/dZ_l, starting from the sigmoid+BCE identity (p - y)/n.
  Mat delta = (c.probs - batch.labels) / n;
  for (int l = L - 1; l >= 0; --l) {
    WMap W(params.data() + offs[l].w, offs[l].out, offs[l].in);
    WMapMut gW(g.data() + offs[l].w, offs[l].out, offs[l].in);
    Eigen::Map<Vec> gb(g.data() + offs[l].b, offs[l].out);
    gW = delta.transpose() * c.acts[l];
    gb = delta.colwise().sum().transpose();
    if (l > 0) {
      Mat up = delta * W;  // dL/dA_l
      if (!c.masks.empty() && c.masks[l - 1].size() > 0) up = up.cwiseProduct(c.masks[l - 1]);
      delta = up.cwiseProduct((c.preact[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return g;
}

Mat grad_inputs_of_inner_product(const MlpSpec& spec, const ParamVector& params,
                                 const Batch& batch, const ParamVector& v) {
  check_dims(spec, params, batch.inputs);
  if (v.size() != params.size())
    throw std::invalid_argument("direction vector length does not match spec");
  if (batch.inputs.rows() != batch.labels.size())
    throw std::invalid_argument("batch inputs/labels row mismatch");
  const auto offs = layout(spec);
  const int L = spec.layer_count();
  const auto n = static_cast<double>(batch.inputs.rows());

  // Forward pass carrying a tangent dQ = d/de Q(theta + e v)|_{e=0} for every
  // intermediate Q. ReLU masks are treated as locally constant.
  std::vector<Mat> acts(L + 1), dacts(L + 1), preact(L), dpre(L);
  acts[0] = batch.inputs;
  dacts[0] = Mat::Zero(batch.inputs.rows(), batch.inputs.cols());
  for (int l = 0; l < L; ++l) {
    WMap W(params.data() + offs[l].w, offs[l].out, offs[l].in);
    WMap dW(v.data() + offs[l].w, offs[l].out, offs[l].in);
    Eigen::Map<const Vec> b(params.data() + offs[l].b, offs[l].out);
    Eigen::Map<const Vec> db(v.data() + offs[l].b, offs[l].out);
    preact[l] = (acts[l] * W.transpose()).rowwise() + b.transpose();
    dpre[l] = (dacts[l] * W.transpose() + acts[l] * dW.transpose()).rowwise() + db.transpose();
    if (l < L - 1) {
      const Mat gate = (preact[l].array() > 0.0).cast<double>().matrix();
      acts[l + 1] = preact[l].cwiseProduct(gate);
      dacts[l + 1] = dpre[l].cwiseProduct(gate);
    } else {
      acts[l + 1] = preact[l];
      dacts[l + 1] = dpre[l];
    }
  }
  const Vec logits = acts[L].col(0);
  const Vec dlogits = dacts[L].col(0);
  const Vec probs = logits.unaryExpr([](double z) { return 1.0 / (1.0 + std::exp(-z)); });

  // Reverse pass to the inputs, with the same tangent bookkeeping.
  Mat delta = (probs - batch.labels) / n;
  Mat ddelta = (probs.array() * (1.0 - probs.array()) * dlogits.array() / n).matrix();
  for (int l = L - 1; l >= 1; --l) {
    WMap W(params.data() + offs[l].w, offs[l].out, offs[l].in);
    WMap dW(v.data() + offs[l].w, offs[l].out, offs[l].in);
    const Mat up = delta * W;
    const Mat dup = ddelta * W + delta * dW;
    const Mat gate = (preact[l - 1].array() > 0.0).cast<double>().matrix();
    delta = up.cwiseProduct(gate);
    ddelta = dup.cwiseProduct(gate);
  }
  WMap W0(params.data() + offs[0].w, offs[0].out, offs[0].in);
  WMap dW0(v.data() + offs[0].w, offs[0].out, offs[0].in);
  return ddelta * W0 + delta * dW0;
}

void sgd_step(ParamVector& params, ParamVector& velocity, const ParamVector& grad,
              double lr, double momentum) {
  if (lr < 0.0) throw std::invalid_argument("lr must be nonnegative");
  if (momentum < 0.0 || momentum >= 1.0)
    throw std::invalid_argument("momentum must be in [0,1)");
  velocity = momentum * velocity + grad;
  params -= lr * velocity;
}

}  // namespace btm
