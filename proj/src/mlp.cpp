#include "freqnaf/mlp.hpp"

#include "freqnaf/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace freqnaf {
namespace {

int fan_in(int layer, int input_dim, int width) {
  if (layer == 0) return input_dim;
  if (layer == 3) return width + input_dim;
  return width;
}

int fan_out(int layer, int width) { return layer == MlpParams::kLayers - 1 ? 1 : width; }

void relu_inplace(Eigen::MatrixXd& m) { m = m.cwiseMax(0.0); }

// Zeroes gradient entries whose forward activation was clipped by ReLU.
void relu_backward(Eigen::MatrixXd& grad, const Eigen::MatrixXd& activation) {
  grad = (activation.array() > 0.0).select(grad, 0.0);
}

}  // namespace

MlpParams MlpParams::zeros(int input_dim, int width) {
  require(input_dim >= 1 && width >= 1, "MLP dimensions must be positive");
  MlpParams p;
  p.input_dim = input_dim;
  p.width = width;
  for (int l = 0; l < kLayers; ++l) {
    p.weight[l] = Eigen::MatrixXd::Zero(fan_out(l, width), fan_in(l, input_dim, width));
    p.bias[l] = Eigen::VectorXd::Zero(fan_out(l, width));
  }
  return p;
}

MlpParams MlpParams::initialize(int input_dim, int width, std::uint64_t seed) {
  MlpParams p = zeros(input_dim, width);
  std::mt19937_64 rng(seed);
  for (int l = 0; l < kLayers; ++l) {
    const double in = fan_in(l, input_dim, width);
    const double bound = l == kLayers - 1 ? std::sqrt(6.0 / (in + fan_out(l, width)))
                                          : std::sqrt(6.0 / in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < p.weight[l].size(); ++i) p.weight[l].data()[i] = dist(rng);
  }
  return p;
}

void MlpParams::set_zero() {
  for (int l = 0; l < kLayers; ++l) {
    weight[l].setZero();
    bias[l].setZero();
  }
}

bool MlpParams::all_finite() const {
  for (int l = 0; l < kLayers; ++l)
    if (!weight[l].allFinite() || !bias[l].allFinite()) return false;
  return true;
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (int l = 0; l < kLayers; ++l)
    n += static_cast<std::size_t>(weight[l].size() + bias[l].size());
  return n;
}

Eigen::RowVectorXd mlp_forward(const Eigen::MatrixXd& x, const MlpParams& params,
                               MlpCache* cache) {
  require(x.rows() == params.input_dim, "mlp_forward: input rows do not match the network");
  if (!x.allFinite()) throw InputError("mlp_forward: non-finite input");
  const int W = params.width, D = params.input_dim;

  MlpCache local;
  MlpCache& c = cache ? *cache : local;
  c.input = x;
  auto& h = c.hidden;

  h[0].noalias() = params.weight[0] * x;
  h[0].colwise() += params.bias[0];
  relu_inplace(h[0]);
  for (int l = 1; l <= 2; ++l) {
    h[l].noalias() = params.weight[l] * h[l - 1];
    h[l].colwise() += params.bias[l];
    relu_inplace(h[l]);
  }
  h[3].noalias() = params.weight[3].leftCols(W) * h[2];
  h[3].noalias() += params.weight[3].rightCols(D) * x;
  h[3].colwise() += params.bias[3];
  relu_inplace(h[3]);
  h[4].noalias() = params.weight[4] * h[3];
  h[4].colwise() += params.bias[4];
  relu_inplace(h[4]);

  Eigen::RowVectorXd z = params.weight[5] * h[4];
  z.array() += params.bias[5](0);
  // Keep outputs strictly inside (0,1) even where exp saturates.
  constexpr double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
  c.output = z.unaryExpr([&](double t) { return std::clamp(1.0 / (1.0 + std::exp(-t)), lo, hi); });
  return c.output;
}

void mlp_backward(const MlpCache& cache, const MlpParams& params, const Eigen::RowVectorXd& dv,
                  MlpParams& grads, Eigen::MatrixXd* dx) {
  const auto& h = cache.hidden;
  const long P = cache.input.cols();
  require(dv.cols() == P && cache.output.cols() == P, "mlp_backward: batch size mismatch");
  require(grads.input_dim == params.input_dim && grads.width == params.width,
          "mlp_backward: gradient shapes do not match the network");
  const int W = params.width, D = params.input_dim;

  Eigen::MatrixXd dz = (dv.array() * cache.output.array() * (1.0 - cache.output.array())).matrix();
  grads.weight[5].noalias() += dz * h[4].transpose();
  grads.bias[5] += dz.rowwise().sum();

  Eigen::MatrixXd dh = params.weight[5].transpose() * dz;
  relu_backward(dh, h[4]);
  grads.weight[4].noalias() += dh * h[3].transpose();
  grads.bias[4] += dh.rowwise().sum();

  dz = params.weight[4].transpose() * dh;
  relu_backward(dz, h[3]);
  grads.weight[3].leftCols(W).noalias() += dz * h[2].transpose();
  grads.weight[3].rightCols(D).noalias() += dz * cache.input.transpose();
  grads.bias[3] += dz.rowwise().sum();

  Eigen::MatrixXd skip;
  if (dx) skip.noalias() = params.weight[3].rightCols(D).transpose() * dz;
  dh = params.weight[3].leftCols(W).transpose() * dz;

  for (int l = 2; l >= 1; --l) {
    relu_backward(dh, h[l]);
    grads.weight[l].noalias() += dh * h[l - 1].transpose();
    grads.bias[l] += dh.rowwise().sum();
    dz = params.weight[l].transpose() * dh;
    dh.swap(dz);
  }
  relu_backward(dh, h[0]);
  grads.weight[0].noalias() += dh * cache.input.transpose();
  grads.bias[0] += dh.rowwise().sum();

  if (dx) {
    dx->noalias() = params.weight[0].transpose() * dh;
    *dx += skip;
  }
}

}  // namespace freqnaf
