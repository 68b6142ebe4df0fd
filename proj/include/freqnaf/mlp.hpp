#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>

namespace freqnaf {

/// Six fully connected layers: D->W, W->W, W->W, (W+D)->W, W->W, W->1.
/// ReLU after the first five, sigmoid after the last. The network input is
/// concatenated onto the activation of layer 3 before layer 4; in weight[3]
/// the first W columns act on that activation and the last D on the input.
struct MlpParams {
  static constexpr int kLayers = 6;

  int input_dim = 0;
  int width = 0;
  std::array<Eigen::MatrixXd, kLayers> weight;
  std::array<Eigen::VectorXd, kLayers> bias;

  static MlpParams zeros(int input_dim, int width);
  /// He-uniform for the ReLU layers, Xavier-uniform for the output layer,
  /// zero biases.
  static MlpParams initialize(int input_dim, int width, std::uint64_t seed);

  void set_zero();
  bool all_finite() const;
  std::size_t parameter_count() const;
};

/// Activations kept for the backward pass; columns are batch entries.
struct MlpCache {
  Eigen::MatrixXd input;
  std::array<Eigen::MatrixXd, MlpParams::kLayers - 1> hidden;  // post-ReLU
  Eigen::RowVectorXd output;                                   // post-sigmoid
};

/// x is D x P. Returns P values strictly inside (0,1). Throws InputError on
/// shape mismatch or non-finite input.
Eigen::RowVectorXd mlp_forward(const Eigen::MatrixXd& x, const MlpParams& params,
                               MlpCache* cache = nullptr);

/// Reverse pass for dL/dv. Parameter gradients are added into `grads`
/// (which must already have the right shapes); dx (D x P) is overwritten
/// when non-null and includes the skip path.
void mlp_backward(const MlpCache& cache, const MlpParams& params, const Eigen::RowVectorXd& dv,
                  MlpParams& grads, Eigen::MatrixXd* dx = nullptr);

}  // namespace freqnaf
