#ifndef VOLALG_OPTIMIZERS_HPP
#define VOLALG_OPTIMIZERS_HPP

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "volalg/pwl.hpp"  // Vec

namespace volalg {

enum class Sense { kMaximize, kMinimize };

enum class StepColor { kGreen, kYellow };

/// Diagnostics for one Volume step.
struct StepReport {
  double p = 0.0;        // inner product d.g before the direction update
  StepColor color = StepColor::kYellow;  // green iff p > 0
  double s_after = 0.0;  // step size used for the displacement
  double d_norm = 0.0;   // ||d|| after the direction update
  bool stalled = false;  // ||d|| < 1e-12: zero displacement was emitted
};

/// Volume Algorithm state: direction d (an exponential moving average of
/// observed subgradients), green-yellow indicator gy, and a step size s kept
/// inside [lower, upper]. The bounds are fixed at init (upper = 2 s0,
/// lower = 0.2 s0) and change only through volume_interval_switch.
struct VolumeState {
  Vec d;
  double gy = 0.5;
  double s = 0.0;
  double upper = 0.0;
  double lower = 0.0;
  double alpha = 0.1;
  Sense sense = Sense::kMinimize;
  bool initialized = false;
};

struct VolumeStepResult {
  Vec displacement;
  StepReport report;
};

/// d = g0, gy = 0.5, s = s0, upper = 2 s0, lower = 0.2 s0.
VolumeState volume_init(std::span<const double> g0, double s0, double alpha,
                        Sense sense);

/// State with hyperparameters fixed but no direction yet; apply() completes
/// initialization from the first gradient it receives.
VolumeState volume_pending(double s0, double alpha, Sense sense);

/// One iteration, in this order: p = d.g; gy moves toward 1 (p > 0) or 0;
/// s grows 1% above gy = 0.9, shrinks 1% below gy = 0.8; s is clamped into
/// [lower, upper]; d = (1 - alpha) d + alpha g; displacement =
/// +-(s / ||d||) d (+ maximize, - minimize). If ||d|| < 1e-12 the
/// displacement is zero and the report flags a stall.
VolumeStepResult volume_step(VolumeState& state, std::span<const double> g);

/// Re-centers the step-size interval: s = s_new, upper = 2 s_new,
/// lower = 0.2 s_new. Direction and gy are untouched.
void volume_interval_switch(VolumeState& state, double s_new);

/// Classical momentum: velocity = mu * velocity + g,
/// displacement = -lr * velocity.
struct MomentumState {
  Vec velocity;
  double lr = 0.01;
  double mu = 0.9;
};

MomentumState momentum_init(std::size_t n, double lr, double mu = 0.9);
Vec momentum_step(MomentumState& state, std::span<const double> g);

/// Adam with bias correction. Defaults beta1 = 0.9, beta2 = 0.999,
/// eps_hat = 1e-8.
struct AdamState {
  Vec m;
  Vec v;
  long long t = 0;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;
};

AdamState adam_init(std::size_t n, double lr, double beta1 = 0.9,
                    double beta2 = 0.999, double eps_hat = 1e-8);
Vec adam_step(AdamState& state, std::span<const double> g);

/// RMSProp: ms = rho * ms + (1 - rho) g^2,
/// displacement = -lr * g / (sqrt(ms) + eps_hat).
struct RmspropState {
  Vec ms;
  double lr = 0.01;
  double rho = 0.9;
  double eps_hat = 1e-10;
};

RmspropState rmsprop_init(std::size_t n, double lr, double rho = 0.9,
                          double eps_hat = 1e-10);
Vec rmsprop_step(RmspropState& state, std::span<const double> g);

using OptimizerState =
    std::variant<VolumeState, MomentumState, AdamState, RmspropState>;

/// "volume", "momentum", "adam" or "rmsprop".
std::string kind_name(const OptimizerState& state);

/// Uniform dispatch: advances the optimizer with gradient g and adds the
/// displacement into params in place. Returns a report for Volume only.
///
/// A Volume state created with an empty direction is initialized from the
/// first gradient it sees (volume_init semantics) and immediately moves with
/// s = s0 along that direction; gy and s are not updated on that first call.
std::optional<StepReport> apply(OptimizerState& state,
                                std::span<const double> g,
                                std::span<double> params);

}  // namespace volalg

#endif  // VOLALG_OPTIMIZERS_HPP
