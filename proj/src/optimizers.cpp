#include "volalg/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "volalg/errors.hpp"

namespace volalg {

namespace {

constexpr double kStallNorm = 1e-12;

void check_gradient(std::span<const double> g, std::size_t expected) {
  if (g.size() != expected) {
    throw InputError("gradient has length " + std::to_string(g.size()) +
                     ", state expects " + std::to_string(expected));
  }
  for (double v : g) {
    if (!std::isfinite(v)) throw InputError("gradient has non-finite entries");
  }
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(s);
}

}  // namespace

VolumeState volume_pending(double s0, double alpha, Sense sense) {
  if (!(s0 > 0.0) || !std::isfinite(s0)) {
    throw InputError("initial step size must be > 0");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw InputError("alpha must lie in [0, 1]");
  }
  VolumeState st;
  st.gy = 0.5;
  st.s = s0;
  st.upper = 2.0 * s0;
  st.lower = 0.2 * s0;
  st.alpha = alpha;
  st.sense = sense;
  st.initialized = false;
  return st;
}

VolumeState volume_init(std::span<const double> g0, double s0, double alpha,
                        Sense sense) {
  VolumeState st = volume_pending(s0, alpha, sense);
  check_gradient(g0, g0.size());
  if (g0.empty()) throw InputError("first subgradient must be non-empty");
  st.d.assign(g0.begin(), g0.end());
  st.initialized = true;
  return st;
}

VolumeStepResult volume_step(VolumeState& state, std::span<const double> g) {
  if (!state.initialized) {
    throw InputError("volume_step on an uninitialized state");
  }
  check_gradient(g, state.d.size());

  VolumeStepResult out;
  // Step 1, in the published order: inner product, gy, step size, clamp,
  // then the direction update.
  const double p = std::inner_product(state.d.begin(), state.d.end(),
                                      g.begin(), 0.0);
  const bool green = p > 0.0;
  state.gy = (1.0 - state.alpha) * state.gy + (green ? state.alpha : 0.0);
  if (state.gy > 0.9) state.s *= 1.01;
  if (state.gy < 0.8) state.s *= 0.99;
  state.s = std::clamp(state.s, state.lower, state.upper);
  for (std::size_t i = 0; i < state.d.size(); ++i) {
    state.d[i] = (1.0 - state.alpha) * state.d[i] + state.alpha * g[i];
  }

  // Step 2: move s along the unit direction; maximize goes with +.
  const double dn = norm2(state.d);
  out.report.p = p;
  out.report.color = green ? StepColor::kGreen : StepColor::kYellow;
  out.report.s_after = state.s;
  out.report.d_norm = dn;
  out.displacement.assign(state.d.size(), 0.0);
  if (dn < kStallNorm) {
    out.report.stalled = true;
    return out;
  }
  const double scale =
      (state.sense == Sense::kMaximize ? 1.0 : -1.0) * state.s / dn;
  for (std::size_t i = 0; i < state.d.size(); ++i) {
    out.displacement[i] = scale * state.d[i];
  }
  return out;
}

void volume_interval_switch(VolumeState& state, double s_new) {
  if (!(s_new > 0.0) || !std::isfinite(s_new)) {
    throw InputError("interval switch needs s_new > 0");
  }
  state.s = s_new;
  state.upper = 2.0 * s_new;
  state.lower = 0.2 * s_new;
}

MomentumState momentum_init(std::size_t n, double lr, double mu) {
  if (!(lr > 0.0)) throw InputError("learning rate must be > 0");
  if (!(mu >= 0.0 && mu < 1.0)) throw InputError("mu must lie in [0, 1)");
  return {Vec(n, 0.0), lr, mu};
}

Vec momentum_step(MomentumState& state, std::span<const double> g) {
  check_gradient(g, state.velocity.size());
  Vec displacement(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    state.velocity[i] = state.mu * state.velocity[i] + g[i];
    displacement[i] = -state.lr * state.velocity[i];
  }
  return displacement;
}

AdamState adam_init(std::size_t n, double lr, double beta1, double beta2,
                    double eps_hat) {
  if (!(lr > 0.0)) throw InputError("learning rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw InputError("betas must lie in [0, 1)");
  }
  if (!(eps_hat > 0.0)) throw InputError("eps_hat must be > 0");
  AdamState st;
  st.m.assign(n, 0.0);
  st.v.assign(n, 0.0);
  st.lr = lr;
  st.beta1 = beta1;
  st.beta2 = beta2;
  st.eps_hat = eps_hat;
  return st;
}

Vec adam_step(AdamState& state, std::span<const double> g) {
  check_gradient(g, state.m.size());
  state.t += 1;
  const double corr1 = 1.0 - std::pow(state.beta1, state.t);
  const double corr2 = 1.0 - std::pow(state.beta2, state.t);
  Vec displacement(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g[i] * g[i];
    const double m_hat = state.m[i] / corr1;
    const double v_hat = state.v[i] / corr2;
    displacement[i] = -state.lr * m_hat / (std::sqrt(v_hat) + state.eps_hat);
  }
  return displacement;
}

RmspropState rmsprop_init(std::size_t n, double lr, double rho,
                          double eps_hat) {
  if (!(lr > 0.0)) throw InputError("learning rate must be > 0");
  if (!(rho >= 0.0 && rho < 1.0)) throw InputError("rho must lie in [0, 1)");
  if (!(eps_hat > 0.0)) throw InputError("eps_hat must be > 0");
  return {Vec(n, 0.0), lr, rho, eps_hat};
}

Vec rmsprop_step(RmspropState& state, std::span<const double> g) {
  check_gradient(g, state.ms.size());
  Vec displacement(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    state.ms[i] = state.rho * state.ms[i] + (1.0 - state.rho) * g[i] * g[i];
    displacement[i] =
        -state.lr * g[i] / (std::sqrt(state.ms[i]) + state.eps_hat);
  }
  return displacement;
}

std::string kind_name(const OptimizerState& state) {
  switch (state.index()) {
    case 0: return "volume";
    case 1: return "momentum";
    case 2: return "adam";
    case 3: return "rmsprop";
    default: return "unknown";
  }
}

std::optional<StepReport> apply(OptimizerState& state,
                                std::span<const double> g,
                                std::span<double> params) {
  if (g.size() != params.size()) {
    throw InputError("gradient and parameter lengths disagree");
  }
  std::optional<StepReport> report;
  Vec displacement;
  if (auto* vol = std::get_if<VolumeState>(&state)) {
    if (!vol->initialized) {
      // First gradient: adopt it as the direction, then take the Step-2
      // move with s = s0. gy and s stay at their initial values.
      check_gradient(g, g.size());
      vol->d.assign(g.begin(), g.end());
      vol->initialized = true;
      StepReport rep;
      rep.p = std::inner_product(g.begin(), g.end(), g.begin(), 0.0);
      rep.color = rep.p > 0.0 ? StepColor::kGreen : StepColor::kYellow;
      rep.s_after = vol->s;
      rep.d_norm = norm2(vol->d);
      displacement.assign(g.size(), 0.0);
      if (rep.d_norm < kStallNorm) {
        rep.stalled = true;
      } else {
        const double scale =
            (vol->sense == Sense::kMaximize ? 1.0 : -1.0) * vol->s /
            rep.d_norm;
        for (std::size_t i = 0; i < g.size(); ++i) {
          displacement[i] = scale * vol->d[i];
        }
      }
      report = rep;
    } else {
      VolumeStepResult r = volume_step(*vol, g);
      displacement = std::move(r.displacement);
      report = r.report;
    }
  } else if (auto* mom = std::get_if<MomentumState>(&state)) {
    displacement = momentum_step(*mom, g);
  } else if (auto* adam = std::get_if<AdamState>(&state)) {
    displacement = adam_step(*adam, g);
  } else {
    displacement = rmsprop_step(std::get<RmspropState>(state), g);
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i] += displacement[i];
  }
  return report;
}

}  // namespace volalg
