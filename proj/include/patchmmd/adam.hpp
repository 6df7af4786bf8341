#pragma once

#include <cmath>
#include <stdexcept>
#include <type_traits>

#include "patchmmd/types.hpp"

namespace patchmmd {

/// Adam optimizer state; moments match the flattened parameter shape.
template <typename Scalar>
struct AdamState {
  Index step = 0;
  Vector<Scalar> first_moment;
  Vector<Scalar> second_moment;
  Scalar lr = Scalar(1e-3);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);
};

template <typename Scalar>
AdamState<Scalar> make_adam(Index size, Scalar lr = Scalar(1e-3), Scalar beta1 = Scalar(0.9),
                            Scalar beta2 = Scalar(0.999), Scalar eps = Scalar(1e-8)) {
  AdamState<Scalar> s;
  s.first_moment = Vector<Scalar>::Zero(size);
  s.second_moment = Vector<Scalar>::Zero(size);
  s.lr = lr;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.eps = eps;
  return s;
}

/// Bias-corrected Adam update, in place.
template <typename Scalar>
void adam_step(AdamState<Scalar>& state,
               Eigen::Ref<Vector<std::type_identity_t<Scalar>>> params,
               const Eigen::Ref<const Vector<std::type_identity_t<Scalar>>>& grads) {
  if (params.size() != state.first_moment.size() || grads.size() != params.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  if (!grads.allFinite()) {
    throw std::runtime_error("adam_step: non-finite gradient at step " +
                             std::to_string(state.step + 1));
  }
  state.step += 1;
  state.first_moment = state.beta1 * state.first_moment + (Scalar(1) - state.beta1) * grads;
  state.second_moment = state.beta2 * state.second_moment +
                        (Scalar(1) - state.beta2) * grads.cwiseProduct(grads);
  const Scalar c1 = Scalar(1) - std::pow(state.beta1, Scalar(state.step));
  const Scalar c2 = Scalar(1) - std::pow(state.beta2, Scalar(state.step));
  params -= state.lr * ((state.first_moment / c1).array() /
                        ((state.second_moment / c2).array().sqrt() + state.eps))
                           .matrix();
}

}  // namespace patchmmd
