/*
 * Copyright 2026 The hrm Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef HRM_NEURAL_AUTOENCODER_HPP
#define HRM_NEURAL_AUTOENCODER_HPP

#include <algorithm>
#include <numeric>
#include <vector>

#include "hrm/neural/adam.hpp"
#include "hrm/neural/dense.hpp"

namespace hrm::neural {

/// Encoder input -> hidden -> code (both ELU) with a mirrored decoder
/// code -> hidden (ELU) -> input (linear). Encoder and decoder live in one
/// store so a single optimizer trains both.
template <typename Scalar>
class Autoencoder {
 public:
  static constexpr int kHidden = 30;
  static constexpr int kCode = 15;

  Autoencoder() = default;

  static Autoencoder create(int input_size, Rng& rng, int hidden = kHidden, int code = kCode) {
    Autoencoder ae;
    ae.store_ = std::make_shared<ParamStore<Scalar>>();
    ae.encoder_ = DenseStack<Scalar>::create(
        {{input_size, hidden, Activation::Elu}, {hidden, code, Activation::Elu}}, ae.store_,
        "encoder", rng);
    ae.decoder_ = DenseStack<Scalar>::create(
        {{code, hidden, Activation::Elu}, {hidden, input_size, Activation::Linear}}, ae.store_,
        "decoder", rng);
    return ae;
  }

  /// Copy with its own parameter store.
  Autoencoder clone() const {
    Autoencoder ae;
    ae.store_ = std::make_shared<ParamStore<Scalar>>(*store_);
    ae.encoder_ = DenseStack<Scalar>(encoder_.layers(), ae.store_, encoder_.first_index());
    ae.decoder_ = DenseStack<Scalar>(decoder_.layers(), ae.store_, decoder_.first_index());
    return ae;
  }

  const DenseStack<Scalar>& encoder() const { return encoder_; }
  const DenseStack<Scalar>& decoder() const { return decoder_; }
  const StorePtr<Scalar>& store() const { return store_; }
  int input_size() const { return encoder_.input_size(); }
  int code_size() const { return encoder_.output_size(); }

  Vector<Scalar> encode(const Vector<Scalar>& x) const { return encoder_.forward(x); }
  Vector<Scalar> reconstruct(const Vector<Scalar>& x) const {
    return decoder_.forward(encoder_.forward(x));
  }

  /// Squared reconstruction error of one sample, summed over dimensions and
  /// halved. Gradients are accumulated into grads.
  Scalar loss_and_gradient(const Vector<Scalar>& x, Gradients<Scalar>& grads) const {
    DenseCache<Scalar> enc, dec;
    const Vector<Scalar> code = encoder_.forward(x, &enc);
    const Vector<Scalar> y = decoder_.forward(code, &dec);
    const Vector<Scalar> err = y - x;
    const Vector<Scalar> dcode = decoder_.backward(dec, err, grads);
    encoder_.backward(enc, dcode, grads);
    return Scalar(0.5) * err.squaredNorm();
  }

  /// Mean squared error per element over the rows of data.
  Scalar reconstruction_mse(const Matrix<Scalar>& data) const {
    Scalar total = 0;
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
      const Vector<Scalar> x = data.row(r).transpose();
      total += (reconstruct(x) - x).squaredNorm();
    }
    return total / Scalar(data.rows() * data.cols());
  }

 private:
  StorePtr<Scalar> store_;
  DenseStack<Scalar> encoder_, decoder_;
};

struct AutoencoderTraining {
  int epochs = 100;
  int batch_size = 32;
  AdamConfig adam;
  double clip_norm = 10.0;
};

/// Minibatch Adam on mean squared reconstruction error; samples are rows of
/// data. Returns the final reconstruction MSE.
template <typename Scalar>
Scalar train_autoencoder(Autoencoder<Scalar>& ae, const Matrix<Scalar>& data,
                         const AutoencoderTraining& opts, Rng& rng) {
  if (data.rows() == 0) throw DomainError("autoencoder dataset is empty");
  if (data.cols() != ae.input_size()) throw DomainError("autoencoder dataset has wrong width");
  Adam<Scalar> adam(*ae.store(), opts.adam);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
      const std::size_t end = std::min(order.size(), start + std::size_t(opts.batch_size));
      auto grads = ae.store()->zeros_like();
      for (std::size_t k = start; k < end; ++k)
        ae.loss_and_gradient(data.row(order[k]).transpose(), grads);
      const Scalar scale = Scalar(2) / Scalar((end - start) * data.cols());
      for (auto& g : grads) g *= scale;
      clip_gradients(grads, Scalar(opts.clip_norm));
      adam.step(*ae.store(), grads);
    }
  }
  return ae.reconstruction_mse(data);
}

}  // namespace hrm::neural

#endif  // HRM_NEURAL_AUTOENCODER_HPP
