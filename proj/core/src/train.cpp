#include "c2f/train.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "c2f/error.hpp"
#include "c2f/loss.hpp"
#include "fp_env.hpp"
#include "rng.hpp"

namespace c2f {

namespace {

void check_dataset(const UNetSpec& spec, std::span<const TrainingPair> dataset) {
  if (dataset.empty()) throw Error("fit: no training pairs");
  const Dims2 dims = dataset.front().image.dims();
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& p = dataset[i];
    if (p.image.dims() != dims || p.label.dims() != dims) {
      std::ostringstream os;
      os << "fit: pair " << i << " has image " << to_string(p.image.dims()) << " / label "
         << to_string(p.label.dims()) << ", expected " << to_string(dims);
      throw ShapeError(os.str());
    }
  }
  if (dims.rows % spec.divisor() || dims.cols % spec.divisor()) {
    throw ShapeError("fit: slice dims " + to_string(dims) + " not divisible by " +
                     std::to_string(spec.divisor()));
  }
}

void load_batch(std::span<const TrainingPair> dataset, std::span<const std::size_t> idx,
                Tensor4<float>& x, Tensor4<float>& y) {
  const Dims2 d = dataset.front().image.dims();
  x = Tensor4<float>({idx.size(), 1, d.rows, d.cols});
  y = Tensor4<float>({idx.size(), 1, d.rows, d.cols});
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const auto& pair = dataset[idx[b]];
    std::copy(pair.image.data().begin(), pair.image.data().end(), x.sample(b));
    std::copy(pair.label.data().begin(), pair.label.data().end(), y.sample(b));
  }
}

}  // namespace

FitResult fit(const UNetSpec& spec, std::span<const TrainingPair> dataset, const TrainHyper& hyper,
              const EpochCallback& on_epoch) {
  return fit_from(spec, init_weights(spec, hyper.seed), dataset, hyper, on_epoch);
}

FitResult fit_from(const UNetSpec& spec, ModelWeights initial, std::span<const TrainingPair> dataset,
                   const TrainHyper& hyper, const EpochCallback& on_epoch) {
  check_dataset(spec, dataset);
  check_weights(spec, initial);
  if (hyper.batch < 1) throw Error("fit: batch must be at least 1");
  if (hyper.epochs < 0) throw Error("fit: epochs must be non-negative");
  if (!(hyper.lr >= 0.0) || !(hyper.momentum >= 0.0 && hyper.momentum < 1.0)) {
    throw Error("fit: lr must be >= 0 and momentum in [0, 1)");
  }
  if (!(hyper.clip_norm >= 0.0)) throw Error("fit: clip_norm must be >= 0");

  const detail::DenormalGuard ftz;
  FitResult result{std::move(initial), {}};
  ModelWeights& w = result.weights;
  std::vector<std::vector<float>> velocity;
  for (const auto& p : w.params) velocity.emplace_back(p.data.size(), 0.0f);

  // Shuffle stream is separate from the init stream.
  SplitMix64 rng(hyper.seed ^ 0xA5A5A5A5DEADBEEFULL);
  std::vector<std::size_t> order(dataset.size());
  const std::size_t per_epoch = hyper.samples_per_epoch == 0
                                    ? dataset.size()
                                    : std::min(hyper.samples_per_epoch, dataset.size());
  const float lr = float(hyper.lr);
  const float mu = float(hyper.momentum);

  ForwardCache<float> cache;
  Tensor4<float> x, y;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    double loss_sum = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < per_epoch; start += std::size_t(hyper.batch)) {
      const std::size_t end = std::min(per_epoch, start + std::size_t(hyper.batch));
      load_batch(dataset, std::span(order).subspan(start, end - start), x, y);
      const Tensor4<float> p = unet_forward(spec, w, x, &cache);
      const float loss = dice_loss(p, y);
      if (!std::isfinite(loss)) {
        throw DivergenceError("fit: non-finite loss at epoch " + std::to_string(epoch), epoch);
      }
      loss_sum += loss;
      ++n_batches;
      const ParameterSet<float> g = unet_backward(spec, w, cache, dice_loss_grad(p, y));
      float step = lr;
      if (hyper.clip_norm > 0.0) {
        double sq = 0.0;
        for (const auto& q : g.params) {
          for (float v : q.data) sq += double(v) * double(v);
        }
        const double norm = std::sqrt(sq);
        if (norm > hyper.clip_norm) step = float(hyper.lr * hyper.clip_norm / norm);
      }
      for (std::size_t k = 0; k < w.params.size(); ++k) {
        auto& wd = w.params[k].data;
        auto& v = velocity[k];
        const auto& gd = g.params[k].data;
        for (std::size_t i = 0; i < wd.size(); ++i) {
          v[i] = mu * v[i] - step * gd[i];
          wd[i] += v[i];
        }
      }
    }
    const double mean = loss_sum / double(n_batches);
    result.loss_trace.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  return result;
}

}  // namespace c2f
