#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "relucert/frontend.hpp"

namespace relucert {

/// Seeded generator of small verification instances: rational weights with
/// denominators up to 8, random input boxes, and an output box placed
/// around or away from sampled outputs so both verdicts occur.
struct GenConfig {
  std::uint64_t seed = 1;
  std::size_t inputs = 2;
  std::size_t outputs = 1;
  std::size_t hidden_layers = 2;
  std::size_t max_width = 3;
  bool neuron_boxes = false;  // sometimes bound b/f variables directly
};

namespace gen_detail {

// mt19937_64 output is pinned by the standard, so files are byte-identical
// for a given seed
inline std::uint64_t below(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

inline Rational small_rational(std::mt19937_64& rng, long max_num = 4, long max_den = 8) {
  long num = static_cast<long>(below(rng, 2 * max_num + 1)) - max_num;
  long den = 1 + static_cast<long>(below(rng, max_den));
  return Rational(num, den);
}

}  // namespace gen_detail

inline std::pair<Network, Property> generate_instance(const GenConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  using gen_detail::below;
  using gen_detail::small_rational;

  Network net;
  net.layer_sizes.push_back(cfg.inputs);
  for (std::size_t i = 0; i < cfg.hidden_layers; ++i)
    net.layer_sizes.push_back(1 + below(rng, cfg.max_width));
  net.layer_sizes.push_back(cfg.outputs);
  for (std::size_t layer = 1; layer < net.layer_sizes.size(); ++layer) {
    std::vector<std::vector<Rational>> mat;
    std::vector<Rational> bias;
    for (std::size_t j = 0; j < net.layer_sizes[layer]; ++j) {
      std::vector<Rational> row;
      for (std::size_t l = 0; l < net.layer_sizes[layer - 1]; ++l)
        row.push_back(small_rational(rng));
      mat.push_back(std::move(row));
      bias.push_back(below(rng, 3) == 0 ? small_rational(rng, 2, 4) : Rational(0));
    }
    net.weights.push_back(std::move(mat));
    net.biases.push_back(std::move(bias));
  }

  Property prop;
  for (std::size_t i = 0; i < cfg.inputs; ++i) {
    Rational lo = small_rational(rng, 2, 4);
    Rational width(1 + static_cast<long>(below(rng, 8)), 1 + static_cast<long>(below(rng, 4)));
    prop.inputs.push_back(VarBox{Bound<Rational>(lo), Bound<Rational>(lo + width)});
  }

  // sample outputs at box corners and center to aim the output box
  std::vector<std::vector<Rational>> samples;
  std::vector<Rational> center;
  for (std::size_t i = 0; i < cfg.inputs; ++i)
    center.push_back((prop.inputs[i].lower.value() + prop.inputs[i].upper.value()) * Rational(1, 2));
  samples.push_back(center);
  for (std::size_t corner = 0; corner < std::min<std::size_t>(4, std::size_t(1) << cfg.inputs);
       ++corner) {
    std::vector<Rational> x;
    for (std::size_t i = 0; i < cfg.inputs; ++i)
      x.push_back(corner & (std::size_t(1) << i) ? prop.inputs[i].upper.value()
                                                 : prop.inputs[i].lower.value());
    samples.push_back(std::move(x));
  }
  std::vector<std::vector<Rational>> outs;
  for (const auto& x : samples) outs.push_back(evaluate(net, x));

  for (std::size_t j = 0; j < cfg.outputs; ++j) {
    Rational lo = outs.front()[j], hi = outs.front()[j];
    for (const auto& o : outs) {
      if (o[j] < lo) lo = o[j];
      if (o[j] > hi) hi = o[j];
    }
    switch (below(rng, 3)) {
      case 0:  // around a sample: often satisfiable
        prop.outputs.push_back(VarBox{Bound<Rational>(outs[0][j] - small_rational(rng, 1, 4) * Rational(1, 2) - Rational(1, 8)),
                                      Bound<Rational>(outs[0][j] + Rational(1, 8))});
        break;
      case 1:  // beyond every sampled value: often unsatisfiable
        prop.outputs.push_back(
            VarBox{Bound<Rational>(hi + Rational(1, 2)), Bound<Rational>(hi + Rational(3, 2))});
        break;
      default:  // a narrow band between extremes
        prop.outputs.push_back(VarBox{Bound<Rational>((lo + hi) * Rational(1, 2)),
                                      Bound<Rational>((lo + hi) * Rational(1, 2) + Rational(1, 4))});
        break;
    }
  }

  if (cfg.neuron_boxes) {
    std::size_t hidden = net.num_hidden_neurons();
    for (std::size_t k = 1; k <= hidden; ++k) {
      if (below(rng, 3) != 0) continue;
      Rational mag(1 + static_cast<long>(below(rng, 6)), 1);
      prop.neuron_bounds.emplace_back("b" + std::to_string(k),
                                      VarBox{Bound<Rational>(-mag), Bound<Rational>(mag)});
    }
  }
  return {std::move(net), std::move(prop)};
}

}  // namespace relucert
