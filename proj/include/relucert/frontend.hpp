#pragma once

#include <json.hpp>

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "relucert/lp.hpp"

namespace relucert {

using ordered_json = nlohmann::ordered_json;

struct ShapeMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvariantViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Feed-forward ReLU network. Hidden layers apply ReLU; the output layer
/// is affine only. Weights are kept exact regardless of solve mode.
struct Network {
  std::vector<std::size_t> layer_sizes;                     // s_0 .. s_{n-1}
  std::vector<std::vector<std::vector<Rational>>> weights;  // [layer-1][j][l]
  std::vector<std::vector<Rational>> biases;                // [layer-1][j]

  std::size_t num_layers() const { return layer_sizes.size(); }
  std::size_t num_inputs() const { return layer_sizes.front(); }
  std::size_t num_outputs() const { return layer_sizes.back(); }

  std::size_t num_hidden_neurons() const {
    std::size_t n = 0;
    for (std::size_t i = 1; i + 1 < layer_sizes.size(); ++i) n += layer_sizes[i];
    return n;
  }

  void validate() const {
    if (layer_sizes.size() < 2) throw InvariantViolation("network needs input and output layers");
    for (std::size_t s : layer_sizes)
      if (s == 0) throw InvariantViolation("empty layer");
    if (weights.size() != layer_sizes.size() - 1 || biases.size() != weights.size())
      throw InvariantViolation("weight/bias count does not match layer count");
    for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
      if (weights[i].size() != layer_sizes[i + 1] || biases[i].size() != layer_sizes[i + 1])
        throw InvariantViolation("weight matrix shape mismatch at layer " + std::to_string(i + 1));
      for (const auto& row : weights[i])
        if (row.size() != layer_sizes[i])
          throw InvariantViolation("weight row shape mismatch at layer " + std::to_string(i + 1));
    }
  }
};

struct VarBox {
  Bound<Rational> lower = Bound<Rational>::neg_inf();
  Bound<Rational> upper = Bound<Rational>::pos_inf();
};

/// Input/output boxes plus optional extra bounds on named b/f variables.
struct Property {
  std::vector<VarBox> inputs;
  std::vector<VarBox> outputs;
  std::vector<std::pair<std::string, VarBox>> neuron_bounds;

  void validate() const {
    auto check = [](const VarBox& b, const std::string& where) {
      if (cmp(b.lower, b.upper) > 0)
        throw InvariantViolation("lower > upper on " + where);
    };
    for (std::size_t i = 0; i < inputs.size(); ++i) check(inputs[i], "input " + std::to_string(i + 1));
    for (std::size_t i = 0; i < outputs.size(); ++i) check(outputs[i], "output " + std::to_string(i + 1));
    for (const auto& [name, box] : neuron_bounds) check(box, name);
  }
};

/// Exact forward pass.
inline std::vector<Rational> evaluate(const Network& net, const std::vector<Rational>& x) {
  if (x.size() != net.num_inputs())
    throw ShapeMismatch("expected " + std::to_string(net.num_inputs()) + " inputs, got " +
                        std::to_string(x.size()));
  std::vector<Rational> prev = x;
  for (std::size_t layer = 1; layer < net.num_layers(); ++layer) {
    bool is_output = layer + 1 == net.num_layers();
    std::vector<Rational> cur(net.layer_sizes[layer]);
    for (std::size_t j = 0; j < cur.size(); ++j) {
      Rational acc = net.biases[layer - 1][j];
      for (std::size_t l = 0; l < prev.size(); ++l) acc += net.weights[layer - 1][j][l] * prev[l];
      cur[j] = (!is_output && acc.sign() < 0) ? Rational(0) : acc;
    }
    prev = std::move(cur);
  }
  return prev;
}

/// Fig.-2-style encoding: variables are the inputs, then per hidden layer
/// all b's then all f's, then the outputs. One equation per hidden neuron
/// (b = affine of previous outputs) and per output, one ReLU pair per
/// hidden neuron. Extra b/f bounds come from the property; none are
/// derived here.
inline Query<Rational> encode(const Network& net, const Property& prop) {
  net.validate();
  prop.validate();
  if (prop.inputs.size() != net.num_inputs())
    throw ShapeMismatch("property has " + std::to_string(prop.inputs.size()) +
                        " input boxes, network expects " + std::to_string(net.num_inputs()));
  if (prop.outputs.size() != net.num_outputs())
    throw ShapeMismatch("property has " + std::to_string(prop.outputs.size()) +
                        " output boxes, network expects " + std::to_string(net.num_outputs()));

  Query<Rational> q;
  std::map<std::string, VarId> by_name;
  auto add_var = [&](const std::string& name, const VarBox& box) {
    q.names.push_back(name);
    q.lower.push_back(box.lower);
    q.upper.push_back(box.upper);
    by_name[name] = static_cast<VarId>(q.names.size() - 1);
    return by_name[name];
  };

  std::vector<VarId> prev_outputs;
  for (std::size_t i = 0; i < net.num_inputs(); ++i)
    prev_outputs.push_back(add_var("x" + std::to_string(i + 1), prop.inputs[i]));

  std::vector<std::vector<VarId>> layer_b(net.num_layers()), layer_f(net.num_layers());
  std::size_t hidden_index = 0;
  for (std::size_t layer = 1; layer + 1 < net.num_layers(); ++layer) {
    for (std::size_t j = 0; j < net.layer_sizes[layer]; ++j) {
      std::string id = std::to_string(hidden_index + 1 + j);
      layer_b[layer].push_back(add_var("b" + id, VarBox{}));
    }
    for (std::size_t j = 0; j < net.layer_sizes[layer]; ++j) {
      std::string id = std::to_string(hidden_index + 1 + j);
      layer_f[layer].push_back(add_var("f" + id, VarBox{}));
    }
    hidden_index += net.layer_sizes[layer];
  }
  std::vector<VarId> outputs;
  for (std::size_t j = 0; j < net.num_outputs(); ++j)
    outputs.push_back(add_var("y" + std::to_string(j + 1), prop.outputs[j]));

  q.num_vars = q.names.size();

  // equations: defined variable carries coefficient -1, so each row reads
  // "affine expression minus defined variable = -bias"
  for (std::size_t layer = 1; layer < net.num_layers(); ++layer) {
    bool is_output = layer + 1 == net.num_layers();
    for (std::size_t j = 0; j < net.layer_sizes[layer]; ++j) {
      Equation<Rational> eq;
      for (std::size_t l = 0; l < prev_outputs.size(); ++l) {
        const Rational& w = net.weights[layer - 1][j][l];
        if (!w.is_zero()) eq.terms.emplace_back(prev_outputs[l], w);
      }
      VarId defined = is_output ? outputs[j] : layer_b[layer][j];
      eq.terms.emplace_back(defined, Rational(-1));
      eq.rhs = -net.biases[layer - 1][j];
      q.equations.push_back(std::move(eq));
    }
    if (!is_output) {
      for (std::size_t j = 0; j < net.layer_sizes[layer]; ++j)
        q.relus.push_back(ReluPair{layer_b[layer][j], layer_f[layer][j]});
      prev_outputs = layer_f[layer];
    }
  }

  for (const auto& [name, box] : prop.neuron_bounds) {
    auto it = by_name.find(name);
    if (it == by_name.end() || name.empty() || (name[0] != 'b' && name[0] != 'f'))
      throw ShapeMismatch("property bounds unknown neuron variable '" + name + "'");
    q.lower[it->second] = box.lower;
    q.upper[it->second] = box.upper;
  }
  return q;
}

// ---------------------------------------------------------------------------
// JSON file formats (.net / .prop)

namespace detail {

inline Rational scalar_from_json(const ordered_json& j, const std::string& where) {
  try {
    if (j.is_number_integer()) return Rational(static_cast<long>(j.get<std::int64_t>()));
    if (j.is_string()) return Rational::parse(j.get<std::string>());
  } catch (const ParseError& e) {
    throw ParseError(where + ": " + e.what());
  }
  throw ParseError(where + ": scalars must be integers or strings like \"2/3\" or \"-0.5\"");
}

inline Bound<Rational> bound_from_json(const ordered_json& j, const std::string& where) {
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "+inf" || s == "inf") return Bound<Rational>::pos_inf();
    if (s == "-inf") return Bound<Rational>::neg_inf();
  }
  return Bound<Rational>(scalar_from_json(j, where));
}

inline ordered_json bound_to_json(const Bound<Rational>& b) { return b.str(); }

inline VarBox box_from_json(const ordered_json& j, const std::string& where) {
  VarBox box;
  if (!j.is_object()) throw ParseError(where + ": expected an object with lower/upper");
  if (j.contains("lower")) box.lower = bound_from_json(j.at("lower"), where + ".lower");
  if (j.contains("upper")) box.upper = bound_from_json(j.at("upper"), where + ".upper");
  return box;
}

inline ordered_json box_to_json(const VarBox& box) {
  ordered_json j = ordered_json::object();
  j["lower"] = box.lower.str();
  j["upper"] = box.upper.str();
  return j;
}

}  // namespace detail

inline ordered_json network_to_json(const Network& net) {
  ordered_json j = ordered_json::object();
  j["layers"] = net.layer_sizes;
  ordered_json weights = ordered_json::array();
  for (const auto& mat : net.weights) {
    ordered_json jm = ordered_json::array();
    for (const auto& row : mat) {
      ordered_json jr = ordered_json::array();
      for (const auto& w : row) jr.push_back(w.str());
      jm.push_back(std::move(jr));
    }
    weights.push_back(std::move(jm));
  }
  j["weights"] = std::move(weights);
  ordered_json biases = ordered_json::array();
  for (const auto& vec : net.biases) {
    ordered_json jv = ordered_json::array();
    for (const auto& b : vec) jv.push_back(b.str());
    biases.push_back(std::move(jv));
  }
  j["biases"] = std::move(biases);
  return j;
}

inline Network network_from_json(const ordered_json& j) {
  try {
    Network net;
    if (!j.is_object() || !j.contains("layers") || !j.contains("weights"))
      throw ParseError("network file needs 'layers' and 'weights'");
    net.layer_sizes = j.at("layers").get<std::vector<std::size_t>>();
    const auto& jw = j.at("weights");
    for (std::size_t i = 0; i < jw.size(); ++i) {
      std::vector<std::vector<Rational>> mat;
      for (std::size_t r = 0; r < jw[i].size(); ++r) {
        std::vector<Rational> row;
        for (std::size_t c = 0; c < jw[i][r].size(); ++c)
          row.push_back(detail::scalar_from_json(jw[i][r][c], "weights[" + std::to_string(i) + "][" +
                                                                  std::to_string(r) + "][" +
                                                                  std::to_string(c) + "]"));
        mat.push_back(std::move(row));
      }
      net.weights.push_back(std::move(mat));
    }
    if (j.contains("biases")) {
      const auto& jb = j.at("biases");
      for (std::size_t i = 0; i < jb.size(); ++i) {
        std::vector<Rational> vec;
        for (std::size_t r = 0; r < jb[i].size(); ++r)
          vec.push_back(detail::scalar_from_json(jb[i][r],
                                                 "biases[" + std::to_string(i) + "][" + std::to_string(r) + "]"));
        net.biases.push_back(std::move(vec));
      }
    } else {
      for (std::size_t i = 0; i + 1 < net.layer_sizes.size(); ++i)
        net.biases.emplace_back(net.layer_sizes[i + 1], Rational(0));
    }
    net.validate();
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed network file: ") + e.what());
  }
}

inline ordered_json property_to_json(const Property& prop) {
  ordered_json j = ordered_json::object();
  ordered_json in = ordered_json::array(), out = ordered_json::array();
  for (const auto& b : prop.inputs) in.push_back(detail::box_to_json(b));
  for (const auto& b : prop.outputs) out.push_back(detail::box_to_json(b));
  j["inputs"] = std::move(in);
  j["outputs"] = std::move(out);
  if (!prop.neuron_bounds.empty()) {
    ordered_json nb = ordered_json::array();
    for (const auto& [name, box] : prop.neuron_bounds) {
      ordered_json e = detail::box_to_json(box);
      e["var"] = name;
      nb.push_back(std::move(e));
    }
    j["neuron_bounds"] = std::move(nb);
  }
  return j;
}

inline Property property_from_json(const ordered_json& j) {
  try {
    Property prop;
    if (!j.is_object() || !j.contains("inputs") || !j.contains("outputs"))
      throw ParseError("property file needs 'inputs' and 'outputs'");
    std::size_t i = 0;
    for (const auto& b : j.at("inputs"))
      prop.inputs.push_back(detail::box_from_json(b, "inputs[" + std::to_string(i++) + "]"));
    i = 0;
    for (const auto& b : j.at("outputs"))
      prop.outputs.push_back(detail::box_from_json(b, "outputs[" + std::to_string(i++) + "]"));
    if (j.contains("neuron_bounds")) {
      for (const auto& e : j.at("neuron_bounds")) {
        if (!e.contains("var")) throw ParseError("neuron_bounds entry without 'var'");
        prop.neuron_bounds.emplace_back(e.at("var").get<std::string>(),
                                        detail::box_from_json(e, e.at("var").get<std::string>()));
      }
    }
    prop.validate();
    return prop;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed property file: ") + e.what());
  }
}

inline ordered_json parse_json_text(const std::string& text) {
  ordered_json j = ordered_json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ParseError("not valid JSON");
  return j;
}

inline Network parse_network_text(const std::string& text) {
  return network_from_json(parse_json_text(text));
}

inline Property parse_property_text(const std::string& text) {
  return property_from_json(parse_json_text(text));
}

}  // namespace relucert
