#pragma once

#include <json.hpp>

#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

#include "relucert/frontend.hpp"
#include "relucert/search.hpp"

namespace relucert {

struct MalformedProof : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kProofVersion = "certproof/1";

/// A self-contained proof artifact: the query (network, property and its
/// LP encoding) plus the proof tree, everything in exact rationals.
struct ProofFile {
  Network network;
  Property property;
  ProofTree<Rational> tree;
};

template <typename S>
ProofTree<Rational> tree_to_rational(const ProofTree<S>& tree);

// ---------------------------------------------------------------------------
// writing

namespace proof_detail {

inline ordered_json equation_to_json(const Equation<Rational>& eq) {
  ordered_json j = ordered_json::object();
  ordered_json terms = ordered_json::array();
  for (const auto& [v, c] : eq.terms) terms.push_back(ordered_json::array({v, c.str()}));
  j["terms"] = std::move(terms);
  j["rhs"] = eq.rhs.str();
  return j;
}

inline ordered_json farkas_to_json(const FarkasVec<Rational>& w, std::size_t m) {
  ordered_json j = ordered_json::array();
  FarkasVec<Rational> full = fv_materialize(w, m);
  for (const auto& c : full) j.push_back(c.str());
  return j;
}

inline ordered_json lemma_to_json(const Lemma<Rational>& lemma, std::size_t m) {
  ordered_json j = ordered_json::object();
  j["var"] = lemma.var;
  j["side"] = side_name(lemma.side);
  j["bound"] = lemma.bound.str();
  j["rule"] = static_cast<int>(lemma.rule);
  j["antecedent_var"] = lemma.antecedent_var;
  j["antecedent_side"] = side_name(lemma.antecedent_side);
  j["antecedent_explanation"] = farkas_to_json(lemma.antecedent_explanation, m);
  return j;
}

inline ordered_json node_to_json(const ProofNode<Rational>& node, std::size_t m) {
  ordered_json j = ordered_json::object();
  if (node.split) {
    ordered_json s = ordered_json::object();
    s["relu"] = node.split->relu_index;
    s["phase"] = phase_name(node.split->phase);
    j["split"] = std::move(s);
  } else {
    j["split"] = nullptr;
  }
  m += node.added_equations.size();
  if (!node.ground_updates.empty()) {
    ordered_json g = ordered_json::array();
    for (const auto& u : node.ground_updates)
      g.push_back(ordered_json::array({u.var, side_name(u.side), u.value.str()}));
    j["ground_updates"] = std::move(g);
  }
  if (!node.added_equations.empty()) {
    ordered_json eqs = ordered_json::array();
    for (const auto& eq : node.added_equations) eqs.push_back(equation_to_json(eq));
    j["equations"] = std::move(eqs);
  }
  if (!node.lemmas.empty()) {
    ordered_json ls = ordered_json::array();
    for (const auto& lemma : node.lemmas) ls.push_back(lemma_to_json(lemma, m));
    j["lemmas"] = std::move(ls);
  }
  if (node.is_leaf()) {
    if (!node.contradiction) throw MalformedProof("leaf without contradiction");
    ordered_json c = ordered_json::object();
    if (node.contradiction->kind == Contradiction<Rational>::Kind::var_symbol) {
      c["kind"] = "var";
      c["var"] = node.contradiction->var;
    } else {
      c["kind"] = "farkas";
      c["w"] = farkas_to_json(node.contradiction->w, m);
    }
    j["contradiction"] = std::move(c);
  } else {
    ordered_json kids = ordered_json::array();
    for (const auto& child : node.children) kids.push_back(node_to_json(*child, m));
    j["children"] = std::move(kids);
  }
  return j;
}

inline ordered_json query_to_json(const Query<Rational>& q, std::size_t num_inputs) {
  ordered_json j = ordered_json::object();
  j["num_vars"] = q.num_vars;
  j["num_inputs"] = num_inputs;
  j["names"] = q.names;
  ordered_json eqs = ordered_json::array();
  for (const auto& eq : q.equations) eqs.push_back(equation_to_json(eq));
  j["equations"] = std::move(eqs);
  ordered_json lo = ordered_json::array(), hi = ordered_json::array();
  for (const auto& b : q.lower) lo.push_back(b.str());
  for (const auto& b : q.upper) hi.push_back(b.str());
  j["lower"] = std::move(lo);
  j["upper"] = std::move(hi);
  ordered_json relus = ordered_json::array();
  for (const auto& r : q.relus) relus.push_back(ordered_json::array({r.b, r.f}));
  j["relus"] = std::move(relus);
  return j;
}

}  // namespace proof_detail

inline std::string serialize_proof(const ProofFile& proof) {
  ordered_json j = ordered_json::object();
  j["version"] = kProofVersion;
  j["network"] = network_to_json(proof.network);
  j["property"] = property_to_json(proof.property);
  j["query"] = proof_detail::query_to_json(proof.tree.query, proof.tree.num_inputs);
  j["tree"] = proof_detail::node_to_json(*proof.tree.root, proof.tree.query.equations.size());
  return j.dump(1);
}

// ---------------------------------------------------------------------------
// reading

namespace proof_detail {

inline Rational scalar_field(const ordered_json& j, const std::string& where) {
  if (!j.is_string()) throw MalformedProof(where + ": expected scalar string");
  try {
    return Rational::parse(j.get<std::string>());
  } catch (const ParseError& e) {
    throw MalformedProof(where + ": " + e.what());
  }
}

inline Bound<Rational> bound_field(const ordered_json& j, const std::string& where) {
  if (!j.is_string()) throw MalformedProof(where + ": expected bound string");
  std::string s = j.get<std::string>();
  if (s == "+inf" || s == "inf") return Bound<Rational>::pos_inf();
  if (s == "-inf") return Bound<Rational>::neg_inf();
  return Bound<Rational>(scalar_field(j, where));
}

inline Equation<Rational> equation_from_json(const ordered_json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("terms") || !j.contains("rhs"))
    throw MalformedProof(where + ": equation needs terms and rhs");
  Equation<Rational> eq;
  for (const auto& t : j.at("terms")) {
    if (!t.is_array() || t.size() != 2 || !t[0].is_number_unsigned())
      throw MalformedProof(where + ": bad equation term");
    eq.terms.emplace_back(t[0].get<VarId>(), scalar_field(t[1], where + ".coeff"));
  }
  eq.rhs = scalar_field(j.at("rhs"), where + ".rhs");
  return eq;
}

inline FarkasVec<Rational> farkas_from_json(const ordered_json& j, const std::string& where) {
  if (!j.is_array()) throw MalformedProof(where + ": expected vector");
  FarkasVec<Rational> w;
  for (std::size_t i = 0; i < j.size(); ++i)
    w.push_back(scalar_field(j[i], where + "[" + std::to_string(i) + "]"));
  return w;
}

inline Side side_field(const ordered_json& j, const std::string& where) {
  if (j == "lower") return Side::lower;
  if (j == "upper") return Side::upper;
  throw MalformedProof(where + ": side must be \"lower\" or \"upper\"");
}

inline std::unique_ptr<ProofNode<Rational>> node_from_json(const ordered_json& j,
                                                           const std::string& where) {
  if (!j.is_object()) throw MalformedProof(where + ": expected node object");
  auto node = std::make_unique<ProofNode<Rational>>();
  if (j.contains("split") && !j.at("split").is_null()) {
    const auto& s = j.at("split");
    if (!s.contains("relu") || !s.contains("phase"))
      throw MalformedProof(where + ".split: needs relu and phase");
    SplitInfo info;
    info.relu_index = s.at("relu").get<std::size_t>();
    if (s.at("phase") == "active")
      info.phase = Phase::active;
    else if (s.at("phase") == "inactive")
      info.phase = Phase::inactive;
    else
      throw MalformedProof(where + ".split: unknown phase");
    node->split = info;
  }
  if (j.contains("ground_updates")) {
    for (const auto& u : j.at("ground_updates")) {
      if (!u.is_array() || u.size() != 3) throw MalformedProof(where + ": bad ground update");
      node->ground_updates.push_back({u[0].get<VarId>(), side_field(u[1], where),
                                      scalar_field(u[2], where + ".ground_update")});
    }
  }
  if (j.contains("equations")) {
    std::size_t i = 0;
    for (const auto& e : j.at("equations"))
      node->added_equations.push_back(
          equation_from_json(e, where + ".equations[" + std::to_string(i++) + "]"));
  }
  if (j.contains("lemmas")) {
    std::size_t i = 0;
    for (const auto& l : j.at("lemmas")) {
      std::string lw = where + ".lemmas[" + std::to_string(i++) + "]";
      if (!l.is_object() || !l.contains("var") || !l.contains("rule"))
        throw MalformedProof(lw + ": bad lemma");
      Lemma<Rational> lemma;
      lemma.var = l.at("var").get<VarId>();
      lemma.side = side_field(l.at("side"), lw);
      lemma.bound = scalar_field(l.at("bound"), lw + ".bound");
      int rule = l.at("rule").get<int>();
      if (rule < 1 || rule > 5) throw MalformedProof(lw + ": unknown rule id");
      lemma.rule = static_cast<ReluRule>(rule);
      lemma.antecedent_var = l.at("antecedent_var").get<VarId>();
      lemma.antecedent_side = side_field(l.at("antecedent_side"), lw);
      lemma.antecedent_explanation =
          farkas_from_json(l.at("antecedent_explanation"), lw + ".antecedent_explanation");
      node->lemmas.push_back(std::move(lemma));
    }
  }
  bool has_children = j.contains("children");
  bool has_contradiction = j.contains("contradiction");
  if (has_children == has_contradiction)
    throw MalformedProof(where + ": node needs exactly one of children/contradiction");
  if (has_contradiction) {
    const auto& c = j.at("contradiction");
    if (c.at("kind") == "var") {
      node->contradiction = Contradiction<Rational>::symbol(c.at("var").get<VarId>());
    } else if (c.at("kind") == "farkas") {
      node->contradiction = Contradiction<Rational>::farkas_proof(
          0, farkas_from_json(c.at("w"), where + ".contradiction.w"));
    } else {
      throw MalformedProof(where + ".contradiction: unknown kind");
    }
  } else {
    const auto& kids = j.at("children");
    if (!kids.is_array() || kids.size() != 2)
      throw MalformedProof(where + ": internal node needs exactly 2 children");
    for (std::size_t i = 0; i < kids.size(); ++i)
      node->children.push_back(
          node_from_json(kids[i], where + ".children[" + std::to_string(i) + "]"));
  }
  return node;
}

inline Query<Rational> query_from_json(const ordered_json& j, std::size_t& num_inputs) {
  if (!j.is_object()) throw MalformedProof("query: expected object");
  Query<Rational> q;
  try {
    q.num_vars = j.at("num_vars").get<std::size_t>();
    num_inputs = j.at("num_inputs").get<std::size_t>();
    if (j.contains("names")) q.names = j.at("names").get<std::vector<std::string>>();
    std::size_t i = 0;
    for (const auto& e : j.at("equations"))
      q.equations.push_back(equation_from_json(e, "query.equations[" + std::to_string(i++) + "]"));
    for (const auto& b : j.at("lower")) q.lower.push_back(bound_field(b, "query.lower"));
    for (const auto& b : j.at("upper")) q.upper.push_back(bound_field(b, "query.upper"));
    for (const auto& r : j.at("relus")) {
      if (!r.is_array() || r.size() != 2) throw MalformedProof("query.relus: bad pair");
      q.relus.push_back(ReluPair{r[0].get<VarId>(), r[1].get<VarId>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw MalformedProof(std::string("query: ") + e.what());
  }
  if (q.lower.size() != q.num_vars || q.upper.size() != q.num_vars)
    throw MalformedProof("query: bound vectors do not match num_vars");
  return q;
}

}  // namespace proof_detail

inline ProofFile parse_proof(const std::string& text) {
  ordered_json j = ordered_json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw MalformedProof("proof file is not valid JSON");
  try {
    if (!j.is_object() || !j.contains("version") || j.at("version") != kProofVersion)
      throw MalformedProof("missing or unsupported proof version");
    ProofFile proof;
    proof.network = network_from_json(j.at("network"));
    proof.property = property_from_json(j.at("property"));
    proof.tree.query = proof_detail::query_from_json(j.at("query"), proof.tree.num_inputs);
    proof.tree.root = proof_detail::node_from_json(j.at("tree"), "tree");
    return proof;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedProof(std::string("malformed proof: ") + e.what());
  } catch (const ParseError& e) {
    throw MalformedProof(std::string("malformed proof: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// mode conversion

namespace proof_detail {

template <typename S>
std::unique_ptr<ProofNode<Rational>> node_to_rational(const ProofNode<S>& node, std::size_t m) {
  auto out = std::make_unique<ProofNode<Rational>>();
  out->split = node.split;
  m += node.added_equations.size();
  for (const auto& eq : node.added_equations) {
    Equation<Rational> e;
    e.rhs = to_rational(eq.rhs);
    for (const auto& [v, c] : eq.terms) e.terms.emplace_back(v, to_rational(c));
    out->added_equations.push_back(std::move(e));
  }
  for (const auto& u : node.ground_updates)
    out->ground_updates.push_back({u.var, u.side, to_rational(u.value)});
  for (const auto& lemma : node.lemmas) {
    Lemma<Rational> l;
    l.var = lemma.var;
    l.side = lemma.side;
    l.bound = to_rational(lemma.bound);
    l.rule = lemma.rule;
    l.antecedent_var = lemma.antecedent_var;
    l.antecedent_side = lemma.antecedent_side;
    l.antecedent_explanation = fv_materialize(fv_to_rational(lemma.antecedent_explanation), m);
    out->lemmas.push_back(std::move(l));
  }
  if (node.is_leaf()) {
    if (node.contradiction->kind == Contradiction<S>::Kind::var_symbol)
      out->contradiction = Contradiction<Rational>::symbol(node.contradiction->var);
    else
      out->contradiction = Contradiction<Rational>::farkas_proof(
          node.contradiction->var, fv_materialize(fv_to_rational(node.contradiction->w), m));
  } else {
    for (const auto& child : node.children)
      out->children.push_back(node_to_rational(*child, m));
  }
  return out;
}

}  // namespace proof_detail

/// Converts a proof tree to exact rationals; float scalars convert to the
/// exact value of the binary64 they hold.
template <typename S>
ProofTree<Rational> tree_to_rational(const ProofTree<S>& tree) {
  ProofTree<Rational> out;
  out.query = query_to_rational(tree.query);
  out.num_inputs = tree.num_inputs;
  out.root = proof_detail::node_to_rational(*tree.root, tree.query.equations.size());
  return out;
}

}  // namespace relucert
