#pragma once

#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "adrqn/pomdp/model.hpp"

namespace adrqn::pomdp {

class ParseError : public ModelError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ModelError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Reads a tabular model. Format, one directive per line, '#' starts a comment:
///
///   discount: 0.95
///   states: tiger-left tiger-right
///   actions: listen open-left open-right
///   observations: hear-left hear-right
///   start: uniform            (or one probability per state)
///   T: <action> : <state> : <next-state> <prob>
///   O: <action> : <next-state> : <observation> <prob>
///   R: <action> : <state> <reward>
///
/// Any name in a T/O/R line may be '*' to cover every element. Later lines
/// overwrite earlier ones. The header lines must precede the first table entry.
inline PomdpModel parse_pomdp(std::istream& in) {
  std::vector<std::string> states, actions, observations;
  double discount = 0.95;
  std::vector<double> start;
  bool start_uniform = true;
  PomdpModel model;
  bool built = false;

  auto names_of = [](std::istringstream& rest) {
    std::vector<std::string> out;
    for (std::string tok; rest >> tok;) out.push_back(tok);
    return out;
  };

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const auto colon = raw.find(':');
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (colon == std::string::npos) throw ParseError(line_no, "expected '<key>:'");
    std::string key = raw.substr(0, colon);
    key.erase(0, key.find_first_not_of(" \t"));
    key.erase(key.find_last_not_of(" \t") + 1);
    std::string body = raw.substr(colon + 1);
    for (char& c : body) {
      if (c == ':') c = ' ';
    }
    std::istringstream rest(body);

    if (key == "discount") {
      if (!(rest >> discount)) throw ParseError(line_no, "discount needs a number");
      continue;
    }
    if (key == "states" || key == "actions" || key == "observations") {
      if (built) throw ParseError(line_no, key + " declared after table entries");
      auto names = names_of(rest);
      if (names.empty()) throw ParseError(line_no, key + " list is empty");
      (key == "states" ? states : key == "actions" ? actions : observations) = std::move(names);
      continue;
    }
    if (key == "start") {
      std::string first;
      if (!(rest >> first)) throw ParseError(line_no, "start needs 'uniform' or probabilities");
      if (first == "uniform") {
        start_uniform = true;
        continue;
      }
      start_uniform = false;
      start.clear();
      std::istringstream all(body);
      for (double p; all >> p;) start.push_back(p);
      if (!all.eof()) throw ParseError(line_no, "start probabilities must be numbers");
      continue;
    }
    if (key != "T" && key != "O" && key != "R") throw ParseError(line_no, "unknown directive '" + key + "'");

    if (!built) {
      if (states.empty() || actions.empty() || observations.empty()) {
        throw ParseError(line_no, "states, actions and observations must be declared before table entries");
      }
      model = PomdpModel(states, actions, observations, discount);
      built = true;
    }
    auto expand = [&](const std::string& tok, const std::vector<std::string>& names, const char* kind) {
      std::vector<std::size_t> out;
      if (tok == "*") {
        for (std::size_t i = 0; i < names.size(); ++i) out.push_back(i);
        return out;
      }
      for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == tok) return std::vector<std::size_t>{i};
      }
      throw ParseError(line_no, std::string("unknown ") + kind + " '" + tok + "'");
    };
    std::vector<std::string> toks = names_of(rest);
    const std::size_t want = key == "R" ? 3 : 4;
    if (toks.size() != want) {
      throw ParseError(line_no, key + " entry needs " + std::to_string(want) + " fields, got " + std::to_string(toks.size()));
    }
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(toks.back(), &used);
      if (used != toks.back().size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(line_no, "'" + toks.back() + "' is not a number");
    }
    const auto as = expand(toks[0], actions, "action");
    if (key == "T") {
      for (auto a : as)
        for (auto s : expand(toks[1], states, "state"))
          for (auto s2 : expand(toks[2], states, "state")) model.T(s, a, s2) = value;
    } else if (key == "O") {
      for (auto a : as)
        for (auto s2 : expand(toks[1], states, "state"))
          for (auto z : expand(toks[2], observations, "observation")) model.O(s2, a, z) = value;
    } else {
      for (auto a : as)
        for (auto s : expand(toks[1], states, "state")) model.R(s, a) = value;
    }
  }
  if (!built) {
    if (states.empty() || actions.empty() || observations.empty()) {
      throw ParseError(line_no, "model declares no states, actions or observations");
    }
    model = PomdpModel(states, actions, observations, discount);
  }
  model.set_discount(discount);
  if (!start_uniform) {
    if (start.size() != states.size()) throw ParseError(line_no, "start has wrong number of probabilities");
    model.set_start(Belief{start});
  }
  model.validate(1e-9);
  return model;
}

inline PomdpModel parse_pomdp(const std::string& text) {
  std::istringstream in(text);
  return parse_pomdp(in);
}

inline PomdpModel load_pomdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file '" + path + "'");
  return parse_pomdp(in);
}

/// Writes the model in the format read by parse_pomdp; zero entries are omitted.
inline void write_pomdp(std::ostream& out, const PomdpModel& m) {
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += " " + x;
    return s;
  };
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "discount: " << m.discount() << "\n";
  out << "states:" << join(m.states()) << "\n";
  out << "actions:" << join(m.actions()) << "\n";
  out << "observations:" << join(m.observations()) << "\n";
  out << "start:";
  for (double p : m.start().p) out << " " << p;
  out << "\n";
  const auto& S = m.states();
  const auto& A = m.actions();
  const auto& Z = m.observations();
  for (std::size_t a = 0; a < A.size(); ++a)
    for (std::size_t s = 0; s < S.size(); ++s)
      for (std::size_t s2 = 0; s2 < S.size(); ++s2)
        if (m.T(s, a, s2) != 0.0) out << "T: " << A[a] << " : " << S[s] << " : " << S[s2] << " " << m.T(s, a, s2) << "\n";
  for (std::size_t a = 0; a < A.size(); ++a)
    for (std::size_t s2 = 0; s2 < S.size(); ++s2)
      for (std::size_t z = 0; z < Z.size(); ++z)
        if (m.O(s2, a, z) != 0.0) out << "O: " << A[a] << " : " << S[s2] << " : " << Z[z] << " " << m.O(s2, a, z) << "\n";
  for (std::size_t a = 0; a < A.size(); ++a)
    for (std::size_t s = 0; s < S.size(); ++s)
      if (m.R(s, a) != 0.0) out << "R: " << A[a] << " : " << S[s] << " " << m.R(s, a) << "\n";
}

}  // namespace adrqn::pomdp
