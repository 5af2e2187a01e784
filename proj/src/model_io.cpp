#include "psrl/model_io.hpp"

#include <stdexcept>

namespace psrl {

using nlohmann::json;

json model_to_json(const PomdpModel& m) {
  const int S = m.num_states, A = m.num_actions, O = m.num_obs, H = m.horizon;
  json j;
  j["S"] = S;
  j["A"] = A;
  j["O"] = O;
  j["H"] = H;
  j["b1"] = std::vector<double>(m.initial.data(), m.initial.data() + S);

  json T = json::array();
  for (int h = 0; h + 1 < H; ++h) {
    json step = json::array();
    for (int s = 0; s < S; ++s) {
      json row = json::array();
      for (int a = 0; a < A; ++a) {
        json dist = json::array();
        for (int next = 0; next < S; ++next) dist.push_back(m.transition(h, s, a, next));
        row.push_back(std::move(dist));
      }
      step.push_back(std::move(row));
    }
    T.push_back(std::move(step));
  }
  j["T"] = std::move(T);

  json Z = json::array();
  json r = json::array();
  for (int h = 0; h < H; ++h) {
    json zs = json::array();
    for (int s = 0; s < S; ++s) {
      json dist = json::array();
      for (int o = 0; o < O; ++o) dist.push_back(m.observation(h, s, o));
      zs.push_back(std::move(dist));
    }
    Z.push_back(std::move(zs));
    json rs = json::array();
    for (int o = 0; o < O; ++o) {
      json row = json::array();
      for (int a = 0; a < A; ++a) row.push_back(m.reward(h, o, a));
      rs.push_back(std::move(row));
    }
    r.push_back(std::move(rs));
  }
  j["Z"] = std::move(Z);
  j["r"] = std::move(r);
  return j;
}

namespace {

void expect_size(const json& j, std::size_t n, const char* what) {
  if (!j.is_array() || j.size() != n)
    throw std::invalid_argument(std::string("model json: ") + what + " has wrong shape");
}

}  // namespace

PomdpModel model_from_json(const json& j) {
  for (const char* key : {"S", "A", "O", "H", "b1", "T", "Z", "r"})
    if (!j.contains(key)) throw std::invalid_argument(std::string("model json: missing field ") + key);
  const int S = j.at("S").get<int>(), A = j.at("A").get<int>(), O = j.at("O").get<int>(), H = j.at("H").get<int>();
  if (S <= 0 || A <= 0 || O <= 0 || H <= 0) throw std::invalid_argument("model json: sizes must be positive");
  PomdpModel m = PomdpModel::zeros(S, A, O, H);

  expect_size(j["b1"], S, "b1");
  for (int s = 0; s < S; ++s) m.initial(s) = j["b1"][s].get<double>();

  expect_size(j["T"], H - 1, "T");
  for (int h = 0; h + 1 < H; ++h) {
    expect_size(j["T"][h], S, "T[h]");
    for (int s = 0; s < S; ++s) {
      expect_size(j["T"][h][s], A, "T[h][s]");
      for (int a = 0; a < A; ++a) {
        expect_size(j["T"][h][s][a], S, "T[h][s][a]");
        for (int next = 0; next < S; ++next) m.transitions[h][a](next, s) = j["T"][h][s][a][next].get<double>();
      }
    }
  }
  expect_size(j["Z"], H, "Z");
  expect_size(j["r"], H, "r");
  for (int h = 0; h < H; ++h) {
    expect_size(j["Z"][h], S, "Z[h]");
    for (int s = 0; s < S; ++s) {
      expect_size(j["Z"][h][s], O, "Z[h][s]");
      for (int o = 0; o < O; ++o) m.observations[h](o, s) = j["Z"][h][s][o].get<double>();
    }
    expect_size(j["r"][h], O, "r[h]");
    for (int o = 0; o < O; ++o) {
      expect_size(j["r"][h][o], A, "r[h][o]");
      for (int a = 0; a < A; ++a) m.rewards[h](o, a) = j["r"][h][o][a].get<double>();
    }
  }
  return m;
}

json trajectory_to_json(const Trajectory& tau) { return tau.flatten(); }

Trajectory trajectory_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("trajectory json: expected a flat integer array");
  return Trajectory::unflatten(j.get<std::vector<int>>());
}

}  // namespace psrl
