#include "epifeed/instances.hpp"

#include <cmath>
#include <numbers>

namespace epifeed {

Instance chain2() {
  // P[s][a][s']
  std::vector<double> p = {
      0.9, 0.1,  // s0 a0: mostly stay
      0.2, 0.8,  // s0 a1: mostly move to s1
      0.7, 0.3,  // s1 a0: mostly back to s0
      0.1, 0.9,  // s1 a1: mostly stay
  };
  auto mdp = std::make_shared<const TabularMdp>(2, 2, 2, std::move(p), std::vector<double>{0.5, 0.5});
  auto map = std::make_shared<const FeatureMap>(FeatureMap::direct(2, 2, 2));
  Vec w(8);
  // index h*4 + s*2 + a
  w << 0.8, -0.8, -0.6, 0.4, 1.2, -1.0, -0.9, 1.6;
  auto model = std::make_shared<const LogisticRewardModel>(w, 3.0, map);
  return {"chain2", mdp, map, model};
}

Instance grid3() {
  constexpr int S = 3, A = 2, H = 2;
  std::vector<double> p = {
      0.6, 0.3, 0.1,  // s0 a0
      0.1, 0.3, 0.6,  // s0 a1
      0.1, 0.6, 0.3,  // s1 a0
      0.3, 0.1, 0.6,  // s1 a1
      0.3, 0.6, 0.1,  // s2 a0
      0.6, 0.1, 0.3,  // s2 a1
  };
  auto mdp = std::make_shared<const TabularMdp>(S, A, H, std::move(p),
                                                std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3});
  std::vector<Vec> tables;
  const double r = 1.0 / std::numbers::sqrt2;
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        const double angle = s * std::numbers::pi / 3.0;
        const double sign = a == 0 ? 1.0 : -1.0;
        Vec f = Vec::Zero(2 * H);
        f(2 * h) = sign * r * std::cos(angle);
        f(2 * h + 1) = sign * r * std::sin(angle);
        tables.push_back(f);
      }
  auto map = std::make_shared<const FeatureMap>(
      FeatureMap::sum_decomposable(S, A, H, std::move(tables), true));
  Vec w(4);
  w << 1.6, -1.1, -0.7, 1.8;
  auto model = std::make_shared<const LogisticRewardModel>(w, 3.0, map);
  return {"grid3", mdp, map, model};
}

std::vector<std::string> builtin_instance_names() { return {"chain2", "grid3"}; }

Instance builtin_instance(const std::string& name) {
  if (name == "chain2") return chain2();
  if (name == "grid3") return grid3();
  throw ConfigError("unknown built-in instance '" + name + "'");
}

}  // namespace epifeed
