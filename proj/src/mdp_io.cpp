#include "epifeed/mdp_io.hpp"

#include <fstream>

namespace epifeed {

namespace {

template <typename T>
T field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("MDP file: missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("MDP file: field '") + key + "': " + e.what());
  }
}

std::vector<Vec> read_tables(const nlohmann::json& fm, int S, int A, int H) {
  const auto t = field<std::vector<std::vector<std::vector<std::vector<double>>>>>(fm, "tables");
  if (static_cast<int>(t.size()) != H) throw ConfigError("feature tables: expected H blocks");
  std::vector<Vec> out;
  std::size_t d = 0;
  for (const auto& block : t) {
    if (static_cast<int>(block.size()) != S) throw ConfigError("feature tables: expected |S| rows");
    for (const auto& row : block) {
      if (static_cast<int>(row.size()) != A) throw ConfigError("feature tables: expected |A| entries");
      for (const auto& v : row) {
        if (d == 0) d = v.size();
        if (v.empty() || v.size() != d) throw ConfigError("feature tables: inconsistent dimension");
        out.push_back(Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())));
      }
    }
  }
  return out;
}

}  // namespace

Instance instance_from_json(const nlohmann::json& j, const std::string& name) {
  const int S = field<int>(j, "num_states");
  const int A = field<int>(j, "num_actions");
  const int H = field<int>(j, "horizon");
  if (S < 1 || A < 1 || H < 1) throw ConfigError("MDP file: dimensions must be positive");
  const auto nested = field<std::vector<std::vector<std::vector<double>>>>(j, "transitions");
  std::vector<double> flat;
  if (static_cast<int>(nested.size()) != S) throw ConfigError("transitions: expected |S| blocks");
  for (const auto& block : nested) {
    if (static_cast<int>(block.size()) != A) throw ConfigError("transitions: expected |A| rows");
    for (const auto& row : block) {
      if (static_cast<int>(row.size()) != S) throw ConfigError("transitions: expected |S| entries");
      flat.insert(flat.end(), row.begin(), row.end());
    }
  }
  std::shared_ptr<const TabularMdp> mdp;
  try {
    mdp = std::make_shared<const TabularMdp>(S, A, H, std::move(flat),
                                             field<std::vector<double>>(j, "init_dist"));
  } catch (const StructuralError& e) {
    throw ConfigError(std::string("MDP file: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("MDP file: ") + e.what());
  }

  const auto fm = field<nlohmann::json>(j, "feature_map");
  const auto kind = field<std::string>(fm, "kind");
  std::shared_ptr<const FeatureMap> map;
  try {
    if (kind == "direct")
      map = std::make_shared<const FeatureMap>(
          FeatureMap::direct(S, A, H, fm.value("normalize", true)));
    else if (kind == "sum_decomposable")
      map = std::make_shared<const FeatureMap>(FeatureMap::sum_decomposable(
          S, A, H, read_tables(fm, S, A, H), field<bool>(fm, "orthogonal")));
    else if (kind == "custom")
      map = std::make_shared<const FeatureMap>(FeatureMap::custom(S, A, H, read_tables(fm, S, A, H)));
    else
      throw ConfigError("feature_map.kind must be direct, sum_decomposable or custom");
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("feature_map: ") + e.what());
  }

  const double B = field<double>(j, "B");
  std::shared_ptr<const LogisticRewardModel> model;
  try {
    if (j.contains("w_star")) {
      const auto w = field<std::vector<double>>(j, "w_star");
      if (static_cast<int>(w.size()) != map->dim()) throw ConfigError("w_star: wrong dimension");
      model = std::make_shared<const LogisticRewardModel>(
          Eigen::Map<const Vec>(w.data(), static_cast<Eigen::Index>(w.size())), B, map);
    } else {
      Rng rng(field<std::uint64_t>(j, "w_seed"));
      model = std::make_shared<const LogisticRewardModel>(
          LogisticRewardModel::random_on_sphere(B, map, rng));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("reward model: ") + e.what());
  }
  return {name, mdp, map, model};
}

Instance load_instance(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open MDP file " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("MDP file " + path.string() + ": " + e.what());
  }
  return instance_from_json(j, path.stem().string());
}

nlohmann::json instance_to_json(const Instance& inst) {
  const TabularMdp& m = *inst.mdp;
  const FeatureMap& f = *inst.map;
  nlohmann::json j;
  j["num_states"] = m.num_states();
  j["num_actions"] = m.num_actions();
  j["horizon"] = m.horizon();
  auto tr = nlohmann::json::array();
  for (int s = 0; s < m.num_states(); ++s) {
    auto block = nlohmann::json::array();
    for (int a = 0; a < m.num_actions(); ++a) {
      const auto row = m.row(s, a);
      block.push_back(std::vector<double>(row.begin(), row.end()));
    }
    tr.push_back(block);
  }
  j["transitions"] = tr;
  j["init_dist"] = std::vector<double>(m.init_dist().begin(), m.init_dist().end());
  if (f.kind() == FeatureKind::DirectTabular) {
    j["feature_map"] = {{"kind", "direct"}, {"normalize", f.scale() != 1.0}};
  } else {
    auto tables = nlohmann::json::array();
    for (int h = 0; h < f.horizon(); ++h) {
      auto block = nlohmann::json::array();
      for (int s = 0; s < f.num_states(); ++s) {
        auto row = nlohmann::json::array();
        for (int a = 0; a < f.num_actions(); ++a) {
          const Vec v = f.step_feature(h, s, a);
          row.push_back(std::vector<double>(v.data(), v.data() + v.size()));
        }
        block.push_back(row);
      }
      tables.push_back(block);
    }
    j["feature_map"] = {{"kind", f.kind() == FeatureKind::SumDecomposable ? "sum_decomposable" : "custom"},
                        {"tables", tables}};
    if (f.kind() == FeatureKind::SumDecomposable) j["feature_map"]["orthogonal"] = f.orthogonal();
  }
  j["B"] = inst.model->B();
  const Vec& w = inst.model->w_star();
  j["w_star"] = std::vector<double>(w.data(), w.data() + w.size());
  return j;
}

}  // namespace epifeed
