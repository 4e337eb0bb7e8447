#include "privrec/report.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "privrec/checkpoint.hpp"

namespace privrec {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string report_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["variant"] = r.variant;
  j["sweep_axis"] = r.sweep_axis;
  j["axis_value"] = r.axis_value;
  j["seed"] = r.seed;
  j["config"] = train_config_to_json(r.config);
  j["split_ratio"] = r.split_ratio;
  j["attack_split"] = r.attack_split;
  j["hit_mode"] = r.hit_mode;
  j["f1_average"] = r.f1_average;
  j["k_list"] = r.k_list;
  j["hit"] = r.hit;
  j["ndcg"] = r.ndcg;
  j["attacks"] = nlohmann::ordered_json::array();
  for (const auto& a : r.attacks) {
    j["attacks"].push_back({{"attribute", a.attribute},
                            {"attacker", a.attacker},
                            {"k", a.k},
                            {"f1", a.f1}});
  }
  j["wall_seconds"] = r.wall_seconds;
  return j.dump(2);
}

MetricsReport report_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  MetricsReport r;
  r.variant = j.at("variant").get<std::string>();
  r.sweep_axis = j.at("sweep_axis").get<std::string>();
  r.axis_value = j.at("axis_value").get<double>();
  r.seed = j.at("seed").get<uint64_t>();
  r.config = train_config_from_json(j.at("config"));
  r.split_ratio = j.at("split_ratio").get<double>();
  r.attack_split = j.at("attack_split").get<double>();
  r.hit_mode = j.at("hit_mode").get<std::string>();
  r.f1_average = j.at("f1_average").get<std::string>();
  r.k_list = j.at("k_list").get<std::vector<int>>();
  r.hit = j.at("hit").get<std::vector<double>>();
  r.ndcg = j.at("ndcg").get<std::vector<double>>();
  for (const auto& a : j.at("attacks")) {
    r.attacks.push_back({a.at("attribute").get<std::string>(),
                         a.at("attacker").get<std::string>(), a.at("k").get<int>(),
                         a.at("f1").get<double>()});
  }
  r.wall_seconds = j.at("wall_seconds").get<double>();
  return r;
}

std::string reports_to_csv(const std::vector<MetricsReport>& reports) {
  std::ostringstream out;
  out << "variant,sweep_axis,axis_value,seed,k,metric,attribute,attacker,value\n";
  for (const auto& r : reports) {
    const std::string prefix = r.variant + "," + r.sweep_axis + "," + fmt(r.axis_value) +
                               "," + std::to_string(r.seed) + ",";
    for (size_t i = 0; i < r.k_list.size(); ++i) {
      out << prefix << r.k_list[i] << ",hit,,," << fmt(r.hit[i]) << "\n";
      out << prefix << r.k_list[i] << ",ndcg,,," << fmt(r.ndcg[i]) << "\n";
    }
    for (const auto& a : r.attacks) {
      out << prefix << a.k << ",f1," << a.attribute << "," << a.attacker << ","
          << fmt(a.f1) << "\n";
    }
  }
  return out.str();
}

std::string aggregate_csv(const std::vector<MetricsReport>& reports) {
  struct Cell {
    std::vector<double> values;
  };
  std::vector<std::string> order;
  std::map<std::string, Cell> cells;
  const auto add = [&](const std::string& key, double v) {
    auto [it, fresh] = cells.try_emplace(key);
    if (fresh) order.push_back(key);
    it->second.values.push_back(v);
  };
  for (const auto& r : reports) {
    const std::string prefix = r.variant + "," + r.sweep_axis + "," + fmt(r.axis_value) + ",";
    for (size_t i = 0; i < r.k_list.size(); ++i) {
      add(prefix + std::to_string(r.k_list[i]) + ",hit,,", r.hit[i]);
      add(prefix + std::to_string(r.k_list[i]) + ",ndcg,,", r.ndcg[i]);
    }
    for (const auto& a : r.attacks) {
      add(prefix + std::to_string(a.k) + ",f1," + a.attribute + "," + a.attacker, a.f1);
    }
  }
  std::ostringstream out;
  out << "variant,sweep_axis,axis_value,k,metric,attribute,attacker,mean,std,runs\n";
  for (const auto& key : order) {
    const auto& vals = cells.at(key).values;
    double mean = 0.0;
    for (const double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    double var = 0.0;
    for (const double v : vals) var += (v - mean) * (v - mean);
    const double sd = vals.size() > 1 ? std::sqrt(var / (vals.size() - 1)) : 0.0;
    out << key << "," << fmt(mean) << "," << fmt(sd) << "," << vals.size() << "\n";
  }
  return out.str();
}

}  // namespace privrec
