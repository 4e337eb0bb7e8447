// Command-line front end: dataset generation and ingestion, feature
// perturbation, training, recommendation, attacks, evaluation and sweeps.
#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "privrec/attack.hpp"
#include "privrec/checkpoint.hpp"
#include "privrec/config.hpp"
#include "privrec/dataset.hpp"
#include "privrec/ldp.hpp"
#include "privrec/metrics.hpp"
#include "privrec/pipeline.hpp"
#include "privrec/report.hpp"
#include "privrec/synthetic.hpp"

namespace fs = std::filesystem;
using namespace privrec;

namespace {

// Values shared by most subcommands; config-file keys use the long flag
// names without the leading dashes (e.g. "epsilon-local = 10").
struct CommonOpts {
  std::string data_dir;
  TrainConfig train;
  double split_ratio = 0.8;
  double attack_split = 0.8;
  bool paper_init = false;
  bool no_feature_perturbation = false;
  bool no_loss_perturbation = false;
  std::string hit_mode = "user";
  std::string f1_average = "weighted";
  bool verbose = false;
};

void apply_config_value(const std::map<std::string, std::string>& cfg,
                        const std::string& key, int& var) {
  if (const auto it = cfg.find(key); it != cfg.end()) var = std::stoi(it->second);
}
void apply_config_value(const std::map<std::string, std::string>& cfg,
                        const std::string& key, double& var) {
  if (const auto it = cfg.find(key); it != cfg.end()) var = std::stod(it->second);
}
void apply_config_value(const std::map<std::string, std::string>& cfg,
                        const std::string& key, uint64_t& var) {
  if (const auto it = cfg.find(key); it != cfg.end()) var = std::stoull(it->second);
}
void apply_config_value(const std::map<std::string, std::string>& cfg,
                        const std::string& key, std::string& var) {
  if (const auto it = cfg.find(key); it != cfg.end()) var = it->second;
}
void apply_config_value(const std::map<std::string, std::string>& cfg,
                        const std::string& key, bool& var) {
  if (const auto it = cfg.find(key); it != cfg.end()) {
    var = it->second == "1" || it->second == "true" || it->second == "yes";
  }
}

void apply_config(const std::map<std::string, std::string>& cfg, CommonOpts& o) {
  apply_config_value(cfg, "data", o.data_dir);
  apply_config_value(cfg, "dim", o.train.d);
  apply_config_value(cfg, "lr", o.train.lr);
  apply_config_value(cfg, "batch", o.train.batch_size);
  apply_config_value(cfg, "epochs", o.train.epochs);
  apply_config_value(cfg, "gamma", o.train.gamma);
  apply_config_value(cfg, "epsilon", o.train.epsilon);
  apply_config_value(cfg, "epsilon-local", o.train.epsilon_local);
  apply_config_value(cfg, "sigma-init", o.train.sigma_init);
  apply_config_value(cfg, "neighbor-cap", o.train.neighbor_cap);
  apply_config_value(cfg, "seed", o.train.seed);
  apply_config_value(cfg, "split-ratio", o.split_ratio);
  apply_config_value(cfg, "attack-split", o.attack_split);
  apply_config_value(cfg, "paper-init", o.paper_init);
  apply_config_value(cfg, "no-feature-perturbation", o.no_feature_perturbation);
  apply_config_value(cfg, "no-loss-perturbation", o.no_loss_perturbation);
  apply_config_value(cfg, "hit-mode", o.hit_mode);
  apply_config_value(cfg, "f1-average", o.f1_average);
}

// Registers the training flags on a subcommand, bound to `o`.
void add_train_flags(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--dim", o.train.d, "Embedding dimension d");
  cmd->add_option("--lr", o.train.lr, "SGD learning rate");
  cmd->add_option("--batch", o.train.batch_size, "Minibatch size");
  cmd->add_option("--epochs", o.train.epochs, "Training epochs");
  cmd->add_option("--gamma", o.train.gamma, "L2 coefficient");
  cmd->add_option("--epsilon", o.train.epsilon, "Objective-perturbation budget");
  cmd->add_option("--epsilon-local", o.train.epsilon_local, "Feature-perturbation budget");
  cmd->add_option("--sigma-init", o.train.sigma_init, "Init stddev");
  cmd->add_option("--neighbor-cap", o.train.neighbor_cap,
                  "Training-time neighbor subsample cap");
  cmd->add_option("--seed", o.train.seed, "Run seed");
  cmd->add_flag("--paper-init", o.paper_init, "Initialize with stddev 1.0");
  cmd->add_flag("--no-feature-perturbation", o.no_feature_perturbation,
                "Disable input-stage perturbation");
  cmd->add_flag("--no-loss-perturbation", o.no_loss_perturbation,
                "Disable objective perturbation");
}

TrainConfig finalize_train_config(const CommonOpts& o, const std::string& variant) {
  TrainConfig cfg = o.train;
  apply_variant(variant, cfg);
  if (o.paper_init) cfg.sigma_init = 1.0;
  if (o.no_feature_perturbation) cfg.use_feature_perturbation = false;
  if (o.no_loss_perturbation) cfg.use_loss_perturbation = false;
  return cfg;
}

void write_recs_file(const fs::path& path, const std::vector<RankedList>& lists,
                     const IdRemap& users, const IdRemap& items) {
  std::ostringstream out;
  for (const auto& l : lists) {
    out << users.to_original[l.user] << '\t';
    for (size_t i = 0; i < l.items.size(); ++i) {
      if (i) out << ',';
      out << items.to_original[l.items[i]];
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

std::vector<RankedList> read_recs_file(const fs::path& path, const Dataset& ds) {
  std::vector<RankedList> lists(ds.graph.num_users);
  for (int u = 0; u < ds.graph.num_users; ++u) lists[u].user = u;
  std::istringstream in(read_text_file(path));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::invalid_argument("recs line " + std::to_string(line_no) + ": no tab");
    }
    const auto user_it = ds.raw.users.to_dense.find(std::stoi(line.substr(0, tab)));
    if (user_it == ds.raw.users.to_dense.end()) {
      throw std::invalid_argument("recs line " + std::to_string(line_no) + ": unknown user");
    }
    RankedList& l = lists[user_it->second];
    std::istringstream items(line.substr(tab + 1));
    std::string tok;
    while (std::getline(items, tok, ',')) {
      if (tok.empty()) continue;
      const auto item_it = ds.raw.items.to_dense.find(std::stoi(tok));
      if (item_it == ds.raw.items.to_dense.end()) {
        throw std::invalid_argument("recs line " + std::to_string(line_no) +
                                    ": unknown item " + tok);
      }
      l.items.push_back(item_it->second);
    }
  }
  return lists;
}

FeatureMatrix features_for_model(const Dataset& ds, const PreparedData& prep,
                                 const TrainConfig& cfg,
                                 const std::optional<std::string>& staged_features,
                                 const std::optional<std::string>& staged_schema) {
  if (staged_features) {
    FeatureMatrix m = load_feature_matrix(*staged_features);
    if (staged_schema) {
      const FeatureSchema schema = schema_from_json(read_text_file(*staged_schema));
      if (m.cols != schema.d0()) {
        throw std::invalid_argument("staged features do not match staged schema");
      }
    }
    if (m.rows != ds.graph.num_users) {
      throw std::invalid_argument("staged features do not cover all users");
    }
    return m;
  }
  if (cfg.use_feature_perturbation) {
    return perturb_feature_matrix(prep.features, prep.schema, cfg.epsilon_local,
                                  Rng(cfg.seed).fork(2));
  }
  return prep.features;
}

std::vector<Attribute> parse_attributes(const std::vector<std::string>& names) {
  std::vector<Attribute> out;
  for (const auto& n : names) {
    if (n == "all") {
      return {Attribute::kGender, Attribute::kAge, Attribute::kOccupation};
    }
    out.push_back(attribute_from_name(n));
  }
  return out;
}

std::vector<AttackerKind> parse_attackers(const std::vector<std::string>& names) {
  std::vector<AttackerKind> out;
  for (const auto& n : names) {
    if (n == "all") {
      return {AttackerKind::kTwoLayerNN, AttackerKind::kKNearestNeighbors,
              AttackerKind::kNaiveBayes, AttackerKind::kLogisticRegression};
    }
    out.push_back(attacker_from_name(n));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy-preserving GCN recommender toolkit"};
  app.require_subcommand(1);
  std::string config_flag;
  app.add_option("--config", config_flag,
                 "key=value config file (PRIVREC_CONFIG overrides this path)");

  CommonOpts o;
  // Config precedence: built-in defaults < config file < explicit flags. The
  // config path itself comes from PRIVREC_CONFIG when set, else --config.
  {
    std::optional<std::string> flag_path;
    for (int i = 1; i < argc; ++i) {
      const std::string a = argv[i];
      if (a == "--config" && i + 1 < argc) flag_path = argv[i + 1];
      if (a.rfind("--config=", 0) == 0) flag_path = a.substr(9);
    }
    if (const auto path = resolve_config_path(flag_path)) {
      apply_config(load_config_file(*path), o);
    }
  }

  // --- synth-data ---------------------------------------------------------
  auto* synth = app.add_subcommand("synth-data", "Generate a MovieLens-100K-shaped dataset");
  std::string synth_out;
  SyntheticConfig synth_cfg;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_cfg.seed, "Generator seed");
  synth->add_option("--users", synth_cfg.num_users, "User count");
  synth->add_option("--items", synth_cfg.num_items, "Item count");
  synth->add_option("--ratings", synth_cfg.num_ratings, "Interaction count");
  synth->add_option("--gender-signal", synth_cfg.gender_signal, "Gender taste shift");
  synth->add_option("--age-signal", synth_cfg.age_signal, "Age taste shift");
  synth->add_option("--occupation-signal", synth_cfg.occupation_signal,
                    "Occupation taste shift");
  synth->add_option("--popularity-skew", synth_cfg.popularity_skew, "Zipf exponent");
  synth->add_option("--selection-strength", synth_cfg.selection_strength,
                    "Taste weight in item choice");
  synth->add_option("--gendered-fraction", synth_cfg.gendered_fraction,
                    "Share of items with a gender leaning");
  synth->add_option("--gender-boost", synth_cfg.gender_boost,
                    "Selection boost on leaning items");
  synth->add_option("--taste-noise", synth_cfg.taste_noise,
                    "Idiosyncratic taste stddev");

  // --- ingest -------------------------------------------------------------
  auto* ingest = app.add_subcommand("ingest", "Parse raw files, split, engineer features");
  std::string ingest_out;
  ingest->add_option("--data", o.data_dir, "Directory with u.data and u.user")->required();
  ingest->add_option("--out", ingest_out, "Output directory")->required();
  ingest->add_option("--split-ratio", o.split_ratio, "Per-user train fraction");
  ingest->add_option("--seed", o.train.seed, "Split seed source");

  // --- perturb-features ---------------------------------------------------
  auto* perturb = app.add_subcommand("perturb-features", "Apply input-stage perturbation");
  std::string pf_features, pf_schema, pf_out;
  perturb->add_option("--features", pf_features, "Input feature matrix (TSV)")->required();
  perturb->add_option("--schema", pf_schema, "Feature schema (JSON)")->required();
  perturb->add_option("--out", pf_out, "Output matrix path")->required();
  perturb->add_option("--epsilon-local", o.train.epsilon_local, "Local budget");
  perturb->add_option("--seed", o.train.seed, "Perturbation seed");

  // --- train --------------------------------------------------------------
  auto* train = app.add_subcommand("train", "Train a recommender variant");
  std::string train_variant = "gerai", train_out = "model.json";
  std::optional<std::string> train_features, train_schema;
  train->add_option("--data", o.data_dir, "Directory with u.data and u.user")->required();
  train->add_option("--variant", train_variant, "gcn | gerai | gerai-nl | gerai-nf");
  train->add_option("--out", train_out, "Checkpoint path");
  train->add_option("--features", train_features,
                    "Pre-perturbed feature matrix (disables internal perturbation)");
  train->add_option("--schema", train_schema, "Schema for --features");
  train->add_option("--split-ratio", o.split_ratio, "Per-user train fraction");
  train->add_flag("--verbose", o.verbose, "Per-epoch loss on stderr");
  add_train_flags(train, o);

  // --- recommend ----------------------------------------------------------
  auto* rec = app.add_subcommand("recommend", "Write top-K lists from a checkpoint");
  std::string rec_model, rec_out = "recs.tsv";
  int rec_k = 10;
  std::optional<std::string> rec_features, rec_schema;
  int rec_cap = 200;
  rec->add_option("--model", rec_model, "Checkpoint path")->required();
  rec->add_option("--data", o.data_dir, "Directory with u.data and u.user")->required();
  rec->add_option("--k", rec_k, "List length");
  rec->add_option("--out", rec_out, "Recommendations path");
  rec->add_option("--features", rec_features, "Feature matrix override");
  rec->add_option("--schema", rec_schema, "Schema for --features");
  rec->add_option("--split-ratio", o.split_ratio, "Must match the training split");
  rec->add_option("--neighbor-cap", rec_cap, "Inference neighbor cap");

  // --- attack -------------------------------------------------------------
  auto* attack = app.add_subcommand("attack", "Attribute inference from recommendations");
  std::string atk_recs, atk_out;
  std::vector<std::string> atk_attrs = {"gender"};
  std::vector<std::string> atk_kinds = {"nn"};
  int atk_k = 0;
  attack->add_option("--data", o.data_dir, "Directory with u.data and u.user")->required();
  attack->add_option("--recs", atk_recs, "Recommendations file")->required();
  attack->add_option("--attribute", atk_attrs, "age | gender | occupation | all")
      ->delimiter(',');
  attack->add_option("--attacker", atk_kinds, "nn | knn | nb | logreg | all")
      ->delimiter(',');
  attack->add_option("--k", atk_k, "Truncate lists to K (0 = as stored)");
  attack->add_option("--seed", o.train.seed, "Attack split/init seed");
  attack->add_option("--f1-average", o.f1_average, "weighted | macro | micro");
  attack->add_option("--attack-split", o.attack_split, "Attacker train fraction");
  attack->add_option("--out", atk_out, "Write JSON rows here (default stdout)");

  // --- evaluate -----------------------------------------------------------
  auto* eval = app.add_subcommand("evaluate", "Ranking metrics for a recommendations file");
  std::string eval_recs, eval_out;
  std::vector<int> eval_ks = {5, 10, 15, 20, 25, 30};
  eval->add_option("--data", o.data_dir, "Directory with u.data and u.user")->required();
  eval->add_option("--recs", eval_recs, "Recommendations file")->required();
  eval->add_option("--seed", o.train.seed, "Seed used at training time");
  eval->add_option("--split-ratio", o.split_ratio, "Must match the training split");
  eval->add_option("--k-list", eval_ks, "K values")->delimiter(',');
  eval->add_option("--hit-mode", o.hit_mode, "user | pair");
  eval->add_option("--out", eval_out, "Write JSON here (default stdout)");

  // --- sweep --------------------------------------------------------------
  auto* sweep = app.add_subcommand("sweep", "Run variants across seeds and a sweep axis");
  std::string sweep_axis = "none", sweep_dir = "results";
  std::vector<double> sweep_values;
  std::vector<std::string> sweep_variants = {"gcn", "gerai"};
  std::vector<uint64_t> sweep_seeds = {1, 2, 3, 4, 5};
  std::vector<int> sweep_ks = {5, 10, 15, 20, 25, 30};
  std::vector<std::string> sweep_attrs = {"gender"};
  std::vector<std::string> sweep_kinds = {"nn"};
  int sweep_cap = 200;
  sweep->add_option("--data", o.data_dir, "Directory with u.data and u.user")->required();
  sweep->add_option("--axis", sweep_axis, "none | epsilon | epsilon-local | dim");
  sweep->add_option("--values", sweep_values, "Axis values")->delimiter(',');
  sweep->add_option("--variants", sweep_variants, "Variants to run")->delimiter(',');
  sweep->add_option("--seeds", sweep_seeds, "Seeds to average over")->delimiter(',');
  sweep->add_option("--k-list", sweep_ks, "K values")->delimiter(',');
  sweep->add_option("--attributes", sweep_attrs, "Attack attributes")->delimiter(',');
  sweep->add_option("--attackers", sweep_kinds, "Attacker kinds")->delimiter(',');
  sweep->add_option("--out-dir", sweep_dir, "Report directory");
  sweep->add_option("--hit-mode", o.hit_mode, "user | pair");
  sweep->add_option("--f1-average", o.f1_average, "weighted | macro | micro");
  sweep->add_option("--attack-split", o.attack_split, "Attacker train fraction");
  sweep->add_option("--inference-cap", sweep_cap, "Inference neighbor cap");
  sweep->add_flag("--verbose", o.verbose, "Per-epoch loss on stderr");
  add_train_flags(sweep, o);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      write_dataset(synth_cfg, synth_out);
      std::cout << "wrote " << (fs::path(synth_out) / "u.data").string() << " and u.user\n";
    }

    if (*ingest) {
      const Dataset ds = load_dataset(o.data_dir);
      const PreparedData prep = prepare_data(ds, o.split_ratio, o.train.seed);
      const fs::path out(ingest_out);
      fs::create_directories(out);
      write_text_file(out / "schema.json", schema_to_json(prep.schema));
      save_feature_matrix(prep.features, out / "features.tsv");
      std::ostringstream users;
      for (int u = 0; u < ds.graph.num_users; ++u) {
        users << ds.raw.users.to_original[u] << '\n';
      }
      write_text_file(out / "row_users.tsv", users.str());
      const auto dump_edges = [&](const fs::path& p, bool train_side) {
        std::ostringstream s;
        for (int u = 0; u < ds.graph.num_users; ++u) {
          const auto& items =
              train_side ? prep.split.train.user_items[u] : prep.split.test_items[u];
          for (const int v : items) {
            s << ds.raw.users.to_original[u] << '\t' << ds.raw.items.to_original[v] << '\n';
          }
        }
        write_text_file(p, s.str());
      };
      dump_edges(out / "train_edges.tsv", true);
      dump_edges(out / "test_edges.tsv", false);
      std::cout << "wrote schema, features and split under " << out.string() << "\n";
    }

    if (*perturb) {
      FeatureMatrix m = load_feature_matrix(pf_features);
      const FeatureSchema schema = schema_from_json(read_text_file(pf_schema));
      const FeatureMatrix noisy =
          perturb_feature_matrix(m, schema, o.train.epsilon_local, Rng(o.train.seed).fork(2));
      save_feature_matrix(noisy, pf_out);
      std::cout << "wrote " << pf_out << "\n";
    }

    if (*train) {
      const Dataset ds = load_dataset(o.data_dir);
      TrainConfig cfg = finalize_train_config(o, train_variant);
      const PreparedData prep = prepare_data(ds, o.split_ratio, cfg.seed);
      if (train_features) cfg.use_feature_perturbation = false;
      const FeatureMatrix x =
          features_for_model(ds, prep, cfg, train_features, train_schema);
      const TrainResult<float> result = train_model<float>(prep.split.train, ds.graph, x, cfg);
      if (o.verbose) {
        for (const auto& e : result.epochs) {
          std::cerr << "epoch " << e.epoch << " loss " << e.mean_loss << "\n";
        }
      }
      save_checkpoint({cfg, result.params, result.noise}, train_out);
      std::cout << "wrote " << train_out << "\n";
    }

    if (*rec) {
      const Dataset ds = load_dataset(o.data_dir);
      const Checkpoint ckpt = load_checkpoint(rec_model);
      const PreparedData prep = prepare_data(ds, o.split_ratio, ckpt.config.seed);
      const FeatureMatrix x =
          features_for_model(ds, prep, ckpt.config, rec_features, rec_schema);
      InferenceConfig infer;
      infer.neighbor_cap = rec_cap;
      infer.seed = ckpt.config.seed;
      const auto lists =
          recommend_topk_all(ckpt.params, x, prep.split.train, rec_k, infer);
      write_recs_file(rec_out, lists, ds.raw.users, ds.raw.items);
      std::cout << "wrote " << rec_out << "\n";
    }

    if (*attack) {
      const Dataset ds = load_dataset(o.data_dir);
      std::vector<RankedList> lists = read_recs_file(atk_recs, ds);
      if (atk_k > 0) lists = truncate_lists(lists, atk_k);
      int k_used = atk_k;
      if (k_used == 0) {
        for (const auto& l : lists) k_used = std::max(k_used, static_cast<int>(l.items.size()));
      }
      const uint64_t attack_seed = Rng(o.train.seed).fork(4).seed();
      nlohmann::ordered_json rows = nlohmann::ordered_json::array();
      for (const Attribute attr : parse_attributes(atk_attrs)) {
        const AttackDataset data =
            build_attack_dataset(ds.graph, lists, ds.profiles, attr);
        for (const AttackerKind kind : parse_attackers(atk_kinds)) {
          const double f1 = run_attack(data, kind, o.attack_split, attack_seed,
                                       f1_average_from_name(o.f1_average));
          rows.push_back({{"attribute", attribute_name(attr)},
                          {"attacker", attacker_name(kind)},
                          {"k", k_used},
                          {"f1", f1}});
        }
      }
      const std::string text = rows.dump(2) + "\n";
      if (atk_out.empty()) {
        std::cout << text;
      } else {
        write_text_file(atk_out, text);
        std::cout << "wrote " << atk_out << "\n";
      }
    }

    if (*eval) {
      const Dataset ds = load_dataset(o.data_dir);
      const PreparedData prep = prepare_data(ds, o.split_ratio, o.train.seed);
      const std::vector<RankedList> lists = read_recs_file(eval_recs, ds);
      const HitMode mode = hit_mode_from_name(o.hit_mode);
      nlohmann::ordered_json out;
      std::sort(eval_ks.begin(), eval_ks.end());
      for (const int k : eval_ks) {
        const auto at_k = truncate_lists(lists, k);
        out[std::to_string(k)] = {
            {"hit", hit_at_k(at_k, prep.split.test_items, k, mode)},
            {"ndcg", ndcg_at_k(at_k, prep.split.test_items, k)}};
      }
      const std::string text = out.dump(2) + "\n";
      if (eval_out.empty()) {
        std::cout << text;
      } else {
        write_text_file(eval_out, text);
        std::cout << "wrote " << eval_out << "\n";
      }
    }

    if (*sweep) {
      const Dataset ds = load_dataset(o.data_dir);
      PipelineOptions base;
      base.train = finalize_train_config(o, "gerai");
      base.split_ratio = o.split_ratio;
      base.attack_split = o.attack_split;
      base.k_list = sweep_ks;
      base.attributes = parse_attributes(sweep_attrs);
      base.attackers = parse_attackers(sweep_kinds);
      base.f1_average = f1_average_from_name(o.f1_average);
      base.hit_mode = hit_mode_from_name(o.hit_mode);
      base.infer.neighbor_cap = sweep_cap;
      base.verbose = o.verbose;
      const auto reports =
          run_sweep(ds, base, sweep_axis, sweep_values, sweep_variants, sweep_seeds);
      const fs::path dir(sweep_dir);
      fs::create_directories(dir);
      for (const auto& r : reports) {
        std::ostringstream name;
        name << "report_" << r.variant;
        if (r.sweep_axis != "none") name << "_" << r.sweep_axis << r.axis_value;
        name << "_seed" << r.seed << ".json";
        write_text_file(dir / name.str(), report_to_json(r));
      }
      write_text_file(dir / "runs.csv", reports_to_csv(reports));
      write_text_file(dir / "aggregate.csv", aggregate_csv(reports));
      std::cout << "wrote " << reports.size() << " reports under " << dir.string() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
