// mvc — multi-view contrastive representation learning toolkit.
//
// Subcommands: gen-data, crossval, ablate, knn-probe.
// Exit codes: 0 success, 1 runtime/data error, 2 usage error.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mvc/report.hpp"
#include "mvc/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::tm tm_utc;
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

/// run_id is a pure function of config, data and toolkit version, so
/// reruns of the same experiment share it; timestamps live only in the
/// manifest.
std::string make_run_id(const json& config_echo, std::uint64_t dataset_fp) {
  return hex64(fnv1a(config_echo.dump() + hex64(dataset_fp) + kVersion));
}

void write_run_manifest(const fs::path& dir, const std::string& command,
                        const json& config_echo, std::uint64_t dataset_fp,
                        const std::vector<std::string>& inputs,
                        const std::vector<std::string>& outputs) {
  json manifest = {
      {"run_id", make_run_id(config_echo, dataset_fp)},
      {"command", command},
      {"config", config_echo},
      {"dataset_fingerprint", hex64(dataset_fp)},
      {"toolkit_version", kVersion},
      {"created_utc", utc_now()},
      {"inputs", inputs},
      {"outputs", outputs},
  };
  write_text(dir / "run_manifest.json", manifest.dump(2) + "\n");
}

fs::path resolve_manifest(const fs::path& data) {
  if (fs::is_directory(data)) return data / "manifest.csv";
  return data;
}

std::vector<std::size_t> parse_size_list(const std::string& csv,
                                         const std::string& what) {
  std::vector<std::size_t> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    const long long v = std::stoll(item, &pos);
    if (pos != item.size() || v < 0)
      throw std::runtime_error("invalid " + what + " entry: " + item);
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw std::runtime_error(what + " list is empty");
  return out;
}

std::pair<std::size_t, std::size_t> parse_view_range(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) {
    const auto v = parse_size_list(s, "views").front();
    return {v, v};
  }
  const auto lo = parse_size_list(s.substr(0, colon), "views").front();
  const auto hi = parse_size_list(s.substr(colon + 1), "views").front();
  return {lo, hi};
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

/// Flat `key = value` config files. Entries become --key=value tokens
/// injected ahead of the explicit flags, which therefore override them.
std::vector<std::string> config_file_tokens(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line is not key = value: " + line);
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && ((value.front() == '"' && value.back() == '"') ||
                              (value.front() == '\'' && value.back() == '\'')))
      value = value.substr(1, value.size() - 2);
    if (key.empty()) throw std::runtime_error("config line has no key: " + line);
    tokens.push_back("--" + key + "=" + value);
  }
  return tokens;
}

/// Pulls --config out of the raw arguments and splices the file's tokens
/// in right after the subcommand name.
std::vector<std::string> merge_config_args(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size())
        throw CLI::ParseError("--config requires a file path",
                              CLI::ExitCodes::BaseClass);
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      kept.push_back(args[i]);
    }
  }
  if (config_path.empty()) return kept;
  const auto tokens = config_file_tokens(config_path);
  std::vector<std::string> merged;
  std::size_t insert_at = kept.empty() ? 0 : 1;  // after the subcommand name
  merged.insert(merged.end(), kept.begin(), kept.begin() + insert_at);
  merged.insert(merged.end(), tokens.begin(), tokens.end());
  merged.insert(merged.end(), kept.begin() + insert_at, kept.end());
  return merged;
}

/// Flags and config files win over MVC_SEED; MVC_SEED wins over defaults.
void apply_env_seed(const CLI::Option* seed_opt, std::uint64_t& seed) {
  if (seed_opt->count() > 0) return;
  if (const char* env = std::getenv("MVC_SEED")) {
    try {
      seed = std::stoull(env);
    } catch (const std::exception&) {
      throw std::runtime_error("MVC_SEED is not an integer: " +
                               std::string(env));
    }
  }
}

std::vector<std::size_t> default_k_grid(std::size_t max_k) {
  std::vector<std::size_t> ks;
  for (int i = 0; i <= 11; ++i) {
    const double k = std::pow(200.0, static_cast<double>(i) / 11.0);
    const auto rounded = static_cast<std::size_t>(std::llround(k));
    if (rounded > max_k) break;
    if (ks.empty() || ks.back() != rounded) ks.push_back(rounded);
  }
  return ks;
}

struct TrainFlags {
  mvc::TrainConfig config;
  std::string variant = "lr";
  std::string hidden = "64,32";
  std::string data;
  std::string out = "runs/out";
  std::string config_file;
  std::size_t folds = 5;
  CLI::Option* seed_opt = nullptr;

  void attach(CLI::App* cmd) {
    cmd->add_option("--data", data, "Dataset directory or manifest.csv")
        ->required();
    cmd->add_option("--out", out, "Output directory");
    cmd->add_option("--variant", variant, "baseline|lr|ir|lr-sc|lr-dc|lr-none")
        ->check(CLI::IsMember(
            {"baseline", "lr", "ir", "lr-sc", "lr-dc", "lr-none"},
            CLI::ignore_case));
    cmd->add_option("--alpha", config.alpha, "Contrastive loss weight");
    cmd->add_option("--temperature", config.temperature,
                    "Contrastive softmax temperature");
    cmd->add_option("--epochs", config.epochs, "Training epochs");
    cmd->add_option("--base-lr,--base_lr", config.base_lr,
                    "Initial Adam learning rate");
    cmd->add_option("--groups-per-batch,--groups_per_batch",
                    config.batch.groups_per_batch, "Lesions per mini-batch");
    cmd->add_option("--views-per-group,--views_per_group",
                    config.batch.views_per_group, "Views per lesion");
    cmd->add_option("--augment-noise,--augment_noise_sigma",
                    config.augment.noise_sigma, "Augmentation noise sigma");
    cmd->add_option("--augment-dropout,--augment_dropout_prob",
                    config.augment.dropout_prob,
                    "Augmentation coordinate dropout probability");
    seed_opt = cmd->add_option("--seed", config.seed, "Master seed");
    cmd->add_flag("--single-view{false},--dual-view{true}", config.dual_view,
                  "Anchor/candidate view convention (default dual)");
    cmd->add_flag("--normalize-positives,--normalize_positives",
                  config.normalize_positives,
                  "Average instead of sum over positives");
    cmd->add_option("--hidden,--hidden_dims", hidden,
                    "Comma-separated hidden layer widths");
    cmd->add_option("--embed-dim,--embed_dim", config.embed_dim,
                    "Embedding dimension");
    cmd->add_option("--threshold", config.threshold,
                    "Classification threshold");
    cmd->add_option("--knn-k,--knn_k", config.knn.k, "KNN probe k");
    cmd->add_option("--knn-temperature,--knn_temperature",
                    config.knn.knn_temperature, "KNN weight temperature");
    cmd->add_option("--folds,--fold_count", folds, "Cross-validation folds");
    cmd->add_option("--config", config_file,
                    "Config file (key = value); flags override it");
  }

  mvc::TrainConfig resolve() {
    apply_env_seed(seed_opt, config.seed);
    config.hidden_dims = parse_size_list(hidden, "hidden");
    std::string v;
    for (char c : variant) v += static_cast<char>(std::tolower(c));
    if (v == "baseline") {
      config.contrastive_enabled = false;
      config.alpha = 0.0;
    } else {
      config.contrastive_enabled = true;
      config.variant = mvc::parse_variant(v);
    }
    return config;
  }
};

int cmd_gen_data(const std::string& out, mvc::SynthConfig synth,
                 std::size_t lesions_per_class, bool benign_set,
                 bool malignant_set, const std::string& views) {
  if (!benign_set) synth.benign_lesions = lesions_per_class;
  if (!malignant_set) synth.malignant_lesions = lesions_per_class;
  const auto [lo, hi] = parse_view_range(views);
  synth.min_views = lo;
  synth.max_views = hi;

  const auto records = mvc::generate_synthetic(synth);
  const fs::path dir(out);
  const auto manifest = mvc::save_dataset(records, dir);
  const std::uint64_t fp = mvc::dataset_fingerprint(records);

  const json config_echo = {
      {"latent_dim", synth.latent_dim},
      {"view_dim", synth.view_dim},
      {"class_separation", synth.class_separation},
      {"view_noise_sigma", synth.view_noise_sigma},
      {"benign_lesions", synth.benign_lesions},
      {"malignant_lesions", synth.malignant_lesions},
      {"min_views", synth.min_views},
      {"max_views", synth.max_views},
      {"seed", synth.seed},
  };
  write_run_manifest(dir, "gen-data", config_echo, fp, {},
                     {"manifest.csv"});
  std::cout << "wrote " << manifest.string() << ": " << records.size()
            << " lesions, " << mvc::total_view_count(records)
            << " views, fingerprint " << hex64(fp) << "\n";
  return 0;
}

int cmd_crossval(TrainFlags& flags) {
  const mvc::TrainConfig config = flags.resolve();
  const auto records = mvc::load_manifest(resolve_manifest(flags.data));
  const std::uint64_t fp = mvc::dataset_fingerprint(records);
  const fs::path dir(flags.out);
  fs::create_directories(dir);

  std::vector<std::string> outputs = {"result.json", "table.txt"};
  const mvc::RunResult result = mvc::cross_validate(
      records, config, flags.folds,
      [&](std::size_t fold, const mvc::EncoderParams& params) {
        const std::string name = "fold_" + std::to_string(fold) + ".encoder";
        mvc::save_encoder(params, dir / name);
        outputs.push_back(name);
      });

  const json config_echo = mvc::to_json(config);
  const std::string run_id = make_run_id(config_echo, fp);
  json result_file = {{"run_id", run_id}, {"result", mvc::to_json(result)}};
  write_text(dir / "result.json", result_file.dump(2) + "\n");
  const std::string table = mvc::render_comparison_table({result});
  write_text(dir / "table.txt", table + "run_id: " + run_id + "\n");
  write_run_manifest(dir, "crossval", config_echo, fp, {flags.data}, outputs);
  std::cout << table << "reports in " << dir.string() << "\n";
  return 0;
}

int cmd_ablate(TrainFlags& flags, const std::string& axis) {
  const mvc::TrainConfig config = flags.resolve();
  const auto records = mvc::load_manifest(resolve_manifest(flags.data));
  const std::uint64_t fp = mvc::dataset_fingerprint(records);
  const fs::path dir(flags.out);
  fs::create_directories(dir);

  mvc::AblationAxis ax;
  if (axis == "alpha")
    ax = mvc::AblationAxis::Alpha;
  else if (axis == "negatives")
    ax = mvc::AblationAxis::Negatives;
  else
    ax = mvc::AblationAxis::Methods;

  const auto rows = mvc::run_ablation(records, config, ax, flags.folds);
  const json config_echo = mvc::to_json(config);
  const std::string run_id = make_run_id(config_echo, fp);
  json rows_json = json::array();
  for (const auto& row : rows) rows_json.push_back(mvc::to_json(row));
  json result_file = {
      {"run_id", run_id}, {"axis", axis}, {"rows", rows_json}};
  write_text(dir / "ablation.json", result_file.dump(2) + "\n");
  const std::string table = mvc::render_comparison_table(rows);
  write_text(dir / "table.txt", table + "run_id: " + run_id + "\n");
  write_run_manifest(dir, "ablate", config_echo, fp, {flags.data},
                     {"ablation.json", "table.txt"});
  std::cout << table << "reports in " << dir.string() << "\n";
  return 0;
}

int cmd_knn_probe(const std::string& model, const std::string& data,
                  const std::string& query_data, const std::string& ks_csv,
                  double knn_temperature, const std::string& out) {
  const mvc::EncoderParams params = mvc::load_encoder(model);
  const auto reference = mvc::load_manifest(resolve_manifest(data));
  const auto queries =
      query_data.empty() ? reference
                         : mvc::load_manifest(resolve_manifest(query_data));

  const mvc::FlatViews ref_flat = mvc::flatten_views(reference);
  const mvc::FlatViews query_flat = mvc::flatten_views(queries);
  const mvc::Matrix ref_emb =
      mvc::l2_normalize_rows(mvc::mlp_forward(params, ref_flat.X).first);
  const mvc::Matrix query_emb =
      mvc::l2_normalize_rows(mvc::mlp_forward(params, query_flat.X).first);

  std::vector<std::size_t> ks;
  if (ks_csv.empty()) {
    ks = default_k_grid(ref_emb.rows);
  } else {
    ks = parse_size_list(ks_csv, "k");
    for (std::size_t k : ks)
      if (k < 1 || k > ref_emb.rows)
        throw std::runtime_error("k out of range for reference set: " +
                                 std::to_string(k));
  }
  const auto series = mvc::knn_auc_sweep(ref_emb, ref_flat.labels, query_emb,
                                         query_flat.labels, ks,
                                         knn_temperature);
  const fs::path out_path(out);
  if (out_path.has_parent_path())
    fs::create_directories(out_path.parent_path());
  write_text(out_path, mvc::render_knn_csv(series));

  const json config_echo = {{"model", model},
                            {"ks", ks},
                            {"knn_temperature", knn_temperature},
                            {"self_query", query_data.empty()}};
  const fs::path manifest_dir =
      out_path.has_parent_path() ? out_path.parent_path() : fs::path(".");
  std::vector<std::string> inputs = {model, data};
  if (!query_data.empty()) inputs.push_back(query_data);
  write_run_manifest(manifest_dir, "knn-probe", config_echo,
                     mvc::dataset_fingerprint(reference), inputs,
                     {out_path.filename().string()});
  std::cout << "wrote " << out_path.string() << " (" << series.size()
            << " rows)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-view contrastive representation learning toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  // Config-file tokens are injected ahead of explicit flags; last one wins.
  app.option_defaults()->take_last();

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  mvc::SynthConfig synth;
  std::string gen_out;
  std::string gen_views = "2:6";
  std::size_t lesions_per_class = 100;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--lesions-per-class,--lesions_per_class", lesions_per_class,
                  "Lesions per class");
  auto* benign_opt =
      gen->add_option("--benign,--benign_lesions", synth.benign_lesions,
                      "Benign lesion count (overrides --lesions-per-class)");
  auto* malignant_opt = gen->add_option(
      "--malignant,--malignant_lesions", synth.malignant_lesions,
      "Malignant lesion count (overrides --lesions-per-class)");
  gen->add_option("--views,--views_per_lesion", gen_views,
                  "View count range min:max");
  gen->add_option("--latent-dim,--latent_dim", synth.latent_dim,
                  "Latent dimension");
  gen->add_option("--view-dim,--view_dim", synth.view_dim, "View dimension");
  gen->add_option("--separation,--class_separation", synth.class_separation,
                  "Distance between class mean latents");
  gen->add_option("--noise,--view_noise_sigma", synth.view_noise_sigma,
                  "Per-view noise sigma");
  auto* gen_seed = gen->add_option("--seed", synth.seed, "Generator seed");
  std::string gen_config_file;
  gen->add_option("--config", gen_config_file,
                  "Config file (key = value); flags override it");

  auto* cv = app.add_subcommand("crossval", "Run k-fold cross-validation");
  TrainFlags cv_flags;
  cv_flags.attach(cv);

  auto* ab = app.add_subcommand("ablate", "Sweep an ablation axis");
  TrainFlags ab_flags;
  std::string axis;
  ab->add_option("--axis", axis, "alpha|negatives|methods")
      ->required()
      ->check(CLI::IsMember({"alpha", "negatives", "methods"}));
  ab_flags.attach(ab);

  auto* knn = app.add_subcommand("knn-probe",
                                 "Weighted-KNN probe over frozen embeddings");
  std::string knn_model, knn_data, knn_query, knn_ks, knn_out = "knn_auc.csv";
  double knn_temperature = 0.07;
  knn->add_option("--model", knn_model, "Trained encoder file")->required();
  knn->add_option("--data", knn_data, "Reference dataset")->required();
  knn->add_option("--query-data,--query_data", knn_query,
                  "Query dataset (default: reference set itself)");
  knn->add_option("--ks", knn_ks,
                  "Comma-separated k grid (default 1..200 log-spaced)");
  knn->add_option("--knn-temperature,--knn_temperature", knn_temperature,
                  "KNN weight temperature");
  knn->add_option("--out", knn_out, "Output CSV path");

  try {
    std::vector<std::string> args = merge_config_args(argc, argv);
    std::reverse(args.begin(), args.end());  // CLI11 expects reversed args
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (gen->parsed()) {
      apply_env_seed(gen_seed, synth.seed);
      return cmd_gen_data(gen_out, synth, lesions_per_class,
                          benign_opt->count() > 0, malignant_opt->count() > 0,
                          gen_views);
    }
    if (cv->parsed()) return cmd_crossval(cv_flags);
    if (ab->parsed()) return cmd_ablate(ab_flags, axis);
    if (knn->parsed())
      return cmd_knn_probe(knn_model, knn_data, knn_query, knn_ks,
                           knn_temperature, knn_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
