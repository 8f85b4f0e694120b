// Command-line front end: train, adapt, sweep, synth, report.
#include <CLI11.hpp>
#include <selfadapt.hpp>
#include <selfadapt/io.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace selfadapt;
using json = nlohmann::json;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitConfig = 3;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string label_col = "label";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON file with pipeline settings");
  cmd->add_option("--seed", c.seed, "Base seed (overrides the config)");
  cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
  cmd->add_option("--label-col", c.label_col, "Name of the label column")->capture_default_str();
}

PipelineConfig load(const Common& c) {
  PipelineConfig cfg = c.config_path.empty() ? PipelineConfig{} : load_config(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  validate(cfg);
  return cfg;
}

fs::path out_dir(const Common& c) {
  fs::path dir(c.out);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::MissingFile, "cannot write " + path.string());
  out << text;
  std::cout << "wrote " << path.string() << '\n';
}

std::size_t feature_index(const Dataset& d, const std::string& name) {
  for (std::size_t i = 0; i < d.feature_names.size(); ++i) {
    if (d.feature_names[i] == name) return i;
  }
  std::size_t idx = 0;
  const auto [p, ec] = std::from_chars(name.data(), name.data() + name.size(), idx);
  if (ec == std::errc{} && p == name.data() + name.size() && idx < d.feature_count()) return idx;
  throw Error(ErrorKind::InvalidArgument, "unknown feature '" + name + "'");
}

int run_train(const Common& c, const std::string& data_path, const std::string& feature, std::size_t min_leaf) {
  const PipelineConfig cfg = load(c);
  const auto [d, norm] = normalize_unit_interval(load_csv(data_path, c.label_col));
  const std::size_t cols[] = {feature_index(d, feature)};
  const Dataset one = d.project(cols);
  const std::size_t B = min_leaf ? min_leaf : select_min_leaf(one, cfg.min_leaf_grid, cfg.min_leaf_selection);
  const DecisionTree t = train(one, B);
  json j = tree_to_json(t);
  j["feature"] = one.feature_names.front();
  j["training_accuracy"] = t.accuracy(one);
  write_text(out_dir(c) / "tree.json", j.dump(2) + "\n");
  return 0;
}

int run_adapt(const Common& c, const std::string& data_path, const std::string& base, const std::string& added) {
  const PipelineConfig cfg = load(c);
  const auto [d, norm] = normalize_unit_interval(load_csv(data_path, c.label_col));
  const std::size_t cols[] = {feature_index(d, base), feature_index(d, added)};
  const SplitTriple split = shuffle_split(d.project(cols), cfg.seed);
  const PipelineOutcome out = run_pipeline(split, cfg);
  const fs::path dir = out_dir(c);
  write_text(dir / "record.json", record_to_json(out.record).dump(2) + "\n");
  write_text(dir / "tree_1d.json", tree_to_json(out.tree_1d).dump(2) + "\n");
  write_text(dir / "tree_final.json", tree_to_json(out.final_tree).dump(2) + "\n");
  if (out.solution) write_text(dir / "solution.json", solution_to_json(*out.solution).dump(2) + "\n");
  std::cout << "acc_1d=" << out.record.acc_1d << " acc_adapted=" << out.record.acc_adapted
            << " change=" << out.record.accuracy_change << (out.record.fallback ? " (fallback)" : "") << '\n';
  return 0;
}

void write_report(const fs::path& dir, std::span<const PairResult> results, double bin_width) {
  const Report rep = report(results, bin_width);
  write_text(dir / "summary.json", report_to_json(rep).dump(2) + "\n");
  write_text(dir / "histogram.csv", histogram_csv(rep));
}

int run_sweep(const Common& c, const std::string& data_path, std::size_t shuffles, std::size_t threads, double bin_width) {
  const PipelineConfig cfg = load(c);
  const Dataset d = load_csv(data_path, c.label_col);
  const auto results = sweep(d, cfg, shuffles, threads);
  const fs::path dir = out_dir(c);
  write_text(dir / "results.jsonl", results_to_jsonl(results));
  write_report(dir, results, bin_width);
  return 0;
}

int run_synth(const Common& c, const std::string& scenario, std::size_t samples) {
  const SyntheticData syn = generate_synthetic(scenario_by_name(scenario, samples, c.seed.value_or(7)));
  Dataset d = syn.data;
  d.feature_names = {"base", "new"};
  const fs::path path = out_dir(c) / ("scenario_" + scenario + ".csv");
  write_csv(d, path.string(), c.label_col);
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

int run_report(const Common& c, const std::string& results_path, double bin_width) {
  std::ifstream in(results_path);
  if (!in) throw Error(ErrorKind::MissingFile, results_path);
  const auto results = results_from_jsonl(in);
  write_report(out_dir(c), results, bin_width);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extend a trained tree classifier with a new feature without new labels"};
  app.require_subcommand(1);

  Common c;
  std::string data, feature = "0", base = "0", added = "1", scenario = "A", results_path;
  std::size_t min_leaf = 0, shuffles = 5, threads = 0, samples = 600;
  double bin_width = 0.01;

  auto* train_cmd = app.add_subcommand("train", "Train the base tree on one feature");
  add_common(train_cmd, c);
  train_cmd->add_option("--data", data, "Input CSV")->required();
  train_cmd->add_option("--feature", feature, "Feature name or index")->capture_default_str();
  train_cmd->add_option("--min-leaf", min_leaf, "Minimum leaf size (0 = select from the config grid)");

  auto* adapt_cmd = app.add_subcommand("adapt", "Adapt the base tree to one added feature");
  add_common(adapt_cmd, c);
  adapt_cmd->add_option("--data", data, "Input CSV")->required();
  adapt_cmd->add_option("--base", base, "Base feature name or index")->capture_default_str();
  adapt_cmd->add_option("--new", added, "Added feature name or index")->capture_default_str();

  auto* sweep_cmd = app.add_subcommand("sweep", "Run every ordered feature pair over several shuffles");
  add_common(sweep_cmd, c);
  sweep_cmd->add_option("--data", data, "Input CSV")->required();
  sweep_cmd->add_option("--shuffles", shuffles, "Shuffles per pair")->capture_default_str();
  sweep_cmd->add_option("--threads", threads, "Worker threads (0 = hardware)");
  sweep_cmd->add_option("--bin-width", bin_width, "Histogram bin width")->capture_default_str();

  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic scenario as CSV");
  add_common(synth_cmd, c);
  synth_cmd->add_option("--scenario", scenario, "A or B")->capture_default_str();
  synth_cmd->add_option("--samples", samples, "Number of samples")->capture_default_str();

  auto* report_cmd = app.add_subcommand("report", "Summarize a results.jsonl file");
  add_common(report_cmd, c);
  report_cmd->add_option("--results", results_path, "results.jsonl from a sweep")->required();
  report_cmd->add_option("--bin-width", bin_width, "Histogram bin width")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*train_cmd) return run_train(c, data, feature, min_leaf);
    if (*adapt_cmd) return run_adapt(c, data, base, added);
    if (*sweep_cmd) return run_sweep(c, data, shuffles, threads, bin_width);
    if (*synth_cmd) return run_synth(c, scenario, samples);
    if (*report_cmd) return run_report(c, results_path, bin_width);
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return e.kind() == ErrorKind::Config ? kExitConfig : kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return 0;
}
