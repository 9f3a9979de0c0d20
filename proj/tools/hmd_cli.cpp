// Command-line front end: ingestion, graph statistics, synthesis, model
// evaluation, diffusion, embeddings and ego-network export.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hmd/hmd.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::uint64_t seed = 42;
  std::size_t threads = 0;
  std::string output_dir = "out";
};

void add_common(CLI::App* cmd, Common& c, bool needs_output = true) {
  cmd->add_option("--seed", c.seed, "Seed for every random choice")->capture_default_str();
  cmd->add_option("--threads", c.threads, "Worker cap (0 = all cores, 1 = reference path)")
      ->capture_default_str();
  auto* out = cmd->add_option("--output-dir", c.output_dir, "Directory for output files");
  if (needs_output) out->capture_default_str();
}

std::size_t threads_of(const Common& c) {
  return c.threads == 0 ? hmd::default_thread_count() : c.threads;
}

std::string prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw hmd::Error(hmd::ErrorKind::kIo, "cannot create '" + dir + "': " + ec.message());
  return dir;
}

void write_json(const std::string& path, const json& j) {
  hmd::csv::write_file(path, j.dump(2) + "\n");
}

void write_manifest(const std::string& dir, const std::string& subcommand, const Common& c,
                    json config, const std::vector<std::string>& outputs) {
  config["seed"] = c.seed;
  config["threads"] = c.threads;
  config["output_dir"] = c.output_dir;
  write_json(dir + "/manifest.json", {{"tool", "hmd"},
                                      {"version", hmd::kVersion},
                                      {"subcommand", subcommand},
                                      {"config", std::move(config)},
                                      {"outputs", outputs}});
}

void write_report(const std::string& dir, const hmd::EvalReport& report) {
  write_json(dir + "/report.json", report.to_json());
  hmd::csv::write_file(dir + "/report.csv", report.to_csv());
}

// ------------------------------------------------------------------ stats

struct StatsArgs {
  Common common;
  std::string edges;
};

int run_stats(const StatsArgs& a, bool write_files) {
  const auto edges = hmd::load_edges(a.edges);
  const auto g = hmd::build_graph(edges);
  std::size_t components = 0;
  hmd::weak_components(g, &components);
  const auto lcc = hmd::largest_weakly_connected_component(g);
  const auto s = hmd::compute_stats(lcc, threads_of(a.common));
  const auto gamma_fixed = hmd::powerlaw_mle(hmd::undirected_degrees(lcc), 2);

  auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  const json out = {
      {"input", {{"nodes", g.node_count()}, {"edges", g.edge_count()}, {"components", components}}},
      {"lcc",
       {{"nodes", s.node_count},
        {"edges", s.edge_count},
        {"clustering_coefficient", s.clustering_coefficient},
        {"powerlaw_gamma", finite_or_null(s.powerlaw_gamma)},
        {"powerlaw_d_min", s.powerlaw_d_min},
        {"powerlaw_gamma_dmin2", finite_or_null(gamma_fixed.gamma)}}}};

  std::printf("input: %zu nodes, %zu edges, %zu weak components\n", g.node_count(), g.edge_count(),
              components);
  std::printf("lcc nodes: %zu\nlcc edges: %zu\nclustering coefficient: %.6f\n", s.node_count,
              s.edge_count, s.clustering_coefficient);
  std::printf("powerlaw gamma: %.4f (d_min %u)\n", s.powerlaw_gamma, s.powerlaw_d_min);
  std::cout << out.dump(2) << "\n";

  if (write_files) {
    const auto dir = prepare_dir(a.common.output_dir);
    write_json(dir + "/stats.json", out);
    write_manifest(dir, "stats", a.common, {{"edges", a.edges}}, {"stats.json"});
  }
  return 0;
}

// ------------------------------------------------------------------ synth

struct SynthArgs {
  Common common;
  std::string config;
};

int run_synth(const SynthArgs& a, bool seed_given) {
  json raw = json::object();
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw hmd::Error(hmd::ErrorKind::kIo, "cannot open '" + a.config + "'");
    try {
      raw = json::parse(in);
    } catch (const json::parse_error& e) {
      throw hmd::Error(hmd::ErrorKind::kConfig, std::string("malformed config JSON: ") + e.what());
    }
  }
  if (seed_given) raw["seed"] = a.common.seed;
  const auto cfg = hmd::SynthConfig::from_json(raw);
  const auto dataset = hmd::generate_dataset(cfg);

  const auto dir = prepare_dir(a.common.output_dir);
  hmd::save_dataset(dir, dataset);
  Common echo = a.common;
  echo.seed = cfg.seed;
  write_manifest(dir, "synth", echo, {{"synth_config", cfg.to_json()}, {"config_path", a.config}},
                 {"edges.csv", "posts.jsonl", "labels.csv"});
  std::printf("wrote %zu users, %zu edges, %zu posts to %s\n", dataset.graph.node_count(),
              dataset.graph.edge_count(), dataset.post_count(), dir.c_str());
  return 0;
}

// --------------------------------------------------------------- evaluate

struct EvaluateArgs {
  Common common;
  std::string edges, posts, labels;
  std::string mode = "FULL";
  double tau_t = 0.5;
  double tau_u = 1.0;
  std::vector<int> grid = hmd::default_tau_u_grid();
  std::size_t bins = 10;
  std::size_t folds = 5;
  double l2 = 1.0;
  bool export_features = false;
};

int run_evaluate(const EvaluateArgs& a) {
  const auto mode = hmd::parse_feature_mode(a.mode);
  const auto dataset = hmd::load_dataset(a.edges, a.posts, a.labels);
  hmd::FeatureParams params{a.tau_t, a.tau_u, a.bins};
  hmd::CvOptions cv;
  cv.folds = a.folds;
  cv.seed = a.common.seed;
  cv.l2 = a.l2;
  cv.threads = threads_of(a.common);
  cv.tau_u_grid = a.grid;
  const auto report = hmd::evaluate_mode(dataset, mode, params, cv);

  const auto dir = prepare_dir(a.common.output_dir);
  write_report(dir, report);
  std::vector<std::string> outputs = {"report.json", "report.csv"};
  if (a.export_features) {
    const auto lcc = hmd::restrict_to_lcc(dataset);
    const hmd::FeatureContext ctx(lcc, params, cv.threads);
    hmd::csv::write_file(dir + "/features.csv", hmd::feature_table_csv(ctx, lcc.labeled_nodes()));
    outputs.push_back("features.csv");
  }
  write_manifest(dir, "evaluate", a.common,
                 {{"edges", a.edges},
                  {"posts", a.posts},
                  {"labels", a.labels},
                  {"mode", a.mode},
                  {"tau_t", a.tau_t},
                  {"tau_u", a.tau_u},
                  {"grid", a.grid},
                  {"bins", a.bins},
                  {"folds", a.folds},
                  {"l2", a.l2},
                  {"export_features", a.export_features}},
                 outputs);
  std::printf("%s: precision %.3f ± %.3f  recall %.3f ± %.3f  F1 %.3f ± %.3f  PR-AUC %.3f ± %.3f\n",
              report.method.c_str(), report.precision.mean, report.precision.std,
              report.recall.mean, report.recall.std, report.f1.mean, report.f1.std,
              report.pr_auc.mean, report.pr_auc.std);
  return 0;
}

// ---------------------------------------------------------------- diffuse

struct DiffuseArgs {
  Common common;
  std::string edges, labels;
  hmd::DiffusionOptions options;
};

int run_diffuse(const DiffuseArgs& a) {
  const auto dataset = hmd::restrict_to_lcc(
      hmd::make_dataset(hmd::load_edges(a.edges), {}, hmd::load_labels(a.labels)));
  const auto& g = dataset.graph;
  const auto s0 = hmd::seed_beliefs(dataset.labels, a.options.seed_fraction, a.common.seed,
                                    a.options.prior);
  const auto result = hmd::degroot_run(g, s0, a.options.iterations, a.options.threshold,
                                       threads_of(a.common));

  std::string beliefs = "user_id,belief,label_pred\n";
  for (hmd::NodeId u = 0; u < g.node_count(); ++u) {
    beliefs += hmd::csv::escape(g.user_id(u)) + "," +
               hmd::detail::format_double(result.state.beliefs[u]) + "," +
               std::to_string(result.predictions[u]) + "\n";
  }
  const auto dir = prepare_dir(a.common.output_dir);
  hmd::csv::write_file(dir + "/beliefs.csv", beliefs);
  std::vector<std::string> outputs = {"beliefs.csv"};

  // Score on labeled users that were not seeds.
  std::vector<std::uint8_t> pred, gold;
  std::vector<double> score;
  for (hmd::NodeId u = 0; u < g.node_count(); ++u) {
    if (dataset.labels[u] < 0 || result.state.is_seed[u]) continue;
    pred.push_back(result.predictions[u]);
    gold.push_back(static_cast<std::uint8_t>(dataset.labels[u]));
    score.push_back(result.state.beliefs[u]);
  }
  if (std::find(gold.begin(), gold.end(), 1) != gold.end()) {
    hmd::EvalReport report;
    report.method = "degroot";
    report.mode = "degroot";
    report.folds = 1;
    report.seed = a.common.seed;
    report.hyperparameters = {{"seed_fraction", a.options.seed_fraction},
                              {"prior", a.options.prior},
                              {"iterations", a.options.iterations},
                              {"threshold", a.options.threshold},
                              {"seeds", s0.seeds.size()}};
    auto fold = hmd::detail::score_fold(pred, score, gold);
    report.per_fold.push_back(fold);
    report.finalize();
    write_report(dir, report);
    outputs.insert(outputs.end(), {"report.json", "report.csv"});
    std::printf("degroot on %zu held-out users: precision %.3f recall %.3f F1 %.3f PR-AUC %.3f\n",
                gold.size(), fold.precision, fold.recall, fold.f1, fold.pr_auc);
  }
  write_manifest(dir, "diffuse", a.common,
                 {{"edges", a.edges},
                  {"labels", a.labels},
                  {"seed_fraction", a.options.seed_fraction},
                  {"prior", a.options.prior},
                  {"iterations", a.options.iterations},
                  {"threshold", a.options.threshold}},
                 outputs);
  return 0;
}

// ------------------------------------------------------------------ embed

struct EmbedArgs {
  Common common;
  std::string edges, labels;
  hmd::WalkConfig walk;
  std::size_t folds = 5;
  double l2 = 1.0;
};

int run_embed(EmbedArgs a) {
  a.walk.seed = hmd::derive_seed(a.common.seed, "embed");
  const auto labels = a.labels.empty() ? std::vector<hmd::UserLabel>{} : hmd::load_labels(a.labels);
  const auto dataset = hmd::restrict_to_lcc(hmd::make_dataset(hmd::load_edges(a.edges), {}, labels));
  const auto threads = threads_of(a.common);
  const auto table = hmd::embed_graph(dataset.graph, a.walk, threads);

  const auto dir = prepare_dir(a.common.output_dir);
  hmd::csv::write_file(dir + "/embeddings.csv", hmd::embeddings_csv(dataset.graph, table));
  std::vector<std::string> outputs = {"embeddings.csv"};
  if (!labels.empty()) {
    hmd::CvOptions cv;
    cv.folds = a.folds;
    cv.seed = a.common.seed;
    cv.l2 = a.l2;
    cv.threads = threads;
    const auto report = hmd::evaluate_embeddings(dataset, table, cv);
    write_report(dir, report);
    outputs.insert(outputs.end(), {"report.json", "report.csv"});
    std::printf("node2vec: F1 %.3f ± %.3f  PR-AUC %.3f ± %.3f\n", report.f1.mean, report.f1.std,
                report.pr_auc.mean, report.pr_auc.std);
  }
  write_manifest(dir, "embed", a.common,
                 {{"edges", a.edges},
                  {"labels", a.labels},
                  {"walks_per_node", a.walk.walks_per_node},
                  {"walk_length", a.walk.walk_length},
                  {"p", a.walk.p},
                  {"q", a.walk.q},
                  {"window", a.walk.window},
                  {"dim", a.walk.dim},
                  {"epochs", a.walk.epochs},
                  {"negatives", a.walk.negatives},
                  {"folds", a.folds},
                  {"l2", a.l2}},
                 outputs);
  return 0;
}

// -------------------------------------------------------------------- ego

struct EgoArgs {
  Common common;
  std::string edges, user, probs;
};

/// First column user id, second column probability; header skipped.
std::unordered_map<std::string, double> load_probabilities(const std::string& path) {
  hmd::csv::LineReader reader(path);
  std::string line;
  std::unordered_map<std::string, double> out;
  if (!reader.next(line)) return out;
  while (reader.next(line)) {
    const auto fields = hmd::csv::split(line, reader.line_no());
    if (fields.size() < 2) throw hmd::Error(hmd::ErrorKind::kFormat, "expected user_id,prob", reader.line_no());
    try {
      out[fields[0]] = std::stod(fields[1]);
    } catch (const std::exception&) {
      throw hmd::Error(hmd::ErrorKind::kParse, "bad probability '" + fields[1] + "'", reader.line_no());
    }
  }
  return out;
}

int run_ego(const EgoArgs& a) {
  const auto g = hmd::build_graph(hmd::load_edges(a.edges));
  const auto probs = a.probs.empty() ? std::unordered_map<std::string, double>{}
                                     : load_probabilities(a.probs);
  const auto ego = hmd::ego_network(g, a.user, probs);
  const auto dir = prepare_dir(a.common.output_dir);
  hmd::csv::write_file(dir + "/ego.dot", ego.to_dot());
  write_json(dir + "/ego.json", ego.to_json());
  write_manifest(dir, "ego", a.common, {{"edges", a.edges}, {"user", a.user}, {"probs", a.probs}},
                 {"ego.dot", "ego.json"});
  std::printf("ego network of %s: %zu nodes, %zu edges\n", ego.ego.c_str(), ego.nodes.size(),
              ego.edges.size());
  return 0;
}

// ------------------------------------------------------------------ score

struct ScoreArgs {
  Common common;
  std::string posts, lexicon;
};

/// Fills `score` for JSONL posts that carry only `text`.
int run_score(const ScoreArgs& a) {
  const auto scorer = hmd::load_lexicon(a.lexicon);
  hmd::csv::LineReader reader(a.posts);
  std::vector<hmd::PostScore> out;
  std::string line;
  while (reader.next(line)) {
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw hmd::Error(hmd::ErrorKind::kParse, std::string("malformed JSON: ") + e.what(), reader.line_no());
    }
    if (!j.is_object() || !j.contains("post_id") || !j.contains("user_id") || !j["post_id"].is_string() ||
        !j["user_id"].is_string()) {
      throw hmd::Error(hmd::ErrorKind::kValidation, "post needs string post_id and user_id", reader.line_no());
    }
    const std::string text = j.contains("text") && j["text"].is_string() ? j["text"].get<std::string>() : "";
    out.push_back({j["post_id"].get<std::string>(), j["user_id"].get<std::string>(),
                   hmd::stub_score(text, scorer), text});
  }
  const auto dir = prepare_dir(a.common.output_dir);
  hmd::write_post_scores(dir + "/posts.jsonl", out);
  write_manifest(dir, "score", a.common, {{"posts", a.posts}, {"lexicon", a.lexicon}}, {"posts.jsonl"});
  std::printf("scored %zu posts\n", out.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hmd: user-level hate-monger detection toolkit"};
  app.require_subcommand(1);
  app.set_config("--run-config", "", "Optional TOML/INI file of flag values; flags override it");
  app.set_version_flag("--version", std::string(hmd::kVersion));

  StatsArgs stats;
  auto* c_stats = app.add_subcommand("stats", "Largest-component statistics of an edge list");
  c_stats->add_option("--edges", stats.edges, "Edge CSV (src,dst)")->required();
  add_common(c_stats, stats.common, false);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a planted-community dataset");
  c_synth->add_option("--config", synth.config, "Synth config JSON (defaults when omitted)");
  add_common(c_synth, synth.common);

  EvaluateArgs eval;
  auto* c_eval = app.add_subcommand("evaluate", "Cross-validate one aggregation mode");
  c_eval->add_option("--edges", eval.edges, "Edge CSV (src,dst)")->required();
  c_eval->add_option("--posts", eval.posts, "Post scores JSONL")->required();
  c_eval->add_option("--labels", eval.labels, "Label CSV (user_id,label)")->required();
  c_eval->add_option("--mode", eval.mode, "F, R, Db, Dq, DbDq or FULL")->capture_default_str();
  c_eval->add_option("--tau-t", eval.tau_t, "Post threshold")->capture_default_str();
  c_eval->add_option("--tau-u", eval.tau_u, "User threshold behind neighbor flags")->capture_default_str();
  c_eval->add_option("--grid", eval.grid, "tau_u grid searched by mode F")->delimiter(',');
  c_eval->add_option("--bins", eval.bins, "Histogram bins")->capture_default_str();
  c_eval->add_option("--folds", eval.folds, "Cross-validation folds")->capture_default_str();
  c_eval->add_option("--l2", eval.l2, "L2 strength")->capture_default_str();
  c_eval->add_flag("--export-features", eval.export_features, "Also write features.csv");
  add_common(c_eval, eval.common);

  DiffuseArgs diffuse;
  auto* c_diffuse = app.add_subcommand("diffuse", "DeGroot belief diffusion from a labeled seed set");
  c_diffuse->add_option("--edges", diffuse.edges, "Edge CSV (src,dst)")->required();
  c_diffuse->add_option("--labels", diffuse.labels, "Label CSV (user_id,label)")->required();
  c_diffuse->add_option("--seed-fraction", diffuse.options.seed_fraction)->capture_default_str();
  c_diffuse->add_option("--prior", diffuse.options.prior)->capture_default_str();
  c_diffuse->add_option("--iterations", diffuse.options.iterations)->capture_default_str();
  c_diffuse->add_option("--threshold", diffuse.options.threshold)->capture_default_str();
  add_common(c_diffuse, diffuse.common);

  EmbedArgs embed;
  auto* c_embed = app.add_subcommand("embed", "node2vec embeddings (+ CV when labels are given)");
  c_embed->add_option("--edges", embed.edges, "Edge CSV (src,dst)")->required();
  c_embed->add_option("--labels", embed.labels, "Label CSV (user_id,label)");
  c_embed->add_option("--walks-per-node", embed.walk.walks_per_node)->capture_default_str();
  c_embed->add_option("--walk-length", embed.walk.walk_length)->capture_default_str();
  c_embed->add_option("--p", embed.walk.p)->capture_default_str();
  c_embed->add_option("--q", embed.walk.q)->capture_default_str();
  c_embed->add_option("--window", embed.walk.window)->capture_default_str();
  c_embed->add_option("--dim", embed.walk.dim)->capture_default_str();
  c_embed->add_option("--epochs", embed.walk.epochs)->capture_default_str();
  c_embed->add_option("--negatives", embed.walk.negatives)->capture_default_str();
  c_embed->add_option("--folds", embed.folds)->capture_default_str();
  c_embed->add_option("--l2", embed.l2)->capture_default_str();
  add_common(c_embed, embed.common);

  EgoArgs ego;
  auto* c_ego = app.add_subcommand("ego", "Export one user's ego network as DOT and JSON");
  c_ego->add_option("--edges", ego.edges, "Edge CSV (src,dst)")->required();
  c_ego->add_option("--user", ego.user, "Focal user id")->required();
  c_ego->add_option("--probs", ego.probs, "CSV whose first two columns are user_id,probability");
  add_common(c_ego, ego.common);

  ScoreArgs score;
  auto* c_score = app.add_subcommand("score", "Score raw-text posts with a lexicon");
  c_score->add_option("--posts", score.posts, "JSONL posts with post_id, user_id, text")->required();
  c_score->add_option("--lexicon", score.lexicon, "CSV term,weight with optional __bias__ row")->required();
  add_common(c_score, score.common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*c_stats) return run_stats(stats, c_stats->count("--output-dir") > 0);
    if (*c_synth) return run_synth(synth, c_synth->count("--seed") > 0);
    if (*c_eval) return run_evaluate(eval);
    if (*c_diffuse) return run_diffuse(diffuse);
    if (*c_embed) return run_embed(embed);
    if (*c_ego) return run_ego(ego);
    if (*c_score) return run_score(score);
  } catch (const hmd::Error& e) {
    std::cerr << "hmd: " << e.what() << "\n";
    return hmd::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "hmd: internal error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
