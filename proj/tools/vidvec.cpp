#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "vidvec/vidvec.hpp"

namespace {

using namespace vidvec;

enum ExitCode : int { kOk = 0, kOther = 1, kConfig = 2, kTransport = 3, kContract = 4, kCapability = 5, kIngest = 6 };

struct Overrides {
  std::string backend, endpoint, direction, prompt_variant, output;
  std::optional<std::uint64_t> seed;
  std::optional<int> layer;
  std::optional<unsigned> threads;
  std::optional<double> temperature;
  bool calibrate = false;

  void add_to(CLI::App& app) {
    app.add_option("--backend", backend, "mock, toy or remote");
    app.add_option("--endpoint", endpoint, "remote backend URL");
    app.add_option("--seed", seed, "backend seed");
    app.add_option("--layer", layer, "readout layer");
    app.add_option("--direction", direction, "t2v or v2t");
    app.add_option("--prompt-variant", prompt_variant, "video_eol or video_eol_prefixed");
    app.add_option("--threads", threads, "similarity/ranking threads");
    app.add_flag("--calibrate", calibrate, "enable dual-softmax calibration");
    app.add_option("--temperature", temperature, "calibration temperature for the active direction");
    app.add_option("--output", output, "output directory");
  }

  void apply(RunConfig& c) const {
    try {
      if (!backend.empty()) c.backend.kind = backend_kind_from_string(backend);
      if (!direction.empty()) c.direction = direction_from_string(direction);
      if (!prompt_variant.empty()) c.prompt_variant = template_from_string(prompt_variant);
    } catch (const ContractError& e) {
      throw ConfigError(e.what());
    }
    if (!endpoint.empty()) c.backend.endpoint = endpoint;
    if (seed) c.backend.seed = seed;
    if (layer) c.layer = *layer;
    if (threads) c.threads = *threads;
    if (calibrate) c.calibration.enabled = true;
    if (temperature) {
      c.calibration.enabled = true;
      (c.direction == Direction::T2V ? c.calibration.temperature_t2v : c.calibration.temperature_v2t) = *temperature;
    }
    if (!output.empty()) c.output_dir = output;
  }
};

RunConfig resolve_config(const std::string& path, const Overrides& ov) {
  RunConfig c = load_config(path);
  ov.apply(c);
  validate(c);
  return c;
}

void print_result(const PipelineResult& r, const RunConfig& c) {
  std::cout << "config " << r.config_hash << "\n";
  std::vector<std::pair<std::string, EvalReport>> rows{{"first", r.first}};
  if (r.reranked) rows.emplace_back("reranked", *r.reranked);
  std::cout << format_table(rows);
  if (r.temperature) std::cout << "temperature " << format_g9(*r.temperature) << "\n";
  std::cout << "wrote " << (c.output_dir / "report.json").string() << "\n";
}

std::vector<int> parse_layers(const std::string& list, const Backend& backend) {
  if (list.empty() || list == "all") return all_layers(backend);
  std::vector<int> out;
  std::stringstream ss(list);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto dash = tok.find('-');
    try {
      if (dash != std::string::npos && dash > 0) {
        const int lo = std::stoi(tok.substr(0, dash)), hi = std::stoi(tok.substr(dash + 1));
        if (hi < lo) throw std::invalid_argument("range");
        for (int l = lo; l <= hi; ++l) out.push_back(l);
      } else {
        out.push_back(std::stoi(tok));
      }
    } catch (const std::logic_error&) {
      throw ConfigError("bad layer list '" + list + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty layer list");
  return out;
}

int exit_code_for(std::exception_ptr e) {
  try {
    std::rethrow_exception(e);
  } catch (const StageError& s) {
    std::cerr << "error in stage " << s.stage() << ": ";
    try {
      s.rethrow_cause();
    } catch (...) {
      return exit_code_for(std::current_exception());
    }
  } catch (const RerankError& r) {
    std::cerr << "rerank stopped at query " << r.query_id() << " (" << r.completed().size()
              << " scores saved): ";
    if (r.cause()) return exit_code_for(r.cause());
    std::cerr << r.what() << "\n";
    return kOther;
  } catch (const ConfigError& x) {
    std::cerr << "config error: " << x.what() << "\n";
    return kConfig;
  } catch (const TransportError& x) {
    std::cerr << "transport error: " << x.what() << "\n";
    return kTransport;
  } catch (const CapabilityError& x) {
    std::cerr << "capability error: " << x.what() << "\n";
    return kCapability;
  } catch (const IngestError& x) {
    std::cerr << x.what() << "\n";
    return kIngest;
  } catch (const ContractError& x) {
    std::cerr << "contract error: " << x.what() << "\n";
    return kContract;
  } catch (const std::exception& x) {
    std::cerr << "error: " << x.what() << "\n";
    return kOther;
  }
  return kOther;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vidvec: zero-shot video/text retrieval from multimodal LLM hidden states"};
  app.require_subcommand(1);

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "validate raw JSONL annotations into a manifest");
  std::string ingest_in, ingest_out, ingest_split = "test";
  bool ingest_paragraph = false;
  ingest_cmd->add_option("--input", ingest_in, "raw JSONL: {item_id, media_ref, captions}")->required();
  ingest_cmd->add_option("--output", ingest_out, "manifest JSON to write")->required();
  ingest_cmd->add_option("--split", ingest_split, "train, val or test");
  ingest_cmd->add_flag("--paragraph", ingest_paragraph, "join each item's captions into one paragraph");

  // pipeline commands share the config + overrides
  std::string config_path;
  Overrides ov;
  auto* embed_cmd = app.add_subcommand("embed", "embed the dataset and fill the cache");
  auto* eval_cmd = app.add_subcommand("eval", "first-stage retrieval evaluation");
  auto* rerank_cmd = app.add_subcommand("rerank", "evaluation with yes/no reranking of the top K");
  auto* sweep_cmd = app.add_subcommand("layer-sweep", "zero-shot recall for each layer");
  for (auto* cmd : {embed_cmd, eval_cmd, rerank_cmd, sweep_cmd}) {
    cmd->add_option("--config", config_path, "INI run config")->required();
    ov.add_to(*cmd);
  }
  std::optional<int> rerank_k;
  rerank_cmd->add_option("--rerank-k", rerank_k, "candidates to rescore (default 100)");
  std::string sweep_layers = "all";
  sweep_cmd->add_option("--layers", sweep_layers, "'all', or a list like 0,4,8-12");

  // train-adapter
  auto* train_cmd = app.add_subcommand("train-adapter", "train a low-rank text adapter on (dense, summary) pairs");
  std::string train_pairs, train_out = "adapter_out", train_backend = "mock", train_endpoint, train_opt = "sgd";
  std::optional<std::uint64_t> train_backend_seed;
  TrainConfig tcfg;
  bool fixed_temperature = false;
  train_cmd->add_option("--pairs", train_pairs, "JSONL pairs {pair_id, dense, summary}")->required();
  train_cmd->add_option("--output", train_out, "output directory");
  train_cmd->add_option("--backend", train_backend, "mock, toy or remote");
  train_cmd->add_option("--endpoint", train_endpoint, "remote backend URL");
  train_cmd->add_option("--backend-seed", train_backend_seed, "backend seed");
  train_cmd->add_option("--layer", tcfg.layer, "layer to train on (-1: final)");
  train_cmd->add_option("--rank", tcfg.rank, "adapter rank");
  train_cmd->add_option("--alpha", tcfg.alpha, "adapter scale numerator");
  train_cmd->add_option("--lr", tcfg.learning_rate, "learning rate");
  train_cmd->add_option("--batch-size", tcfg.batch_size, "pairs per batch");
  train_cmd->add_option("--epochs", tcfg.epochs, "passes over the data");
  train_cmd->add_option("--loss-temperature", tcfg.loss_temperature, "initial logit scale");
  train_cmd->add_flag("--fixed-temperature", fixed_temperature, "do not learn the logit scale");
  train_cmd->add_option("--optimizer", train_opt, "sgd or adam");
  train_cmd->add_option("--seed", tcfg.seed, "init/shuffle seed");

  // report
  auto* report_cmd = app.add_subcommand("report", "print the report of a finished run");
  std::string report_dir;
  report_cmd->add_option("--dir", report_dir, "run output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest_cmd) {
      IngestOptions opts;
      opts.paragraph = ingest_paragraph;
      opts.split = split_from_string(ingest_split);
      const auto m = ingest_file(ingest_in, opts);
      write_manifest(ingest_out, m);
      std::size_t captions = 0;
      for (const auto& it : m.items) captions += it.captions.size();
      std::cout << "ingested " << m.items.size() << " items, " << captions << " captions -> " << ingest_out << "\n";
    } else if (*embed_cmd) {
      auto c = resolve_config(config_path, ov);
      for (const auto& f : run_embed(c)) std::cout << (c.output_dir / f).string() << "\n";
    } else if (*eval_cmd) {
      auto c = resolve_config(config_path, ov);
      c.rerank.reset();
      print_result(run_pipeline(c), c);
    } else if (*rerank_cmd) {
      auto c = resolve_config(config_path, ov);
      if (!c.rerank) c.rerank = RerankConfig::zero_shot();
      if (rerank_k) c.rerank->k = *rerank_k;
      validate(c);
      print_result(run_pipeline(c), c);
    } else if (*sweep_cmd) {
      auto c = resolve_config(config_path, ov);
      const auto manifest = read_manifest(c.manifest);
      const auto backend = make_backend(c.backend);
      SweepOptions so;
      so.direction = c.direction;
      so.prompt_variant = ov.prompt_variant.empty() ? TemplateId::VideoEOL : c.prompt_variant;
      so.calibration = c.calibration;
      so.media = {c.fps, c.max_frames};
      so.threads = c.backend.max_in_flight;
      EmbeddingStore store;
      const auto reports = sweep(manifest, *backend, parse_layers(sweep_layers, *backend), so, store);
      std::filesystem::create_directories(c.output_dir);
      const auto csv = format_layer_csv(reports);
      std::ofstream(c.output_dir / "layer_sweep.csv", std::ios::trunc) << csv;
      nlohmann::json layers = nlohmann::json::array();
      for (const auto& [layer, rep] : reports) layers.push_back({{"layer", layer}, {"report", report_to_json(rep)}});
      nlohmann::json doc = {{"config_hash", config_hash(c)},
                            {"backend", backend->fingerprint()},
                            {"prompt_variant", std::string(to_string(so.prompt_variant))},
                            {"layers", layers}};
      std::ofstream(c.output_dir / "layer_sweep.json", std::ios::trunc) << doc.dump(2) << "\n";
      std::cout << csv;
    } else if (*train_cmd) {
      BackendConfig bc;
      try {
        bc.kind = backend_kind_from_string(train_backend);
      } catch (const ContractError& e) {
        throw ConfigError(e.what());
      }
      bc.endpoint = train_endpoint;
      bc.seed = train_backend_seed;
      tcfg.learn_temperature = !fixed_temperature;
      try {
        tcfg.optimizer = optimizer_from_string(train_opt);
      } catch (const ContractError& e) {
        throw ConfigError(e.what());
      }
      const auto pairs = read_pairs(train_pairs);
      const auto backend = make_backend(bc);
      const auto r = train(pairs, *backend, tcfg);
      std::filesystem::create_directories(train_out);
      const std::filesystem::path out(train_out);
      save_adapter(out / "adapter.vadp", r.params);
      std::ofstream(out / "train_log.csv", std::ios::trunc) << format_train_log(r.log);
      const nlohmann::json train_config = {{"pairs_digest", detail::file_digest(train_pairs)},
                                           {"backend", backend->fingerprint()},
                                           {"layer", tcfg.layer},
                                           {"rank", tcfg.rank},
                                           {"alpha", tcfg.alpha},
                                           {"learning_rate", tcfg.learning_rate},
                                           {"batch_size", tcfg.batch_size},
                                           {"epochs", tcfg.epochs},
                                           {"loss_temperature", tcfg.loss_temperature},
                                           {"learn_temperature", tcfg.learn_temperature},
                                           {"optimizer", std::string(to_string(tcfg.optimizer))},
                                           {"seed", std::to_string(tcfg.seed)}};
      char hash[17];
      std::snprintf(hash, sizeof hash, "%016llx",
                    static_cast<unsigned long long>(fnv1a64(wire::canonical(train_config))));
      nlohmann::json summary = {{"config_hash", hash},
                                {"config", train_config},
                                {"pairs", pairs.size()},
                                {"steps", r.log.size()},
                                {"dropped_pairs", r.dropped_pairs},
                                {"short_dense", r.short_dense},
                                {"final_temperature", r.temperature},
                                {"adapter_hash", adapter_hash(&r.params)},
                                {"backend", backend->fingerprint()}};
      if (!r.log.empty()) summary["final_loss"] = r.log.back().loss;
      std::ofstream(out / "train_summary.json", std::ios::trunc) << summary.dump(2) << "\n";
      if (r.short_dense > 0)
        std::cerr << "warning: " << r.short_dense << " pairs have a dense text no longer than the summary\n";
      std::cout << "trained " << r.log.size() << " steps; adapter " << adapter_hash(&r.params) << " -> "
                << (out / "adapter.vadp").string() << "\n";
    } else if (*report_cmd) {
      std::ifstream f(std::filesystem::path(report_dir) / "report.txt");
      if (!f) throw Error("no report.txt in '" + report_dir + "'");
      std::cout << f.rdbuf();
    }
  } catch (...) {
    return exit_code_for(std::current_exception());
  }
  return kOk;
}
