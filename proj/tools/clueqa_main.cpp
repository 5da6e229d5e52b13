// clueqa: clue-grounded video question answering on a synthetic symbolic
// benchmark. One binary, six subcommands; every run echoes its resolved
// configuration into the run directory.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "clueqa/evaluation.hpp"
#include "clueqa/model.hpp"
#include "clueqa/pipeline.hpp"
#include "clueqa/runconfig.hpp"
#include "clueqa/training.hpp"
#include "clueqa/world.hpp"

namespace fs = std::filesystem;
using namespace clueqa;
using nlohmann::json;

namespace {

struct CliState {
  std::string config_file;
  std::vector<std::pair<std::string, std::string>> sets;
};

void add_config_options(CLI::App* cmd, CliState* st) {
  cmd->add_option("--config", st->config_file,
                  "config file with 'key = value' lines");
  for (const std::string& key : runconfig_keys()) {
    cmd->add_option_function<std::string>(
        "--" + key,
        [st, key](const std::string& v) { st->sets.emplace_back(key, v); });
  }
}

RunConfig resolve(const CliState& st) {
  RunConfig cfg;
  if (!st.config_file.empty()) load_config_file(&cfg, st.config_file);
  for (const auto& [k, v] : st.sets) apply_key(&cfg, k, v);
  finalize_config(&cfg);
  return cfg;
}

// Every run directory carries the resolved config, so a run is reproducible
// from its outputs alone.
void prepare_run_dir(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  std::ofstream out(cfg.out_dir + "/config.resolved");
  if (!out) throw IoError("cannot write " + cfg.out_dir + "/config.resolved");
  out << render_config(cfg);
}

Dataset load_dataset(const std::string& path) {
  EpisodeFile file = import_episodes(path);
  return Dataset::from_episodes(file.world, std::move(file.episodes));
}

std::string pick_eval_data(const RunConfig& cfg) {
  if (!cfg.eval_data_path.empty()) return cfg.eval_data_path;
  if (!cfg.data_path.empty()) return cfg.data_path;
  throw ConfigError("no dataset given (--data or --eval_data)");
}

int cmd_gen_data(const RunConfig& cfg) {
  if (cfg.data_path.empty()) throw ConfigError("gen-data needs --data <out>");
  prepare_run_dir(cfg);
  std::vector<Episode> eps =
      generate_episodes(cfg.world, cfg.episodes, cfg.first_index);
  export_episodes(cfg.world, eps, cfg.data_path);
  std::string taxp = cfg.taxonomy_path.empty() ? cfg.out_dir + "/taxonomy.txt"
                                               : cfg.taxonomy_path;
  build_taxonomy(cfg.world).save(taxp);
  size_t n_qa = 0;
  for (const Episode& e : eps) n_qa += e.qa.size();
  std::cout << "wrote " << eps.size() << " episodes (" << n_qa
            << " questions) to " << cfg.data_path << "\n"
            << "taxonomy: " << taxp << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  if (cfg.data_path.empty()) throw ConfigError("train needs --data <file>");
  prepare_run_dir(cfg);
  Dataset data = load_dataset(cfg.data_path);
  std::unique_ptr<Model> model;
  if (!cfg.checkpoint_in.empty()) {
    model = load_checkpoint(cfg.checkpoint_in);
  } else {
    model = std::make_unique<Model>(data.world, cfg.model, cfg.seed);
  }
  std::string ckpt = cfg.checkpoint_out.empty() ? cfg.out_dir + "/model.ckpt"
                                                : cfg.checkpoint_out;
  std::string metrics = cfg.metrics_path.empty()
                            ? cfg.out_dir + "/metrics.jsonl"
                            : cfg.metrics_path;
  TrainReport rep = train(*model, data, cfg.train, metrics, ckpt);
  std::cout << "trained " << stage_tag_name(model->stage) << " to step "
            << model->step << ", final loss " << rep.final_loss << "\n"
            << "checkpoint: " << ckpt << "\nmetrics: " << metrics << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  if (cfg.checkpoint_in.empty()) throw ConfigError("eval needs --checkpoint_in");
  prepare_run_dir(cfg);
  std::unique_ptr<Model> model = load_checkpoint(cfg.checkpoint_in);
  Dataset data = load_dataset(pick_eval_data(cfg));
  if (cfg.mode != "all") {
    EvalMode m = cfg.mode == "multiple-choice" ? EvalMode::kMultipleChoice
                                               : EvalMode::kOpenEnded;
    data = filter_by_mode(data, m);
  }
  FullEval full = evaluate_full(*model, data, cfg.pipeline);
  std::string table = eval_table(full);
  std::cout << table;
  std::ofstream(cfg.out_dir + "/eval.txt") << table;
  write_eval_jsonl(full, cfg.out_dir + "/eval.jsonl");
  return 0;
}

int cmd_infer(const RunConfig& cfg) {
  if (cfg.checkpoint_in.empty()) throw ConfigError("infer needs --checkpoint_in");
  prepare_run_dir(cfg);
  std::unique_ptr<Model> model = load_checkpoint(cfg.checkpoint_in);
  Dataset data = load_dataset(pick_eval_data(cfg));
  if (cfg.episode_index >= (int)data.episodes.size()) {
    throw DataError("episode_index out of range");
  }
  const Episode& ep = data.episodes[cfg.episode_index];
  if (cfg.qa_index >= (int)ep.qa.size()) {
    throw DataError("qa_index out of range");
  }
  const QAPair& qa = ep.qa[cfg.qa_index];
  PipelineTrace tr = answer_question(*model, ep, qa, cfg.pipeline);
  json j{{"episode", tr.episode_id},
         {"qtype", qtype_name(qa.qtype)},
         {"question", qa.question},
         {"options", qa.options},
         {"gold", qa.answer},
         {"prediction", tr.answer_text},
         {"correct", qa.multiple_choice() ? tr.chosen_option == qa.answer_index
                                          : tr.answer_text == qa.answer},
         {"candidate_frames", tr.candidate_frames},
         {"keyframes", tr.keyframes},
         {"clues", tr.clues},
         {"rejected_clue_blocks", tr.rejected_clue_blocks},
         {"gates", tr.gates},
         {"retention", tr.retention},
         {"retained_frames", tr.retained_frames},
         {"visual_tokens", tr.cost.visual_tokens},
         {"clue_tokens", tr.cost.clue_tokens},
         {"sequence_length", tr.cost.sequence_length}};
  std::string text = j.dump(2);
  std::cout << text << "\n";
  std::ofstream(cfg.out_dir + "/trace.json") << text << "\n";
  return 0;
}

int cmd_oracle(const RunConfig& cfg) {
  if (cfg.checkpoint_in.empty()) throw ConfigError("oracle needs --checkpoint_in");
  prepare_run_dir(cfg);
  std::unique_ptr<Model> model = load_checkpoint(cfg.checkpoint_in);
  Dataset data = load_dataset(pick_eval_data(cfg));
  OracleReport rep = oracle_experiment(*model, data, cfg.pipeline);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "standard  acc %5.1f%%  (n=%d)\n"
                "oracle    acc %5.1f%%  (n=%d)\n"
                "delta     %+5.1f points\n",
                100.0 * rep.standard.accuracy, rep.standard.count,
                100.0 * rep.oracle.accuracy, rep.oracle.count,
                100.0 * rep.delta_accuracy);
  std::cout << buf;
  std::ofstream(cfg.out_dir + "/oracle.txt") << buf;
  json j{{"standard_accuracy", rep.standard.accuracy},
         {"oracle_accuracy", rep.oracle.accuracy},
         {"delta_accuracy", rep.delta_accuracy},
         {"count", rep.standard.count}};
  std::ofstream(cfg.out_dir + "/oracle.jsonl") << j.dump() << "\n";
  return 0;
}

int cmd_ablate(const RunConfig& cfg) {
  prepare_run_dir(cfg);
  std::vector<LadderRung> rungs;
  if (!cfg.rungs_path.empty()) {
    rungs = read_ladder_file(cfg.rungs_path);
  } else if (!cfg.checkpoint_dir.empty()) {
    rungs = standard_ladder(cfg.checkpoint_dir);
  } else {
    throw ConfigError("ablate needs --rungs <file> or --checkpoint_dir <dir>");
  }
  Dataset data = load_dataset(pick_eval_data(cfg));
  std::vector<LadderRow> rows = ablation_ladder(rungs, data, cfg.pipeline);
  std::string table = ladder_table(rows);
  std::cout << table;
  std::ofstream(cfg.out_dir + "/ladder.txt") << table;
  write_ladder_jsonl(rows, cfg.out_dir + "/ladder.jsonl");
  return 0;
}

int categorized_exit(const std::exception& e) {
  const char* category;
  int code;
  if (dynamic_cast<const ConfigError*>(&e) ||
      dynamic_cast<const ValidationError*>(&e) ||
      dynamic_cast<const ParseError*>(&e)) {
    category = "configuration";
    code = 3;
  } else if (dynamic_cast<const IoError*>(&e)) {
    category = "io";
    code = 4;
  } else if (dynamic_cast<const DataError*>(&e) ||
             dynamic_cast<const VocabularyError*>(&e)) {
    category = "data";
    code = 5;
  } else if (dynamic_cast<const SequencingError*>(&e)) {
    category = "sequencing";
    code = 6;
  } else if (dynamic_cast<const GenerationError*>(&e) ||
             dynamic_cast<const EstimationError*>(&e)) {
    category = "generation";
    code = 7;
  } else if (dynamic_cast<const Error*>(&e)) {
    category = "contract";
    code = 8;
  } else {
    category = "internal";
    code = 9;
  }
  std::cerr << "error (" << category << "): " << e.what() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clue-grounded video question answering (synthetic benchmark)"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* desc;
    int (*run)(const RunConfig&);
  };
  const Sub subs[] = {
      {"gen-data", "generate a deterministic episode file + taxonomy",
       cmd_gen_data},
      {"train", "run one training stage (fresh, staged, or resumed)",
       cmd_train},
      {"eval", "evaluate a checkpoint on a dataset", cmd_eval},
      {"infer", "answer a single question and dump the pipeline trace",
       cmd_infer},
      {"oracle", "paired standard / ground-truth-clue evaluation", cmd_oracle},
      {"ablate", "run an ablation ladder over checkpoints", cmd_ablate},
  };

  std::vector<std::unique_ptr<CliState>> states;
  std::function<int()> action;
  for (const Sub& sub : subs) {
    CLI::App* cmd = app.add_subcommand(sub.name, sub.desc);
    states.push_back(std::make_unique<CliState>());
    CliState* st = states.back().get();
    add_config_options(cmd, st);
    int (*fn)(const RunConfig&) = sub.run;
    cmd->callback([st, fn, &action] {
      action = [st, fn] { return fn(resolve(*st)); };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);  // unknown flag / bad usage: CLI-level exit code
  }

  try {
    return action();
  } catch (const std::exception& e) {
    return categorized_exit(e);
  }
}
