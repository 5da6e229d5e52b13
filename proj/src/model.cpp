#include "clueqa/model.hpp"

#include <cstring>
#include <fstream>

namespace clueqa {

namespace {

constexpr char kMagic[8] = {'C', 'Q', 'A', 'C', 'K', 'P', 'T', '1'};

ModelConfig complete_config(const WorldConfig& world, ModelConfig cfg) {
  world.validate();
  cfg.vocab_size = Vocabulary::build(world).size();
  cfg.max_frames = world.num_frames;
  cfg.feature_dim = world.feature_dim;
  cfg.validate();
  return cfg;
}

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& in, T* v, const std::string& path) {
  in.read(reinterpret_cast<char*>(v), sizeof(T));
  if (!in) throw IoError(path + ": truncated checkpoint");
}

void write_string(std::ofstream& out, const std::string& s) {
  write_pod(out, (uint32_t)s.size());
  out.write(s.data(), (std::streamsize)s.size());
}

std::string read_string(std::ifstream& in, const std::string& path) {
  uint32_t n;
  read_pod(in, &n, path);
  if (n > 4096) throw IoError(path + ": implausible string length");
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw IoError(path + ": truncated checkpoint");
  return s;
}

void write_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
  out.write(reinterpret_cast<const char*>(m.data()),
            (std::streamsize)(m.size() * sizeof(double)));
}

void read_matrix(std::ifstream& in, Eigen::MatrixXd* m,
                 const std::string& path) {
  in.read(reinterpret_cast<char*>(m->data()),
          (std::streamsize)(m->size() * sizeof(double)));
  if (!in) throw IoError(path + ": truncated checkpoint");
}

}  // namespace

const char* stage_tag_name(StageTag tag) {
  switch (tag) {
    case StageTag::kNone: return "none";
    case StageTag::kStage1: return "stage1";
    case StageTag::kStage2: return "stage2";
    case StageTag::kBaseline: return "baseline";
  }
  throw ContractError("unknown stage tag");
}

Model::Model(const WorldConfig& world_cfg, ModelConfig cfg, uint64_t init_seed)
    : world(world_cfg),
      mcfg(complete_config(world_cfg, cfg)),
      vocab(Vocabulary::build(world_cfg)),
      store(),
      backbone(store, mcfg, init_seed),
      acf(store, mcfg, init_seed) {}

void save_checkpoint(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, (uint32_t)1);  // container version
  write_pod(out, (uint32_t)model.stage);
  write_pod(out, (int64_t)model.step);
  write_pod(out, (int64_t)model.adam_t);

  const ModelConfig& m = model.mcfg;
  for (int v : {m.vocab_size, m.model_dim, m.num_layers, m.num_heads,
                m.max_sequence_length, m.max_frames, m.feature_dim,
                m.acf_hidden}) {
    write_pod(out, (int32_t)v);
  }
  const WorldConfig& w = model.world;
  for (int v : {w.num_entities, w.num_predicates, w.num_frames, w.feature_dim,
                w.events_min, w.events_max, w.triple_library_cap}) {
    write_pod(out, (int32_t)v);
  }
  write_pod(out, w.distractor_rate);
  write_pod(out, w.noise_amp);
  write_pod(out, (uint64_t)w.seed);

  write_pod(out, (uint32_t)model.store.tensors().size());
  for (const Tensor& t : model.store.tensors()) {
    write_string(out, t.name);
    write_pod(out, (uint32_t)t.value.rows());
    write_pod(out, (uint32_t)t.value.cols());
    write_pod(out, (uint8_t)(t.trainable ? 1 : 0));
    write_matrix(out, t.value);
    if (t.trainable) {
      write_matrix(out, t.adam_m);
      write_matrix(out, t.adam_v);
    }
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::unique_ptr<Model> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError(path + ": not a checkpoint file");
  }
  uint32_t version;
  read_pod(in, &version, path);
  if (version != 1) {
    throw IoError(path + ": unsupported checkpoint version " +
                  std::to_string(version));
  }
  uint32_t stage;
  int64_t step, adam_t;
  read_pod(in, &stage, path);
  read_pod(in, &step, path);
  read_pod(in, &adam_t, path);
  if (stage > (uint32_t)StageTag::kBaseline) {
    throw IoError(path + ": bad stage tag");
  }

  auto read_i32 = [&](int* v) {
    int32_t x;
    read_pod(in, &x, path);
    *v = x;
  };
  ModelConfig mcfg;
  read_i32(&mcfg.vocab_size);
  read_i32(&mcfg.model_dim);
  read_i32(&mcfg.num_layers);
  read_i32(&mcfg.num_heads);
  read_i32(&mcfg.max_sequence_length);
  read_i32(&mcfg.max_frames);
  read_i32(&mcfg.feature_dim);
  read_i32(&mcfg.acf_hidden);
  WorldConfig world;
  read_i32(&world.num_entities);
  read_i32(&world.num_predicates);
  read_i32(&world.num_frames);
  read_i32(&world.feature_dim);
  read_i32(&world.events_min);
  read_i32(&world.events_max);
  read_i32(&world.triple_library_cap);
  read_pod(in, &world.distractor_rate, path);
  read_pod(in, &world.noise_amp, path);
  uint64_t wseed;
  read_pod(in, &wseed, path);
  world.seed = wseed;

  auto model = std::make_unique<Model>(world, mcfg, /*init_seed=*/0);
  if (model->mcfg != mcfg) {
    throw IoError(path + ": checkpoint config inconsistent with its world");
  }
  model->stage = static_cast<StageTag>(stage);
  model->step = step;
  model->adam_t = adam_t;

  uint32_t ntensors;
  read_pod(in, &ntensors, path);
  if (ntensors != model->store.tensors().size()) {
    throw IoError(path + ": tensor count mismatch");
  }
  for (uint32_t i = 0; i < ntensors; ++i) {
    std::string name = read_string(in, path);
    uint32_t rows, cols;
    uint8_t trainable;
    read_pod(in, &rows, path);
    read_pod(in, &cols, path);
    read_pod(in, &trainable, path);
    if (!model->store.has(name)) {
      throw IoError(path + ": unexpected tensor '" + name + "'");
    }
    Tensor& t = model->store.at(name);
    if (t.value.rows() != (int)rows || t.value.cols() != (int)cols ||
        t.trainable != (trainable != 0)) {
      throw IoError(path + ": tensor '" + name + "' shape/flag mismatch");
    }
    read_matrix(in, &t.value, path);
    if (t.trainable) {
      read_matrix(in, &t.adam_m, path);
      read_matrix(in, &t.adam_v, path);
    }
  }
  return model;
}

}  // namespace clueqa
