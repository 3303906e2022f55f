#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stlm/errors.hpp"
#include "stlm/model.hpp"

namespace stlm {

// Checkpoint file: a text header line, a JSON line describing config and
// vocabulary layout, then one "tensor <name> <rows> <cols>" line plus raw
// little-endian doubles per parameter tensor.

inline nlohmann::json model_config_to_json(const ModelConfig& c) {
  return {{"layers", c.layers},       {"model_dim", c.model_dim},
          {"heads", c.heads},         {"ff_dim", c.ff_dim},
          {"context_len", c.context_len}, {"rope_theta", c.rope_theta},
          {"init_std", c.init_std},   {"tied_embeddings", c.tied_embeddings},
          {"seed", c.seed}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.layers = j.at("layers").get<int>();
  c.model_dim = j.at("model_dim").get<int>();
  c.heads = j.at("heads").get<int>();
  c.ff_dim = j.at("ff_dim").get<int>();
  c.context_len = j.at("context_len").get<int>();
  c.rope_theta = j.at("rope_theta").get<double>();
  c.init_std = j.at("init_std").get<double>();
  c.tied_embeddings = j.at("tied_embeddings").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

inline nlohmann::json layout_to_json(const VocabularyLayout& l) {
  return {{"text_size", l.text_size},
          {"n_phonetic", l.n_phonetic},
          {"n_pitch", l.n_pitch},
          {"n_style", l.n_style}};
}

inline VocabularyLayout layout_from_json(const nlohmann::json& j) {
  VocabularyLayout l;
  l.text_size = j.at("text_size").get<int>();
  l.n_phonetic = j.at("n_phonetic").get<int>();
  l.n_pitch = j.at("n_pitch").get<int>();
  l.n_style = j.at("n_style").get<int>();
  return l;
}

inline void save_checkpoint(const TransformerLm& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_data("cannot write checkpoint: " + path);
  out << "stlm-checkpoint v1\n";
  nlohmann::json header{{"config", model_config_to_json(model.config())},
                        {"layout", layout_to_json(model.layout())}};
  out << header.dump() << "\n";
  model.params().visit([&](const std::string& name, const Mat& m) {
    out << "tensor " << name << " " << m.rows() << " " << m.cols() << "\n";
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double)) * m.size());
    out << "\n";
  });
}

inline TransformerLm load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_data("cannot read checkpoint: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "stlm-checkpoint v1") {
    fail_data("checkpoint: bad magic in " + path);
  }
  if (!std::getline(in, line)) fail_data("checkpoint: missing header");
  nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
  if (header.is_discarded()) fail_data("checkpoint: malformed header JSON");

  TransformerLm model(model_config_from_json(header.at("config")),
                      layout_from_json(header.at("layout")));
  model.params().visit([&](const std::string& name, Mat& m) {
    std::string keyword, got_name;
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> keyword >> got_name >> rows >> cols) || keyword != "tensor") {
      fail_data("checkpoint: missing tensor block for " + name);
    }
    if (got_name != name || rows != m.rows() || cols != m.cols()) {
      fail_data("checkpoint: tensor mismatch, expected " + name + ", got " + got_name);
    }
    in.ignore(1);  // newline after the meta line
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double)) * m.size());
    if (!in) fail_data("checkpoint: truncated tensor data for " + name);
  });
  return model;
}

}  // namespace stlm
