#include "seamstain/config_json.hpp"

namespace seamstain {

namespace json_detail {

void require_known_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw InvalidArgument(std::string(what) + ": expected a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed) known = known || item.key() == k;
    if (!known) throw InvalidArgument(std::string(what) + ": unknown key '" + item.key() + "'");
  }
}

}  // namespace json_detail

using json_detail::read;
using json_detail::require_known_keys;

void to_json(nlohmann::json& j, const GeneratorConfig& c) {
  j = {{"base_channels", c.base_channels}, {"n_res_blocks", c.n_res_blocks}, {"split_index", c.split_index},
       {"io_channels", c.io_channels},     {"outer_kernel", c.outer_kernel}, {"norm_eps", c.norm_eps}};
}

void from_json(const nlohmann::json& j, GeneratorConfig& c) {
  require_known_keys(j, {"base_channels", "n_res_blocks", "split_index", "io_channels", "outer_kernel", "norm_eps"},
                     "generator");
  read(j, "base_channels", c.base_channels);
  read(j, "n_res_blocks", c.n_res_blocks);
  read(j, "split_index", c.split_index);
  read(j, "io_channels", c.io_channels);
  read(j, "outer_kernel", c.outer_kernel);
  read(j, "norm_eps", c.norm_eps);
}

void to_json(nlohmann::json& j, const DiscriminatorConfig& c) {
  j = {{"base_channels", c.base_channels},
       {"n_layers", c.n_layers},
       {"io_channels", c.io_channels},
       {"kernel", c.kernel},
       {"norm_eps", c.norm_eps}};
}

void from_json(const nlohmann::json& j, DiscriminatorConfig& c) {
  require_known_keys(j, {"base_channels", "n_layers", "io_channels", "kernel", "norm_eps"}, "discriminator");
  read(j, "base_channels", c.base_channels);
  read(j, "n_layers", c.n_layers);
  read(j, "io_channels", c.io_channels);
  read(j, "kernel", c.kernel);
  read(j, "norm_eps", c.norm_eps);
}

void to_json(nlohmann::json& j, const LossWeights& c) { j = {{"cyc", c.cyc}, {"embd", c.embd}}; }

void from_json(const nlohmann::json& j, LossWeights& c) {
  require_known_keys(j, {"cyc", "embd"}, "loss_weights");
  read(j, "cyc", c.cyc);
  read(j, "embd", c.embd);
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"epochs", c.epochs},
       {"batch", c.batch},
       {"lr", c.lr},
       {"adam_beta1", c.adam_beta1},
       {"adam_beta2", c.adam_beta2},
       {"adam_eps", c.adam_eps},
       {"loss_weights", c.weights},
       {"pool_size", c.pool_size},
       {"seed", c.seed},
       {"checkpoint_every", c.checkpoint_every},
       {"adversarial", to_string(c.adversarial)},
       {"embedding_reduction", to_string(c.reduction)},
       {"generator", c.generator},
       {"discriminator", c.discriminator},
       {"log_every", c.log_every}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  require_known_keys(j,
                     {"epochs", "batch", "lr", "adam_beta1", "adam_beta2", "adam_eps", "loss_weights", "pool_size",
                      "seed", "checkpoint_every", "adversarial", "embedding_reduction", "generator", "discriminator",
                      "log_every"},
                     "train");
  read(j, "epochs", c.epochs);
  read(j, "batch", c.batch);
  read(j, "lr", c.lr);
  read(j, "adam_beta1", c.adam_beta1);
  read(j, "adam_beta2", c.adam_beta2);
  read(j, "adam_eps", c.adam_eps);
  if (j.contains("loss_weights")) from_json(j.at("loss_weights"), c.weights);
  read(j, "pool_size", c.pool_size);
  read(j, "seed", c.seed);
  read(j, "checkpoint_every", c.checkpoint_every);
  std::string s;
  if (j.contains("adversarial")) {
    read(j, "adversarial", s);
    c.adversarial = parse_adversarial_form(s);
  }
  if (j.contains("embedding_reduction")) {
    read(j, "embedding_reduction", s);
    c.reduction = parse_embedding_reduction(s);
  }
  if (j.contains("generator")) from_json(j.at("generator"), c.generator);
  if (j.contains("discriminator")) from_json(j.at("discriminator"), c.discriminator);
  read(j, "log_every", c.log_every);
}

void to_json(nlohmann::json& j, const PyramidConfig& c) {
  j = {{"n_scales", c.n_scales},
       {"n_orientations", c.n_orientations},
       {"window", c.window},
       {"window_step", c.window_step},
       {"K", c.K},
       {"intensity_scale", c.intensity_scale}};
}

void from_json(const nlohmann::json& j, PyramidConfig& c) {
  require_known_keys(j, {"n_scales", "n_orientations", "window", "window_step", "K", "intensity_scale"}, "pyramid");
  read(j, "n_scales", c.n_scales);
  read(j, "n_orientations", c.n_orientations);
  read(j, "window", c.window);
  read(j, "window_step", c.window_step);
  read(j, "K", c.K);
  read(j, "intensity_scale", c.intensity_scale);
}

}  // namespace seamstain
