#pragma once

// JSON (de)serialization of the configuration structs. Parsing is strict:
// unknown keys and wrongly typed values raise InvalidArgument, missing keys
// keep their defaults.

#include <json.hpp>

#include "seamstain/losses.hpp"
#include "seamstain/metrics.hpp"
#include "seamstain/netarch.hpp"
#include "seamstain/trainer.hpp"

namespace seamstain {

void to_json(nlohmann::json& j, const GeneratorConfig& c);
void from_json(const nlohmann::json& j, GeneratorConfig& c);
void to_json(nlohmann::json& j, const DiscriminatorConfig& c);
void from_json(const nlohmann::json& j, DiscriminatorConfig& c);
void to_json(nlohmann::json& j, const LossWeights& c);
void from_json(const nlohmann::json& j, LossWeights& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const PyramidConfig& c);
void from_json(const nlohmann::json& j, PyramidConfig& c);

namespace json_detail {

// Throws InvalidArgument naming the first key of `j` not in `allowed`.
void require_known_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const char* what);

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace json_detail
}  // namespace seamstain
