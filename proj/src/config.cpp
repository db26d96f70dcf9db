#include "boxseg/config.hpp"

#include "boxseg/dataset.hpp"

#include <fstream>

namespace boxseg {

using nlohmann::json;

json config_to_json(const PipelineConfig& cfg) {
  const EnergyConfig& e = cfg.energy;
  const SegmenterConfig& s = cfg.segmenter;
  return {
      {"T", cfg.T},
      {"min_fg_fraction", cfg.min_fg_fraction},
      {"box_enlarge", cfg.box_enlarge},
      {"superpixel", {{"scale", cfg.superpixel.scale}, {"min_size", cfg.superpixel.min_size}}},
      {"energy",
       {{"delta_c", e.delta_c},
        {"delta_t", e.delta_t},
        {"lambda", e.lambda},
        {"prob_clamp_eps", e.prob_clamp_eps},
        {"uncovered_prior", e.uncovered_prior}}},
      {"segmenter",
       {{"k", s.k},
        {"learning_rate", s.learning_rate},
        {"epochs", s.epochs},
        {"batch_rois", s.batch_rois},
        {"seed", s.seed},
        {"jitters_per_instance", s.jitters_per_instance},
        {"jitter_scale_min", s.jitter_scale_min},
        {"jitter_scale_max", s.jitter_scale_max},
        {"jitter_shift", s.jitter_shift},
        {"loss_1d_weight", s.loss_1d_weight}}},
  };
}

namespace {

template <class T>
void read_into(const json& obj, const std::string& prefix, const std::string& key, T& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  const bool numeric_ok = std::is_integral_v<T> ? it->is_number_integer() : it->is_number();
  if (!numeric_ok) throw DataError("config: key '" + prefix + key + "' has the wrong type");
  if constexpr (std::is_integral_v<T>) {
    if constexpr (std::is_unsigned_v<T>) {
      if (it->is_number_integer() && it->get<long long>() < 0)
        throw DataError("config: key '" + prefix + key + "' must be non-negative");
    }
  }
  out = it->get<T>();
}

void check_keys(const json& obj, const std::string& prefix, const json& reference) {
  if (!obj.is_object())
    throw DataError("config: key '" + (prefix.empty() ? std::string("<root>") : prefix) +
                    "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!reference.contains(key)) throw DataError("config: unknown key '" + prefix + key + "'");
    if (reference[key].is_object()) check_keys(value, prefix + key + ".", reference[key]);
  }
}

}  // namespace

PipelineConfig config_from_json(const json& j, PipelineConfig cfg) {
  check_keys(j, "", config_to_json(cfg));
  read_into(j, "", "T", cfg.T);
  read_into(j, "", "min_fg_fraction", cfg.min_fg_fraction);
  read_into(j, "", "box_enlarge", cfg.box_enlarge);
  if (j.contains("superpixel")) {
    const json& sp = j["superpixel"];
    read_into(sp, "superpixel.", "scale", cfg.superpixel.scale);
    read_into(sp, "superpixel.", "min_size", cfg.superpixel.min_size);
  }
  if (j.contains("energy")) {
    const json& e = j["energy"];
    read_into(e, "energy.", "delta_c", cfg.energy.delta_c);
    read_into(e, "energy.", "delta_t", cfg.energy.delta_t);
    read_into(e, "energy.", "lambda", cfg.energy.lambda);
    read_into(e, "energy.", "prob_clamp_eps", cfg.energy.prob_clamp_eps);
    read_into(e, "energy.", "uncovered_prior", cfg.energy.uncovered_prior);
  }
  if (j.contains("segmenter")) {
    const json& s = j["segmenter"];
    read_into(s, "segmenter.", "k", cfg.segmenter.k);
    read_into(s, "segmenter.", "learning_rate", cfg.segmenter.learning_rate);
    read_into(s, "segmenter.", "epochs", cfg.segmenter.epochs);
    read_into(s, "segmenter.", "batch_rois", cfg.segmenter.batch_rois);
    read_into(s, "segmenter.", "seed", cfg.segmenter.seed);
    read_into(s, "segmenter.", "jitters_per_instance", cfg.segmenter.jitters_per_instance);
    read_into(s, "segmenter.", "jitter_scale_min", cfg.segmenter.jitter_scale_min);
    read_into(s, "segmenter.", "jitter_scale_max", cfg.segmenter.jitter_scale_max);
    read_into(s, "segmenter.", "jitter_shift", cfg.segmenter.jitter_shift);
    read_into(s, "segmenter.", "loss_1d_weight", cfg.segmenter.loss_1d_weight);
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  return cfg;
}

PipelineConfig read_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open config '" + path.string() + "'");
  json j;
  try {
    is >> j;
  } catch (const json::parse_error& e) {
    throw DataError("config '" + path.string() + "': " + e.what());
  }
  return config_from_json(j);
}

void apply_override(json& j, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw DataError("override '" + std::string(assignment) + "' is not of the form key=value");
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = text;

  json* node = &j;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw DataError("override key '" + key + "' is malformed");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (!node->is_object() && !node->is_null())
      throw DataError("override key '" + key + "' descends into a non-object");
    start = dot + 1;
  }
}

}  // namespace boxseg
