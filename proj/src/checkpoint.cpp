#include "boxlab/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace boxlab {

std::string checkpoint_to_string(const MlpSpec& spec, const MlpParams& params) {
  params.check_consistent(spec);
  nlohmann::json j;
  j["format"] = "boxlab-mlp";
  j["version"] = 1;
  j["spec"] = {{"layer_widths", spec.layer_widths},
               {"hidden_activation", to_string(spec.hidden_activation)},
               {"output_head", to_string(spec.output_head)}};
  nlohmann::json weights = nlohmann::json::array();
  for (const auto& w : params.weights) weights.push_back(w.data);
  j["params"] = {{"weights", weights}, {"biases", params.biases}};
  return j.dump(2);
}

std::pair<MlpSpec, MlpParams> checkpoint_from_string(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("format", "") != "boxlab-mlp")
    throw ConfigError("checkpoint: unknown format field");
  if (j.value("version", 0) != 1) throw ConfigError("checkpoint: unsupported version");

  MlpSpec spec;
  spec.layer_widths = j.at("spec").at("layer_widths").get<std::vector<std::size_t>>();
  spec.hidden_activation = activation_from_string(j.at("spec").at("hidden_activation"));
  spec.output_head = output_head_from_string(j.at("spec").at("output_head"));
  spec.validate();

  MlpParams params;
  const auto& weights = j.at("params").at("weights");
  for (std::size_t l = 0; l + 1 < spec.layer_widths.size(); ++l) {
    Matrix w(spec.layer_widths[l], spec.layer_widths[l + 1]);
    w.data = weights.at(l).get<std::vector<double>>();
    params.weights.push_back(std::move(w));
  }
  params.biases = j.at("params").at("biases").get<std::vector<std::vector<double>>>();
  params.check_consistent(spec);
  return {spec, params};
}

void save_checkpoint(const MlpSpec& spec, const MlpParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << checkpoint_to_string(spec, params) << "\n";
}

std::pair<MlpSpec, MlpParams> load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str());
}

}  // namespace boxlab
