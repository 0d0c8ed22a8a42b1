#pragma once

#include <filesystem>
#include <iosfwd>
#include <string_view>

#include "busdep/features.hpp"
#include "busdep/nn.hpp"

namespace busdep::nn {

inline constexpr std::string_view kModelFormatTag = "busdep-model/1";

/// Self-contained trained model: network plus the schema and scaler needed
/// to encode raw segments at inference time.
struct ModelArtifact {
  Network net;
  ScalerParams scaler;
  FeatureSchema schema;
};

/// Line-oriented text format: version tag, spec, schema, scaler, then
/// layer-major weight rows, then biases. Numbers are written as shortest
/// round-trip decimals, so load(save(m)) reproduces bit-identical
/// predictions.
void save_model(std::ostream& out, const Network& net, const ScalerParams& scaler,
                const FeatureSchema& schema);
void save_model(const std::filesystem::path& path, const Network& net,
                const ScalerParams& scaler, const FeatureSchema& schema);

ModelArtifact load_model(std::istream& in);
ModelArtifact load_model(const std::filesystem::path& path);

}  // namespace busdep::nn
