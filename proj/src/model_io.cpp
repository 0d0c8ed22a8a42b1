#include "busdep/model_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "busdep/numtext.hpp"

namespace busdep::nn {

namespace {

void write_double_row(std::ostream& out, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out << ' ';
    out << format_double(values[i]);
  }
  out << '\n';
}

[[noreturn]] void truncated(std::string_view what) {
  throw std::runtime_error("truncated model file: expected " + std::string(what));
}

[[noreturn]] void shape_error(std::string_view what) {
  throw std::runtime_error("model shape mismatch: " + std::string(what));
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::string line(std::string_view what) {
    std::string text;
    if (!std::getline(in_, text)) truncated(what);
    if (!text.empty() && text.back() == '\r') text.pop_back();
    return text;
  }

  /// "<keyword> <rest>"; throws a format error when the keyword differs.
  std::string keyword_line(std::string_view keyword) {
    const std::string text = line(keyword);
    if (text == keyword) return {};
    const std::string prefix = std::string(keyword) + ' ';
    if (text.rfind(prefix, 0) != 0) {
      throw std::runtime_error("malformed model file: expected '" +
                               std::string(keyword) + "', got '" + text + "'");
    }
    return text.substr(prefix.size());
  }

  std::vector<double> double_row(std::size_t expected, std::string_view what) {
    const std::string text = line(what);
    std::vector<double> values;
    values.reserve(expected);
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t end = text.find(' ', pos);
      if (end == std::string::npos) end = text.size();
      const auto v = parse_double(std::string_view(text).substr(pos, end - pos));
      if (!v) {
        throw std::runtime_error("malformed number in model file (" +
                                 std::string(what) + ")");
      }
      values.push_back(*v);
      pos = end + 1;
    }
    if (values.size() != expected) shape_error(std::string(what));
    return values;
  }

  std::int64_t int_value(std::string_view keyword) {
    const auto v = parse_int(keyword_line(keyword));
    if (!v) {
      throw std::runtime_error("malformed model file: bad integer after '" +
                               std::string(keyword) + "'");
    }
    return *v;
  }

 private:
  std::istream& in_;
};

}  // namespace

void save_model(std::ostream& out, const Network& net, const ScalerParams& scaler,
                const FeatureSchema& schema) {
  out << kModelFormatTag << '\n';

  out << "schema_version " << schema.version << '\n';
  out << "coordinate_mode " << to_string(schema.coordinate_mode) << '\n';
  out << "far_threshold_m " << format_double(schema.far_threshold_m) << '\n';
  out << "rush_windows " << schema.rush_windows.size() << '\n';
  for (const auto& w : schema.rush_windows) {
    out << format_int(w.start_minute) << ' ' << format_int(w.end_minute) << '\n';
  }
  out << "routes " << schema.route_vocabulary.size() << '\n';
  for (const auto& route : schema.route_vocabulary) out << route << '\n';

  out << "scaler " << scaler.min.size() << '\n';
  write_double_row(out, scaler.min);
  write_double_row(out, scaler.max);

  out << "spec " << net.spec.input_dim << ' ' << net.spec.output_dim << ' '
      << net.spec.hidden.size();
  for (int h : net.spec.hidden) out << ' ' << h;
  out << '\n';

  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer& layer = net.layers[l];
    out << "weights " << l << ' ' << layer.fan_out << ' ' << layer.fan_in << '\n';
    for (int o = 0; o < layer.fan_out; ++o) {
      write_double_row(out, std::span(layer.w).subspan(
                                static_cast<std::size_t>(o) * layer.fan_in,
                                static_cast<std::size_t>(layer.fan_in)));
    }
  }
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    out << "biases " << l << ' ' << net.layers[l].fan_out << '\n';
    write_double_row(out, net.layers[l].b);
  }
  out << "end\n";
}

void save_model(const std::filesystem::path& path, const Network& net,
                const ScalerParams& scaler, const FeatureSchema& schema) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file: " + path.string());
  save_model(out, net, scaler, schema);
  if (!out) throw std::runtime_error("failed writing model file: " + path.string());
}

ModelArtifact load_model(std::istream& in) {
  LineReader reader(in);

  const std::string tag = reader.line("format tag");
  if (tag != kModelFormatTag) {
    throw std::runtime_error("unsupported model format version: '" + tag +
                             "' (expected '" + std::string(kModelFormatTag) + "')");
  }

  ModelArtifact artifact;
  FeatureSchema& schema = artifact.schema;
  schema.version = reader.keyword_line("schema_version");

  const std::string mode_text = reader.keyword_line("coordinate_mode");
  const auto mode = parse_coordinate_mode(mode_text);
  if (!mode) {
    throw std::runtime_error("malformed model file: unknown coordinate_mode '" +
                             mode_text + "'");
  }
  schema.coordinate_mode = *mode;

  const auto far = parse_double(reader.keyword_line("far_threshold_m"));
  if (!far) throw std::runtime_error("malformed model file: bad far_threshold_m");
  schema.far_threshold_m = *far;

  const std::int64_t n_windows = reader.int_value("rush_windows");
  if (n_windows < 0) shape_error("negative rush window count");
  schema.rush_windows.clear();
  for (std::int64_t i = 0; i < n_windows; ++i) {
    const std::string text = reader.line("rush window");
    const auto sep = text.find(' ');
    const auto start = parse_int(std::string_view(text).substr(0, sep));
    const auto end = sep == std::string::npos
                         ? std::nullopt
                         : parse_int(std::string_view(text).substr(sep + 1));
    if (!start || !end) {
      throw std::runtime_error("malformed model file: bad rush window");
    }
    schema.rush_windows.push_back({static_cast<int>(*start), static_cast<int>(*end)});
  }

  const std::int64_t n_routes = reader.int_value("routes");
  if (n_routes < 0) shape_error("negative route count");
  schema.route_vocabulary.clear();
  schema.route_vocabulary.reserve(static_cast<std::size_t>(n_routes));
  for (std::int64_t i = 0; i < n_routes; ++i) {
    schema.route_vocabulary.push_back(reader.line("route id"));
  }

  const std::int64_t scaler_dims = reader.int_value("scaler");
  if (scaler_dims != schema.total_dims()) {
    shape_error("scaler dimension " + format_int(scaler_dims) +
                " does not match schema dimension " + format_int(schema.total_dims()));
  }
  artifact.scaler.min =
      reader.double_row(static_cast<std::size_t>(scaler_dims), "scaler minimums");
  artifact.scaler.max =
      reader.double_row(static_cast<std::size_t>(scaler_dims), "scaler maximums");

  // spec <input> <output> <n_hidden> [hidden...]
  {
    std::istringstream spec_line(reader.keyword_line("spec"));
    int input = 0, output = 0, n_hidden = -1;
    if (!(spec_line >> input >> output >> n_hidden) || n_hidden < 0) {
      throw std::runtime_error("malformed model file: bad spec line");
    }
    NetworkSpec& spec = artifact.net.spec;
    spec.input_dim = input;
    spec.output_dim = output;
    spec.hidden.resize(static_cast<std::size_t>(n_hidden));
    for (int& h : spec.hidden) {
      if (!(spec_line >> h)) {
        throw std::runtime_error("malformed model file: bad spec line");
      }
    }
    if (spec.input_dim != schema.total_dims()) {
      shape_error("network input dimension " + format_int(spec.input_dim) +
                  " does not match schema dimension " + format_int(schema.total_dims()));
    }
  }

  const NetworkSpec& spec = artifact.net.spec;
  const std::size_t n_layers = spec.hidden.size() + 1;
  artifact.net.layers.resize(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    Layer& layer = artifact.net.layers[l];
    layer.fan_in = l == 0 ? spec.input_dim : spec.hidden[l - 1];
    layer.fan_out = l == n_layers - 1 ? spec.output_dim : spec.hidden[l];

    std::istringstream header(reader.keyword_line("weights"));
    std::size_t index = 0;
    int fan_out = 0, fan_in = 0;
    if (!(header >> index >> fan_out >> fan_in)) {
      throw std::runtime_error("malformed model file: bad weights header");
    }
    if (index != l || fan_out != layer.fan_out || fan_in != layer.fan_in) {
      shape_error("weights header for layer " + format_int(static_cast<std::int64_t>(l)));
    }
    layer.w.clear();
    layer.w.reserve(static_cast<std::size_t>(fan_in) * fan_out);
    for (int o = 0; o < fan_out; ++o) {
      const auto row =
          reader.double_row(static_cast<std::size_t>(fan_in), "weight row");
      layer.w.insert(layer.w.end(), row.begin(), row.end());
    }
  }
  for (std::size_t l = 0; l < n_layers; ++l) {
    Layer& layer = artifact.net.layers[l];
    std::istringstream header(reader.keyword_line("biases"));
    std::size_t index = 0;
    int fan_out = 0;
    if (!(header >> index >> fan_out)) {
      throw std::runtime_error("malformed model file: bad biases header");
    }
    if (index != l || fan_out != layer.fan_out) {
      shape_error("biases header for layer " + format_int(static_cast<std::int64_t>(l)));
    }
    layer.b = reader.double_row(static_cast<std::size_t>(fan_out), "bias row");
  }
  reader.keyword_line("end");
  return artifact;
}

ModelArtifact load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path.string());
  return load_model(in);
}

}  // namespace busdep::nn
