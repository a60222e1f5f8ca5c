#include "tdvs/network.hpp"

#include <cstring>
#include <fstream>

namespace tdvs {

std::string layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv3x3: return "conv";
    case LayerKind::Relu: return "relu";
    case LayerKind::MaxPool2: return "pool";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
    case LayerKind::LinearOutput: return "linear";
  }
  return "?";
}

NetworkSpec NetworkSpec::desk_reference() {
  return from_string(64, 64,
                     "conv8,relu,pool,conv16,relu,pool,conv32,relu,pool,conv32,relu,pool,"
                     "flatten,dense64,relu,linear2");
}

NetworkSpec NetworkSpec::from_string(int input_h, int input_w, const std::string& layers) {
  NetworkSpec spec;
  spec.input_h = detail::require_positive(input_h, "input height");
  spec.input_w = detail::require_positive(input_w, "input width");
  size_t start = 0;
  while (start <= layers.size()) {
    size_t end = layers.find(',', start);
    if (end == std::string::npos) end = layers.size();
    std::string item = layers.substr(start, end - start);
    start = end + 1;
    // strip spaces
    item.erase(0, item.find_first_not_of(" \t"));
    if (const auto p = item.find_last_not_of(" \t"); p != std::string::npos) item.erase(p + 1);
    if (item.empty()) continue;
    auto parse_features = [&](size_t prefix_len) {
      const std::string digits = item.substr(prefix_len);
      if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
        throw std::invalid_argument("network spec: bad layer '" + item + "'");
      return std::stoi(digits);
    };
    if (item.rfind("conv", 0) == 0) {
      spec.layers.push_back({LayerKind::Conv3x3, parse_features(4)});
    } else if (item == "relu") {
      spec.layers.push_back({LayerKind::Relu, 0});
    } else if (item == "pool") {
      spec.layers.push_back({LayerKind::MaxPool2, 0});
    } else if (item == "flatten") {
      spec.layers.push_back({LayerKind::Flatten, 0});
    } else if (item.rfind("dense", 0) == 0) {
      spec.layers.push_back({LayerKind::Dense, parse_features(5)});
    } else if (item.rfind("linear", 0) == 0) {
      spec.layers.push_back({LayerKind::LinearOutput, parse_features(6)});
    } else {
      throw std::invalid_argument("network spec: unknown layer '" + item + "'");
    }
  }
  propagate_shapes(spec);
  return spec;
}

std::string NetworkSpec::to_string() const {
  std::string out;
  for (size_t i = 0; i < layers.size(); ++i) {
    if (i) out += ',';
    out += layer_kind_name(layers[i].kind);
    if (layers[i].features > 0) out += std::to_string(layers[i].features);
  }
  return out;
}

std::vector<ActShape> propagate_shapes(const NetworkSpec& spec) {
  if (spec.input_h <= 0 || spec.input_w <= 0 || spec.input_c != 3)
    throw std::invalid_argument("network spec: input must be H x W x 3");
  if (spec.layers.empty()) throw std::invalid_argument("network spec: no layers");

  std::vector<ActShape> shapes;
  ActShape s;
  s.h = spec.input_h;
  s.w = spec.input_w;
  s.c = spec.input_c;
  shapes.push_back(s);

  for (size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& layer = spec.layers[i];
    const std::string where = "layer " + std::to_string(i) + " (" + layer_kind_name(layer.kind) + ")";
    switch (layer.kind) {
      case LayerKind::Conv3x3:
        if (s.flat) throw std::invalid_argument("network spec: " + where + " needs image input");
        if (layer.features <= 0)
          throw std::invalid_argument("network spec: " + where + " needs output channels");
        s.c = layer.features;
        break;
      case LayerKind::Relu:
        break;
      case LayerKind::MaxPool2:
        if (s.flat) throw std::invalid_argument("network spec: " + where + " needs image input");
        if (s.h % 2 != 0 || s.w % 2 != 0)
          throw std::invalid_argument("network spec: " + where + " needs even spatial dims, got " +
                                      std::to_string(s.h) + "x" + std::to_string(s.w));
        s.h /= 2;
        s.w /= 2;
        break;
      case LayerKind::Flatten:
        if (s.flat) throw std::invalid_argument("network spec: " + where + " applied twice");
        s.f = static_cast<int>(s.count());
        s.flat = true;
        break;
      case LayerKind::Dense:
      case LayerKind::LinearOutput:
        if (!s.flat)
          throw std::invalid_argument("network spec: " + where + " needs flatten before it");
        if (layer.features <= 0)
          throw std::invalid_argument("network spec: " + where + " needs output features");
        s.f = layer.features;
        break;
    }
    shapes.push_back(s);
  }

  const LayerSpec& last = spec.layers.back();
  if (last.kind != LayerKind::LinearOutput || last.features != 2)
    throw std::invalid_argument("network spec: last layer must be linear2 (two linear outputs)");
  for (size_t i = 0; i + 1 < spec.layers.size(); ++i)
    if (spec.layers[i].kind == LayerKind::LinearOutput)
      throw std::invalid_argument("network spec: linear output must be the last layer");
  return shapes;
}

namespace {

constexpr char kMagic[4] = {'C', 'N', 'N', 'P'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::ifstream& in, const char* what) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  if (!in) throw std::runtime_error(std::string("load_parameters: truncated file reading ") + what);
  return v;
}

void write_tensor(std::ofstream& out, const std::vector<float>& data,
                  const std::vector<std::uint32_t>& dims) {
  write_u32(out, static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) write_u32(out, d);
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
}

std::vector<float> read_tensor(std::ifstream& in, const std::vector<std::uint32_t>& expect_dims,
                               const std::string& what) {
  const std::uint32_t rank = read_u32(in, what.c_str());
  if (rank != expect_dims.size())
    throw std::runtime_error("load_parameters: " + what + " has rank " + std::to_string(rank) +
                             ", expected " + std::to_string(expect_dims.size()));
  size_t total = 1;
  for (size_t i = 0; i < rank; ++i) {
    const std::uint32_t d = read_u32(in, what.c_str());
    if (d != expect_dims[i])
      throw std::runtime_error("load_parameters: " + what + " dimension " + std::to_string(i) +
                               " is " + std::to_string(d) + ", expected " +
                               std::to_string(expect_dims[i]));
    total *= d;
  }
  std::vector<float> data(total);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(total * sizeof(float)));
  if (!in) throw std::runtime_error("load_parameters: truncated file reading " + what);
  return data;
}

}  // namespace

void save_parameters(const ParameterSet<float>& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_parameters: cannot open '" + path.string() + "'");
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  std::uint32_t count = 0;
  for (const auto& p : params.layers)
    if (!p.empty()) ++count;
  write_u32(out, count);
  for (size_t i = 0; i < params.layers.size(); ++i) {
    const auto& p = params.layers[i];
    if (p.empty()) continue;
    write_u32(out, static_cast<std::uint32_t>(i));
    std::vector<std::uint32_t> wdims;
    for (int d : p.w_dims)
      if (d > 0) wdims.push_back(static_cast<std::uint32_t>(d));
    write_tensor(out, p.w, wdims);
    write_tensor(out, p.b, {static_cast<std::uint32_t>(p.b.size())});
  }
  out.flush();
  if (!out) throw std::runtime_error("save_parameters: failed writing '" + path.string() + "'");
}

ParameterSet<float> load_parameters(const NetworkSpec& spec, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_parameters: cannot open '" + path.string() + "'");
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("load_parameters: '" + path.string() + "' is not a CNNP checkpoint");
  const std::uint32_t version = read_u32(in, "version");
  if (version != kVersion)
    throw std::runtime_error("load_parameters: unsupported checkpoint version " +
                             std::to_string(version));

  // Reference layout from the spec: shapes must match layer for layer.
  ParameterSet<float> reference = init_parameters<float>(spec, 0);
  std::vector<std::uint32_t> param_layers;
  for (size_t i = 0; i < reference.layers.size(); ++i)
    if (!reference.layers[i].empty()) param_layers.push_back(static_cast<std::uint32_t>(i));

  const std::uint32_t count = read_u32(in, "layer count");
  if (count != param_layers.size())
    throw std::runtime_error("load_parameters: checkpoint has " + std::to_string(count) +
                             " parameterized layers, spec expects " +
                             std::to_string(param_layers.size()));

  ParameterSet<float> params;
  params.layers.resize(spec.layers.size());
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t li = read_u32(in, "layer index");
    if (k >= param_layers.size() || li != param_layers[k])
      throw std::runtime_error("load_parameters: unexpected layer index " + std::to_string(li));
    const auto& ref = reference.layers[li];
    const std::string what =
        "layer " + std::to_string(li) + " (" + layer_kind_name(spec.layers[li].kind) + ")";
    std::vector<std::uint32_t> wdims;
    for (int d : ref.w_dims)
      if (d > 0) wdims.push_back(static_cast<std::uint32_t>(d));
    LayerParams<float>& p = params.layers[li];
    p.w_dims = ref.w_dims;
    p.w = read_tensor(in, wdims, what + " weights");
    p.b = read_tensor(in, {static_cast<std::uint32_t>(ref.b.size())}, what + " biases");
  }
  char extra = 0;
  if (in.read(&extra, 1))
    throw std::runtime_error("load_parameters: trailing bytes after last layer");
  return params;
}

}  // namespace tdvs
