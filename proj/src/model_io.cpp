#include "hsi/model_io.hpp"

#include "binio.hpp"

namespace hsi {

FeatureSource parse_feature_source(const std::string& name) {
  if (name == "spectral") return FeatureSource::spectral;
  if (name == "spatial") return FeatureSource::spatial;
  if (name == "joint") return FeatureSource::joint;
  throw ConfigError("unknown model kind \"" + name + "\"");
}

std::string to_string(FeatureSource source) {
  switch (source) {
    case FeatureSource::spectral: return "spectral";
    case FeatureSource::spatial: return "spatial";
    case FeatureSource::joint: return "joint";
  }
  return "?";
}

int ModelFile::class_count() const {
  if (const auto* net = std::get_if<SsaeNetwork>(&model)) return net->class_count;
  return std::get<JointModel>(model).class_count();
}

namespace {

void write_matrix(binio::Writer& w, const Mat& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) w.f64(m(i, j));
}

Mat read_matrix(binio::Reader& r, Index rows, Index cols) {
  Mat m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = r.f64();
  return m;
}

void write_network(binio::Writer& w, const SsaeNetwork& net) {
  w.u32(static_cast<std::uint32_t>(net.layers.size()));
  w.u32(static_cast<std::uint32_t>(net.input_dim()));
  w.u32(static_cast<std::uint32_t>(net.class_count));
  for (const SaeLayer& layer : net.layers) {
    w.u32(static_cast<std::uint32_t>(layer.input_dim()));
    w.u32(static_cast<std::uint32_t>(layer.hidden_dim()));
    write_matrix(w, layer.w_enc);
    for (Index i = 0; i < layer.b_enc.size(); ++i) w.f64(layer.b_enc(i));
  }
  if (net.has_head()) {
    w.u32(static_cast<std::uint32_t>(net.feature_dim()));
    write_matrix(w, net.softmax_w);
    for (Index i = 0; i < net.softmax_b.size(); ++i) w.f64(net.softmax_b(i));
  }
}

SsaeNetwork read_network(binio::Reader& r) {
  SsaeNetwork net;
  const auto layer_count = r.u32();
  net.declared_input_dim = static_cast<Index>(r.u32());
  net.class_count = static_cast<int>(r.u32());
  Index expected_in = net.declared_input_dim;
  for (std::uint32_t k = 0; k < layer_count; ++k) {
    const auto in = static_cast<Index>(r.u32());
    const auto out = static_cast<Index>(r.u32());
    if (in != expected_in) {
      throw DataError("load_model: layer " + std::to_string(k) +
                      " expects input dim " + std::to_string(expected_in) +
                      ", file says " + std::to_string(in));
    }
    SaeLayer layer;
    layer.w_enc = read_matrix(r, out, in);
    layer.b_enc = Vec(out);
    for (Index i = 0; i < out; ++i) layer.b_enc(i) = r.f64();
    net.layers.push_back(std::move(layer));
    expected_in = out;
  }
  if (net.class_count > 0) {
    const auto feat = static_cast<Index>(r.u32());
    if (feat != net.feature_dim()) {
      throw DataError("load_model: head feature dim " + std::to_string(feat) +
                      " does not match network feature dim " +
                      std::to_string(net.feature_dim()));
    }
    net.softmax_w = read_matrix(r, net.class_count, feat);
    net.softmax_b = Vec(net.class_count);
    for (int i = 0; i < net.class_count; ++i) net.softmax_b(i) = r.f64();
  }
  return net;
}

}  // namespace

void save_model(const std::filesystem::path& path, const ModelFile& file) {
  binio::Writer w(path, "save_model");
  w.bytes("SSAE1", 5);
  w.u8(std::holds_alternative<JointModel>(file.model) ? 1 : 0);
  w.u8(static_cast<std::uint8_t>(file.source));
  w.u8(file.emap.std_rule == FilterRule::max ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(file.emap.pc_count));
  w.u32(static_cast<std::uint32_t>(file.emap.area_thresholds.size()));
  for (double t : file.emap.area_thresholds) w.f64(t);
  w.u32(static_cast<std::uint32_t>(file.emap.std_thresholds.size()));
  for (double t : file.emap.std_thresholds) w.f64(t);
  w.u32(static_cast<std::uint32_t>(file.source_bands));

  if (const auto* net = std::get_if<SsaeNetwork>(&file.model)) {
    write_network(w, *net);
  } else {
    const auto& jm = std::get<JointModel>(file.model);
    write_network(w, jm.spectral);
    write_network(w, jm.spatial);
    write_network(w, jm.fusion);
  }
}

ModelFile load_model(const std::filesystem::path& path) {
  binio::Reader r(path, "load_model");
  r.expect_magic("SSAE1", 5);
  const std::uint8_t kind = r.u8();
  if (kind > 1) {
    throw DataError("load_model: unknown model kind byte " +
                    std::to_string(kind));
  }
  ModelFile file;
  const std::uint8_t source = r.u8();
  if (source > 2) {
    throw DataError("load_model: unknown feature source byte " +
                    std::to_string(source));
  }
  file.source = static_cast<FeatureSource>(source);
  file.emap.std_rule = r.u8() == 1 ? FilterRule::max : FilterRule::direct;
  file.emap.pc_count = static_cast<Index>(r.u32());
  file.emap.area_thresholds.resize(r.u32());
  for (double& t : file.emap.area_thresholds) t = r.f64();
  file.emap.std_thresholds.resize(r.u32());
  for (double& t : file.emap.std_thresholds) t = r.f64();
  file.source_bands = static_cast<int>(r.u32());

  if (kind == 0) {
    file.model = read_network(r);
  } else {
    JointModel jm;
    jm.spectral = read_network(r);
    jm.spatial = read_network(r);
    jm.fusion = read_network(r);
    file.model = std::move(jm);
  }
  return file;
}

}  // namespace hsi
