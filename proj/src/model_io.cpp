#include "kinpose/model_io.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "kinpose/json_util.hpp"

namespace kinpose {

namespace {

constexpr char kMagic[4] = {'C', 'P', 'R', 'M'};

// All scalars little-endian; doubles as raw IEEE-754 bytes.
struct Writer {
  std::ofstream out;
  explicit Writer(const std::string& path) : out(path, std::ios::binary) {
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
  }
  void bytes(const void* p, size_t n) {
    out.write(static_cast<const char*>(p), std::streamsize(n));
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) {
    unsigned char b[4] = {(unsigned char)v, (unsigned char)(v >> 8),
                          (unsigned char)(v >> 16), (unsigned char)(v >> 24)};
    bytes(b, 4);
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = (unsigned char)(bits >> (8 * i));
    bytes(b, 8);
  }
  void str(const std::string& s) {
    u32(std::uint32_t(s.size()));
    bytes(s.data(), s.size());
  }
  void pose(const Pose& q) {
    for (int d = 0; d < kPoseDof; ++d) f64(q[d]);
  }
  void vec(const VecX& v) {
    u32(std::uint32_t(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
  }
};

struct Reader {
  std::ifstream in;
  std::string path;
  explicit Reader(const std::string& p) : in(p, std::ios::binary), path(p) {
    if (!in) throw std::runtime_error("cannot open: " + p);
  }
  void bytes(void* p, size_t n) {
    in.read(static_cast<char*>(p), std::streamsize(n));
    if (!in) throw std::runtime_error("truncated model file: " + path);
  }
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 |
           std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
  }
  double f64() {
    unsigned char b[8];
    bytes(b, 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > (1u << 26)) throw std::runtime_error("implausible string size");
    std::string s(n, '\0');
    if (n) bytes(s.data(), n);
    return s;
  }
  Pose pose() {
    Pose q;
    for (int d = 0; d < kPoseDof; ++d) q[d] = f64();
    return q;
  }
  VecX vec() {
    const std::uint32_t n = u32();
    if (n > (1u << 24)) throw std::runtime_error("implausible vector size");
    VecX v(n);
    for (std::uint32_t i = 0; i < n; ++i) v[i] = f64();
    return v;
  }
};

void write_descriptors(Writer& w, const std::vector<FeatureDescriptor>& ds) {
  w.u32(std::uint32_t(ds.size()));
  for (const auto& d : ds) {
    w.u32(std::uint32_t(d.point_i));
    w.u32(std::uint32_t(d.point_j));
    for (int k = 0; k < 3; ++k) w.f64(d.dp1[k]);
    for (int k = 0; k < 3; ++k) w.f64(d.dp2[k]);
  }
}

std::vector<FeatureDescriptor> read_descriptors(Reader& r) {
  const std::uint32_t n = r.u32();
  std::vector<FeatureDescriptor> ds(n);
  for (auto& d : ds) {
    d.point_i = int(r.u32());
    d.point_j = int(r.u32());
    for (int k = 0; k < 3; ++k) d.dp1[k] = r.f64();
    for (int k = 0; k < 3; ++k) d.dp2[k] = r.f64();
  }
  return ds;
}

void write_forest(Writer& w, const Forest& f) {
  w.u32(std::uint32_t(f.trees.size()));
  w.u32(std::uint32_t(f.target_dim));
  w.u32(std::uint32_t(f.max_depth));
  for (const auto& tree : f.trees) {
    w.u32(std::uint32_t(tree.nodes.size()));
    for (const auto& node : tree.nodes) {
      w.u8(node.is_leaf() ? 1 : 0);
      w.u32(node.n_samples);
      if (node.is_leaf()) {
        w.vec(node.mean);
      } else {
        w.u32(std::uint32_t(node.desc));
        w.f64(node.threshold);
        w.u32(std::uint32_t(node.left));
        w.u32(std::uint32_t(node.right));
      }
    }
  }
}

Forest read_forest(Reader& r) {
  Forest f;
  const std::uint32_t n_trees = r.u32();
  f.target_dim = int(r.u32());
  f.max_depth = int(r.u32());
  f.trees.resize(n_trees);
  for (auto& tree : f.trees) {
    const std::uint32_t n_nodes = r.u32();
    tree.nodes.resize(n_nodes);
    for (auto& node : tree.nodes) {
      const bool leaf = r.u8() != 0;
      node.n_samples = r.u32();
      if (leaf) {
        node.mean = r.vec();
      } else {
        node.desc = int(r.u32());
        node.threshold = r.f64();
        node.left = int(r.u32());
        node.right = int(r.u32());
      }
    }
  }
  return f;
}

void write_subset(Writer& w, const std::vector<int>& subset) {
  w.u32(std::uint32_t(subset.size()));
  for (int v : subset) w.u32(std::uint32_t(v));
}

std::vector<int> read_subset(Reader& r) {
  const std::uint32_t n = r.u32();
  std::vector<int> subset(n);
  for (auto& v : subset) v = int(r.u32());
  return subset;
}

}  // namespace

void save_model(const std::string& path, const ModelFile& model) {
  Writer w(path);
  w.bytes(kMagic, 4);
  w.u32(kModelFormatVersion);
  w.u8(std::uint8_t(model.objective));
  if (model.objective != ObjectiveKind::kPosition) {
    const CascadeModel& m = model.cascade;
    w.str(m.skeleton_hash);
    w.pose(m.canonical_pose);
    w.pose(m.initial_pose);
    w.u32(std::uint32_t(m.stage_counts.root));
    w.u32(std::uint32_t(m.stage_counts.torso));
    w.u32(std::uint32_t(m.stage_counts.limb));
    w.f64(m.meanshift_bandwidth_m);
    w.str(model.config_echo);
    w.u32(std::uint32_t(m.stages.size()));
    for (const auto& s : m.stages) {
      w.u8(std::uint8_t(s.section));
      write_subset(w, s.dof_subset);
      write_descriptors(w, s.descriptors);
      write_forest(w, s.forest);
      w.f64(s.beta);
    }
  } else {
    const PositionCascadeModel& m = model.position;
    w.str(m.skeleton_hash);
    w.pose(m.initial_pose);
    w.u32(std::uint32_t(m.stage_counts.root));
    w.u32(std::uint32_t(m.stage_counts.torso));
    w.u32(std::uint32_t(m.stage_counts.limb));
    w.f64(m.meanshift_bandwidth_m);
    w.str(model.config_echo);
    w.u32(std::uint32_t(m.stages.size()));
    for (const auto& s : m.stages) {
      w.u8(std::uint8_t(s.section));
      write_subset(w, s.point_subset);
      write_descriptors(w, s.descriptors);
      write_forest(w, s.forest);
      w.f64(s.beta);
    }
  }
  if (!w.out) throw std::runtime_error("short write: " + path);
}

ModelFile load_model(const std::string& path) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not a CPRM model file: " + path);
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion)
    throw std::runtime_error("unsupported model format version " +
                             std::to_string(version) + " in " + path);
  ModelFile model;
  const std::uint8_t kind = r.u8();
  if (kind > 2) throw std::runtime_error("unknown objective kind in " + path);
  model.objective = ObjectiveKind(kind);
  if (model.objective != ObjectiveKind::kPosition) {
    CascadeModel& m = model.cascade;
    m.objective = model.objective;
    m.skeleton_hash = r.str();
    m.canonical_pose = r.pose();
    m.initial_pose = r.pose();
    m.stage_counts.root = int(r.u32());
    m.stage_counts.torso = int(r.u32());
    m.stage_counts.limb = int(r.u32());
    m.meanshift_bandwidth_m = r.f64();
    model.config_echo = r.str();
    const std::uint32_t n_stages = r.u32();
    m.stages.resize(n_stages);
    for (auto& s : m.stages) {
      s.section = Section(r.u8());
      s.dof_subset = read_subset(r);
      s.descriptors = read_descriptors(r);
      s.forest = read_forest(r);
      s.beta = r.f64();
    }
  } else {
    PositionCascadeModel& m = model.position;
    m.skeleton_hash = r.str();
    m.initial_pose = r.pose();
    m.stage_counts.root = int(r.u32());
    m.stage_counts.torso = int(r.u32());
    m.stage_counts.limb = int(r.u32());
    m.meanshift_bandwidth_m = r.f64();
    model.config_echo = r.str();
    const std::uint32_t n_stages = r.u32();
    m.stages.resize(n_stages);
    for (auto& s : m.stages) {
      s.section = Section(r.u8());
      s.point_subset = read_subset(r);
      s.descriptors = read_descriptors(r);
      s.forest = read_forest(r);
      s.beta = r.f64();
    }
  }
  return model;
}

namespace {

nlohmann::json forest_to_json(const Forest& f) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& tree : f.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) {
        nlohmann::json mean = nlohmann::json::array();
        for (Eigen::Index i = 0; i < node.mean.size(); ++i)
          mean.push_back(node.mean[i]);
        nodes.push_back({{"leaf", true},
                         {"mean", mean},
                         {"n_samples", node.n_samples}});
      } else {
        nodes.push_back({{"leaf", false},
                         {"desc", node.desc},
                         {"threshold", node.threshold},
                         {"left", node.left},
                         {"right", node.right},
                         {"n_samples", node.n_samples}});
      }
    }
    trees.push_back(std::move(nodes));
  }
  return {{"n_trees", f.trees.size()},
          {"target_dim", f.target_dim},
          {"max_depth", f.max_depth},
          {"trees", std::move(trees)}};
}

nlohmann::json descriptors_to_json(const std::vector<FeatureDescriptor>& ds) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& d : ds)
    out.push_back({d.point_i, d.point_j, d.dp1.x(), d.dp1.y(), d.dp1.z(),
                   d.dp2.x(), d.dp2.y(), d.dp2.z()});
  return out;
}

}  // namespace

nlohmann::json model_to_json(const ModelFile& model) {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["objective"] = objective_name(model.objective);
  j["config_echo"] = model.config_echo;
  nlohmann::json stages = nlohmann::json::array();
  if (model.objective != ObjectiveKind::kPosition) {
    const CascadeModel& m = model.cascade;
    j["skeleton_hash"] = m.skeleton_hash;
    j["canonical_pose"] = pose_to_json(m.canonical_pose);
    j["initial_pose"] = pose_to_json(m.initial_pose);
    j["stage_counts"] = {{"root", m.stage_counts.root},
                         {"torso", m.stage_counts.torso},
                         {"limb", m.stage_counts.limb}};
    j["meanshift_bandwidth_m"] = m.meanshift_bandwidth_m;
    for (const auto& s : m.stages)
      stages.push_back({{"section", section_name(s.section)},
                        {"dof_subset", s.dof_subset},
                        {"descriptors", descriptors_to_json(s.descriptors)},
                        {"forest", forest_to_json(s.forest)},
                        {"beta", s.beta}});
  } else {
    const PositionCascadeModel& m = model.position;
    j["skeleton_hash"] = m.skeleton_hash;
    j["initial_pose"] = pose_to_json(m.initial_pose);
    j["stage_counts"] = {{"root", m.stage_counts.root},
                         {"torso", m.stage_counts.torso},
                         {"limb", m.stage_counts.limb}};
    j["meanshift_bandwidth_m"] = m.meanshift_bandwidth_m;
    for (const auto& s : m.stages)
      stages.push_back({{"section", section_name(s.section)},
                        {"point_subset", s.point_subset},
                        {"descriptors", descriptors_to_json(s.descriptors)},
                        {"forest", forest_to_json(s.forest)},
                        {"beta", s.beta}});
  }
  j["stages"] = std::move(stages);
  return j;
}

}  // namespace kinpose
