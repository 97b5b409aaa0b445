#include "kinpose/skeleton.hpp"

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace kinpose {

namespace {

const char* dof_kind_name(DofKind k) {
  switch (k) {
    case DofKind::kTx: return "tx";
    case DofKind::kTy: return "ty";
    case DofKind::kTz: return "tz";
    case DofKind::kRx: return "rx";
    case DofKind::kRy: return "ry";
    case DofKind::kRz: return "rz";
  }
  return "?";
}

DofKind dof_kind_from_name(const std::string& s) {
  static const std::unordered_map<std::string, DofKind> map = {
      {"tx", DofKind::kTx}, {"ty", DofKind::kTy}, {"tz", DofKind::kTz},
      {"rx", DofKind::kRx}, {"ry", DofKind::kRy}, {"rz", DofKind::kRz}};
  auto it = map.find(s);
  if (it == map.end())
    throw std::invalid_argument("skeleton: unknown dof kind '" + s + "'");
  return it->second;
}

Mat3 axis_rotation(DofKind k, double a) {
  switch (k) {
    case DofKind::kRx: return rot_x(a);
    case DofKind::kRy: return rot_y(a);
    case DofKind::kRz: return rot_z(a);
    default: throw std::logic_error("axis_rotation: translational dof");
  }
}

Vec3 axis_vector(DofKind k) {
  switch (k) {
    case DofKind::kRx: return Vec3::UnitX();
    case DofKind::kRy: return Vec3::UnitY();
    case DofKind::kRz: return Vec3::UnitZ();
    default: throw std::logic_error("axis_vector: translational dof");
  }
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

SkeletonModel::SkeletonModel(std::vector<JointSpec> joints,
                             std::vector<DofSpec> dofs,
                             std::vector<EndSiteSpec> end_sites, Pose a_pose)
    : joints_(std::move(joints)),
      dofs_(std::move(dofs)),
      end_sites_(std::move(end_sites)),
      a_pose_(std::move(a_pose)) {
  validate();
  joint_rot_dofs_.resize(joints_.size());
  for (int d = 0; d < int(dofs_.size()); ++d)
    if (!is_translation(dofs_[d].kind))
      joint_rot_dofs_[dofs_[d].joint].push_back(d);
}

void SkeletonModel::validate() const {
  if (joints_.empty() || joints_[0].parent != -1)
    throw std::invalid_argument("skeleton: joint 0 must be the root");
  for (int j = 1; j < int(joints_.size()); ++j) {
    if (joints_[j].parent < 0 || joints_[j].parent >= j)
      throw std::invalid_argument("skeleton: joints must be in topological "
                                  "order (parent index < joint index)");
    if (joints_[j].offset.norm() <= 0)
      throw std::invalid_argument("skeleton: zero-length bone at joint " +
                                  joints_[j].name);
  }
  for (const auto& j : joints_)
    if (j.radius <= 0)
      throw std::invalid_argument("skeleton: nonpositive radius at " + j.name);
  if (int(dofs_.size()) != kPoseDof)
    throw std::invalid_argument("skeleton: dof_map must have exactly 38 "
                                "entries, got " + std::to_string(dofs_.size()));
  for (int d = 0; d < kPoseDof; ++d) {
    const auto& dof = dofs_[d];
    if (dof.joint < 0 || dof.joint >= int(joints_.size()))
      throw std::invalid_argument("skeleton: dof joint index out of range");
    if (is_translation(dof.kind) && dof.joint != 0)
      throw std::invalid_argument("skeleton: translation dofs belong to root");
    if (dof.lower > dof.upper)
      throw std::invalid_argument("skeleton: dof limit lower > upper");
  }
  for (int d = 0; d < 3; ++d)
    if (!is_translation(dofs_[d].kind) || dofs_[d].joint != 0)
      throw std::invalid_argument(
          "skeleton: dofs 0..2 must be the root translation");
  for (const auto& e : end_sites_) {
    if (e.joint < 0 || e.joint >= int(joints_.size()))
      throw std::invalid_argument("skeleton: end site joint out of range");
    if (e.offset.norm() <= 0 || e.radius <= 0)
      throw std::invalid_argument("skeleton: degenerate end site " + e.name);
  }
  if (!a_pose_.allFinite())
    throw std::invalid_argument("skeleton: a_pose has non-finite entries");
  for (int d = 3; d < kPoseDof; ++d)
    if (a_pose_[d] < dofs_[d].lower - 1e-9 || a_pose_[d] > dofs_[d].upper + 1e-9)
      throw std::invalid_argument("skeleton: a_pose violates limits at dof " +
                                  std::to_string(d));
}

int SkeletonModel::find_joint(const std::string& name) const {
  for (int j = 0; j < int(joints_.size()); ++j)
    if (joints_[j].name == name) return j;
  return -1;
}

int SkeletonModel::point_owner_joint(int point) const {
  return is_end_site(point) ? end_sites_[point - joint_count()].joint : point;
}

const std::string& SkeletonModel::point_name(int point) const {
  return is_end_site(point) ? end_sites_[point - joint_count()].name
                            : joints_[point].name;
}

double SkeletonModel::bone_length(int point) const {
  if (point == 0) return 0.0;
  return is_end_site(point) ? end_sites_[point - joint_count()].offset.norm()
                            : joints_[point].offset.norm();
}

double SkeletonModel::segment_radius(int point) const {
  return is_end_site(point) ? end_sites_[point - joint_count()].radius
                            : joints_[point].radius;
}

bool SkeletonModel::rotations_in_limits(const Pose& q, double tol) const {
  for (int d = 3; d < kPoseDof; ++d)
    if (q[d] < dofs_[d].lower - tol || q[d] > dofs_[d].upper + tol)
      return false;
  return true;
}

Vec3 SkeletonModel::a_pose_centroid_offset() const {
  Pose q = a_pose_;
  q.head<3>().setZero();
  const Mat3X pts = forward_kinematics(*this, q);
  return pts.rowwise().mean();
}

// ---------------------------------------------------------------------------
// serialization

nlohmann::json SkeletonModel::to_json() const {
  nlohmann::json j;
  j["schema_version"] = 1;
  for (const auto& joint : joints_) {
    j["joints"].push_back({{"name", joint.name},
                           {"parent", joint.parent},
                           {"offset", {joint.offset.x(), joint.offset.y(),
                                       joint.offset.z()}}});
    j["radii"].push_back(joint.radius);
  }
  for (const auto& d : dofs_) {
    j["dof_map"].push_back({{"joint", d.joint}, {"kind", dof_kind_name(d.kind)}});
    j["limits"].push_back({d.lower, d.upper});
  }
  for (int d = 0; d < kPoseDof; ++d) j["a_pose"].push_back(a_pose_[d]);
  for (const auto& e : end_sites_)
    j["end_sites"].push_back(
        {{"name", e.name},
         {"joint", e.joint},
         {"offset", {e.offset.x(), e.offset.y(), e.offset.z()}},
         {"radius", e.radius}});
  return j;
}

SkeletonModel SkeletonModel::from_json(const nlohmann::json& j) {
  if (!j.contains("schema_version") || j.at("schema_version").get<int>() != 1)
    throw std::invalid_argument("skeleton: unsupported schema_version");
  std::vector<JointSpec> joints;
  const auto& radii = j.at("radii");
  int idx = 0;
  for (const auto& item : j.at("joints")) {
    JointSpec s;
    s.name = item.at("name").get<std::string>();
    s.parent = item.at("parent").get<int>();
    const auto& o = item.at("offset");
    s.offset = Vec3(o.at(0).get<double>(), o.at(1).get<double>(),
                    o.at(2).get<double>());
    s.radius = radii.at(idx++).get<double>();
    joints.push_back(std::move(s));
  }
  std::vector<DofSpec> dofs;
  const auto& limits = j.at("limits");
  idx = 0;
  for (const auto& item : j.at("dof_map")) {
    DofSpec d;
    d.joint = item.at("joint").get<int>();
    d.kind = dof_kind_from_name(item.at("kind").get<std::string>());
    d.lower = limits.at(idx).at(0).get<double>();
    d.upper = limits.at(idx).at(1).get<double>();
    ++idx;
    dofs.push_back(d);
  }
  std::vector<EndSiteSpec> sites;
  for (const auto& item : j.at("end_sites")) {
    EndSiteSpec e;
    e.name = item.at("name").get<std::string>();
    e.joint = item.at("joint").get<int>();
    const auto& o = item.at("offset");
    e.offset = Vec3(o.at(0).get<double>(), o.at(1).get<double>(),
                    o.at(2).get<double>());
    e.radius = item.at("radius").get<double>();
    sites.push_back(std::move(e));
  }
  Pose a_pose = Pose::Zero();
  const auto& ap = j.at("a_pose");
  if (ap.size() != kPoseDof)
    throw std::invalid_argument("skeleton: a_pose must have 38 entries");
  for (int d = 0; d < kPoseDof; ++d) a_pose[d] = ap.at(d).get<double>();
  return SkeletonModel(std::move(joints), std::move(dofs), std::move(sites),
                       a_pose);
}

std::string SkeletonModel::hash() const {
  std::ostringstream out;
  out << std::hex << fnv1a64(to_json().dump());
  return out.str();
}

// ---------------------------------------------------------------------------
// default model
//
// Proportions are implementation defaults resembling an adult body; they are
// configuration, not calibration output. World frame matches the camera:
// x right, y down, z away from the camera, so "up" is -y.

SkeletonModel SkeletonModel::default_model() {
  std::vector<JointSpec> joints = {
      {"root", -1, {0, 0, 0}, 0.100},
      {"lower_back", 0, {0, -0.12, 0}, 0.130},
      {"upper_back", 1, {0, -0.18, 0}, 0.140},
      {"head", 2, {0, -0.22, 0}, 0.060},
      {"l_clavicle", 2, {0.04, -0.14, 0}, 0.080},
      {"l_humerus", 4, {0.15, 0, 0}, 0.055},
      {"l_radius", 5, {0.28, 0, 0}, 0.045},
      {"r_clavicle", 2, {-0.04, -0.14, 0}, 0.080},
      {"r_humerus", 7, {-0.15, 0, 0}, 0.055},
      {"r_radius", 8, {-0.28, 0, 0}, 0.045},
      {"l_femur", 0, {0.09, 0.05, 0}, 0.090},
      {"l_tibia", 10, {0, 0.42, 0}, 0.065},
      {"l_foot", 11, {0, 0.41, 0}, 0.050},
      {"r_femur", 0, {-0.09, 0.05, 0}, 0.090},
      {"r_tibia", 13, {0, 0.42, 0}, 0.065},
      {"r_foot", 14, {0, 0.41, 0}, 0.050},
  };
  const int root = 0, upper_back = 2, head = 3;
  const int l_clav = 4, l_hum = 5, l_rad = 6;
  const int r_clav = 7, r_hum = 8, r_rad = 9;
  const int l_fem = 10, l_tib = 11, l_foot = 12;
  const int r_fem = 13, r_tib = 14, r_foot = 15;

  using K = DofKind;
  // Translation limits double as the synthetic-motion root sampling box.
  std::vector<DofSpec> dofs = {
      {root, K::kTx, -0.55, 0.55},   {root, K::kTy, -0.25, 0.30},
      {root, K::kTz, 2.20, 3.20},    {root, K::kRx, -0.30, 0.30},
      {root, K::kRy, -0.70, 0.70},   {root, K::kRz, -0.30, 0.30},
      {upper_back, K::kRx, -0.35, 0.35},
      {upper_back, K::kRy, -0.40, 0.40},
      {upper_back, K::kRz, -0.30, 0.30},
      {head, K::kRx, -0.45, 0.45},   {head, K::kRy, -0.60, 0.60},
      {head, K::kRz, -0.35, 0.35},
      {l_clav, K::kRy, -0.30, 0.30}, {l_clav, K::kRz, -0.25, 0.25},
      {l_hum, K::kRx, -1.20, 1.20},  {l_hum, K::kRy, -1.00, 1.00},
      {l_hum, K::kRz, -0.40, 1.30},
      {l_rad, K::kRy, 0.00, 2.20},
      {r_clav, K::kRy, -0.30, 0.30}, {r_clav, K::kRz, -0.25, 0.25},
      {r_hum, K::kRx, -1.20, 1.20},  {r_hum, K::kRy, -1.00, 1.00},
      {r_hum, K::kRz, -1.30, 0.40},
      {r_rad, K::kRy, -2.20, 0.00},
      {l_fem, K::kRx, -1.00, 0.45},  {l_fem, K::kRy, -0.50, 0.50},
      {l_fem, K::kRz, -0.45, 0.45},
      {l_tib, K::kRx, 0.00, 1.80},
      {l_foot, K::kRx, -0.45, 0.45}, {l_foot, K::kRy, -0.25, 0.25},
      {l_foot, K::kRz, -0.25, 0.25},
      {r_fem, K::kRx, -1.00, 0.45},  {r_fem, K::kRy, -0.50, 0.50},
      {r_fem, K::kRz, -0.45, 0.45},
      {r_tib, K::kRx, 0.00, 1.80},
      {r_foot, K::kRx, -0.45, 0.45}, {r_foot, K::kRy, -0.25, 0.25},
      {r_foot, K::kRz, -0.25, 0.25},
  };

  // End sites ordered as reported in the per-joint error tables:
  // right hand, left hand, head, right toes, left toes.
  std::vector<EndSiteSpec> sites = {
      {"r_hand_site", r_rad, {-0.25, 0, 0}, 0.035},
      {"l_hand_site", l_rad, {0.25, 0, 0}, 0.035},
      {"head_site", head, {0, -0.16, 0}, 0.090},
      {"r_toes_site", r_foot, {0, 0.04, -0.13}, 0.035},
      {"l_toes_site", l_foot, {0, 0.04, -0.13}, 0.035},
  };

  // A-pose: zero everywhere except the arms lowered ~49 deg with a slight
  // elbow bend. Doubles as the canonical feature-frame pose.
  Pose a_pose = Pose::Zero();
  a_pose[16] = 0.85;   // l_humerus rz
  a_pose[17] = 0.15;   // l_radius ry
  a_pose[22] = -0.85;  // r_humerus rz
  a_pose[23] = -0.15;  // r_radius ry
  return SkeletonModel(std::move(joints), std::move(dofs), std::move(sites),
                       a_pose);
}

// ---------------------------------------------------------------------------
// kinematics

FkResult fk_full(const SkeletonModel& skel, const Pose& q) {
  if (!q.allFinite())
    throw std::invalid_argument("fk: pose has non-finite entries");
  const int nj = skel.joint_count();
  FkResult out;
  out.positions.resize(3, skel.point_count());
  out.rotations.resize(nj);
  out.dof_axis.assign(kPoseDof, Vec3::Zero());

  for (int j = 0; j < nj; ++j) {
    Mat3 frame;
    Vec3 pos;
    if (j == 0) {
      frame = Mat3::Identity();
      pos = q.head<3>() + skel.joints()[0].offset;
    } else {
      const int p = skel.joints()[j].parent;
      frame = out.rotations[p];
      pos = out.positions.col(p) + frame * skel.joints()[j].offset;
    }
    // Rotation dofs compose left-to-right in dof_map order; the world axis
    // of each dof is the frame axis *before* that rotation applies.
    for (int d : skel.joint_rotation_dofs(j)) {
      const DofKind kind = skel.dofs()[d].kind;
      out.dof_axis[d] = frame * axis_vector(kind);
      frame = frame * axis_rotation(kind, q[d]);
    }
    out.rotations[j] = frame;
    out.positions.col(j) = pos;
  }
  for (int k = 0; k < skel.end_site_count(); ++k) {
    const auto& e = skel.end_sites()[k];
    out.positions.col(nj + k) =
        out.positions.col(e.joint) + out.rotations[e.joint] * e.offset;
  }
  return out;
}

Mat3X forward_kinematics(const SkeletonModel& skel, const Pose& q) {
  return fk_full(skel, q).positions;
}

std::vector<Mat3> world_rotations(const SkeletonModel& skel, const Pose& q) {
  return fk_full(skel, q).rotations;
}

MatX pose_jacobian(const SkeletonModel& skel, const FkResult& fk) {
  const int np = skel.point_count();
  MatX jac = MatX::Zero(3 * np, kPoseDof);
  for (int m = 0; m < np; ++m) {
    // Root translation moves every point one-for-one.
    jac.block<3, 3>(3 * m, 0).setIdentity();
    const Vec3 pm = fk.positions.col(m);
    for (int j = skel.point_owner_joint(m); j != -1;
         j = skel.joints()[j].parent) {
      const Vec3 lever_base = fk.positions.col(j);
      for (int d : skel.joint_rotation_dofs(j))
        jac.block<3, 1>(3 * m, d) = fk.dof_axis[d].cross(pm - lever_base);
    }
  }
  return jac;
}

MatX pose_jacobian(const SkeletonModel& skel, const Pose& q) {
  return pose_jacobian(skel, fk_full(skel, q));
}

Pose apply_dof_subset(const Pose& base, const VecX& delta,
                      const std::vector<int>& subset) {
  if (delta.size() != Eigen::Index(subset.size()))
    throw std::invalid_argument("apply_dof_subset: delta/subset size mismatch");
  Pose out = base;
  for (size_t i = 0; i < subset.size(); ++i) {
    const int d = subset[i];
    if (d < 0 || d >= kPoseDof)
      throw std::out_of_range("apply_dof_subset: dof index " +
                              std::to_string(d));
    out[d] += delta[Eigen::Index(i)];
  }
  return out;
}

}  // namespace kinpose
