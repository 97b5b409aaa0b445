#include "kinpose/sections.hpp"

#include <algorithm>
#include <stdexcept>

namespace kinpose {

const char* section_name(Section s) {
  switch (s) {
    case Section::kRoot: return "root";
    case Section::kTorso: return "torso";
    case Section::kLeftArm: return "left_arm";
    case Section::kRightArm: return "right_arm";
    case Section::kLeftLeg: return "left_leg";
    case Section::kRightLeg: return "right_leg";
  }
  return "?";
}

Section section_from_name(const std::string& name) {
  for (Section s : kAllSections)
    if (name == section_name(s)) return s;
  throw std::invalid_argument("unknown section '" + name + "'");
}

bool is_limb(Section s) {
  return s != Section::kRoot && s != Section::kTorso;
}

RadiusClass section_radius_class(Section s) {
  if (s == Section::kRoot) return RadiusClass::kRoot;
  if (s == Section::kTorso) return RadiusClass::kTorso;
  return RadiusClass::kLimb;
}

namespace {

int require_joint(const SkeletonModel& skel, const char* name) {
  const int j = skel.find_joint(name);
  if (j < 0)
    throw std::invalid_argument(std::string("section policy: skeleton lacks "
                                            "joint '") + name + "'");
  return j;
}

int require_site(const SkeletonModel& skel, const char* name) {
  for (int k = 0; k < skel.end_site_count(); ++k)
    if (skel.end_sites()[k].name == name) return skel.joint_count() + k;
  throw std::invalid_argument(std::string("section policy: skeleton lacks "
                                          "end site '") + name + "'");
}

void append_joint_dofs(const SkeletonModel& skel, int joint,
                       std::vector<int>* out) {
  for (int d = 0; d < kPoseDof; ++d)
    if (skel.dofs()[d].joint == joint) out->push_back(d);
}

}  // namespace

SectionPolicy::SectionPolicy(const SkeletonModel& skel) {
  const int root = require_joint(skel, "root");
  const int lower_back = require_joint(skel, "lower_back");
  const int upper_back = require_joint(skel, "upper_back");
  const int head = require_joint(skel, "head");
  const int l_clav = require_joint(skel, "l_clavicle");
  const int l_hum = require_joint(skel, "l_humerus");
  const int l_rad = require_joint(skel, "l_radius");
  const int r_clav = require_joint(skel, "r_clavicle");
  const int r_hum = require_joint(skel, "r_humerus");
  const int r_rad = require_joint(skel, "r_radius");
  const int l_fem = require_joint(skel, "l_femur");
  const int l_tib = require_joint(skel, "l_tibia");
  const int l_foot = require_joint(skel, "l_foot");
  const int r_fem = require_joint(skel, "r_femur");
  const int r_tib = require_joint(skel, "r_tibia");
  const int r_foot = require_joint(skel, "r_foot");
  const int s_r_hand = require_site(skel, "r_hand_site");
  const int s_l_hand = require_site(skel, "l_hand_site");
  const int s_head = require_site(skel, "head_site");
  const int s_r_toes = require_site(skel, "r_toes_site");
  const int s_l_toes = require_site(skel, "l_toes_site");

  auto dofs_of = [&](std::initializer_list<int> joints) {
    std::vector<int> out;
    for (int j : joints) append_joint_dofs(skel, j, &out);
    std::sort(out.begin(), out.end());
    return out;
  };

  dof_subset_[int(Section::kRoot)] = dofs_of({root});
  // Torso refines the root and carries the humerus/femur dofs shared with
  // the limb sections.
  dof_subset_[int(Section::kTorso)] =
      dofs_of({root, upper_back, head, l_clav, r_clav, l_hum, r_hum, l_fem,
               r_fem});
  dof_subset_[int(Section::kLeftArm)] = dofs_of({l_hum, l_rad});
  dof_subset_[int(Section::kRightArm)] = dofs_of({r_hum, r_rad});
  dof_subset_[int(Section::kLeftLeg)] = dofs_of({l_fem, l_tib, l_foot});
  dof_subset_[int(Section::kRightLeg)] = dofs_of({r_fem, r_tib, r_foot});

  point_pool_[int(Section::kRoot)] = {root, lower_back, upper_back, l_fem,
                                      r_fem};
  point_pool_[int(Section::kTorso)] = {root,  lower_back, upper_back, head,
                                       l_clav, l_hum,     r_clav,     r_hum,
                                       l_fem,  r_fem,     s_head};
  point_pool_[int(Section::kLeftArm)] = {l_hum, l_rad, s_l_hand};
  point_pool_[int(Section::kRightArm)] = {r_hum, r_rad, s_r_hand};
  point_pool_[int(Section::kLeftLeg)] = {l_fem, l_tib, l_foot, s_l_toes};
  point_pool_[int(Section::kRightLeg)] = {r_fem, r_tib, r_foot, s_r_toes};

  position_subset_[int(Section::kRoot)] = {root};
  position_subset_[int(Section::kTorso)] = {lower_back, upper_back, head,
                                            l_clav,     l_hum,      r_clav,
                                            r_hum,      l_fem,      r_fem,
                                            s_head};
  position_subset_[int(Section::kLeftArm)] = {l_rad, s_l_hand};
  position_subset_[int(Section::kRightArm)] = {r_rad, s_r_hand};
  position_subset_[int(Section::kLeftLeg)] = {l_tib, l_foot, s_l_toes};
  position_subset_[int(Section::kRightLeg)] = {r_tib, r_foot, s_r_toes};
  for (auto& v : position_subset_) std::sort(v.begin(), v.end());

  segment_group_[int(RadiusClass::kRoot)] = {lower_back, upper_back};
  segment_group_[int(RadiusClass::kTorso)] = {lower_back, upper_back, head,
                                              l_clav,     r_clav,     s_head};
  segment_group_[int(RadiusClass::kLimb)] = {l_rad,    r_rad,    l_tib,
                                             r_tib,    l_foot,   r_foot,
                                             s_l_hand, s_r_hand, s_l_toes,
                                             s_r_toes};
}

const std::vector<int>& SectionPolicy::dof_subset(Section s) const {
  return dof_subset_[int(s)];
}
const std::vector<int>& SectionPolicy::point_pool(Section s) const {
  return point_pool_[int(s)];
}
const std::vector<int>& SectionPolicy::position_subset(Section s) const {
  return position_subset_[int(s)];
}
const std::vector<int>& SectionPolicy::segment_group(RadiusClass c) const {
  return segment_group_[int(c)];
}

}  // namespace kinpose
