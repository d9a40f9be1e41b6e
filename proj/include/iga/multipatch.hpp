#ifndef IGA_MULTIPATCH_HPP
#define IGA_MULTIPATCH_HPP

#include "iga/assembly.hpp"
#include "iga/nurbs.hpp"

#include <vector>

namespace iga {

/// A face pair forming one interface: exactly one master and one slave side.
struct InterfacePair {
  int master_patch = 0;
  int master_side = 0;  // side id on the master patch
  int slave_patch = 0;
  int slave_side = 0;
  bool watertight = true;
  double rbf_radius = 0.0;  // 0: default heuristic
};

/// Non-overlapping multipatch geometry with boundary tags and interface pairs.
struct Multipatch {
  std::vector<GeometryMap> patches;
  std::vector<std::vector<BoundaryKind>> side_tags;  // per patch, 2*dim entries
  std::vector<InterfacePair> interfaces;

  int num_patches() const { return static_cast<int>(patches.size()); }
  int dim() const { return patches.empty() ? 0 : patches.front().dim(); }

  /// Largest pairwise distance between patch-corner images.
  double domain_diameter() const;

  /// Throws std::invalid_argument on inconsistent tags (an interface pair whose
  /// sides are not both tagged Interface, a face left unpaired, or a
  /// non-watertight pair sharing a face with another pair).
  void validate() const;
};

}  // namespace iga

#endif
