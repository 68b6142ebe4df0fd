#include "freqnaf/volume.hpp"

#include "freqnaf/common.hpp"

#include <cmath>
#include <string>

namespace freqnaf {

Volume::Volume(Dims d, Vec3 spacing_mm, Vec3 origin_mm)
    : dims(d), spacing(std::move(spacing_mm)), origin(std::move(origin_mm)) {
  for (int a = 0; a < 3; ++a) require(dims[a] >= 1, "volume dims must be positive");
  values.assign(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], 0.0);
}

Volume Volume::centered(Dims d, Vec3 spacing_mm) {
  Vec3 origin;
  for (int a = 0; a < 3; ++a) origin[a] = -0.5 * (d[a] - 1) * spacing_mm[a];
  return Volume(d, spacing_mm, origin);
}

Volume Volume::zeros_like(const Volume& like) {
  Volume v(like.dims, like.spacing, like.origin);
  v.value_range = like.value_range;
  return v;
}

Box Volume::bounds() const {
  Box b;
  for (int a = 0; a < 3; ++a) {
    b.lo[a] = origin[a] - 0.5 * spacing[a];
    b.hi[a] = origin[a] + (dims[a] - 0.5) * spacing[a];
  }
  return b;
}

bool Volume::same_layout(const Volume& other) const {
  return dims == other.dims && spacing == other.spacing && origin == other.origin;
}

void Volume::validate() const {
  for (int a = 0; a < 3; ++a) {
    require(dims[a] >= 1, "volume dims must be positive");
    require(spacing[a] > 0.0 && std::isfinite(spacing[a]), "volume spacing must be positive");
    require(std::isfinite(origin[a]), "volume origin must be finite");
  }
  require(values.size() == static_cast<std::size_t>(dims[0]) * dims[1] * dims[2],
          "volume payload does not match dims");
  require(value_range.lo <= value_range.hi, "value_range lo > hi");
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(std::isfinite(values[i]), "non-finite voxel at index " + std::to_string(i));
  }
}

bool Volume::in_value_range() const {
  for (double v : values)
    if (!(v >= value_range.lo && v <= value_range.hi)) return false;
  return true;
}

GridSampler::GridSampler(const Volume& volume)
    : dims_(volume.dims), origin_(volume.origin) {
  for (int a = 0; a < 3; ++a) {
    inv_spacing_[a] = 1.0 / volume.spacing[a];
    max_index_[a] = static_cast<double>(dims_[a] - 1);
  }
}

}  // namespace freqnaf
