#pragma once

#include "grassdm/classify.hpp"
#include "grassdm/datagen.hpp"
#include "grassdm/diffusion.hpp"
#include "grassdm/error.hpp"
#include "grassdm/io.hpp"
#include "grassdm/kernels.hpp"
#include "grassdm/kmeans.hpp"
#include "grassdm/manifold.hpp"
#include "grassdm/parallel.hpp"
#include "grassdm/sparse.hpp"
#include "grassdm/types.hpp"

namespace grassdm {

inline constexpr const char* version() { return GRASSDM_VERSION; }

}  // namespace grassdm
