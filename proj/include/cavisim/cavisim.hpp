#pragma once

#include "cavisim/distance.hpp"
#include "cavisim/errors.hpp"
#include "cavisim/labelmap.hpp"
#include "cavisim/masks.hpp"
#include "cavisim/math.hpp"
#include "cavisim/mesh.hpp"
#include "cavisim/metrics.hpp"
#include "cavisim/morphology.hpp"
#include "cavisim/nifti.hpp"
#include "cavisim/noise.hpp"
#include "cavisim/rng.hpp"
#include "cavisim/simulate.hpp"
#include "cavisim/smoothing.hpp"
#include "cavisim/volume.hpp"
#include "cavisim/voxelize.hpp"
