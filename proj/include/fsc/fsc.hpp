#pragma once

#include "fsc/completion.hpp"
#include "fsc/datagen.hpp"
#include "fsc/error.hpp"
#include "fsc/geometry.hpp"
#include "fsc/io.hpp"
#include "fsc/masked_matrix.hpp"
#include "fsc/metrics.hpp"
#include "fsc/model_selection.hpp"
#include "fsc/optimizer.hpp"
#include "fsc/rng.hpp"
#include "fsc/spectral.hpp"
#include "fsc/version.hpp"
