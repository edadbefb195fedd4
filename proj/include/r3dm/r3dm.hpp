#pragma once

// Umbrella header.

#include "r3dm/diffusion.hpp"
#include "r3dm/errors.hpp"
#include "r3dm/external_score.hpp"
#include "r3dm/fft.hpp"
#include "r3dm/forward_model.hpp"
#include "r3dm/io.hpp"
#include "r3dm/masks.hpp"
#include "r3dm/metrics.hpp"
#include "r3dm/optimizer.hpp"
#include "r3dm/phantoms.hpp"
#include "r3dm/reconstruct.hpp"
#include "r3dm/regularization.hpp"
#include "r3dm/render.hpp"
#include "r3dm/rng.hpp"
#include "r3dm/spectral.hpp"
#include "r3dm/volume.hpp"
