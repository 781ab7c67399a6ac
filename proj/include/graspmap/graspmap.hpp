#pragma once

// Single include for the full toolkit.

#include "graspmap/activations.hpp"
#include "graspmap/adam.hpp"
#include "graspmap/batchnorm.hpp"
#include "graspmap/conv.hpp"
#include "graspmap/dataset.hpp"
#include "graspmap/dataset_io.hpp"
#include "graspmap/depth_image.hpp"
#include "graspmap/errors.hpp"
#include "graspmap/geometry.hpp"
#include "graspmap/grasp_maps.hpp"
#include "graspmap/image_io.hpp"
#include "graspmap/loss.hpp"
#include "graspmap/model.hpp"
#include "graspmap/rng.hpp"
#include "graspmap/tensor.hpp"
#include "graspmap/train_eval.hpp"
