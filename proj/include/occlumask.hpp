#pragma once

#include "occlumask/calibration.hpp"
#include "occlumask/config.hpp"
#include "occlumask/deviation.hpp"
#include "occlumask/error.hpp"
#include "occlumask/image.hpp"
#include "occlumask/metrics.hpp"
#include "occlumask/modulation.hpp"
#include "occlumask/optimizer.hpp"
#include "occlumask/parallel.hpp"
#include "occlumask/pipeline.hpp"
#include "occlumask/pnm.hpp"
#include "occlumask/psf.hpp"
#include "occlumask/radiometry.hpp"
#include "occlumask/scene.hpp"
