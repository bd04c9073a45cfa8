#ifndef ANGIO_ANGIO_HPP
#define ANGIO_ANGIO_HPP

#include "angio/edges.hpp"
#include "angio/error.hpp"
#include "angio/filtering.hpp"
#include "angio/geometry.hpp"
#include "angio/image_io.hpp"
#include "angio/overlay.hpp"
#include "angio/phantom.hpp"
#include "angio/pipeline.hpp"
#include "angio/raster.hpp"
#include "angio/segmentation.hpp"
#include "angio/service.hpp"
#include "angio/topology.hpp"
#include "angio/tracking.hpp"

#endif  // ANGIO_ANGIO_HPP
