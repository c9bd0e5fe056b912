#ifndef TPB_TPB_HPP
#define TPB_TPB_HPP

#include "tpb/beam_map.hpp"
#include "tpb/bvh.hpp"
#include "tpb/estimators.hpp"
#include "tpb/film.hpp"
#include "tpb/io.hpp"
#include "tpb/math.hpp"
#include "tpb/media.hpp"
#include "tpb/parallel.hpp"
#include "tpb/photon_tracer.hpp"
#include "tpb/progressive.hpp"
#include "tpb/reference.hpp"
#include "tpb/rng.hpp"
#include "tpb/scene.hpp"
#include "tpb/scene_io.hpp"

#endif  // TPB_TPB_HPP
