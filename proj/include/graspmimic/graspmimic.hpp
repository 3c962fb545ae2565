#pragma once

#include "graspmimic/documents.hpp"
#include "graspmimic/gradcheck.hpp"
#include "graspmimic/kdtree.hpp"
#include "graspmimic/kinematics.hpp"
#include "graspmimic/losses.hpp"
#include "graspmimic/mesh.hpp"
#include "graspmimic/mesh_io.hpp"
#include "graspmimic/metrics.hpp"
#include "graspmimic/optim.hpp"
#include "graspmimic/penetration.hpp"
#include "graspmimic/pipeline.hpp"
#include "graspmimic/primitives.hpp"
#include "graspmimic/random.hpp"
#include "graspmimic/rotation.hpp"
#include "graspmimic/synthetic.hpp"
#include "graspmimic/types.hpp"
#include "graspmimic/winding.hpp"
