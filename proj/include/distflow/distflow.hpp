#pragma once

#include "distflow/c1.hpp"
#include "distflow/devices.hpp"
#include "distflow/error.hpp"
#include "distflow/exactness.hpp"
#include "distflow/experiments.hpp"
#include "distflow/io/datasets.hpp"
#include "distflow/io/network_file.hpp"
#include "distflow/lindistflow.hpp"
#include "distflow/network.hpp"
#include "distflow/objective.hpp"
#include "distflow/opf.hpp"
#include "distflow/powerflow.hpp"
#include "distflow/report.hpp"
#include "distflow/rng.hpp"
#include "distflow/socp/cone.hpp"
#include "distflow/socp/problem.hpp"
#include "distflow/socp/solver.hpp"
#include "distflow/units.hpp"
#include "distflow/version.hpp"
