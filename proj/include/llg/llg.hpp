#pragma once

#include "llg/error.hpp"
#include "llg/grid.hpp"
#include "llg/field.hpp"
#include "llg/field_io.hpp"
#include "llg/spectral.hpp"
#include "llg/fit.hpp"
#include "llg/norm_series.hpp"
#include "llg/llg_solver.hpp"
#include "llg/moving_frame.hpp"
#include "llg/covariant_cgl.hpp"
#include "llg/norms_monitor.hpp"
#include "llg/scenario.hpp"
#include "llg/csv.hpp"
#include "llg/config.hpp"
#include "llg/pipelines.hpp"
