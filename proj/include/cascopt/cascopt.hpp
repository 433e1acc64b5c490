#pragma once

#include "cascopt/config.hpp"
#include "cascopt/effective.hpp"
#include "cascopt/gaussinfo.hpp"
#include "cascopt/io.hpp"
#include "cascopt/linearized.hpp"
#include "cascopt/meanfield.hpp"
#include "cascopt/observables.hpp"
#include "cascopt/params.hpp"
#include "cascopt/spectra.hpp"
#include "cascopt/stability.hpp"
#include "cascopt/version.hpp"
