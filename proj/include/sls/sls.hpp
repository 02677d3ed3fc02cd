#pragma once

// Umbrella header for the spin-locking spectroscopy toolkit.

#include "sls/analysis.hpp"
#include "sls/dynamics.hpp"
#include "sls/io.hpp"
#include "sls/linalg.hpp"
#include "sls/model.hpp"
#include "sls/protocols.hpp"
